"""Optimal M-type approximations of pmfs and probabilistic shaping for AWGN."""

from .allocator import (
    SymbolMapping,
    allocate_exhaustive,
    allocate_greedy,
    allocate_greedy_scan,
    increment,
    objective,
    synthesize_mapping,
)
from .awgn import (
    CapacityResult,
    ChannelSpec,
    Constellation,
    ShapingDesign,
    capacity,
    capacity_pmf,
    clt_gap,
    clt_pmf,
    design_shaping,
    mutual_information,
    rescale_power,
)
from .distcore import Allocation, MTypePmf, Pmf, cdf, entropy, kl_divergence, validate_pmf
from .quantizer import convergence_bound, quantize

__version__ = "0.1.0"
