"""Command line front end.

Subcommands print JSON (or CSV with ``--format csv``) on stdout. Errors are
written to stderr as ``{"code", "message", "context"}`` objects with exit
status 2 for usage problems, 3 for domain errors and 4 when an iterative
solver hit its iteration cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import awgn
from .allocator import allocate_greedy, synthesize_mapping
from .distcore import kl_divergence, support_violation, validate_pmf
from .errors import NonConvergence, ShapingError
from .quantizer import convergence_bound, quantize

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NONCONVERGENCE = 0, 2, 3, 4

SWEEP_FIELDS = ["m", "snr_db", "method", "k", "gap_nats"]


class UsageError(Exception):
    code = "Usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    input_path: Optional[str] = None
    M: Optional[int] = None
    m: Optional[int] = None
    snr_db: Optional[float] = None
    output_path: Optional[str] = None
    format: str = "json"
    log_unit: str = "nats"

    @property
    def scale(self) -> float:
        """Factor converting nats to the requested unit."""
        return 1.0 / math.log(2) if self.log_unit == "bits" else 1.0


def fmt(x) -> str:
    return format(float(x), ".12g")


def read_pmf(path: str):
    """Read a pmf from a JSON array or a CSV file with one probability per line."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError:
        raw = []
        for row in csv.reader(io.StringIO(text)):
            cells = [c.strip() for c in row if c.strip()]
            if not cells or cells[0].startswith("#"):
                continue
            try:
                raw.append(float(cells[0]))
            except ValueError as exc:
                raise UsageError(f"{path}: not a number: {cells[0]!r}") from exc
    if not isinstance(raw, list):
        raise UsageError(f"{path}: expected a JSON array of numbers")
    return validate_pmf(raw, 1e-9)


def _spacing_grid(args) -> Optional[np.ndarray]:
    if args.grid_points is None and args.grid_min is None and args.grid_max is None:
        return None
    return np.geomspace(args.grid_min or 0.05, args.grid_max or 5.0, args.grid_points or 200)


def _solver_options(args) -> dict:
    if args is None:
        return {}
    return {"spacing_grid": _spacing_grid(args), "refine": args.refine}


def _unit_key(name: str, cfg: RunConfig) -> str:
    return f"{name}_{cfg.log_unit}"


def _kl_field(value: float, cfg: RunConfig):
    return None if math.isinf(value) else value * cfg.scale


def cmd_quantize(args, cfg):
    t = read_pmf(args.pmf)
    d = quantize(t, args.M)
    kl = kl_divergence(d, t)
    return {"M": d.M, "counts": list(d.counts), _unit_key("kl", cfg): kl * cfg.scale}


def cmd_allocate(args, cfg):
    t = read_pmf(args.pmf)
    d = allocate_greedy(t, args.M)
    return {
        "M": d.M,
        "counts": list(d.counts),
        _unit_key("kl", cfg): kl_divergence(d, t) * cfg.scale,
        _unit_key("bound", cfg): convergence_bound(t, args.M) * cfg.scale,
    }


def cmd_kl(args, cfg):
    d, t = read_pmf(args.pmf_d), read_pmf(args.pmf_t)
    value = kl_divergence(d, t)
    return {_unit_key("kl", cfg): _kl_field(value, cfg), "infinite": support_violation(d, t)}


def cmd_map(args, cfg):
    return synthesize_mapping(allocate_greedy(read_pmf(args.pmf), args.M)).to_dict()


def cmd_capacity_pmf(args, cfg):
    snr = awgn.db_to_linear(args.snr_db)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = awgn.capacity_pmf(args.k, snr, **_solver_options(args))
    out = {
        "k": args.k,
        "snr_db": args.snr_db,
        "pmf": res.pmf.probs.tolist(),
        "spacing": res.spacing,
        _unit_key("mutual_info", cfg): res.mutual_info * cfg.scale,
        "converged": res.converged,
    }
    return out, [] if res.converged else [args.k]


def cmd_clt(args, cfg):
    snr = awgn.db_to_linear(args.snr_db)
    d = awgn.clt_pmf(args.m)
    return {
        "m": args.m,
        "snr_db": args.snr_db,
        "counts": list(d.counts),
        "M": d.M,
        _unit_key("gap", cfg): awgn.clt_gap(args.m, snr) * cfg.scale,
    }


def _scale_design(data: dict, cfg: RunConfig) -> dict:
    if cfg.log_unit == "nats":
        return data
    out = {}
    for key, value in data.items():
        if key.endswith("_nats"):
            out[key[: -len("nats")] + "bits"] = value * cfg.scale
        elif key == "per_k":
            out[key] = [_scale_design(r, cfg) for r in value]
        else:
            out[key] = value
    return out


def _targets(snr: float, ks, args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return awgn.capacity_pmfs(ks, snr, **_solver_options(args))


def cmd_shape(args, cfg):
    snr = awgn.db_to_linear(args.snr_db)
    targets = _targets(snr, range(2, 2**args.m + 1), args)
    design = awgn.design_shaping(args.m, snr, targets=targets)
    data = design.to_dict()
    data["snr_db"] = args.snr_db
    stalled = [k for k, r in targets.items() if not r.converged]
    return _scale_design(data, cfg), stalled


def sweep_rows(m_max: int, snr_db_list, args=None):
    """Gap rows for the CLT baseline, the selected design and its target."""
    rows, stalled = [], []
    for snr_db in snr_db_list:
        snr = awgn.db_to_linear(snr_db)
        targets = _targets(snr, range(2, 2**m_max + 1), args)
        stalled += [{"snr_db": snr_db, "k": k} for k, r in targets.items() if not r.converged]
        for m in range(1, m_max + 1):
            design = awgn.design_shaping(m, snr, targets=targets)
            rows.append((m, snr_db, "clt", m + 1, awgn.clt_gap(m, snr)))
            rows.append((m, snr_db, "optimal", design.chosen_k, design.gap))
            rows.append((m, snr_db, "target", design.chosen_k, design.chosen.target_gap))
    return rows, stalled


def cmd_sweep(args, cfg):
    try:
        snr_list = [float(s) for s in args.snr_db_list.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"--snr-db-list: {exc}") from exc
    if not snr_list:
        raise UsageError("--snr-db-list is empty")
    rows, stalled = sweep_rows(args.m_max, snr_list, args)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_FIELDS[:-1] + [_unit_key("gap", cfg)])
    for m, snr_db, method, k, gap in rows:
        writer.writerow([m, fmt(snr_db), method, k, fmt(gap * cfg.scale)])
    return buf.getvalue(), stalled


def _add_solver_flags(p):
    p.add_argument("--grid-min", type=float, help="smallest spacing scale (default 0.05)")
    p.add_argument("--grid-max", type=float, help="largest spacing scale (default 5)")
    p.add_argument("--grid-points", type=int, help="geometric grid size (default 200)")
    p.add_argument("--refine", type=int, default=50, help="linear refinement steps")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--log-unit", choices=["nats", "bits"], default="nats")
    common.add_argument("--output", "-o", help="write the result here instead of stdout")

    parser = _Parser(prog="mtshape", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("quantize", parents=[common], help="CDF-midpoint quantization")
    p.add_argument("--pmf", required=True)
    p.add_argument("--M", type=int, required=True)

    p = sub.add_parser("allocate", parents=[common], help="optimal M-type approximation")
    p.add_argument("--pmf", required=True)
    p.add_argument("--M", type=int, required=True)

    p = sub.add_parser("kl", parents=[common], help="relative entropy D(d||t)")
    p.add_argument("--pmf-d", required=True)
    p.add_argument("--pmf-t", required=True)

    p = sub.add_parser("map", parents=[common], help="symbol mapping of the optimal M-type pmf")
    p.add_argument("--pmf", required=True)
    p.add_argument("--M", type=int, required=True)

    p = sub.add_parser("capacity-pmf", parents=[common], help="capacity-achieving pmf on k points")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--snr-db", type=float, required=True)
    _add_solver_flags(p)

    p = sub.add_parser("clt", parents=[common], help="binomial baseline and its gap")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--snr-db", type=float, required=True)

    p = sub.add_parser("shape", parents=[common], help="full shaping design")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--snr-db", type=float, required=True)
    _add_solver_flags(p)

    p = sub.add_parser("sweep", parents=[common], help="CSV of gaps for plotting")
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--snr-db-list", required=True, help="comma separated, e.g. 0,5")
    _add_solver_flags(p)
    return parser


COMMANDS = {
    "quantize": cmd_quantize,
    "allocate": cmd_allocate,
    "kl": cmd_kl,
    "map": cmd_map,
    "capacity-pmf": cmd_capacity_pmf,
    "clt": cmd_clt,
    "shape": cmd_shape,
    "sweep": cmd_sweep,
}


def _check_ints(args):
    for name in ("M", "m", "k", "m_max"):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")
    if getattr(args, "k", None) is not None and args.k < 2:
        raise UsageError("--k must be at least 2")


def _render(result, cfg: RunConfig) -> str:
    if isinstance(result, str):
        return result
    if cfg.format == "json":
        return json.dumps(result, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    flat = {k: v for k, v in result.items() if not isinstance(v, list)}
    lists = {k: v for k, v in result.items() if isinstance(v, list) and v and not isinstance(v[0], dict)}
    if lists:
        width = max(len(v) for v in lists.values())
        writer.writerow(["index", *lists, *flat])
        for i in range(width):
            row = [i] + [_cell(v[i]) if i < len(v) else "" for v in lists.values()]
            writer.writerow(row + [_cell(v) for v in flat.values()])
    else:
        writer.writerow(list(flat))
        writer.writerow([_cell(v) for v in flat.values()])
    return buf.getvalue()


def _cell(v):
    return fmt(v) if isinstance(v, float) else ("" if v is None else v)


def _emit_error(code: str, message: str, context: Optional[dict] = None) -> None:
    sys.stderr.write(json.dumps({"code": code, "message": message, "context": context or {}}) + "\n")


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _check_ints(args)
        cfg = RunConfig(
            command=args.command,
            input_path=getattr(args, "pmf", None),
            M=getattr(args, "M", None),
            m=getattr(args, "m", None) or getattr(args, "m_max", None),
            snr_db=getattr(args, "snr_db", None),
            output_path=args.output,
            format=args.format,
            log_unit=args.log_unit,
        )
        result = COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        _emit_error(UsageError.code, str(exc))
        return EXIT_USAGE
    except ShapingError as exc:
        _emit_error(exc.code, exc.message, exc.context)
        return exc.exit_code
    except ValueError as exc:
        _emit_error("InvalidArgument", str(exc))
        return EXIT_DOMAIN

    stalled = []
    if isinstance(result, tuple):
        result, stalled = result
    text = _render(result, cfg)
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)
    if stalled:
        err = NonConvergence("Blahut-Arimoto iteration cap reached", stalled=stalled)
        _emit_error(err.code, err.message, err.context)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
