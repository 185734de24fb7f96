"""Independent numerical references used by the AWGN tests.

Nothing here imports the integration or solver code under test.
"""

import math

import numpy as np


def mi_fine_grid(points, pmf, snr, step=0.02, reach=12.0, tol=1e-8):
    """Mutual information by the conditional form sum_i p_i D(phi_i || f).

    The trapezoid step is halved until successive values differ by < tol.
    """
    means = np.asarray(points, float) * math.sqrt(snr)
    probs = np.asarray(pmf, float)
    means, probs = means[probs > 0], probs[probs > 0]

    def at(h):
        y = np.arange(means.min() - reach, means.max() + reach + h / 2, h)
        dens = np.exp(-0.5 * (y[None, :] - means[:, None]) ** 2) / math.sqrt(2 * math.pi)
        f = probs @ dens
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = np.where(dens > 0, dens * np.log(dens / f), 0.0)
        return float(probs @ np.trapezoid(integrand, y, axis=1))

    value = at(step)
    while True:
        step /= 2
        finer = at(step)
        if abs(finer - value) < tol:
            return finer
        value = finer


def simplex_grid_search(points, snr, max_power=1.0, resolution=0.001, step=0.02, reach=10.0):
    """Best 3-point pmf over a regular simplex grid under E[X^2] <= max_power."""
    points = np.asarray(points, float)
    assert len(points) == 3
    means = points * math.sqrt(snr)
    y = np.arange(means.min() - reach, means.max() + reach + step / 2, step)
    dens = np.exp(-0.5 * (y[None, :] - means[:, None]) ** 2) / math.sqrt(2 * math.pi)
    n = int(round(1 / resolution))
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = i + j <= n
    grid = np.stack([i[keep], n - i[keep] - j[keep], j[keep]], axis=1) / n
    grid = grid[grid @ points**2 <= max_power]
    best_mi, best_p = -math.inf, None
    for chunk in np.array_split(grid, max(1, len(grid) // 2000)):
        f = chunk @ dens
        with np.errstate(divide="ignore", invalid="ignore"):
            hy = -np.trapezoid(np.where(f > 0, f * np.log(f), 0.0), y, axis=1)
        mi = hy - 0.5 * math.log(2 * math.pi * math.e)
        idx = int(np.argmax(mi))
        if mi[idx] > best_mi:
            best_mi, best_p = float(mi[idx]), chunk[idx]
    return best_p, best_mi
