"""Blue-sideband Rabi flopping of a thermally occupied mode and nbar fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

TAIL_TOL = 1e-6


@dataclass(frozen=True)
class ThermalDistribution:
    nbar: float

    def __post_init__(self):
        if not self.nbar >= 0:
            raise ValueError("nbar must be >= 0")

    @property
    def ratio(self) -> float:
        return self.nbar / (self.nbar + 1)

    def tail_weight(self, n_max: int) -> float:
        """Total weight of levels n > n_max."""
        return self.ratio ** (n_max + 1)

    def n_max_for(self, tol: float = TAIL_TOL) -> int:
        if self.nbar == 0:
            return 0
        return max(0, math.ceil(math.log(tol) / math.log(self.ratio)) - 1)

    def weights(self, n_max: int | None = None, normalize: bool = True) -> np.ndarray:
        """c_n = nbar^n / (nbar + 1)^(n+1) for n = 0..n_max."""
        n_max = self.n_max_for() if n_max is None else n_max
        c = (1 - self.ratio) * self.ratio ** np.arange(n_max + 1)
        return c / c.sum() if normalize else c


def sideband_rabi(t, nbar: float, eta_omega0: float, n_max: int | None = None):
    """P(|1>) after blue-sideband flopping for time ``t``.

    sum_n c_n sin^2(eta Omega0 sqrt(n+1) t / 2); the neglected weight above
    ``n_max`` bounds the truncation error and must stay below 1e-6.
    """
    th = ThermalDistribution(nbar)
    n_max = th.n_max_for() if n_max is None else n_max
    if th.tail_weight(n_max) > TAIL_TOL:
        raise ValueError(f"n_max={n_max} leaves tail weight {th.tail_weight(n_max):.2e} > {TAIL_TOL}")
    c = th.weights(n_max, normalize=False)
    rabi = eta_omega0 * np.sqrt(np.arange(n_max + 1) + 1.0)
    t = np.asarray(t, dtype=float)
    p = np.sin(0.5 * rabi * t[..., None]) ** 2 @ c
    return float(p) if p.ndim == 0 else p


def synthetic_sideband(nbar: float, eta_omega0: float, times, noise: float = 0.0,
                       rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Flopping curve with additive Gaussian noise of std ``noise``."""
    times = np.asarray(times, dtype=float)
    p = sideband_rabi(times, nbar, eta_omega0)
    if noise > 0:
        rng = np.random.default_rng(0) if rng is None else rng
        p = p + rng.normal(0.0, noise, size=p.shape)
    return times, p


@dataclass(frozen=True)
class NbarFit:
    nbar: float
    residual_rms: float


def fit_nbar(times, probs, eta_omega0: float, nbar_max: float = 10.0) -> NbarFit:
    """1-D least squares over nbar >= 0 (grid scan, then bounded refinement)."""
    times = np.asarray(times, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if times.shape != probs.shape or times.size < 2:
        raise ValueError("need matching time and probability arrays with >= 2 points")

    def cost(nb):
        r = sideband_rabi(times, nb, eta_omega0) - probs
        return float(r @ r)

    grid = np.concatenate([[0.0], np.geomspace(1e-3, nbar_max, 80)])
    costs = [cost(g) for g in grid]
    i = int(np.argmin(costs))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    best_nb, best = grid[i], costs[i]
    if hi > lo:
        res = optimize.minimize_scalar(cost, bounds=(lo, hi), method="bounded", options={"xatol": 1e-7})
        if res.fun <= best:
            best_nb, best = float(res.x), float(res.fun)
    return NbarFit(float(best_nb), math.sqrt(best / times.size))
