"""Slow laser-intensity fluctuations from excess scatter of Ramsey-type data.

A run at integer N contains N AC-Stark pi rotations inside a Ramsey
experiment.  Slow intensity drift scales the rotation angle N pi by
(1 + eps), eps ~ N(0, dI/I), which shows up as excess run-to-run scatter
of the measured probability beyond projection noise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .detection import projection_noise


@dataclass(frozen=True)
class IntensityFit:
    n_list: np.ndarray
    delta_p: np.ndarray  # observed std of p per N
    delta_proj: np.ndarray  # expected projection noise per N
    delta_excess: np.ndarray
    slope: float  # d(delta_excess)/dN
    slope_err: float

    @property
    def rel_fluct(self) -> float:
        return self.slope / math.pi

    @property
    def rel_fluct_err(self) -> float:
        return self.slope_err / math.pi


def synthetic_intensity_runs(rel_fluct: float, n_list, runs_per_n: int = 200, shots: int = 100,
                             rng: np.random.Generator | None = None, p0: float = 0.5,
                             fringe_slope: float = 1.0) -> list[np.ndarray]:
    """Measured probabilities per N under Gaussian slow intensity noise.

    Each run draws eps once, sets p = p0 + fringe_slope * N pi eps (linear
    error propagation, clipped to [0, 1]) and samples ``shots`` outcomes.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    out = []
    for n in n_list:
        eps = rng.normal(0.0, rel_fluct, size=runs_per_n)
        p = np.clip(p0 + fringe_slope * n * math.pi * eps, 0.0, 1.0)
        out.append(rng.binomial(shots, p) / shots)
    return out


def intensity_fluctuation_analysis(runs, n_list, shots: int) -> IntensityFit:
    """Excess scatter per N and a linear fit through the origin.

    delta_excess^2 = delta_p^2 - delta_proj^2 (clamped at 0 with a warning);
    dI/I = slope / pi.
    """
    n_list = np.asarray(n_list, dtype=float)
    if len(runs) != len(n_list):
        raise ValueError("one run list per N is required")
    dp, dproj, dex, sig = [], [], [], []
    for n, r in zip(n_list, runs):
        r = np.asarray(r, dtype=float)
        if r.size < 2:
            raise ValueError(f"N={n:g}: need at least 2 runs")
        std = float(np.std(r, ddof=1))
        pm = float(np.mean(r))
        proj = projection_noise(min(max(pm, 0.0), 1.0), shots)
        var = std**2 - proj**2
        if var < 0:
            warnings.warn(f"N={n:g}: negative excess variance clamped to 0", RuntimeWarning, stacklevel=2)
            var = 0.0
        ex = math.sqrt(var)
        dp.append(std)
        dproj.append(proj)
        dex.append(ex)
        # std of the sample std, propagated into the excess
        s_std = std / math.sqrt(2 * (r.size - 1))
        sig.append(max(s_std * std / ex, s_std) if ex > 0 else s_std)
    dex_a, sig_a = np.array(dex), np.array(sig)
    w = 1.0 / sig_a**2
    slope = float(np.sum(w * n_list * dex_a) / np.sum(w * n_list**2))
    slope_err = float(1.0 / math.sqrt(np.sum(w * n_list**2)))
    return IntensityFit(n_list, np.array(dp), np.array(dproj), dex_a, slope, slope_err)
