"""Photon-count statistics of fluorescence detection.

A bright ion (|1> = S) scatters at ``detect_bright_rate``; a dark ion
(|0> = D) contributes background at ``detect_dark_rate`` until it decays to S
at an exponentially distributed time (lifetime ``tau1``), after which it
scatters like a bright ion for the rest of the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, stats


def projection_noise(p: float, shots: int) -> float:
    """Binomial standard deviation sqrt(p (1 - p) / N)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return math.sqrt(p * (1 - p) / shots)


def _count_support(mean: float) -> int:
    return int(mean + 12 * math.sqrt(mean + 1) + 30)


def bright_pmf(rate_b: float, t: float, kmax: int) -> np.ndarray:
    return stats.poisson.pmf(np.arange(kmax + 1), rate_b * t)


def dark_pmf(rate_d: float, rate_b: float, t: float, tau1: float, kmax: int,
             decay: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Dark-ion count distribution and its decay-during-window part.

    Returns ``(total, decay_part)`` where ``total = exp(-t/tau1) Pois(rd t) +
    decay_part`` and ``decay_part = int_0^t exp(-s/tau1)/tau1 Pois(rd s + rb (t-s)) ds``.
    """
    k = np.arange(kmax + 1)
    if t <= 0:
        total = np.zeros(kmax + 1)
        total[0] = 1.0
        return total, np.zeros(kmax + 1)
    if not decay or not math.isfinite(tau1):
        return stats.poisson.pmf(k, rate_d * t), np.zeros(kmax + 1)
    survive = math.exp(-t / tau1)
    part = np.array([
        integrate.quad(
            lambda s, kk=kk: math.exp(-s / tau1) / tau1 * stats.poisson.pmf(kk, rate_d * s + rate_b * (t - s)),
            0.0, t, epsabs=1e-15, epsrel=1e-10, limit=200,
        )[0]
        for kk in k
    ])
    return survive * stats.poisson.pmf(k, rate_d * t) + part, part


@dataclass(frozen=True)
class DetectionError:
    threshold: int  # counts > threshold are classified bright
    error: float  # 1/2 (P(dark > th) + P(bright <= th))
    overlap: float  # part of ``error`` not caused by decay in the window
    decay_part: float  # part of ``error`` caused by decay (error = overlap + decay_part)
    p_dark_as_bright: float
    p_bright_as_dark: float


@lru_cache(maxsize=64)
def _detection_error(rate_b, rate_d, t, tau1) -> DetectionError:
    kmax = _count_support(rate_b * t + rate_d * t)
    pb = bright_pmf(rate_b, t, kmax)
    pd, part = dark_pmf(rate_d, rate_b, t, tau1, kmax)
    cb = np.cumsum(pb)  # P(bright <= th)
    # P(dark > th) summed from the top so deep tails keep full precision
    tail = np.append(np.cumsum(pd[::-1])[::-1][1:], 0.0)
    err = 0.5 * (tail + cb)
    th = int(np.argmin(err))
    surv = math.exp(-t / tau1) if math.isfinite(tau1) else 1.0
    pure_tail = float(stats.poisson.sf(th, rate_d * t)) if t > 0 else 0.0
    decay_tail = float(part[th + 1:].sum())
    return DetectionError(
        threshold=th,
        error=float(err[th]),
        overlap=float(0.5 * (surv * pure_tail + cb[th])),
        decay_part=0.5 * decay_tail,
        p_dark_as_bright=float(tail[th]),
        p_bright_as_dark=float(cb[th]),
    )


def detection_error(p, detect_time: float | None = None) -> DetectionError:
    """Optimal single-ion threshold and misclassification breakdown for params ``p``.

    ``error`` is the total, ``overlap`` the part caused by overlap of the
    undecayed Poisson distributions, ``decay_part`` the part caused by D-state
    decay during the window.
    """
    t = p.detect_time if detect_time is None else detect_time
    if t < 0:
        raise ValueError("detection time must be >= 0")
    return _detection_error(float(p.detect_bright_rate), float(p.detect_dark_rate), float(t), float(p.tau1))


def detection_sample(bright: bool, p, rng: np.random.Generator, detect_time: float | None = None) -> int:
    """Draw a photon count for a bright or dark ion."""
    t = p.detect_time if detect_time is None else detect_time
    if t <= 0:
        return 0
    rb, rd = p.detect_bright_rate, p.detect_dark_rate
    if bright:
        return int(rng.poisson(rb * t))
    t_jump = rng.exponential(p.tau1) if math.isfinite(p.tau1) else math.inf
    if t_jump < t:
        return int(rng.poisson(rd * t_jump + rb * (t - t_jump)))
    return int(rng.poisson(rd * t))


@dataclass(frozen=True)
class RegisterHistogram:
    counts: np.ndarray  # count values 0..kmax
    pmf: np.ndarray  # P(count)
    thresholds: tuple  # n_ions thresholds separating k and k+1 bright ions


def pmt_register_histogram(n_ions: int, n_bright: int, p, detect_time: float | None = None) -> RegisterHistogram:
    """Count distribution of a register with ``n_bright`` of ``n_ions`` bright.

    Poisson with mean (n_bright * rate_b + n_ions * rate_d) * t; the returned
    thresholds are the points where neighbouring bright-number distributions
    cross, for use with :func:`classify_bright_number`.
    """
    if not 0 <= n_bright <= n_ions:
        raise ValueError("n_bright must lie in [0, n_ions]")
    t = p.detect_time if detect_time is None else detect_time
    rb, rd = p.detect_bright_rate, p.detect_dark_rate
    kmax = _count_support((n_ions * rb + n_ions * rd) * t)
    k = np.arange(kmax + 1)
    pmf = stats.poisson.pmf(k, (n_bright * rb + n_ions * rd) * t)
    return RegisterHistogram(k, pmf, register_thresholds(n_ions, p, t))


def register_thresholds(n_ions: int, p, detect_time: float | None = None) -> tuple:
    t = p.detect_time if detect_time is None else detect_time
    rb, rd = p.detect_bright_rate, p.detect_dark_rate
    out = []
    for j in range(n_ions):
        lo, hi = (j * rb + n_ions * rd) * t, ((j + 1) * rb + n_ions * rd) * t
        # equal-likelihood point of two Poisson laws
        x = (hi - lo) / math.log(hi / lo) if lo > 0 else 0.0
        out.append(int(math.floor(x)))
    return tuple(out)


def classify_bright_number(counts, thresholds) -> np.ndarray:
    """Number of bright ions inferred from counts (count > th_j means > j bright)."""
    return np.searchsorted(np.asarray(thresholds), np.asarray(counts), side="left")
