"""Ramsey and spin-echo contrast from a phase-noise spectral density.

Frequencies in the model are given in Hz and converted to angular frequency
internally, so ``A(omega)`` is evaluated with ``omega = 2 pi f``.  The
contrast is

    C(T) = exp(-int_0^inf A(w)^2 K_T(w) dw)

with kernel ``sin^2(wT/2) / w^2`` (Ramsey) or ``4 sin^4(wT/4) / w^2``
(single echo, same white-noise limit as the Ramsey kernel).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np
from scipy import integrate, optimize, special

from .. import kvconfig

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
CUTOFF_MIN = TWO_PI * 5e3  # rad/s
QUAD_RTOL = 1e-8


class IntegrationError(RuntimeError):
    """Quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class NoiseSpectrumModel:
    """Lorentzian laser line plus two Gaussian side peaks.

    A(w) = alpha (L(w) + a1 G_nu1(w) + a2 G_nu2(w)), L = gamma^2 / (gamma^2 + w^2),
    G_nu = exp(-(w - nu)^2 / sigma^2); gamma, sigma, nu in Hz.
    """

    alpha: float = 89.0
    gamma: float = 3.0
    a1: float = 0.22
    a2: float = 0.02
    sigma: float = 10.0
    nu1: float = 300.0
    nu2: float = 100.0

    def __post_init__(self):
        if self.alpha < 0 or self.gamma <= 0 or self.sigma <= 0:
            raise ValueError("alpha must be >= 0, gamma and sigma > 0")
        if self.a1 < 0 or self.a2 < 0:
            raise ValueError("peak weights must be >= 0")

    @classmethod
    def silent(cls) -> "NoiseSpectrumModel":
        return cls(alpha=0.0)

    def amplitude(self, w) -> np.ndarray:
        """A(w) for angular frequency ``w`` (rad/s)."""
        w = np.asarray(w, dtype=float)
        g, s = TWO_PI * self.gamma, TWO_PI * self.sigma
        lor = g * g / (g * g + w * w)
        p1 = np.exp(-((w - TWO_PI * self.nu1) / s) ** 2)
        p2 = np.exp(-((w - TWO_PI * self.nu2) / s) ** 2)
        return self.alpha * (lor + self.a1 * p1 + self.a2 * p2)

    def breakpoints(self) -> list[float]:
        g, s = TWO_PI * self.gamma, TWO_PI * self.sigma
        pts = [g, 10 * g]
        for nu in (self.nu1, self.nu2):
            c = TWO_PI * nu
            pts += [max(c - 8 * s, 0.0), c, c + 8 * s]
        return sorted(set(p for p in pts if p > 0))

    def tail_bound(self, cutoff: float) -> float:
        """Upper bound on int_cutoff^inf A^2 / w^2 dw (kernel numerators <= 1)."""
        g, s = TWO_PI * self.gamma, TWO_PI * self.sigma
        lor = g**4 / (5 * cutoff**5)
        gauss = 0.0
        for a, nu in ((self.a1, self.nu1), (self.a2, self.nu2)):
            z = math.sqrt(2) * (cutoff - TWO_PI * nu) / s
            gauss += a * a * s * math.sqrt(math.pi / 8) * special.erfc(z) / cutoff**2
        return 3 * self.alpha**2 * (lor + gauss)

    def to_kv(self) -> str:
        return kvconfig.dumps({f.name: float(getattr(self, f.name)) for f in fields(self)})

    @classmethod
    def from_kv(cls, text: str) -> "NoiseSpectrumModel":
        raw = kvconfig.loads(text)
        unknown = set(raw) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown keys {sorted(unknown)}")
        return replace(cls(), **{k: float(v) for k, v in raw.items()})

    def save(self, path) -> None:
        Path(path).write_text(self.to_kv())

    @classmethod
    def load(cls, path) -> "NoiseSpectrumModel":
        return cls.from_kv(Path(path).read_text())


def _ramsey_kernel(w, T):
    # sin^2(wT/2) / w^2 written with sinc to stay finite at w = 0
    x = np.sinc(w * T / (2 * math.pi))  # np.sinc(y) = sin(pi y)/(pi y)
    return 0.25 * T * T * x * x


def _echo_kernel(w, T):
    x = np.sinc(w * T / (4 * math.pi))
    s = np.sin(w * T / 4)
    return 0.25 * T * T * x * x * s * s


KERNELS = {"ramsey": _ramsey_kernel, "echo": _echo_kernel}


def cutoff_frequency(T: float) -> float:
    return max(10.0 / T, CUTOFF_MIN)


def decay_exponent(T: float, m: NoiseSpectrumModel, kernel: str = "ramsey") -> float:
    """int_0^inf A(w)^2 K_T(w) dw by adaptive quadrature up to the cutoff.

    Raises IntegrationError when the quadrature error estimate or the
    analytic tail bound beyond the cutoff exceeds the relative tolerance.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    if T == 0 or m.alpha == 0:
        return 0.0
    kern = KERNELS[kernel]
    wc = cutoff_frequency(T)
    # oscillation period of the kernel is 2 pi / T (4 pi / T for the echo)
    edges = sorted({0.0, wc, *[p for p in m.breakpoints() if p < wc]})
    total, err = 0.0, 0.0
    with np.errstate(all="ignore"):
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, e, info = integrate.quad(
                lambda w: m.amplitude(w) ** 2 * kern(w, T), lo, hi,
                epsabs=0.0, epsrel=QUAD_RTOL * 0.1, limit=2000, full_output=1,
            )[:3]
            total += val
            err += e
    tail = m.tail_bound(wc)
    log.debug("decay_exponent T=%g: value %.6e quad_err %.2e tail_bound %.2e", T, total, err, tail)
    if err > QUAD_RTOL * abs(total) + 1e-300 or tail > QUAD_RTOL * abs(total):
        raise IntegrationError(f"integral at T={T} not converged: value {total:g}, error {err:g}, tail {tail:g}")
    return total


def ramsey_contrast(T, m: NoiseSpectrumModel):
    """Ramsey contrast C(T); accepts a scalar or an array of times."""
    if np.ndim(T) == 0:
        return math.exp(-decay_exponent(float(T), m, "ramsey"))
    return np.array([math.exp(-decay_exponent(float(t), m, "ramsey")) for t in np.ravel(T)]).reshape(np.shape(T))


def echo_contrast(T, m: NoiseSpectrumModel):
    """Contrast after a single spin echo at T/2 (total free evolution T)."""
    if np.ndim(T) == 0:
        return math.exp(-decay_exponent(float(T), m, "echo"))
    return np.array([math.exp(-decay_exponent(float(t), m, "echo")) for t in np.ravel(T)]).reshape(np.shape(T))


def dfs_coherence(t, n_excited: int, tau1: float):
    """Coherence of a decoherence-free-subspace state with ``n_excited`` ions in D."""
    if n_excited < 0:
        raise ValueError("n_excited must be >= 0")
    if tau1 <= 0:
        raise ValueError("tau1 must be > 0")
    return np.exp(-n_excited * np.asarray(t, dtype=float) / tau1)


@dataclass(frozen=True)
class RamseyDataset:
    times: np.ndarray
    contrast: np.ndarray
    uncertainty: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        c = np.asarray(self.contrast, dtype=float)
        u = np.asarray(self.uncertainty, dtype=float)
        if not (t.shape == c.shape == u.shape) or t.ndim != 1:
            raise ValueError("times, contrast and uncertainty must be 1-D of equal length")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ValueError("times must be non-negative and strictly increasing")
        if np.any(u <= 0):
            raise ValueError("uncertainties must be > 0")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "contrast", c)
        object.__setattr__(self, "uncertainty", u)

    def __len__(self):
        return len(self.times)

    def to_text(self) -> str:
        rows = [f"{float(t)!r},{float(c)!r},{float(u)!r}" for t, c, u in zip(self.times, self.contrast, self.uncertainty)]
        return "time,value,uncertainty\n" + "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RamseyDataset":
        data = np.loadtxt(text.splitlines(), delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2])

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "RamseyDataset":
        return cls.from_text(Path(path).read_text())


def synthetic_ramsey(m: NoiseSpectrumModel, times, rel_noise: float = 0.0,
                     rng: np.random.Generator | None = None) -> RamseyDataset:
    """Contrast curve of ``m`` with optional Gaussian noise of ``rel_noise`` * C."""
    c = np.asarray(ramsey_contrast(np.asarray(times, dtype=float), m))
    u = np.maximum(rel_noise * c, 1e-4)
    if rel_noise > 0:
        rng = np.random.default_rng(0) if rng is None else rng
        c = c + rng.normal(0.0, rel_noise * c)
    return RamseyDataset(times, c, u)


@dataclass(frozen=True)
class SpectrumFit:
    model: NoiseSpectrumModel
    residuals: np.ndarray  # model - data, unweighted
    chi2: float
    converged: bool
    message: str


FIT_PARAMS = ("alpha", "gamma", "a1", "a2")


class _GridExponent:
    """Fixed-grid (composite Simpson) evaluator used inside the fit loop.

    The kernel matrix is computed once per dataset, so each model evaluation
    is a single matrix-vector product.  Final residuals use the adaptive path.
    """

    def __init__(self, times: np.ndarray, kernel: str = "ramsey"):
        wc = cutoff_frequency(float(np.min(times[times > 0]))) if np.any(times > 0) else CUTOFF_MIN
        dense = np.linspace(0.0, TWO_PI * 600, 60001)
        coarse = np.linspace(TWO_PI * 600, wc, 40001)[1:]
        self.w = np.concatenate([dense, coarse])
        wts = np.concatenate([_simpson_weights(dense), np.zeros(len(coarse))])
        wts[len(dense) - 1:] += _simpson_weights(np.concatenate([dense[-1:], coarse]))
        self.k = KERNELS[kernel](self.w[None, :], times[:, None]) * wts[None, :]

    def __call__(self, m: NoiseSpectrumModel) -> np.ndarray:
        return np.exp(-(self.k @ (m.amplitude(self.w) ** 2)))


def _simpson_weights(x: np.ndarray) -> np.ndarray:
    n = len(x)
    if n % 2 == 0:
        raise ValueError("Simpson grid needs an odd number of points")
    h = (x[-1] - x[0]) / (n - 1)
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3


def fit_spectrum(data: RamseyDataset, init: NoiseSpectrumModel | None = None,
                 max_nfev: int = 400) -> SpectrumFit:
    """Weighted least squares over (alpha, gamma, a1, a2); sigma, nu1, nu2 stay fixed."""
    if len(data) < 8:
        raise ValueError("need at least 8 data points")
    init = NoiseSpectrumModel() if init is None else init
    x0 = np.array([getattr(init, k) for k in FIT_PARAMS], dtype=float)
    x0[1] = max(x0[1], 1e-3)
    grid = _GridExponent(data.times)

    def model_of(x):
        return replace(init, alpha=float(x[0]), gamma=float(x[1]), a1=float(x[2]), a2=float(x[3]))

    def resid(x):
        return (grid(model_of(x)) - data.contrast) / data.uncertainty

    sol = optimize.least_squares(
        resid, x0, bounds=([0.0, 1e-3, 0.0, 0.0], [np.inf, np.inf, np.inf, np.inf]),
        x_scale=np.maximum(np.abs(x0), [1.0, 0.1, 0.01, 0.01]), max_nfev=max_nfev,
        xtol=1e-12, ftol=1e-12, gtol=1e-12,
    )
    m = model_of(sol.x)
    r = ramsey_contrast(data.times, m) - data.contrast
    return SpectrumFit(m, r, float(np.sum((r / data.uncertainty) ** 2)), bool(sol.status > 0), sol.message)
