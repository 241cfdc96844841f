"""Thermal baths: spectral densities, kernels and block coefficients.

Units are hbar = k_B = 1.  A spin environment is an oscillator environment
with ``J(w) -> J(w) tanh(beta w / 2)``.

The per-block coefficients are the cosine/sine moments of the kernels

    nu(tau)  = int_0^inf dw J(w) coth(beta w / 2) cos(w tau)
    eta(tau) = int_0^inf dw J(w) sin(w tau)

at a block frequency ``Omega``::

    D       =  int nu cos(Omega tau)            = pi/2 J(Omega) coth(beta Omega / 2)
    f       = -1/Omega int nu sin(Omega tau)    = PV int J coth / (w^2 - Omega^2)
    gamma   =  1/Omega int eta sin(Omega tau)   = pi/2 J(Omega) / Omega
    Omega~2 = -int eta cos(Omega tau)           = -PV int J w / (w^2 - Omega^2)

The principal-value forms follow from the Abel-regularized tau integrals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import Divergent, NoCutoff

QUAD_REL = 1e-9
QUAD_LIMIT = 400


@dataclass(frozen=True)
class SpectralDensity:
    """``J(w) = lam * w**s * cutoff(w)``, ``w >= 0``."""

    s: float = 1.0
    lam: float = 1.0
    cutoff: str = "exp"  # "exp" | "hard" | "none"
    omega_c: Optional[float] = 10.0

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("power-law exponent s must be positive")
        if self.lam < 0:
            raise ValueError("amplitude must be nonnegative")
        if self.cutoff not in ("exp", "hard", "none"):
            raise ValueError(f"unknown cutoff {self.cutoff!r}")
        if self.cutoff != "none" and not (self.omega_c and self.omega_c > 0):
            raise ValueError("cutoff frequency must be positive")

    @property
    def has_cutoff(self) -> bool:
        return self.cutoff != "none"

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        with np.errstate(invalid="ignore"):
            out = self.lam * np.power(np.maximum(w, 0.0), self.s)
        if self.cutoff == "exp":
            out = out * np.exp(-w / self.omega_c)
        elif self.cutoff == "hard":
            out = np.where(w <= self.omega_c, out, 0.0)
        return np.where(w >= 0, out, 0.0)[()]


@dataclass(frozen=True)
class BathSpec:
    spectral: SpectralDensity = field(default_factory=SpectralDensity)
    beta: float = 1.0  # math.inf for zero temperature
    kind: str = "oscillator"  # "oscillator" | "spin"

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.kind not in ("oscillator", "spin"):
            raise ValueError(f"unknown environment kind {self.kind!r}")


def _tanh_half(beta, w):
    if math.isinf(beta):
        return np.ones_like(np.asarray(w, dtype=float))[()]
    return np.tanh(0.5 * beta * np.asarray(w, dtype=float))


def _coth_half(beta, w):
    if math.isinf(beta):
        return np.ones_like(np.asarray(w, dtype=float))[()]
    return 1.0 / np.tanh(0.5 * beta * np.asarray(w, dtype=float))


def effective_J(bath: BathSpec, w):
    """Spectral density seen by the dissipation kernel."""
    j = bath.spectral(w)
    if bath.kind == "spin":
        j = j * _tanh_half(bath.beta, w)
    return j


def noise_spectrum(bath: BathSpec, w):
    """``J_eff(w) coth(beta w / 2)``; for spin baths the thermal factors cancel."""
    if bath.kind == "spin":
        return bath.spectral(w)
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (bath.spectral(w) * _coth_half(bath.beta, w))[()]


def D_alpha(bath: BathSpec, omega: float) -> float:
    """Normal diffusion coefficient ``pi/2 J_eff(Omega) coth(beta Omega / 2)``."""
    if omega <= 0:
        raise ValueError("block frequency must be positive")
    return float(0.5 * math.pi * noise_spectrum(bath, omega))


def gamma_alpha(bath: BathSpec, omega: float) -> float:
    """Momentum damping coefficient ``pi/2 J_eff(Omega) / Omega``."""
    if omega <= 0:
        raise ValueError("block frequency must be positive")
    return float(0.5 * math.pi * effective_J(bath, omega) / omega)


def D_zero(bath: BathSpec) -> float:
    """Zero-frequency diffusion ``int_0^inf nu(tau) d tau``.

    Oscillator baths: ``pi/beta lim J(w)/w``; spin baths: ``pi/2 lim J(w)``.
    Raises :class:`Divergent` for sub-Ohmic oscillator baths at finite
    temperature.
    """
    sd = bath.spectral
    if sd.lam == 0:
        return 0.0
    if bath.kind == "spin" or math.isinf(bath.beta):
        # pi/2 * lim_{w->0} lam w^s = 0 for s > 0
        return 0.0
    if sd.s < 1:
        raise Divergent("D0 diverges for sub-Ohmic oscillator baths; coupling to "
                        "zero-frequency directions must vanish")
    if sd.s > 1:
        return 0.0
    return math.pi * sd.lam / bath.beta


def _breakpoints(bath: BathSpec, *extra):
    pts = [p for p in extra if p and p > 0]
    if not math.isinf(bath.beta):
        pts.append(1.0 / bath.beta)
    if bath.spectral.has_cutoff:
        pts.append(bath.spectral.omega_c)
    return sorted(set(pts))


def _quad_halfline(fn, bath: BathSpec, start: float = 0.0, points=()):
    """``int_start^inf fn`` split at the natural scales of the bath."""
    sd = bath.spectral
    upper = sd.omega_c if sd.cutoff == "hard" else math.inf
    cuts = [start] + [p for p in _breakpoints(bath, *points) if start < p < upper]
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:] + [upper]):
        if hi <= lo:
            continue
        val, _ = integrate.quad(fn, lo, hi, epsrel=QUAD_REL, epsabs=0.0, limit=QUAD_LIMIT)
        total += val
    return total


def _principal_value(h, bath: BathSpec, omega: float) -> float:
    """``PV int_0^inf h(w) / (w^2 - Omega^2) dw``."""
    sd = bath.spectral
    if sd.lam == 0:
        return 0.0
    if not sd.has_cutoff:
        raise NoCutoff("coefficient requires a spectral cutoff")
    upper = sd.omega_c if sd.cutoff == "hard" else math.inf
    if omega == 0:
        return _quad_halfline(lambda w: h(w) / w ** 2, bath)
    if sd.cutoff == "hard" and omega >= upper:
        if omega == upper:
            raise Divergent("principal value diverges with the pole at the hard cutoff")
        return _quad_halfline(lambda w: h(w) / (w * w - omega * omega), bath)
    lo, hi = 0.5 * omega, min(1.5 * omega, 0.5 * (omega + upper))
    total, _ = integrate.quad(lambda w: h(w) / (w + omega), lo, hi, weight="cauchy", wvar=omega,
                              epsrel=QUAD_REL, epsabs=0.0, limit=QUAD_LIMIT)
    reg = lambda w: h(w) / (w * w - omega * omega)  # noqa: E731
    val, _ = integrate.quad(reg, 0.0, lo, epsrel=QUAD_REL, epsabs=0.0, limit=QUAD_LIMIT)
    total += val
    total += _quad_halfline(reg, bath, start=hi)
    return float(total)


def f_alpha(bath: BathSpec, omega: float) -> float:
    """Anomalous diffusion coefficient ``-1/Omega int nu(tau) sin(Omega tau)``."""
    return _principal_value(lambda w: noise_spectrum(bath, w), bath, omega)


def omega_shift_sq(bath: BathSpec, omega: float) -> float:
    """Frequency shift ``-int eta(tau) cos(Omega tau)``."""
    return -_principal_value(lambda w: effective_J(bath, w) * w, bath, omega)


def gamma_zero(bath: BathSpec) -> float:
    """``int_0^inf eta(tau) d tau = int J_eff(w)/w dw``, the zero-frequency
    entry of the dissipation matrix (equal to ``-omega_shift_sq(0)``)."""
    if bath.spectral.lam == 0:
        return 0.0
    if not bath.spectral.has_cutoff:
        raise NoCutoff("zero-frequency dissipation requires a spectral cutoff")
    return _quad_halfline(lambda w: effective_J(bath, w) / w, bath)


def _fourier(g, bath: BathSpec, tau: float, trig: str) -> float:
    with warnings.catch_warnings():
        # QAWF reports harmless extrapolation trouble once the kernel is ~0
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _fourier_raw(g, bath, tau, trig)


def _fourier_raw(g, bath: BathSpec, tau: float, trig: str) -> float:
    sd = bath.spectral
    if sd.lam == 0:
        return 0.0
    if not sd.has_cutoff:
        raise NoCutoff("kernels require a spectral cutoff")
    if tau == 0:
        if trig == "sin":
            return 0.0
        return _quad_halfline(g, bath)
    upper = sd.omega_c if sd.cutoff == "hard" else math.inf
    if math.isinf(upper):
        # QAWF needs a nonsingular start; integrate the first stretch normally
        head = min(_breakpoints(bath) + [1.0])
        first, _ = integrate.quad(g, 0.0, head, weight=trig, wvar=tau, epsrel=QUAD_REL,
                                  epsabs=0.0, limit=QUAD_LIMIT)
        tail, _ = integrate.quad(g, head, math.inf, weight=trig, wvar=tau, epsabs=1e-13,
                                 limlst=200, limit=QUAD_LIMIT)
        return float(first + tail)
    val, _ = integrate.quad(g, 0.0, upper, weight=trig, wvar=tau, epsrel=QUAD_REL,
                            epsabs=0.0, limit=QUAD_LIMIT)
    return float(val)


def nu_kernel(bath: BathSpec, tau: float) -> float:
    """Noise kernel, by quadrature (cross-validation only)."""
    return _fourier(lambda w: noise_spectrum(bath, w), bath, abs(tau), "cos")


def eta_kernel(bath: BathSpec, tau: float) -> float:
    """Dissipation kernel, by quadrature (cross-validation only)."""
    val = _fourier(lambda w: effective_J(bath, w), bath, abs(tau), "sin")
    return math.copysign(val, tau) if tau else 0.0


def tau_moment(kernel, omega: float, trig: str = "cos") -> float:
    """``int_0^inf kernel(tau) trig(omega tau) d tau`` for a decaying kernel."""
    if omega == 0:
        val, _ = integrate.quad(kernel, 0.0, math.inf, limit=QUAD_LIMIT)
        return float(val)
    val, _ = integrate.quad(kernel, 0.0, math.inf, weight=trig, wvar=omega, limlst=200,
                            limit=QUAD_LIMIT)
    return float(val)


@dataclass(frozen=True)
class BathCoefficients:
    """Per-block ``D, gamma, f, Omega~^2`` plus zero-frequency ``D0, gamma0``.

    ``nan`` marks a coefficient that could not be evaluated (no cutoff);
    ``inf`` in ``D0`` marks divergence.  Both are only an error if the
    coefficient actually multiplies something nonzero.
    """

    frequencies: np.ndarray
    D: np.ndarray
    gamma: np.ndarray
    f: np.ndarray
    omega_shift_sq: np.ndarray
    D0: float = 0.0
    gamma0: float = 0.0

    def __post_init__(self):
        for name in ("frequencies", "D", "gamma", "f", "omega_shift_sq"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def ratio(self) -> np.ndarray:
        """``Omega gamma / D``; equals ``tanh(beta Omega / 2)`` for thermal baths."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.D > 0, self.frequencies * self.gamma / self.D, 0.0)


def bath_coefficients(bath: BathSpec, frequencies) -> BathCoefficients:
    freqs = np.asarray(frequencies, dtype=float).reshape(-1)
    d = [D_alpha(bath, w) for w in freqs]
    g = [gamma_alpha(bath, w) for w in freqs]
    if bath.spectral.has_cutoff or bath.spectral.lam == 0:
        fa = [f_alpha(bath, w) for w in freqs]
        sh = [omega_shift_sq(bath, w) for w in freqs]
        g0 = gamma_zero(bath)
    else:
        fa = [math.nan] * len(freqs)
        sh = [math.nan] * len(freqs)
        g0 = math.nan
    try:
        d0 = D_zero(bath)
    except Divergent:
        d0 = math.inf
    return BathCoefficients(freqs, d, g, fa, sh, d0, g0)


def coefficients_from_ratio(frequencies, gamma_over_d, D: float = 1.0) -> BathCoefficients:
    """Coefficients fixed by ``Omega gamma / D`` (the spin-path ``gamma/D``).

    Anomalous diffusion, frequency shifts and zero-frequency terms are set
    to zero; with ``D = 1`` entropies come out in units of ``2D``.
    """
    freqs = np.asarray(frequencies, dtype=float).reshape(-1)
    ratio = np.broadcast_to(np.asarray(gamma_over_d, dtype=float), freqs.shape)
    d = np.full(freqs.shape, float(D))
    return BathCoefficients(freqs, d, ratio * d / freqs, np.zeros_like(freqs),
                            np.zeros_like(freqs), 0.0, 0.0)
