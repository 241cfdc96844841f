"""Spin-j systems: generators, coherent states and the analytic spin-1 sieve.

For a spin coupled through ``J_x`` to a thermal bath with ``H0 = Omega J_z``
the entropy production in units of ``2D`` is

    s / 2D = dJx^2 + dJy^2 + g <J_z>,    g = gamma/D = tanh(beta Omega / 2).

Basis ordering is ``|j, j>, |j, j-1>, ..., |j, -j>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import optimize
from scipy.linalg import expm

from .algebra import LieModel, model_from_generators
from .bath import coefficients_from_ratio
from .errors import BadSpin, OutOfRange
from .functional import FunctionalSpec, PureState, as_vector, covariance, expectations

TOL_DEGENERATE_K = 1e-9


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
                         (1, 0, 2): -1, (0, 2, 1): -1, (2, 1, 0): -1}.items():
        eps[i, j, k] = s
    return eps


def _as_spin(j) -> float:
    two_j = Fraction(j).limit_denominator(1000) * 2 if not isinstance(j, str) else Fraction(j) * 2
    if two_j.denominator != 1 or two_j < 0 or abs(float(two_j) - 2 * float(Fraction(j))) > 1e-12:
        raise BadSpin(f"spin must be a nonnegative half-integer, got {j!r}")
    return float(two_j) / 2


@dataclass(frozen=True)
class SpinModel:
    j: float
    Jx: np.ndarray
    Jy: np.ndarray
    Jz: np.ndarray
    omega: float = 1.0

    @property
    def dim(self) -> int:
        return self.Jz.shape[0]

    @property
    def generators(self) -> np.ndarray:
        return np.array([self.Jx, self.Jy, self.Jz])

    def casimir(self) -> np.ndarray:
        return self.Jx @ self.Jx + self.Jy @ self.Jy + self.Jz @ self.Jz

    def lie_model(self, coupling=(-1.0, 0.0, 0.0)) -> LieModel:
        """``H0 = omega J_z``, ``A = sum a_j J_j`` with exact ``f = epsilon``."""
        return model_from_generators(self.generators, coupling, h0_scale=self.omega,
                                     structure_constants=levi_civita(), labels=("Jx", "Jy", "Jz"))


def spin_generators(j, omega: float = 1.0) -> SpinModel:
    """Spin-j matrices from the ladder construction."""
    j = _as_spin(j)
    d = int(round(2 * j)) + 1
    m = j - np.arange(d)
    # <m+1| J+ |m> sits at (i-1, i)
    up = np.sqrt(np.maximum(j * (j + 1) - m[1:] * (m[1:] + 1), 0.0))
    jp = np.diag(up, 1).astype(complex)
    jm = jp.conj().T
    jx = 0.5 * (jp + jm)
    jy = -0.5j * (jp - jm)
    jz = np.diag(m).astype(complex)
    return SpinModel(j, jx, jy, jz, omega)


def spin_ratio(beta: float, omega: float) -> float:
    """``gamma / D = tanh(beta Omega / 2)`` for a thermal bath."""
    if math.isinf(beta):
        return 1.0
    return math.tanh(0.5 * beta * omega)


def _check_ratio(gamma_over_D: float):
    if not (0.0 <= gamma_over_D <= 1.0) or math.isnan(gamma_over_D):
        raise OutOfRange(f"gamma/D must lie in [0, 1], got {gamma_over_D!r}")


def spin_functional(j, gamma_over_D: float) -> FunctionalSpec:
    """``dJx^2 + dJy^2 + (gamma/D) <J_z>`` (entropy production over ``2D``)."""
    _check_ratio(gamma_over_D)
    sm = spin_generators(j)
    lin = ((sm.Jz,), (gamma_over_D,)) if gamma_over_D else ((), ())
    return FunctionalSpec((sm.Jx, sm.Jy), (1.0, 1.0), lin[0], lin[1])


def spin_coefficients(gamma_over_D: float, omega: float = 1.0):
    """Unit-``D`` coefficients of the single rotation block of a spin model."""
    _check_ratio(gamma_over_D)
    return coefficients_from_ratio([omega], gamma_over_D)


def coherent_state(j, theta: float, phi: float) -> PureState:
    """``exp(i theta (sin(phi) J_x - cos(phi) J_y)) |j, -j>``; ``<J> = -j n``."""
    sm = spin_generators(j)
    gen = math.sin(phi) * sm.Jx - math.cos(phi) * sm.Jy
    low = np.zeros(sm.dim, dtype=complex)
    low[-1] = 1.0
    psi = expm(1j * theta * gen) @ low
    return PureState(psi / np.linalg.norm(psi))


def coherent_entropy(j, theta: float, gamma_over_D: float) -> float:
    """``j (1 - sin^2(theta)/2 - (gamma/D) cos(theta))``, independent of ``phi``."""
    j = _as_spin(j)
    return j * (1.0 - 0.5 * math.sin(theta) ** 2 - gamma_over_D * math.cos(theta))


@dataclass(frozen=True)
class CoherentMinimum:
    theta: float
    cos_theta: float
    value: float


def coherent_entropy_slope(j, cos_theta: float, gamma_over_D: float) -> float:
    """``d/dc`` of :func:`coherent_entropy` with ``c = cos(theta)``: ``j (c - gamma/D)``."""
    return _as_spin(j) * (cos_theta - gamma_over_D)


def coherent_minimum(j, gamma_over_D: float) -> CoherentMinimum:
    """Minimize :func:`coherent_entropy` over ``theta``.

    In ``c = cos(theta)`` the objective is smooth on ``[-1, 1]``; the
    stationary point is bracketed on the slope (accurate to roundoff, unlike
    a value-based search) and compared against the endpoints.
    """
    _check_ratio(gamma_over_D)
    jj = _as_spin(j)

    def obj(c):
        return coherent_entropy(jj, math.acos(min(1.0, max(-1.0, c))), gamma_over_D)

    def slope(c):
        return coherent_entropy_slope(jj, c, gamma_over_D)

    candidates = [-1.0, 1.0]
    if slope(-1.0) < 0 < slope(1.0):
        candidates.append(optimize.brentq(slope, -1.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    c = min(candidates, key=obj)
    return CoherentMinimum(math.acos(c), c, obj(c))


@dataclass(frozen=True)
class Spin1Solution:
    """Analytic spin-1 pointer state for a given ``gamma/D``."""

    gamma_over_D: float
    mu0: float
    r: float
    q_abs2: float
    k: float
    state: PureState
    min_value: float

    def cubic_residual(self) -> float:
        g = self.gamma_over_D
        return abs(2 * self.mu0 ** 3 - 3 * self.mu0 ** 2 + g * g)


def spin1_roots(gamma_over_D: float) -> np.ndarray:
    """Real roots of ``2 mu^3 - 3 mu^2 + g^2 = 0`` (trigonometric form)."""
    g = gamma_over_D
    phi = math.acos(max(-1.0, min(1.0, 1.0 - 2.0 * g * g)))
    return np.array([0.5 + math.cos(phi / 3.0 - 2.0 * math.pi * k / 3.0) for k in range(3)])


def spin1_value(mu: float, gamma_over_D: float) -> float:
    g2 = gamma_over_D ** 2
    return (mu ** 3 - 3 * mu ** 2 + (4 - g2) * mu - g2) / (4 * mu)


def _polish_root(mu: float, g: float) -> float:
    for _ in range(3):
        p = 2 * mu ** 3 - 3 * mu ** 2 + g * g
        dp = 6 * mu ** 2 - 6 * mu
        if dp == 0 or p == 0:
            break
        mu -= p / dp
    return mu


def spin1_solve(gamma_over_D: float) -> Spin1Solution:
    """Global minimizer of ``dJx^2 + dJy^2 + g <J_z>`` for spin 1.

    Candidates are the real roots with ``mu >= g`` and ``r <= 1``; the one
    with the lowest value is kept.  The returned state has ``v = 0`` and
    ``u > 0`` (or ``u~ > 0`` when ``mu = g``).
    """
    _check_ratio(gamma_over_D)
    g = float(gamma_over_D)
    best = None
    for mu in spin1_roots(g):
        if mu <= 0 or mu < g - 1e-12:
            continue
        mu = _polish_root(mu, g)
        r2 = max(mu * mu - g * g, 0.0) / (4 * mu)
        if r2 > 1.0:
            continue
        val = spin1_value(mu, g)
        if best is None or val < best[1]:
            best = (mu, val, r2)
    if best is None:  # pragma: no cover - the cubic always has an admissible root
        raise OutOfRange(f"no admissible root for gamma/D = {g}")
    mu, val, r2 = best
    r = math.sqrt(r2)
    if abs(g - mu) < TOL_DEGENERATE_K:
        kp = (g - mu) / (g + mu)
        ut = math.sqrt((1 - r2) / (1 + kp * kp))
        u = -kp * ut
        amps = np.array([u, r, ut], dtype=complex)
        k = math.inf if kp == 0 else 1.0 / kp
    else:
        k = (g + mu) / (g - mu)
        u = math.sqrt((1 - r2) / (1 + k * k))
        amps = np.array([u, r, -k * u], dtype=complex)
    amps /= np.linalg.norm(amps)
    return Spin1Solution(g, mu, r, float(abs(amps[0]) ** 2), k, PureState(amps), val)


@dataclass(frozen=True)
class Spin1Observables:
    Jz: float
    dJx2: float
    dJy2: float


def spin1_observables(solution) -> Spin1Observables:
    """``<J_z>``, ``dJx^2`` and ``dJy^2`` of a spin-1 solution or state."""
    state = solution.state if isinstance(solution, Spin1Solution) else solution
    sm = spin_generators(1)
    c = covariance(state, sm.generators)
    e = expectations(state, sm.generators)
    return Spin1Observables(float(e[2]), 0.5 * float(c[0, 0]), 0.5 * float(c[1, 1]))


def bloch_angles(n) -> tuple:
    """``(theta, phi)`` of a unit vector."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    theta = math.atan2(math.hypot(n[0], n[1]), n[2])  # accurate near the poles
    phi = math.atan2(n[1], n[0]) % (2 * math.pi)
    return theta, phi


def coherent_state_along(j, direction) -> PureState:
    """Coherent state with ``<J>`` parallel to ``direction``."""
    theta, phi = bloch_angles(-np.asarray(direction, dtype=float))
    return coherent_state(j, theta, phi)


@dataclass(frozen=True)
class TwoCoherentDecomposition:
    angles: tuple  # ((theta1, phi1), (theta2, phi2))
    coefficients: tuple
    residual: float


@dataclass(frozen=True)
class OverlapAnalysis:
    max_overlap: float
    theta: float
    phi: float
    decomposition: TwoCoherentDecomposition


def _cartesian_components(psi) -> np.ndarray:
    """Spin-1 state as a complex 3-vector (``J_k`` act as ``-i eps_k``)."""
    sm = spin_generators(1)
    wz = np.array([0, 1, 0], dtype=complex)
    wx = -1j * sm.Jy @ wz
    wy = -1j * sm.Jz @ wx
    basis = np.array([wx, wy, wz])
    return basis.conj() @ psi, basis


def two_coherent_decomposition(state) -> TwoCoherentDecomposition:
    """Write a spin-1 state as a combination of two antipodal coherent states.

    With ``psi = sum_k c_k w_k`` in a Cartesian basis, the antipodal pair
    lies along ``Re c x Im c``; any spin-1 state is supported on such a pair.
    """
    psi = as_vector(state)
    if psi.shape[0] != 3:
        raise ValueError("two-coherent decomposition is implemented for spin 1")
    c, _ = _cartesian_components(psi)
    # the pair's axis is orthogonal to Re c and Im c: smallest right singular vector
    _, _, vt = np.linalg.svd(np.array([c.real, c.imag]))
    axis = vt[-1]
    axis = axis / np.linalg.norm(axis)
    angles, coeffs, states = [], [], []
    for sign in (1.0, -1.0):
        cs = coherent_state_along(1, sign * axis)
        th, ph = bloch_angles(-sign * axis)
        angles.append((th, ph))
        coeffs.append(complex(np.vdot(cs.amplitudes, psi)))
        states.append(cs.amplitudes)
    recon = coeffs[0] * states[0] + coeffs[1] * states[1]
    return TwoCoherentDecomposition(tuple(angles), tuple(coeffs),
                                    float(np.linalg.norm(psi - recon)))


def coherent_overlap_analysis(state, j=None, grid: int = 121) -> OverlapAnalysis:
    """Maximize ``|<n(theta, phi)|psi>|^2`` over coherent states: grid search
    followed by local refinement."""
    psi = as_vector(state)
    jj = (psi.shape[0] - 1) / 2 if j is None else _as_spin(j)

    def overlap(x):
        return abs(np.vdot(coherent_state(jj, x[0], x[1]).amplitudes, psi)) ** 2

    thetas = np.linspace(0, math.pi, grid)
    phis = np.linspace(0, 2 * math.pi, 2 * grid, endpoint=False)
    best = max(((overlap((t, p)), t, p) for t in thetas for p in phis), key=lambda x: x[0])
    res = optimize.minimize(lambda x: -overlap(x), x0=[best[1], best[2]], method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    theta, phi = float(res.x[0]), float(res.x[1])
    val = float(-res.fun)
    if val < best[0]:
        val, theta, phi = best
    # fold back into the standard chart
    if theta < 0:
        theta, phi = -theta, phi + math.pi
    theta = theta % (2 * math.pi)
    if theta > math.pi:
        theta, phi = 2 * math.pi - theta, phi + math.pi
    decomp = two_coherent_decomposition(psi) if psi.shape[0] == 3 else None
    return OverlapAnalysis(val, theta, phi % (2 * math.pi), decomp)
