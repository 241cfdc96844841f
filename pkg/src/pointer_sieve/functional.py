"""Time-averaged entropy production of pure initial states.

For a pure state evolving approximately freely, the long-time average of
half the linear-entropy production rate is

    s/2 = sum_alpha |a~_alpha|^2 D_alpha (dX~_{alpha,0}^2 + dX~_{alpha,1}^2)
          + (linear terms in <X~_t>, t trivial)
          + D0 Var(sum_{t trivial} a~_t X~_t) * 2

where ``a~ = O a`` is the coupling in the canonical basis of the free
evolution and ``|a~_alpha|^2`` the weight of block ``alpha``.

Two conventions exist for the term linear in ``<X_N>``:

``"as_printed"``
    ``sum_alpha |a~_alpha|^2 Omega_alpha^2 gamma_alpha <X_N>``.
``"rescaled"``
    the direct contraction ``sum a_j a_l gamma_jk f_lkm <X_m>`` averaged
    over time, which equals ``|a~_alpha|^2 Omega_alpha (Omega_alpha/h0_scale)
    gamma_alpha <X_N>`` for totally antisymmetric structure constants.  For
    spin models with ``gamma = tanh(beta Omega/2) D / Omega`` it reduces to
    ``D tanh(beta Omega / 2) <J_z>``.

Both conventions agree once ``Omega_alpha = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .adjoint import AdjointDecomposition
from .bath import BathCoefficients
from .errors import DivergentD0

CONVENTIONS = ("as_printed", "rescaled")
TOL_NORM = 1e-12
TOL_COUPLING = 1e-14


@dataclass(frozen=True)
class PureState:
    """Normalized complex amplitude vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        norm2 = float(np.vdot(psi, psi).real)
        if abs(norm2 - 1.0) > TOL_NORM:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm2!r})")
        psi.setflags(write=False)
        object.__setattr__(self, "amplitudes", psi)

    @classmethod
    def from_vector(cls, v) -> "PureState":
        v = np.asarray(v, dtype=complex).reshape(-1)
        return cls(v / np.linalg.norm(v))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def expect(self, op) -> float:
        """``<psi|op|psi>`` of a Hermitian operator (real part)."""
        psi = self.amplitudes
        return float(np.vdot(psi, np.asarray(op) @ psi).real)

    def canonical(self) -> "PureState":
        """Global phase fixed so the largest amplitude is real and >= 0."""
        return PureState(canonical_phase(self.amplitudes))


def canonical_phase(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    mags = np.abs(psi)
    # first index within roundoff of the maximum, so ties resolve stably
    i = int(np.argmax(mags >= mags.max() * (1 - 1e-9)))
    if mags[i] == 0:
        return psi.copy()
    out = psi * (np.conj(psi[i]) / mags[i])
    out[i] = mags[i]
    return out


def as_vector(state) -> np.ndarray:
    if isinstance(state, PureState):
        return state.amplitudes
    return np.asarray(state, dtype=complex).reshape(-1)


def expectations(state, generators) -> np.ndarray:
    psi = as_vector(state)
    gens = np.asarray(generators)
    v = gens @ psi  # (N, d)
    return np.einsum("a,na->n", psi.conj(), v).real


def covariance(state, generators) -> np.ndarray:
    """``C_mn = <{X_m, X_n}> - 2 <X_m><X_n>``; ``C_mm = 2 Var(X_m)``."""
    psi = as_vector(state)
    v = np.asarray(generators) @ psi  # rows X_m psi
    gram = v.conj() @ v.T  # <X_m X_n>
    e = np.einsum("a,na->n", psi.conj(), v).real
    c = 2.0 * gram.real - 2.0 * np.outer(e, e)
    return 0.5 * (c + c.T)


def variances(state, generators) -> np.ndarray:
    return 0.5 * np.diag(covariance(state, generators))


@dataclass(frozen=True)
class BlockTerm:
    alpha: int
    weight: float  # |a~_alpha|^2
    D: float
    variance_sum: float
    linear_term: float

    @property
    def total(self) -> float:
        return self.weight * self.D * self.variance_sum + self.linear_term


@dataclass(frozen=True)
class EntropyReport:
    """``s/2`` and its breakdown.

    ``zero_mode_terms`` holds ``"diffusion"`` (the ``D0`` variance of the
    trivial-direction coupling) and ``"trivial_linear"`` (terms linear in
    ``<X~_t>`` for trivial ``t != N``).
    """

    total: float
    per_block: tuple
    zero_mode_terms: dict = field(default_factory=dict)
    convention: str = "as_printed"

    def parts_sum(self) -> float:
        return sum(b.total for b in self.per_block) + sum(self.zero_mode_terms.values())


def _require_rotated(dec: AdjointDecomposition):
    if dec.rotated_generators is None or dec.rotated_structure_constants is None:
        raise ValueError("decomposition lacks rotated generators; build it with adjoint.decompose")


def _rotated_coupling(dec: AdjointDecomposition, coupling) -> np.ndarray:
    if coupling is None:
        if dec.rotated_coupling is None:
            raise ValueError("no coupling given")
        return np.asarray(dec.rotated_coupling, dtype=float)
    return dec.O @ np.asarray(coupling, dtype=float)


def _check_coefficients(dec: AdjointDecomposition, coeffs: BathCoefficients):
    if len(coeffs.D) != len(dec.blocks):
        raise ValueError(f"{len(coeffs.D)} coefficient blocks for {len(dec.blocks)} rotation blocks")


def _zero_mode_factor(dec, coeffs, at) -> float:
    """``D0`` if it multiplies something nonzero, else 0."""
    if not np.any(np.abs(at) > TOL_COUPLING):
        return 0.0
    if not math.isfinite(coeffs.D0):
        raise DivergentD0("zero-frequency diffusion diverges while the coupling has a "
                          "component along a trivial direction")
    return float(coeffs.D0)


def high_T_metric(decomposition: AdjointDecomposition, coefficients: BathCoefficients,
                  coupling=None, basis: str = "rotated") -> np.ndarray:
    """Metric ``g`` with ``s/2 = sum g_jk (<X_j X_k> - <X_j><X_k>)`` when
    damping is neglected.

    Block-diagonal in the rotated basis: ``|a~_alpha|^2 D_alpha I_2`` per
    block and ``2 D0 a~_T a~_T^T`` on the trivial directions.
    ``basis="physical"`` returns ``O^T g O``.
    """
    dec = decomposition
    _check_coefficients(dec, coefficients)
    at = _rotated_coupling(dec, coupling)
    g = np.zeros((dec.dim, dec.dim))
    for b, d in zip(dec.blocks, coefficients.D):
        j, k = b.index_pair
        w = at[j] ** 2 + at[k] ** 2
        g[j, j] = g[k, k] = w * d
    triv = list(dec.trivial_indices)
    d0 = _zero_mode_factor(dec, coefficients, at[triv])
    if d0:
        g[np.ix_(triv, triv)] = 2.0 * d0 * np.outer(at[triv], at[triv])
    if basis == "physical":
        return dec.O.T @ g @ dec.O
    if basis != "rotated":
        raise ValueError(f"unknown basis {basis!r}")
    return g


def gamma_blocks(decomposition: AdjointDecomposition, coefficients: BathCoefficients,
                 include_shift: bool = True) -> np.ndarray:
    """Dissipation matrix in the rotated basis.

    Block ``alpha``: ``-Omega~^2 I + gamma_alpha F~_alpha`` with ``F~`` the
    block of ``O F O^T``; ``gamma0`` on the trivial directions.  With
    ``include_shift=False`` the (entropy-irrelevant) diagonal shift terms
    are dropped, which avoids needing a cutoff.
    """
    dec = decomposition
    fb = dec.block_matrix()
    g = np.zeros((dec.dim, dec.dim))
    for b, gam, sh in zip(dec.blocks, coefficients.gamma, coefficients.omega_shift_sq):
        j, k = b.index_pair
        g[j, k] = gam * fb[j, k]
        g[k, j] = gam * fb[k, j]
        if include_shift:
            g[j, j] = g[k, k] = -sh
    if include_shift:
        for t in dec.trivial_indices:
            g[t, t] = coefficients.gamma0
    return g


def diffusion_blocks(decomposition: AdjointDecomposition,
                     coefficients: BathCoefficients) -> np.ndarray:
    """Diffusion matrix in the rotated basis: ``D_alpha I - f_alpha F~_alpha``
    per block and ``D0`` on the trivial directions."""
    dec = decomposition
    fb = dec.block_matrix()
    out = np.zeros((dec.dim, dec.dim))
    for b, d, fa in zip(dec.blocks, coefficients.D, coefficients.f):
        j, k = b.index_pair
        out[j, j] = out[k, k] = d
        out[j, k] = -fa * fb[j, k]
        out[k, j] = -fa * fb[k, j]
    for t in dec.trivial_indices:
        out[t, t] = coefficients.D0
    return out


def _linear_pieces(dec, coeffs, at):
    """``L[alpha, m] = sum_{j,k in alpha} sum_l a~_j gamma~_jk f~_lkm a~_l``
    for trivial ``m`` (coefficient of ``<X~_m>``)."""
    f = dec.rotated_structure_constants
    gam = gamma_blocks(dec, coeffs, include_shift=False)
    triv = list(dec.trivial_indices)
    out = np.zeros((len(dec.blocks), len(triv)))
    for a_idx, b in enumerate(dec.blocks):
        idx = list(b.index_pair)
        g_a = gam[np.ix_(idx, idx)]
        # sum_{j,k in block} sum_l a_j g_jk f_lkm a_l
        v = at[idx] @ g_a  # over k
        out[a_idx] = np.einsum("k,l,lkm->m", v, at, f[:, idx][:, :, triv])
    return out


def entropy_production(state, decomposition: AdjointDecomposition,
                       coefficients: BathCoefficients, coupling=None,
                       gamma_term_convention: str = "as_printed") -> EntropyReport:
    """Time-averaged ``s/2`` for the pure initial state."""
    if gamma_term_convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {gamma_term_convention!r}")
    dec = decomposition
    _require_rotated(dec)
    _check_coefficients(dec, coefficients)
    at = _rotated_coupling(dec, coupling)
    gens = dec.rotated_generators
    c = covariance(state, gens)
    e = expectations(state, gens)
    triv = list(dec.trivial_indices)
    n_last = dec.dim - 1

    pieces = _linear_pieces(dec, coefficients, at)
    others = [i for i, t in enumerate(triv) if t != n_last]
    blocks = []
    for a_idx, b in enumerate(dec.blocks):
        j, k = b.index_pair
        w = at[j] ** 2 + at[k] ** 2
        var = 0.5 * (c[j, j] + c[k, k])
        if gamma_term_convention == "as_printed":
            lin = w * b.frequency ** 2 * coefficients.gamma[a_idx] * e[n_last]
        else:
            lin = pieces[a_idx, triv.index(n_last)] * e[n_last]
        blocks.append(BlockTerm(a_idx, float(w), float(coefficients.D[a_idx]), float(var),
                                float(lin)))

    d0 = _zero_mode_factor(dec, coefficients, at[triv])
    diff0 = d0 * float(at[triv] @ c[np.ix_(triv, triv)] @ at[triv]) if d0 else 0.0
    triv_lin = float(sum(pieces[:, i].sum() * e[triv[i]] for i in others))
    zero = {"diffusion": diff0, "trivial_linear": triv_lin}
    total = sum(bt.total for bt in blocks) + diff0 + triv_lin
    return EntropyReport(float(total), tuple(blocks), zero, gamma_term_convention)


def invariant_dispersion(state, generators, metric=None) -> float:
    """``sum_jk h_jk (<X_j X_k> - <X_j><X_k>)``; plain ``sum_j Var(X_j)``
    when ``metric`` is omitted."""
    c = covariance(state, generators)
    if metric is None:
        return float(0.5 * np.trace(c))
    return float(0.5 * np.sum(np.asarray(metric) * c))


@dataclass(frozen=True)
class FunctionalSpec:
    """``F(psi) = sum_k w_k Var(A_k) + sum_m c_m <B_m> + constant``."""

    variance_ops: tuple = ()
    weights: tuple = ()
    linear_ops: tuple = ()
    linear_coeffs: tuple = ()
    constant: float = 0.0

    def __post_init__(self):
        if len(self.variance_ops) != len(self.weights):
            raise ValueError("one weight per variance operator required")
        if len(self.linear_ops) != len(self.linear_coeffs):
            raise ValueError("one coefficient per linear operator required")
        if any(w < 0 or not math.isfinite(w) for w in self.weights):
            raise ValueError("variance weights must be finite and nonnegative")
        vops = tuple(np.asarray(a, dtype=complex) for a in self.variance_ops)
        lops = tuple(np.asarray(b, dtype=complex) for b in self.linear_ops)
        object.__setattr__(self, "variance_ops", vops)
        object.__setattr__(self, "linear_ops", lops)
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "linear_coeffs", tuple(float(x) for x in self.linear_coeffs))

    @property
    def dim(self) -> Optional[int]:
        ops = self.variance_ops + self.linear_ops
        return ops[0].shape[0] if ops else None

    def value(self, state) -> float:
        psi = as_vector(state)
        total = self.constant
        for w, a in zip(self.weights, self.variance_ops):
            ap = a @ psi
            m = np.vdot(psi, ap).real
            total += w * (np.vdot(ap, ap).real - m * m)
        for cm, b in zip(self.linear_coeffs, self.linear_ops):
            total += cm * np.vdot(psi, b @ psi).real
        return float(total)

    def values(self, states) -> np.ndarray:
        """Vectorized :meth:`value` over the rows of ``states``."""
        psis = np.asarray(states, dtype=complex)
        total = np.full(psis.shape[0], float(self.constant))
        for w, a in zip(self.weights, self.variance_ops):
            ap = psis @ a.T
            m = np.einsum("sa,sa->s", psis.conj(), ap).real
            total += w * (np.einsum("sa,sa->s", ap.conj(), ap).real - m * m)
        for cm, b in zip(self.linear_coeffs, self.linear_ops):
            total += cm * np.einsum("sa,sa->s", psis.conj(), psis @ b.T).real
        return total

    def scaled(self, factor: float) -> "FunctionalSpec":
        return FunctionalSpec(self.variance_ops, tuple(factor * w for w in self.weights),
                              self.linear_ops, tuple(factor * c for c in self.linear_coeffs),
                              factor * self.constant)


def entropy_functional(decomposition: AdjointDecomposition, coefficients: BathCoefficients,
                       coupling=None, gamma_term_convention: str = "as_printed",
                       tol: float = 1e-14) -> FunctionalSpec:
    """The map ``psi -> entropy_production(psi).total`` as a :class:`FunctionalSpec`.

    The quadratic part ``1/2 tr(g C~)`` is diagonalized into variances of
    ``u_k . X~``; the linear terms are collected into one operator.
    """
    dec = decomposition
    _require_rotated(dec)
    if gamma_term_convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {gamma_term_convention!r}")
    at = _rotated_coupling(dec, coupling)
    gens = dec.rotated_generators
    g = high_T_metric(dec, coefficients, coupling)
    lam, vec = np.linalg.eigh(g)
    scale = max(float(np.max(np.abs(lam), initial=0.0)), 1.0)
    ops, weights = [], []
    for k in range(len(lam)):
        if lam[k] > tol * scale:
            ops.append(np.tensordot(vec[:, k], gens, axes=1))
            weights.append(float(lam[k]))

    triv = list(dec.trivial_indices)
    n_last = dec.dim - 1
    pieces = _linear_pieces(dec, coefficients, at)
    lin = np.zeros(dec.dim)
    for i, t in enumerate(triv):
        if t != n_last:
            lin[t] = pieces[:, i].sum()
    if gamma_term_convention == "as_printed":
        lin[n_last] = sum((at[b.index_pair[0]] ** 2 + at[b.index_pair[1]] ** 2)
                          * b.frequency ** 2 * gm for b, gm in zip(dec.blocks, coefficients.gamma))
    elif triv:
        lin[n_last] = pieces[:, triv.index(n_last)].sum()
    lops, lcoef = [], []
    if np.any(lin != 0):
        lops.append(np.tensordot(lin, gens, axes=1))
        lcoef.append(1.0)
    return FunctionalSpec(tuple(ops), tuple(weights), tuple(lops), tuple(lcoef))


def variance_functional(operators: Sequence, weights=None) -> FunctionalSpec:
    """``sum_k w_k Var(A_k)``, e.g. the high-temperature spin functional."""
    ops = tuple(operators)
    w = tuple(weights) if weights is not None else (1.0,) * len(ops)
    return FunctionalSpec(ops, w)
