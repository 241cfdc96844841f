"""Reference dynamics: long-time averaged entropy rate and a master-equation
integrator with constant coefficients.

The master equation is

    d rho/dt = -i [H0, rho] - [A, [B_D, rho]] + i [A, {B_g, rho}]

with ``A = sum_j a_j X_j``, ``B_D = sum_jk a_j D_jk X_k`` and
``B_g = sum_jk a_j gamma_jk X_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .adjoint import AdjointDecomposition
from .algebra import LieModel
from .bath import BathCoefficients
from .errors import DivergentD0, NoCutoff, StepTooLarge
from .functional import covariance, diffusion_blocks, expectations, gamma_blocks

TOL_STEP = 1e-8
MAX_SUBSTEPS = 64
TOL_NEGATIVE = 1e-12


def linear_entropy(rho) -> float:
    """``1 - Tr rho^2``."""
    rho = np.asarray(rho)
    return float(1.0 - np.einsum("ab,ba->", rho, rho).real)


def coefficient_matrices(decomposition: AdjointDecomposition, coefficients: BathCoefficients,
                         coupling=None):
    """Full ``D_jk`` and ``gamma_jk`` in the model basis: ``O^T (block form) O``.

    Zero-frequency entries that would be infinite or undefined are dropped
    when the coupling has no component along the trivial directions.
    """
    dec = decomposition
    at = dec.O @ np.asarray(coupling, dtype=float) if coupling is not None \
        else np.asarray(dec.rotated_coupling, dtype=float)
    triv = list(dec.trivial_indices)
    needs_zero = bool(np.any(np.abs(at[triv]) > 1e-14))
    d_rot = diffusion_blocks(dec, coefficients)
    g_rot = gamma_blocks(dec, coefficients)
    if not needs_zero:
        for t in triv:
            d_rot[t, t] = 0.0
            g_rot[t, t] = 0.0
    if not math.isfinite(coefficients.D0) and needs_zero:
        raise DivergentD0("zero-frequency diffusion diverges with a coupling along a trivial direction")
    if not (np.all(np.isfinite(d_rot)) and np.all(np.isfinite(g_rot))):
        raise NoCutoff("anomalous diffusion or frequency shifts are undefined without a cutoff")
    return dec.O.T @ d_rot @ dec.O, dec.O.T @ g_rot @ dec.O


@dataclass(frozen=True)
class MasterOperator:
    hamiltonian: np.ndarray
    coupling_operator: np.ndarray
    diffusion_operator: np.ndarray  # B_D
    damping_operator: np.ndarray  # B_gamma
    D: Optional[np.ndarray] = None
    gamma: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def dissipator(self, rho):
        a, bd, bg = self.coupling_operator, self.diffusion_operator, self.damping_operator
        inner = bd @ rho - rho @ bd
        anti = bg @ rho + rho @ bg
        return -(a @ inner - inner @ a) + 1j * (a @ anti - anti @ a)

    def __call__(self, rho):
        h = self.hamiltonian
        return -1j * (h @ rho - rho @ h) + self.dissipator(rho)


def master_operator(model: LieModel, decomposition: AdjointDecomposition,
                    coefficients: BathCoefficients) -> MasterOperator:
    D, gam = coefficient_matrices(decomposition, coefficients, model.coupling)
    a = model.coupling
    gens = model.generators
    return MasterOperator(model.hamiltonian, model.coupling_operator,
                          np.tensordot(a @ D, gens, axes=1), np.tensordot(a @ gam, gens, axes=1),
                          D, gam)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    entropies: np.ndarray
    min_eigenvalues: np.ndarray

    @property
    def negative_flags(self) -> np.ndarray:
        """Times where ``rho`` lost positivity (not rejected; see module notes)."""
        return self.min_eigenvalues < -TOL_NEGATIVE

    def trace_drift(self) -> float:
        tr = np.einsum("taa->t", self.states)
        return float(np.max(np.abs(tr - 1.0)))

    def hermiticity_defect(self) -> float:
        s = self.states
        return float(np.max(np.abs(s - s.conj().transpose(0, 2, 1))))


def _rk4(fn, y, t, h):
    k1 = fn(t, y)
    k2 = fn(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = fn(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = fn(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(op: MasterOperator, rho0, t_end: float, dt: float,
              tol_step: float = TOL_STEP, store_every: int = 1) -> Trajectory:
    """Fixed-step RK4 in the interaction picture of ``H0``.

    The free part is applied exactly through the eigenbasis of ``H0``, so a
    vanishing dissipator leaves the purity untouched.  Every step is
    checked against two half steps; a failing step is split into up to
    ``MAX_SUBSTEPS`` substeps before :class:`StepTooLarge` is raised.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = np.outer(rho0, rho0.conj())
    if dt <= 0 or t_end < 0:
        raise ValueError("need dt > 0 and t_end >= 0")
    energies, vecs = np.linalg.eigh(op.hamiltonian)
    to_eig = lambda m: vecs.conj().T @ m @ vecs  # noqa: E731
    a, bd, bg = (to_eig(m) for m in (op.coupling_operator, op.diffusion_operator,
                                     op.damping_operator))
    gap = energies[:, None] - energies[None, :]
    eig_op = MasterOperator(np.diag(energies).astype(complex), a, bd, bg)

    def phase(t):
        return np.exp(1j * gap * t)  # rho_I = phase * rho (eigenbasis, elementwise)

    def rhs(t, rho_i):
        ph = phase(t)
        rho_s = rho_i / ph
        return ph * eig_op.dissipator(rho_s)

    n_steps = int(round(t_end / dt))
    if not math.isclose(n_steps * dt, t_end, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError("t_end must be an integer multiple of dt")
    y = to_eig(rho0)
    times, states = [], []

    def record(t, y_i):
        rho = vecs @ (y_i / phase(t)) @ vecs.conj().T
        times.append(t)
        states.append(rho)

    record(0.0, y)
    for step in range(n_steps):
        t = step * dt
        sub = 1
        while True:
            h = dt / sub
            y_full, y_half = y, y
            for s in range(sub):
                ts = t + s * h
                y_full = _rk4(rhs, y_full, ts, h)
                y_half = _rk4(rhs, _rk4(rhs, y_half, ts, 0.5 * h), ts + 0.5 * h, 0.5 * h)
            err = float(np.max(np.abs(y_full - y_half))) * 16.0 / 15.0
            if err <= tol_step:
                break
            sub *= 2
            if sub > MAX_SUBSTEPS:
                raise StepTooLarge(f"step {dt:g} fails the doubling check at t = {t:g} "
                                   f"(error {err:.3g})")
        # local extrapolation would break the 4th-order error estimate; keep the half steps
        y = y_half
        if (step + 1) % store_every == 0 or step + 1 == n_steps:
            record((step + 1) * dt, y)
    st = np.array(states)
    ent = np.array([linear_entropy(r) for r in st])
    mins = np.array([np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0] for r in st])
    return Trajectory(np.array(times), st, ent, mins)


def free_rotation(F, times) -> np.ndarray:
    """``R(t) = exp(-t F)`` for antisymmetric ``F`` via the Hermitian matrix ``iF``."""
    F = np.asarray(F, dtype=float)
    lam, v = np.linalg.eigh(1j * F)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    # F = -i V diag(lam) V^H, so exp(-tF) = V diag(exp(i lam t)) V^H
    ph = np.exp(1j * np.outer(times, lam))  # (T, n)
    return np.einsum("ak,tk,bk->tab", v, ph, v.conj()).real


def _common_period(freqs, tol: float = 1e-6, max_den: int = 1000):
    """Common period of ``freqs`` when their ratios are rational, else None."""
    freqs = [w for w in freqs if w > 0]
    if not freqs:
        return None
    base = min(freqs)
    lcm = 1
    for w in freqs:
        fr = Fraction(w / base).limit_denominator(max_den)
        if abs(float(fr) - w / base) > tol:
            return None
        lcm = lcm * fr.denominator // math.gcd(lcm, fr.denominator)
    return 2 * math.pi * lcm / base


def averaged_rate_oracle(state, decomposition: AdjointDecomposition,
                         coefficients: BathCoefficients, model: LieModel, T_avg: Optional[float] = None,
                         n_samples: Optional[int] = None, periods: float = 1000.0) -> float:
    """Time average of the free-evolution entropy rate ``ds/dt / 2``.

    Uses ``R(t)`` from :func:`free_rotation` on the model's own ``ad``
    matrix; the decomposition only supplies the block coefficients.
    """
    a = np.asarray(model.coupling, dtype=float)
    if not np.any(a):
        return 0.0
    D, gam = coefficient_matrices(decomposition, coefficients, a)
    f = model.structure_constants
    F = model.h0_scale * np.asarray(f[-1])
    c = covariance(state, model.generators)
    e = expectations(state, model.generators)
    freqs = np.abs(np.linalg.eigvalsh(1j * F))
    freqs = freqs[freqs > 1e-9 * max(1.0, freqs.max(initial=0.0))]
    if freqs.size == 0:
        T = 1.0
        n = 2
    else:
        w_min, w_max = float(freqs.min()), float(freqs.max())
        T = T_avg if T_avg is not None else periods * 2 * math.pi / w_min
        period = _common_period(freqs)
        if period is not None:
            T = math.ceil(T / period - 1e-9) * period
        n = n_samples if n_samples is not None else int(max(4000, 8 * T * w_max / (2 * math.pi)))
    times = np.arange(n) * (T / n)  # periodic trapezoid
    lin = np.einsum("j,l,jk,lkm->m", a, a, gam, f)
    total = 0.0
    chunk = 4096
    for start in range(0, n, chunk):
        R = free_rotation(F, times[start:start + chunk])
        u = np.einsum("l,tlm->tm", a, R)  # (R^T a)
        v = np.einsum("jk,j,tkn->tn", D, a, R)  # (a^T D R)
        quad = np.einsum("tm,mn,tn->t", u, c, v)
        linear = np.einsum("m,tmn,n->t", lin, R, e)
        total += float(np.sum(quad + linear))
    return total / n
