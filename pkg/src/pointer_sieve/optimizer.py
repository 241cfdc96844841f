"""Predictability sieve: minimize a variance-plus-linear functional over pure states.

Multi-start projected gradient descent on the unit sphere of ``C^d`` with
Armijo backtracking and renormalization as the retraction.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence
from .functional import FunctionalSpec, PureState, as_vector, canonical_phase

ROUNDOFF = 64 * np.finfo(float).eps


def haar_random_state(dim: int, rng: np.random.Generator) -> PureState:
    """Unitarily invariant random pure state (normalized complex Gaussian)."""
    if dim < 1:
        raise ValueError("dimension must be positive")
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(v / np.linalg.norm(v))


def haar_random_states(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar states as rows of a ``(count, dim)`` array."""
    v = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def euclidean_direction(state, spec: FunctionalSpec) -> np.ndarray:
    """``[sum_k w_k (A_k^2 - 2<A_k> A_k) + sum_m c_m B_m] psi``."""
    psi = as_vector(state)
    out = np.zeros_like(psi)
    for w, a in zip(spec.weights, spec.variance_ops):
        ap = a @ psi
        m = np.vdot(psi, ap).real
        out += w * (a @ ap - 2.0 * m * ap)
    for c, b in zip(spec.linear_coeffs, spec.linear_ops):
        out += c * (b @ psi)
    return out


def riemannian_gradient(state, spec: FunctionalSpec) -> np.ndarray:
    """Tangent-projected gradient ``2 (I - |psi><psi|) M_psi psi``.

    Real-pair convention: ``F(psi + d) = F(psi) + Re<grad, d> + O(d^2)``
    for tangent ``d``.
    """
    psi = as_vector(state)
    v = euclidean_direction(psi, spec)
    return 2.0 * (v - np.vdot(psi, v) * psi)


@dataclass(frozen=True)
class MinimizeConfig:
    starts: int = 64
    max_iter: int = 5000
    tol_grad: float = 1e-9
    seed: int = 0
    threads: int = 1
    armijo: float = 1e-4


@dataclass(frozen=True)
class RunResult:
    index: int
    state: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SieveResult:
    best_state: PureState
    best_value: float
    starts: int
    converged_runs: int
    value_histogram: tuple = ()
    runs: tuple = field(default=(), repr=False)


def _lipschitz_guess(spec: FunctionalSpec) -> float:
    total = 0.0
    for w, a in zip(spec.weights, spec.variance_ops):
        total += w * np.linalg.norm(a @ a, 2)
    for c, b in zip(spec.linear_coeffs, spec.linear_ops):
        total += abs(c) * np.linalg.norm(b, 2)
    return max(4.0 * total, 1e-12)


def descend(spec: FunctionalSpec, psi0, config: MinimizeConfig, index: int = 0,
            callback=None) -> RunResult:
    """One projected-gradient run from ``psi0``.

    ``callback(iteration, psi, value, grad_norm)`` is called after every
    accepted step.
    """
    psi = as_vector(psi0).astype(complex)
    psi = psi / np.linalg.norm(psi)
    lip = _lipschitz_guess(spec)
    step = 1.0 / lip
    scale = lip
    val = spec.value(psi)
    g = riemannian_gradient(psi, spec)
    gn = float(np.linalg.norm(g))
    it = 0
    while it < config.max_iter and gn > config.tol_grad:
        it += 1
        accepted = False
        s = step
        noise = ROUNDOFF * (abs(val) + scale)
        while s > 1e-18 * step + 1e-300:
            trial = psi - s * g
            trial = trial / np.linalg.norm(trial)
            tv = spec.value(trial)
            gt = riemannian_gradient(trial, spec)
            gtn = float(np.linalg.norm(gt))
            if tv <= val - config.armijo * s * gn * gn:
                accepted = True
                break
            # below roundoff the value test is meaningless; require the
            # gradient to shrink without a visible increase of the value
            if config.armijo * s * gn * gn < noise and tv <= val + noise and gtn < gn:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        dx, dg = trial - psi, gt - g
        curv = float(np.vdot(dx, dg).real)
        # Barzilai-Borwein trial step, safeguarded; backtracking keeps descent monotone
        step = float(np.vdot(dx, dx).real) / curv if curv > 0 else 2.0 * s
        step = min(max(step, 1e-3 / lip), 1e6 / lip)
        psi, val, g, gn = trial, tv, gt, gtn
        if callback is not None:
            callback(it, psi, val, gn)
    return RunResult(index, canonical_phase(psi), float(val), gn, it, gn <= config.tol_grad)


def minimize(spec: FunctionalSpec, dim: int, config: MinimizeConfig = MinimizeConfig(),
             initial_states=None) -> SieveResult:
    """Multi-start sieve.  Deterministic for a given seed, also when threaded:
    starts are drawn up front and results merged by ``(value, start index)``."""
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    if spec.dim is not None and spec.dim != dim:
        raise ValueError(f"functional acts on dimension {spec.dim}, not {dim}")
    rng = np.random.default_rng(config.seed)
    if initial_states is None:
        starts = haar_random_states(dim, config.starts, rng)
    else:
        starts = np.asarray(initial_states, dtype=complex).reshape(-1, dim)
    jobs = list(enumerate(starts))
    run = lambda job: descend(spec, job[1], config, job[0])  # noqa: E731
    if config.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    converged = [r for r in results if r.converged]
    if not converged:
        raise NoConvergence(f"none of {len(results)} runs reached |grad| <= {config.tol_grad:g}")
    best = min(converged, key=lambda r: (r.value, r.index))
    state = PureState(best.state / np.linalg.norm(best.state))
    return SieveResult(state, spec.value(state), len(results), len(converged),
                       tuple(r.value for r in results), tuple(results))


def _chart(dim: int, n: int):
    """Phase-fixed angle grids: first amplitude real and nonnegative."""
    polar = np.linspace(0.0, 0.5 * math.pi, n)
    phases = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    if dim == 2:
        return [polar, phases]
    return [polar, polar, phases, phases]


def _chart_states(dim: int, pts) -> np.ndarray:
    if dim == 2:
        a, p1 = pts
        return np.stack([np.cos(a) + 0j, np.sin(a) * np.exp(1j * p1)], axis=1)
    a, b, p1, p2 = pts
    return np.stack([np.cos(a) + 0j, np.sin(a) * np.cos(b) * np.exp(1j * p1),
                     np.sin(a) * np.sin(b) * np.exp(1j * p2)], axis=1)


def brute_force_min(spec: FunctionalSpec, dim: int, grid_resolution: int = 60,
                    chunk: int = 200_000, return_state: bool = False):
    """Grid minimum over the phase-fixed chart of the sphere (``dim <= 3``)."""
    if dim > 3 or dim < 1:
        raise ValueError("brute-force grid is only available for dim <= 3")
    if dim == 1:
        psi = np.ones(1, dtype=complex)
        val = spec.value(psi)
        return (val, psi) if return_state else val
    axes = _chart(dim, grid_resolution)
    best_val, best_psi = math.inf, None
    # iterate over the first axis to keep memory bounded
    rest = np.stack([g.ravel() for g in np.meshgrid(*axes[1:], indexing="ij")], axis=1)
    for a in axes[0]:
        for start in range(0, len(rest), chunk):
            block = rest[start:start + chunk]
            pts = [np.full(len(block), a)] + [block[:, i] for i in range(block.shape[1])]
            states = _chart_states(dim, pts)
            vals = spec.values(states)
            i = int(np.argmin(vals))
            if vals[i] < best_val:
                best_val, best_psi = float(vals[i]), states[i]
    return (best_val, best_psi) if return_state else best_val

