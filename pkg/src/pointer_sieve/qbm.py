"""Oscillator group on a truncated Fock space (quantum Brownian motion).

Generators ``{q, p, 1, h0}`` with ``q = sqrt(Omega/2) (a + a^+)``,
``p = i sqrt(Omega/2) (a^+ - a)`` and ``h0 = Omega (a^+ a + 1/2)``:

    [q, p] = i Omega,   [h0, q] = -i Omega p,   [h0, p] = i Omega q.

Truncation breaks ``[q, p]`` on the top level only, so the commutation
check is restricted to the first ``n_trunc - 1`` levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .algebra import LieModel, commutator
from .errors import EdgeOccupation, TruncationTooSmall
from .functional import as_vector, variances

DEFAULT_TRUNCATION = 40
EDGE_THRESHOLD = 1e-6
EDGE_LEVELS = 2
PADDING = 40


def annihilation(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def oscillator_structure_constants(omega: float) -> np.ndarray:
    f = np.zeros((4, 4, 4))
    f[0, 1, 2], f[1, 0, 2] = omega, -omega  # [q, p] = i Omega 1
    f[3, 0, 1], f[0, 3, 1] = -omega, omega  # [h0, q] = -i Omega p
    f[3, 1, 0], f[1, 3, 0] = omega, -omega  # [h0, p] = i Omega q
    return f


@dataclass(frozen=True)
class OscillatorModel:
    omega: float
    n_trunc: int
    model: LieModel

    @property
    def q(self) -> np.ndarray:
        return self.model.generators[0]

    @property
    def p(self) -> np.ndarray:
        return self.model.generators[1]

    @property
    def h0(self) -> np.ndarray:
        return self.model.generators[3]

    def truncation_report(self) -> dict:
        """Commutator residuals on the trusted block and at the edge."""
        k = self.n_trunc - 1
        cqp = commutator(self.q, self.p) - 1j * self.omega * np.eye(self.n_trunc)
        chq = commutator(self.h0, self.q) + 1j * self.omega * self.p
        chp = commutator(self.h0, self.p) - 1j * self.omega * self.q
        inner = max(float(np.linalg.norm(m[:k, :k])) for m in (cqp, chq, chp))
        edge = max(float(np.linalg.norm(m)) for m in (cqp, chq, chp))
        return {"trusted_levels": k, "inner_residual": inner, "edge_residual": edge}


def _operators(omega: float, n: int):
    a = annihilation(n)
    ad = a.conj().T
    q = math.sqrt(omega / 2) * (a + ad)
    p = 1j * math.sqrt(omega / 2) * (ad - a)
    h0 = np.diag(omega * (np.arange(n) + 0.5)).astype(complex)
    return q, p, np.eye(n, dtype=complex), h0


def oscillator_model(omega: float = 1.0, n_trunc: int = DEFAULT_TRUNCATION,
                     coupling=(1.0, 0.0, 0.0, 0.0)) -> OscillatorModel:
    """``H0 = h0``, coupling ``A = sum a_j X_j`` (default ``A = q``)."""
    if n_trunc < 4:
        raise TruncationTooSmall(f"need at least 4 Fock levels, got {n_trunc}")
    if omega <= 0:
        raise ValueError("oscillator frequency must be positive")
    gens = np.array(_operators(omega, n_trunc))
    model = LieModel(gens, oscillator_structure_constants(omega), coupling, h0_scale=1.0,
                     check_dim=n_trunc - 1, labels=("q", "p", "1", "h0"))
    return OscillatorModel(float(omega), int(n_trunc), model)


def edge_weight(state, levels: int = EDGE_LEVELS) -> float:
    psi = as_vector(state)
    return float(np.sum(np.abs(psi[-levels:]) ** 2))


def qbm_entropy(state, D: float, omega: float, mass: float = 1.0,
                threshold: float = EDGE_THRESHOLD) -> float:
    """High-temperature ``s = 2 D M Omega^2 [dQ^2 + dP^2 / (M Omega)^2]``.

    With ``q = sqrt(M) Omega Q`` and ``p = P / sqrt(M)`` this is
    ``2 D (dq^2 + dp^2)``; ``mass`` only fixes the physical-unit operators.
    Raises :class:`EdgeOccupation` when the top Fock levels are populated.
    """
    psi = as_vector(state)
    w = edge_weight(psi)
    if w > threshold:
        raise EdgeOccupation(f"top {EDGE_LEVELS} Fock levels carry weight {w:.3g}")
    q, p, _, _ = _operators(omega, psi.shape[0])
    big_q = q / (math.sqrt(mass) * omega)
    big_p = math.sqrt(mass) * p
    vq, vp = variances(psi, [big_q, big_p])
    return float(2 * D * mass * omega ** 2 * (vq + vp / (mass * omega) ** 2))


def _truncate(psi_big: np.ndarray, n: int) -> np.ndarray:
    psi = psi_big[:n].copy()
    return psi / np.linalg.norm(psi)


def fock_state(k: int, n_trunc: int = DEFAULT_TRUNCATION) -> np.ndarray:
    psi = np.zeros(n_trunc, dtype=complex)
    psi[k] = 1.0
    return psi


def displaced_vacuum(alpha: complex, n_trunc: int = DEFAULT_TRUNCATION) -> np.ndarray:
    """``exp(alpha a^+ - alpha* a)|0>`` built in a padded space, then truncated."""
    big = n_trunc + PADDING
    a = annihilation(big)
    op = alpha * a.conj().T - np.conj(alpha) * a
    return _truncate(expm(op)[:, 0], n_trunc)


def squeezed_vacuum(r: float, n_trunc: int = DEFAULT_TRUNCATION) -> np.ndarray:
    """``exp((r a^2 - r a^+2)/2)|0>``: ``dq^2 = Omega e^{-2r}/2``, ``dp^2 = Omega e^{2r}/2``."""
    big = n_trunc + PADDING
    a = annihilation(big)
    op = 0.5 * r * (a @ a - a.conj().T @ a.conj().T)
    return _truncate(expm(op)[:, 0], n_trunc)


def family_comparison(omega: float = 1.0, n_trunc: int = DEFAULT_TRUNCATION, D: float = 1.0,
                      alpha: complex = 0.5 + 0.3j, squeeze=(0.2, 0.5)) -> list:
    """Rows ``(name, value, value / vacuum value)`` for a curated state family."""
    states = [("vacuum", fock_state(0, n_trunc)), ("fock_1", fock_state(1, n_trunc)),
              ("fock_2", fock_state(2, n_trunc)),
              (f"displaced_vacuum(alpha={alpha!r})", displaced_vacuum(alpha, n_trunc))]
    states += [(f"squeezed_vacuum(r={r!r})", squeezed_vacuum(r, n_trunc)) for r in squeeze]
    ref = qbm_entropy(states[0][1], D, omega)
    return [(name, qbm_entropy(psi, D, omega), qbm_entropy(psi, D, omega) / ref)
            for name, psi in states]
