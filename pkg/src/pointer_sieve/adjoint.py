"""Canonical decomposition of the free adjoint action into 2D rotations.

The free evolution acts on the algebra through ``R(t) = exp(-t F)`` with
``F_jk = h0_scale * f[N, j, k]``.  For antisymmetric ``F`` there is an
orthogonal ``O`` fixing ``e_N`` such that ``O F O^T`` is a direct sum of
blocks ``sigma * [[0, -Omega], [Omega, 0]]`` followed by zero blocks.  The
orientation ``sigma = +1`` gives ``R_alpha(t) = [[cos, sin], [-sin, cos]]``;
``sigma = -1`` appears only when ``det O = +1`` with ``O e_N = e_N`` leaves no
other choice (e.g. su(2) with ``H0 = +J_z``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import null_space

from .algebra import TOL_ANTISYM, LieModel
from .errors import DegenerateFrequencies, NotAntisymmetric

TOL_ORTH = 1e-10


@dataclass(frozen=True)
class Block:
    index_pair: tuple  # positions (j, k) in the rotated basis
    frequency: float
    orientation: int = 1


@dataclass(frozen=True)
class AdjointDecomposition:
    """``O``, rotation blocks and trivial directions of ``R(t)``.

    Rows of ``O`` are the new basis vectors: ``X~_m = sum_m' O[m, m'] X_m'``.
    """

    O: np.ndarray
    blocks: tuple
    trivial_indices: tuple
    h0_scale: float = 1.0
    rotated_generators: Optional[np.ndarray] = None
    rotated_coupling: Optional[np.ndarray] = None
    rotated_structure_constants: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.O.shape[0]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([b.frequency for b in self.blocks])

    def block_matrix(self) -> np.ndarray:
        """``O F O^T`` assembled from the blocks."""
        out = np.zeros((self.dim, self.dim))
        for b in self.blocks:
            j, k = b.index_pair
            out[j, k] = -b.orientation * b.frequency
            out[k, j] = b.orientation * b.frequency
        return out

    def canonical_R(self, t: float) -> np.ndarray:
        out = np.eye(self.dim)
        for b in self.blocks:
            j, k = b.index_pair
            c, s = np.cos(t * b.frequency), b.orientation * np.sin(t * b.frequency)
            out[j, j] = out[k, k] = c
            out[j, k] = s
            out[k, j] = -s
        return out

    def time_average_projector(self) -> np.ndarray:
        """Long-time average of ``R(t)``: projector onto the trivial directions."""
        rows = self.O[list(self.trivial_indices)]
        return rows.T @ rows


def build_ad_matrix(model: LieModel, index: Optional[int] = None,
                    tol: float = TOL_ANTISYM) -> np.ndarray:
    """``F_jk = f[index, j, k]``; raises if ``F`` is not antisymmetric."""
    if index is None:
        index = model.h0_index
    f = np.array(model.structure_constants[index])
    defect = float(np.max(np.abs(f + f.T))) if f.size else 0.0
    if defect > tol * max(1.0, float(np.max(np.abs(f)))):
        raise NotAntisymmetric(f"ad matrix of generator {index + 1} not antisymmetric "
                               f"(defect {defect:.3g}); normalize the basis first")
    return f


def _fix_frame_gauge(x, y):
    """Rotate a block frame so the first basis axis with weight in the plane
    projects onto ``+x``; frames that are already canonical stay put."""
    w = np.hypot(x, y)
    i = int(np.argmax(w > 1e-8 * w.max()))
    theta = np.arctan2(y[i], x[i])
    c, s = np.cos(theta), np.sin(theta)
    return c * x + s * y, -s * x + c * y


def _fix_kernel_gauge(ker):
    """Orthonormal kernel basis built from projected standard axes, so
    axis-aligned kernels come back as (signed-positive) unit vectors."""
    proj = ker @ ker.T
    out = []
    for i in range(proj.shape[0]):
        v = proj[:, i].copy()
        for w in out:
            v -= (w @ v) * w
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            out.append(v / norm)
        if len(out) == ker.shape[1]:
            break
    return np.array(out).T


def canonical_decomposition(F, h0_scale: float = 1.0) -> AdjointDecomposition:
    """Decompose ``h0_scale * F`` into rotation blocks.

    Block frequencies are sorted in descending order; trivial directions go
    last with ``e_N`` in the final position.
    """
    F = h0_scale * np.asarray(F, dtype=float)
    n = F.shape[0]
    if np.max(np.abs(F + F.T), initial=0.0) > TOL_ANTISYM * max(1.0, np.max(np.abs(F), initial=0.0)):
        raise NotAntisymmetric("F must be antisymmetric")
    scale = float(np.max(np.abs(F), initial=0.0))
    if n and (np.max(np.abs(F[-1]), initial=0.0) > TOL_ANTISYM * max(1.0, scale)):
        raise NotAntisymmetric("F must annihilate the X_N axis")
    if n == 0:
        return AdjointDecomposition(np.zeros((0, 0)), (), (), h0_scale)

    sub = 0.5 * (F[:-1, :-1] - F[:-1, :-1].T)
    m = n - 1
    tol_freq = 1e-9 * max(np.linalg.norm(F), 1e-300)
    frames = []
    freqs = []
    if m:
        lam, vec = np.linalg.eigh(1j * sub)
        for idx in np.argsort(-lam):
            if lam[idx] <= tol_freq:
                break
            v = vec[:, idx]
            # F v = -i Omega v with v = x + i y  =>  F x = Omega y, F y = -Omega x
            x, y = v.real * np.sqrt(2.0), v.imag * np.sqrt(2.0)
            frames.append(_fix_frame_gauge(x, y))
            freqs.append(float(lam[idx]))
    nb = len(frames)
    if nb:
        diffs = np.abs(np.diff(freqs))
        if np.any(diffs <= tol_freq):
            warnings.warn("degenerate block frequencies; time averages are approximate",
                          DegenerateFrequencies, stacklevel=2)

    rows = []
    for x, y in frames:
        rows.extend([x, y])
    kernel_dim = m - 2 * nb
    if kernel_dim:
        # F is normal, so its kernel is the complement of the block planes
        ker = null_space(np.array(rows)) if rows else np.eye(m)
        rows.extend(_fix_kernel_gauge(ker).T)
    top = np.array(rows).reshape(m, m)
    # nearest orthogonal matrix removes residual non-orthogonality from eigh
    u, _, vt = np.linalg.svd(top)
    top = u @ vt

    orientations = [1] * nb
    if np.linalg.det(top) < 0:
        if kernel_dim:
            top[-1] = -top[-1]
        else:
            top[2 * nb - 1] = -top[2 * nb - 1]
            orientations[-1] = -1

    O = np.zeros((n, n))
    O[:-1, :-1] = top
    O[-1, -1] = 1.0
    blocks = tuple(Block((2 * i, 2 * i + 1), freqs[i], orientations[i]) for i in range(nb))
    trivial = tuple(range(2 * nb, n))
    return AdjointDecomposition(O, blocks, trivial, h0_scale)


def decompose(model: LieModel) -> AdjointDecomposition:
    """Decomposition of the model's free evolution with rotated generators attached."""
    F = build_ad_matrix(model)
    dec = canonical_decomposition(F, model.h0_scale)
    gens = np.einsum("mk,kab->mab", dec.O, model.generators)
    a = dec.O @ model.coupling
    O = dec.O
    f = np.einsum("ia,jb,kc,abc->ijk", O, O, O, model.structure_constants)
    return AdjointDecomposition(O, dec.blocks, dec.trivial_indices, dec.h0_scale, gens, a, f)


def evaluate_R(decomposition: AdjointDecomposition, t: float) -> np.ndarray:
    """``R(t) = O^T (+)R_alpha(t) O``."""
    O = decomposition.O
    return O.T @ decomposition.canonical_R(t) @ O


def reconstruction_error(decomposition: AdjointDecomposition, F, times) -> float:
    """Max deviation between ``expm(-t h0_scale F)`` and the block form."""
    from scipy.linalg import expm

    F = decomposition.h0_scale * np.asarray(F, dtype=float)
    return max(float(np.max(np.abs(expm(-t * F) - evaluate_R(decomposition, t)), initial=0.0))
               for t in times)
