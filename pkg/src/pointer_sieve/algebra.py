"""Lie-algebraic models: generators, structure constants, Killing form.

Conventions: generators are Hermitian and ``[X_i, X_j] = i sum_k f[i, j, k] X_k``.
The free Hamiltonian is ``h0_scale * X_N`` where ``X_N`` is the *last*
generator (index ``N - 1`` in code), and the coupling operator is
``A = sum_j a_j X_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateBasis,
    IndefiniteMetric,
    NotAntisymmetric,
    NotClosed,
    NotHermitian,
)

TOL_HERM = 1e-10
TOL_COMM = 1e-10
TOL_JACOBI = 1e-10
TOL_ANTISYM = 1e-10
TOL_ZERO = 1e-10
MAX_GRAM_COND = 1e12


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


@dataclass(frozen=True)
class LieModel:
    """Generators, structure constants and coupling vector of a model.

    ``check_dim`` restricts the commutation check to the leading
    ``check_dim x check_dim`` block; truncated representations of
    non-compact groups only close on their low-lying subspace.
    """

    generators: np.ndarray
    structure_constants: np.ndarray
    coupling: np.ndarray
    h0_scale: float = 1.0
    check_dim: Optional[int] = None
    labels: tuple = field(default=())

    def __post_init__(self):
        gens = np.asarray(self.generators, dtype=complex)
        if gens.ndim != 3 or gens.shape[1] != gens.shape[2]:
            raise ValueError(f"generators must have shape (N, d, d), got {gens.shape}")
        n = gens.shape[0]
        f = np.asarray(self.structure_constants, dtype=float)
        if f.shape != (n, n, n):
            raise ValueError(f"structure constants must have shape {(n, n, n)}, got {f.shape}")
        a = np.asarray(self.coupling, dtype=float).reshape(-1)
        if a.shape != (n,):
            raise ValueError(f"coupling must have length {n}, got {a.shape[0]}")
        # canonical storage: exactly antisymmetric in the first index pair
        f = 0.5 * (f - f.transpose(1, 0, 2))
        for name, val in (("generators", gens), ("structure_constants", f), ("coupling", a)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        labels = tuple(self.labels) if self.labels else tuple(f"X{i + 1}" for i in range(n))
        object.__setattr__(self, "labels", labels)

    @property
    def dim_algebra(self) -> int:
        return self.generators.shape[0]

    @property
    def dim_rep(self) -> int:
        return self.generators.shape[1]

    @property
    def h0_index(self) -> int:
        return self.dim_algebra - 1

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.h0_scale * self.generators[-1]

    @property
    def coupling_operator(self) -> np.ndarray:
        return np.tensordot(self.coupling, self.generators, axes=1)

    def with_coupling(self, coupling) -> "LieModel":
        return replace(self, coupling=np.asarray(coupling, dtype=float))


@dataclass(frozen=True)
class KillingForm:
    h: np.ndarray
    signature: tuple  # (n_plus, n_minus, n_zero)

    @property
    def degenerate(self) -> bool:
        return self.signature[2] > 0


@dataclass(frozen=True)
class ValidationReport:
    hermiticity: float
    commutation: float
    jacobi: float
    antisymmetry: float

    def ok(self, tol: float = TOL_COMM) -> bool:
        return max(self.hermiticity, self.commutation, self.jacobi) <= tol


@dataclass(frozen=True)
class ScaleReport:
    """Basis change applied by :func:`normalize_basis`.

    ``transform`` maps old to new generators, ``X'_i = sum_j T_ij X_j``.
    ``sign`` is the sign of the Killing form (``+1`` for compact algebras
    in the Hermitian convention) and ``constant`` the common value ``c`` of
    ``|h'| = c * I``.
    """

    transform: np.ndarray
    sign: int
    constant: float
    h0_scale: float
    orthogonal_path: bool = False

    @property
    def scales(self) -> np.ndarray:
        return np.diag(self.transform).copy()

    @property
    def uniform(self) -> bool:
        t = self.transform
        return bool(np.allclose(t, t[0, 0] * np.eye(len(t)), atol=1e-12))


def infer_structure_constants(generators, tol: float = TOL_COMM) -> np.ndarray:
    """Project each commutator onto the generator span.

    Raises :class:`DegenerateBasis` when the Hilbert-Schmidt Gram matrix is
    ill-conditioned and :class:`NotClosed` when a commutator leaves the span.
    """
    gens = np.asarray(generators, dtype=complex)
    n = gens.shape[0]
    gram = np.einsum("kab,lba->kl", gens, gens).real
    cond = np.linalg.cond(gram) if n else 1.0
    if not np.isfinite(cond) or cond > MAX_GRAM_COND:
        raise DegenerateBasis(f"generator Gram matrix is singular (condition number {cond:.3g})")
    f = np.zeros((n, n, n))
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            comm = commutator(gens[i], gens[j])
            herm = -1j * comm
            b = np.einsum("lab,ba->l", gens, herm).real
            c = np.linalg.solve(gram, b)
            resid = np.linalg.norm(comm - 1j * np.tensordot(c, gens, axes=1))
            worst = max(worst, resid)
            f[i, j] = c
            f[j, i] = -c
    if worst > tol:
        raise NotClosed(f"commutators leave the generator span (residual {worst:.3g} > {tol:g})")
    return f


def _leading_block(m: np.ndarray, k: Optional[int]) -> np.ndarray:
    return m if k is None else m[..., :k, :k]


def commutation_residual(model: LieModel) -> float:
    gens = model.generators
    f = model.structure_constants
    k = model.check_dim
    worst = 0.0
    for i in range(model.dim_algebra):
        for j in range(i + 1, model.dim_algebra):
            diff = commutator(gens[i], gens[j]) - 1j * np.tensordot(f[i, j], gens, axes=1)
            worst = max(worst, float(np.linalg.norm(_leading_block(diff, k))))
    return worst


def jacobi_residual(f: np.ndarray) -> float:
    f = np.asarray(f, dtype=float)
    if f.size == 0:
        return 0.0
    t1 = np.einsum("ijm,mkl->ijkl", f, f)
    t2 = np.einsum("jkm,mil->ijkl", f, f)
    t3 = np.einsum("kim,mjl->ijkl", f, f)
    return float(np.max(np.abs(t1 + t2 + t3)))


def total_antisymmetry_residual(f: np.ndarray) -> float:
    f = np.asarray(f, dtype=float)
    if f.size == 0:
        return 0.0
    return float(np.max(np.abs(f + f.transpose(0, 2, 1))))


def validate(model: LieModel, tol: float = TOL_COMM) -> ValidationReport:
    """Check Hermiticity, closure and the Jacobi identity; raise on failure."""
    gens = model.generators
    herm = float(max((np.linalg.norm(g - g.conj().T) for g in gens), default=0.0))
    if herm > TOL_HERM:
        raise NotHermitian(f"generator Hermiticity defect {herm:.3g}")
    comm = commutation_residual(model)
    if comm > tol:
        raise NotClosed(f"commutation relations violated (residual {comm:.3g})")
    jac = jacobi_residual(model.structure_constants)
    if jac > TOL_JACOBI:
        raise NotClosed(f"Jacobi identity violated (residual {jac:.3g})")
    return ValidationReport(herm, comm, jac, total_antisymmetry_residual(model.structure_constants))


def adjoint_matrices(f: np.ndarray) -> np.ndarray:
    """``[ad_j]_{kl} = i f_{jkl}`` stacked over ``j``."""
    return 1j * np.asarray(f, dtype=float)


def killing_form(f: np.ndarray, tol_zero: float = TOL_ZERO) -> KillingForm:
    ad = adjoint_matrices(f)
    h = np.einsum("jlm,kml->jk", ad, ad).real
    h = 0.5 * (h + h.T)
    if h.size == 0:
        return KillingForm(h, (0, 0, 0))
    ev = np.linalg.eigvalsh(h)
    thresh = tol_zero * max(1.0, float(np.max(np.abs(ev))))
    sig = (int(np.sum(ev > thresh)), int(np.sum(ev < -thresh)), int(np.sum(np.abs(ev) <= thresh)))
    return KillingForm(h, sig)


def transform_structure_constants(f: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Structure constants in the basis ``X' = T X``."""
    tinv = np.linalg.inv(t)
    return np.einsum("ia,jb,abk,kl->ijl", t, t, f, tinv)


def change_basis(model: LieModel, t: np.ndarray) -> LieModel:
    """Re-express the model in the basis ``X'_i = sum_j T_ij X_j``.

    ``T`` must keep the last generator proportional to ``X_N``; the free
    Hamiltonian is kept fixed by adjusting ``h0_scale``.
    """
    t = np.asarray(t, dtype=float)
    n = model.dim_algebra
    if np.any(np.abs(t[-1, :-1]) > 1e-14) or t[-1, -1] == 0:
        raise ValueError("basis change must keep the X_N direction")
    gens = np.einsum("ij,jab->iab", t, model.generators)
    f = transform_structure_constants(model.structure_constants, t)
    a = np.linalg.solve(t.T, model.coupling)
    return LieModel(gens, f, a, h0_scale=model.h0_scale / t[-1, -1],
                    check_dim=model.check_dim, labels=model.labels if len(model.labels) == n else ())


def normalize_basis(model: LieModel, assume_orthogonal_adjoint: bool = False,
                    target: Optional[float] = None, tol: float = TOL_ANTISYM):
    """Rescale/rotate the basis so that ``|h| = c * I``.

    Gram-Schmidt in the ``|h|`` metric, starting from ``X_N`` so its
    direction is kept.  With ``target=None`` the constant ``c`` is
    ``|h_NN|`` and ``X_N`` itself is unchanged; otherwise every generator is
    rescaled to ``|h'| = target * I`` and the change of ``X_N`` is absorbed in
    ``h0_scale``.

    With ``assume_orthogonal_adjoint`` (degenerate Killing form, e.g. the
    oscillator group) the basis is accepted as is provided ``ad_{X_N}`` is
    already antisymmetric.

    Returns ``(model', ScaleReport)``.
    """
    n = model.dim_algebra
    kf = killing_form(model.structure_constants)
    if assume_orthogonal_adjoint:
        ad_n = model.structure_constants[-1]
        defect = float(np.max(np.abs(ad_n + ad_n.T))) if n else 0.0
        if defect > tol:
            raise NotAntisymmetric(f"ad(X_N) is not antisymmetric (defect {defect:.3g})")
        report = ScaleReport(np.eye(n), 1, float(abs(kf.h[-1, -1])) if n else 0.0,
                             model.h0_scale, orthogonal_path=True)
        return model, report

    h = kf.h
    sign = 1 if np.trace(h) >= 0 else -1
    habs = sign * h
    if kf.signature[2] > 0 or (kf.signature[0] > 0 and kf.signature[1] > 0):
        raise IndefiniteMetric(f"Killing form is not definite (signature {kf.signature})")
    c = float(habs[-1, -1]) if target is None else float(target)
    order = [n - 1] + list(range(n - 1))
    t = np.zeros((n, n))
    done = []
    for i in order:
        v = np.zeros(n)
        v[i] = 1.0
        for w in done:
            v = v - (v @ habs @ w) / (w @ habs @ w) * w
        v = v * np.sqrt(c / (v @ habs @ v))
        t[i] = v
        done.append(v)
    new = change_basis(model, t)
    ad_n = new.structure_constants[-1]
    defect = float(np.max(np.abs(ad_n + ad_n.T)))
    if defect > max(tol, tol * float(np.max(np.abs(ad_n)))):
        raise NotAntisymmetric(f"normalization left ad(X_N) non-antisymmetric (defect {defect:.3g})")
    return new, ScaleReport(t, sign, c, new.h0_scale)


def model_from_generators(generators: Sequence[np.ndarray], coupling, h0_scale: float = 1.0,
                          structure_constants=None, check_dim: Optional[int] = None,
                          labels: Sequence[str] = ()) -> LieModel:
    """Build and validate a model, inferring structure constants if absent."""
    gens = np.asarray(generators, dtype=complex)
    if structure_constants is None:
        if check_dim is not None:
            raise ValueError("structure constants must be given for truncated representations")
        structure_constants = infer_structure_constants(gens)
    model = LieModel(gens, structure_constants, coupling, h0_scale=h0_scale,
                     check_dim=check_dim, labels=tuple(labels))
    validate(model)
    return model
