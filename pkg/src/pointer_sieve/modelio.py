"""Model files and built-in presets.

A model file is a JSON document::

    {
      "dim_algebra": 3, "dim_rep": 3,
      "generators": [ [[[re, im], ...], ...], ... ],   # N matrices, row-major
      "structure_constants": [...],                    # optional, N x N x N
      "coupling": [a_1, ..., a_N],
      "h0_index": 3,                                   # 1-based, default N
      "h0_scale": 1.0,                                 # optional
      "assume_orthogonal_adjoint": false,              # optional
      "check_dim": null,                               # optional
      "bath": {"family": "power", "s": 1.0, "lambda": 1.0,
               "cutoff": {"type": "exp", "omega_c": 10.0},
               "beta": 0.5, "kind": "oscillator"}      # optional
    }

Presets: ``spin:<j>`` (``H0 = Omega J_z``, ``A = -J_x``), ``su2`` (spin-1
matrices with ``H0 = J_z``, ``A = J_x``), ``spin-boson`` (spin 1/2) and
``qbm`` (truncated oscillator group, ``A = q``).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import LieModel, model_from_generators, normalize_basis
from .bath import BathSpec, SpectralDensity
from .errors import InputError, ModelFileError
from .qbm import DEFAULT_TRUNCATION, oscillator_model
from .spin import spin_generators


@dataclass(frozen=True)
class LoadedModel:
    model: LieModel
    bath: Optional[BathSpec] = None
    name: str = "model"
    kind: str = "generic"  # "generic" | "spin" | "qbm"
    spin_j: Optional[float] = None
    assume_orthogonal_adjoint: bool = False
    source_hash: str = ""
    extra: dict = field(default_factory=dict)


def _field(doc: dict, key: str, required: bool = True, default=None):
    if key not in doc:
        if required:
            raise ModelFileError(f"missing field '{key}'")
        return default
    return doc[key]


def _matrix(entry, d: int, where: str) -> np.ndarray:
    try:
        arr = np.asarray(entry, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"{where}: entries must be [re, im] number pairs ({exc})") from None
    if arr.shape != (d, d, 2):
        raise ModelFileError(f"{where}: expected shape ({d}, {d}, 2), got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def parse_bath(doc) -> BathSpec:
    if not isinstance(doc, dict):
        raise ModelFileError("bath: expected an object")
    family = doc.get("family", "power")
    if family != "power":
        raise ModelFileError(f"bath.family: unsupported family {family!r}")
    cut = doc.get("cutoff", {"type": "none"})
    if isinstance(cut, str):
        cut = {"type": cut}
    try:
        beta = doc.get("beta", 1.0)
        beta = math.inf if beta in (None, "inf", "infinity") else float(beta)
        sd = SpectralDensity(float(doc.get("s", 1.0)), float(doc.get("lambda", 1.0)),
                             cut.get("type", "none"), cut.get("omega_c"))
        return BathSpec(sd, beta, doc.get("kind", "oscillator"))
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"bath: {exc}") from None


def parse_model(doc: dict, source_hash: str = "", name: str = "model") -> LoadedModel:
    """Build a validated model from a parsed model document."""
    if not isinstance(doc, dict):
        raise ModelFileError("top level: expected an object")
    n = _field(doc, "dim_algebra")
    d = _field(doc, "dim_rep")
    if not (isinstance(n, int) and n > 0):
        raise ModelFileError("dim_algebra: expected a positive integer")
    if not (isinstance(d, int) and d > 0):
        raise ModelFileError("dim_rep: expected a positive integer")
    gens_doc = _field(doc, "generators")
    if not isinstance(gens_doc, list) or len(gens_doc) != n:
        raise ModelFileError(f"generators: expected a list of {n} matrices")
    gens = [_matrix(g, d, f"generators[{i}]") for i, g in enumerate(gens_doc)]
    coupling = _field(doc, "coupling")
    try:
        coupling = np.asarray(coupling, dtype=float)
    except (TypeError, ValueError):
        raise ModelFileError("coupling: expected a list of real numbers") from None
    if coupling.shape != (n,):
        raise ModelFileError(f"coupling: expected {n} entries, got shape {coupling.shape}")
    h0_index = _field(doc, "h0_index", required=False, default=n)
    if not (isinstance(h0_index, int) and 1 <= h0_index <= n):
        raise ModelFileError(f"h0_index: expected an integer in 1..{n}")
    f = _field(doc, "structure_constants", required=False)
    if f is not None:
        try:
            f = np.asarray(f, dtype=float)
        except (TypeError, ValueError):
            raise ModelFileError("structure_constants: expected a real N x N x N array") from None
        if f.shape != (n, n, n):
            raise ModelFileError(f"structure_constants: expected shape {(n, n, n)}, got {f.shape}")
    # put the free-Hamiltonian generator last
    order = [i for i in range(n) if i != h0_index - 1] + [h0_index - 1]
    gens = [gens[i] for i in order]
    coupling = coupling[order]
    if f is not None:
        f = f[np.ix_(order, order, order)]
    h0_scale = float(_field(doc, "h0_scale", required=False, default=1.0))
    check_dim = _field(doc, "check_dim", required=False)
    labels = _field(doc, "labels", required=False, default=())
    labels = tuple(labels[i] for i in order) if labels else ()
    model = model_from_generators(gens, coupling, h0_scale=h0_scale, structure_constants=f,
                                  check_dim=check_dim, labels=labels)
    bath = parse_bath(doc["bath"]) if "bath" in doc else None
    return LoadedModel(model, bath, name, "generic",
                       assume_orthogonal_adjoint=bool(doc.get("assume_orthogonal_adjoint", False)),
                       source_hash=source_hash)


def load_model_file(path: str) -> LoadedModel:
    try:
        raw = open(path, "rb").read()
    except OSError as exc:
        raise ModelFileError(f"cannot read model file: {exc}") from None
    digest = hashlib.sha256(raw).hexdigest()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ModelFileError(f"{path}: not UTF-8 text ({exc})") from None
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return parse_model(doc, digest, path)
    except ModelFileError as exc:
        raise ModelFileError(f"{path}: {exc}") from None
    except (InputError, ValueError) as exc:
        raise ModelFileError(f"{path}: {exc}") from None


def preset(name: str, omega: float = 1.0, n_trunc: int = DEFAULT_TRUNCATION) -> LoadedModel:
    digest = hashlib.sha256(f"preset:{name}:{omega!r}:{n_trunc}".encode()).hexdigest()
    if name.startswith("spin:"):
        j = name.split(":", 1)[1]
        sm = spin_generators(j, omega)
        return LoadedModel(sm.lie_model((-1.0, 0.0, 0.0)), None, name, "spin", sm.j,
                           source_hash=digest)
    if name == "spin-boson":
        sm = spin_generators("1/2", omega)
        return LoadedModel(sm.lie_model((-1.0, 0.0, 0.0)), None, name, "spin", 0.5,
                           source_hash=digest)
    if name == "su2":
        sm = spin_generators(1, 1.0)
        return LoadedModel(sm.lie_model((1.0, 0.0, 0.0)), None, name, "spin", 1.0,
                           source_hash=digest)
    if name == "qbm":
        om = oscillator_model(omega, n_trunc)
        return LoadedModel(om.model, None, name, "qbm", assume_orthogonal_adjoint=True,
                           source_hash=digest, extra={"n_trunc": n_trunc, "omega": omega})
    raise InputError(f"unknown preset {name!r} (expected spin:<j>, su2, spin-boson or qbm)")


def resolve(spec: str, omega: float = 1.0, n_trunc: int = DEFAULT_TRUNCATION) -> LoadedModel:
    """Preset name or path to a model file."""
    if spec.startswith("spin:") or spec in ("su2", "spin-boson", "qbm"):
        return preset(spec, omega, n_trunc)
    return load_model_file(spec)


def normalized(loaded: LoadedModel):
    """Normalize the basis of a loaded model; returns ``(model, ScaleReport)``."""
    return normalize_basis(loaded.model, assume_orthogonal_adjoint=loaded.assume_orthogonal_adjoint)


def model_to_document(model: LieModel, bath: Optional[BathSpec] = None) -> dict:
    """Inverse of :func:`parse_model` (generators as [re, im] pairs)."""
    gens = [[[[float(z.real), float(z.imag)] for z in row] for row in g] for g in model.generators]
    doc = {"dim_algebra": model.dim_algebra, "dim_rep": model.dim_rep, "generators": gens,
           "structure_constants": model.structure_constants.tolist(),
           "coupling": model.coupling.tolist(), "h0_index": model.dim_algebra,
           "h0_scale": model.h0_scale}
    if model.check_dim is not None:
        doc["check_dim"] = model.check_dim
    if bath is not None:
        sd = bath.spectral
        doc["bath"] = {"family": "power", "s": sd.s, "lambda": sd.lam,
                       "cutoff": {"type": sd.cutoff, "omega_c": sd.omega_c},
                       "beta": "inf" if math.isinf(bath.beta) else bath.beta, "kind": bath.kind}
    return doc
