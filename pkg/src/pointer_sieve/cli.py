"""Command-line front end.

Exit codes: 0 success, 1 numerical failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .adjoint import decompose
from .algebra import killing_form, validate
from .bath import BathSpec, SpectralDensity, bath_coefficients, coefficients_from_ratio
from .dynamics import integrate, master_operator
from .errors import InputError, NumericalError
from .functional import CONVENTIONS, entropy_functional
from .modelio import LoadedModel, normalized, resolve
from .optimizer import MinimizeConfig, haar_random_states, minimize
from .qbm import DEFAULT_TRUNCATION, family_comparison
from .spin import (coherent_minimum, coherent_state, spin1_observables, spin1_solve,
                   spin_functional, spin_ratio)

THREADS_ENV = "POINTER_SIEVE_THREADS"


@dataclass
class RunManifest:
    command: str
    config: dict
    input_hash: str
    seed: int | None
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())


def _threads(requested: int | None) -> int:
    cap = os.environ.get(THREADS_ENV)
    n = requested if requested else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(1, n)


def _num(x):
    """Lossless float text (``repr``), ``inf``/``nan`` spelled out."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _complex_pairs(psi) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(psi)]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


class Output:
    """Collects a table or a document and writes it in the chosen format."""

    def __init__(self, fmt: str):
        self.fmt = fmt
        self.header = None
        self.rows = []
        self.doc = None

    def table(self, header, rows):
        self.header, self.rows = list(header), [list(r) for r in rows]

    def document(self, doc):
        self.doc = doc

    def render(self) -> str:
        if self.fmt == "json":
            if self.doc is None:
                payload = [dict(zip(self.header, r)) for r in self.rows]
            else:
                payload = self.doc
            return json.dumps(_jsonable(payload), indent=2) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.doc is not None and self.header is None:
            flat = _flatten(self.doc)
            w.writerow(["key", "value"])
            for k, v in flat:
                w.writerow([k, _num(v)])
        else:
            w.writerow(self.header)
            for r in self.rows:
                w.writerow([_num(v) for v in r])
        return buf.getvalue()


def _flatten(doc, prefix=""):
    out = []
    if isinstance(doc, dict):
        for k, v in doc.items():
            out += _flatten(v, f"{prefix}{k}." if not isinstance(v, (int, float, str)) else f"{prefix}{k}")
        return out
    if isinstance(doc, (list, tuple, np.ndarray)):
        for i, v in enumerate(np.asarray(doc, dtype=object).tolist() if isinstance(doc, np.ndarray) else doc):
            out += _flatten(v, f"{prefix}{i}." if isinstance(v, (list, tuple, dict)) else f"{prefix}{i}")
        return out
    if isinstance(doc, complex):
        return [(prefix + ".re", doc.real), (prefix + ".im", doc.imag)]
    return [(prefix.rstrip("."), doc)]


# ---------------------------------------------------------------- helpers

def _load(args) -> LoadedModel:
    return resolve(args.model, getattr(args, "omega", 1.0), getattr(args, "n_trunc", DEFAULT_TRUNCATION))


def _bath_from_args(args, loaded: LoadedModel):
    if getattr(args, "beta", None) is None and getattr(args, "s", None) is None:
        return loaded.bath
    base = loaded.bath or BathSpec()
    sd = base.spectral
    cutoff = args.cutoff if args.cutoff is not None else sd.cutoff
    omega_c = args.omega_c if args.omega_c is not None else sd.omega_c
    sd = SpectralDensity(args.s if args.s is not None else sd.s,
                         args.lam if args.lam is not None else sd.lam, cutoff, omega_c)
    beta = args.beta if args.beta is not None else base.beta
    kind = args.kind if args.kind is not None else base.kind
    return BathSpec(sd, beta, kind)


def _spin_ratio(args, loaded: LoadedModel) -> float:
    if args.gamma_over_d is not None:
        return float(args.gamma_over_d)
    if args.beta is not None:
        return spin_ratio(args.beta, loaded.model.h0_scale)
    return 0.0


def _functional(args, loaded: LoadedModel):
    """Functional, its dimension and a description of the units."""
    if loaded.kind == "qbm":
        raise InputError("the truncated oscillator model is compared on a curated family; "
                         "use the 'qbm' command")
    if loaded.kind == "spin":
        g = _spin_ratio(args, loaded)
        return spin_functional(loaded.spin_j, g), loaded.model.dim_rep, \
            {"units": "s/2D", "gamma_over_D": g}
    model, _ = normalized(loaded)
    dec = decompose(model)
    if args.gamma_over_d is not None:
        coeffs = coefficients_from_ratio(dec.frequencies, args.gamma_over_d)
        units = "s/2D"
    else:
        bath = _bath_from_args(args, loaded)
        if bath is None:
            raise InputError("no bath given: add a 'bath' block to the model file, "
                             "--beta/--s flags, or --gamma-over-d")
        coeffs = bath_coefficients(bath, dec.frequencies)
        units = "s/2"
    conv = args.convention or "as_printed"
    return entropy_functional(dec, coeffs, gamma_term_convention=conv), model.dim_rep, \
        {"units": units, "convention": conv}


# ---------------------------------------------------------------- commands

def cmd_validate(args, out: Output):
    loaded = _load(args)
    rep = validate(loaded.model)
    kf = killing_form(loaded.model.structure_constants)
    doc = {"model": loaded.name, "dim_algebra": loaded.model.dim_algebra,
           "dim_rep": loaded.model.dim_rep, "hermiticity": rep.hermiticity,
           "commutation": rep.commutation, "jacobi": rep.jacobi,
           "total_antisymmetry": rep.antisymmetry, "killing_form": kf.h,
           "killing_signature": list(kf.signature)}
    _, scale = normalized(loaded)
    doc["normalization"] = {"sign": scale.sign, "constant": scale.constant,
                            "h0_scale": scale.h0_scale, "scales": scale.scales,
                            "orthogonal_path": scale.orthogonal_path}
    out.document(doc)
    return doc


def cmd_decompose(args, out: Output):
    loaded = _load(args)
    model, _ = normalized(loaded)
    dec = decompose(model)
    doc = {"O": dec.O, "frequencies": dec.frequencies,
           "orientations": [b.orientation for b in dec.blocks],
           "blocks": [[b.index_pair[0] + 1, b.index_pair[1] + 1] for b in dec.blocks],
           "trivial_indices": [t + 1 for t in dec.trivial_indices],
           "rotated_coupling": dec.rotated_coupling}
    if args.format == "csv":
        out.table(["kind", "index_1", "index_2", "frequency"],
                  [["block", b.index_pair[0] + 1, b.index_pair[1] + 1, b.frequency] for b in dec.blocks]
                  + [["trivial", t + 1, "", 0.0] for t in dec.trivial_indices])
    else:
        out.document(doc)
    return doc


def cmd_coeffs(args, out: Output):
    loaded = _load(args)
    model, _ = normalized(loaded)
    dec = decompose(model)
    bath = _bath_from_args(args, loaded)
    if bath is None:
        raise InputError("no bath given: add a 'bath' block to the model file or --beta/--s flags")
    co = bath_coefficients(bath, dec.frequencies)
    rows = [[i + 1, w, co.D[i], co.gamma[i], co.f[i], co.omega_shift_sq[i], co.ratio[i]]
            for i, w in enumerate(co.frequencies)]
    out.table(["block", "frequency", "D", "gamma", "f", "omega_shift_sq", "omega_gamma_over_D"], rows)
    if args.format == "json":
        out.document({"blocks": [dict(zip(out.header, r)) for r in rows], "D0": co.D0,
                      "gamma0": co.gamma0})
    return rows


def cmd_minimize(args, out: Output):
    loaded = _load(args)
    spec, dim, meta = _functional(args, loaded)
    cfg = MinimizeConfig(starts=args.starts, max_iter=args.max_iter, tol_grad=args.tol_grad,
                         seed=args.seed, threads=_threads(args.threads))
    res = minimize(spec, dim, cfg)
    doc = {"best_value": res.best_value, "best_state": _complex_pairs(res.best_state.amplitudes),
           "starts": res.starts, "converged_runs": res.converged_runs,
           "histogram": list(res.value_histogram), **meta}
    if args.format == "csv":
        out.table(["start", "value", "converged"],
                  [[r.index, r.value, int(r.converged)] for r in res.runs])
    else:
        out.document(doc)
    return doc


def _initial_state(args, loaded: LoadedModel, dim: int):
    kind = args.state
    if kind == "pointer":
        if loaded.kind != "spin" or loaded.spin_j != 1.0:
            raise InputError("--state pointer needs a spin-1 model")
        return spin1_solve(_spin_ratio(args, loaded)).state.amplitudes
    if kind.startswith("coherent:"):
        if loaded.kind != "spin":
            raise InputError("coherent states need a spin model")
        try:
            theta, phi = (float(x) for x in kind.split(":", 1)[1].split(","))
        except ValueError:
            raise InputError("--state coherent:<theta>,<phi>") from None
        return coherent_state(loaded.spin_j, theta, phi).amplitudes
    if kind.startswith("basis:"):
        k = int(kind.split(":", 1)[1])
        if not 0 <= k < dim:
            raise InputError(f"basis index must lie in 0..{dim - 1}")
        psi = np.zeros(dim, dtype=complex)
        psi[k] = 1
        return psi
    if kind == "random":
        return haar_random_states(dim, 1, np.random.default_rng(args.seed))[0]
    raise InputError(f"unknown --state {kind!r}")


def cmd_evolve(args, out: Output):
    loaded = _load(args)
    model, _ = normalized(loaded)
    dec = decompose(model)
    if args.gamma_over_d is not None or (loaded.kind == "spin" and _bath_from_args(args, loaded) is None):
        g = _spin_ratio(args, loaded)
        co = coefficients_from_ratio(dec.frequencies, g)
    else:
        bath = _bath_from_args(args, loaded)
        if bath is None:
            raise InputError("no bath given")
        co = bath_coefficients(bath, dec.frequencies)
    op = master_operator(model, dec, co)
    psi = _initial_state(args, loaded, model.dim_rep)
    traj = integrate(op, psi, args.t_end, args.dt, store_every=args.store_every)
    rows = [[t, s, e, int(e < -1e-12)] for t, s, e in
            zip(traj.times, traj.entropies, traj.min_eigenvalues)]
    out.table(["t", "s", "min_eigenvalue", "negative_flag"], rows)
    return rows


def _spin1_doc(sol):
    obs = spin1_observables(sol)
    return {"gamma_over_D": sol.gamma_over_D, "mu0": sol.mu0, "r": sol.r, "k": sol.k,
            "q_abs2": sol.q_abs2, "value": sol.min_value,
            "state": _complex_pairs(sol.state.amplitudes),
            "Jz": obs.Jz, "dJx2": obs.dJx2, "dJy2": obs.dJy2}


def cmd_spin1(args, out: Output):
    sol = spin1_solve(args.gamma_over_d if args.gamma_over_d is not None else 0.0)
    doc = _spin1_doc(sol)
    if args.format == "csv":
        amps = sol.state.amplitudes
        out.table(["gamma_over_D", "mu0", "r", "value", "q_re", "q_im", "r_re", "r_im",
                   "s_re", "s_im"],
                  [[sol.gamma_over_D, sol.mu0, sol.r, sol.min_value,
                    amps[0].real, amps[0].imag, amps[1].real, amps[1].imag,
                    amps[2].real, amps[2].imag]])
    else:
        out.document(doc)
    return doc


def run_sweep(points: int) -> list:
    if points < 2:
        raise InputError("--points must be at least 2")
    grid = [i / (points - 1) for i in range(points)]
    rows = []
    for g in grid:
        sol = spin1_solve(g)
        rows.append([g, sol.mu0, sol.r, sol.min_value, coherent_minimum(1, g).value])
    return rows


def cmd_sweep(args, out: Output):
    rows = run_sweep(args.points)
    out.table(["gamma_over_D", "mu0", "r", "min_value", "coherent_min_value"], rows)
    return rows


def run_scatter(spec, dim: int, n_samples: int, seed: int, threads: int = 1,
                chunk: int = 1000) -> np.ndarray:
    """Values of ``spec`` on ``n_samples`` seeded Haar states."""
    rng = np.random.default_rng(seed)
    states = haar_random_states(dim, n_samples, rng)
    chunks = [states[i:i + chunk] for i in range(0, n_samples, chunk)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(spec.values, chunks))
    else:
        parts = [spec.values(c) for c in chunks]
    return np.concatenate(parts) if parts else np.zeros(0)


def cmd_scatter(args, out: Output):
    loaded = _load(args)
    spec, dim, meta = _functional(args, loaded)
    vals = run_scatter(spec, dim, args.samples, args.seed, _threads(args.threads))
    rows = [[i, v] for i, v in enumerate(vals)]
    if len(vals):
        rows.append(["empirical_min", float(vals.min())])
        if loaded.kind == "spin":
            g = meta["gamma_over_D"]
            rows.append(["coherent_min", coherent_minimum(loaded.spin_j, g).value])
            if loaded.spin_j == 1.0:
                rows.append(["true_min", spin1_solve(g).min_value])
            elif loaded.spin_j == 0.5:
                rows.append(["true_min", coherent_minimum(0.5, g).value])
    out.table(["sample_id", "value"], rows)
    return rows


def cmd_qbm(args, out: Output):
    rows = family_comparison(args.omega, args.n_trunc, args.D)
    out.table(["state", "entropy", "ratio_to_vacuum"], rows)
    return rows


# ---------------------------------------------------------------- parser

def _add_common(p, model=True, bath=False, fmt_default="json"):
    if model:
        p.add_argument("--model", default="spin:1", help="model file or preset "
                       "(spin:<j>, su2, spin-boson, qbm); default spin:1")
        p.add_argument("--omega", type=float, default=1.0, help="level splitting for presets")
        p.add_argument("--n-trunc", type=int, default=DEFAULT_TRUNCATION,
                       help="Fock truncation of the qbm preset")
    if bath:
        p.add_argument("--beta", type=float, default=None, help="inverse temperature")
        p.add_argument("--s", type=float, default=None, help="spectral exponent")
        p.add_argument("--lambda", dest="lam", type=float, default=None, help="spectral amplitude")
        p.add_argument("--cutoff", choices=("exp", "hard", "none"), default=None)
        p.add_argument("--omega-c", type=float, default=None, help="cutoff frequency")
        p.add_argument("--kind", choices=("oscillator", "spin"), default=None)
    p.add_argument("--format", choices=("csv", "json"), default=fmt_default)
    p.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pointer-sieve",
                                 description="Approximate pointer states of open quantum systems.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check generators, closure, Jacobi identity, Killing form")
    _add_common(p)

    p = sub.add_parser("decompose", help="canonical block form of the free evolution")
    _add_common(p)

    p = sub.add_parser("coeffs", help="bath coefficients for each rotation block")
    _add_common(p, bath=True, fmt_default="csv")

    for name, helptext in (("minimize", "multi-start sieve minimization"),
                           ("scatter", "functional values on random pure states")):
        p = sub.add_parser(name, help=helptext)
        _add_common(p, bath=True, fmt_default="json" if name == "minimize" else "csv")
        p.add_argument("--gamma-over-d", type=float, default=None,
                       help="override gamma/D directly (0 = high temperature)")
        p.add_argument("--convention", choices=CONVENTIONS, default=None,
                       help="linear-term convention for model files")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None)
        if name == "minimize":
            p.add_argument("--starts", type=int, default=64)
            p.add_argument("--max-iter", type=int, default=5000)
            p.add_argument("--tol-grad", type=float, default=1e-9)
        else:
            p.add_argument("--samples", type=int, default=10_000)

    p = sub.add_parser("evolve", help="integrate the master equation from a pure state")
    _add_common(p, bath=True, fmt_default="csv")
    p.add_argument("--gamma-over-d", type=float, default=None)
    p.add_argument("--state", default="pointer",
                   help="pointer | coherent:<theta>,<phi> | basis:<k> | random")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--store-every", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("spin1", help="analytic spin-1 pointer state")
    _add_common(p, model=False)
    p.add_argument("--gamma-over-d", type=float, default=0.0)

    p = sub.add_parser("sweep", help="spin-1 minimum over a gamma/D grid")
    _add_common(p, model=False, fmt_default="csv")
    p.add_argument("--points", type=int, default=101)

    p = sub.add_parser("qbm", help="truncated oscillator family comparison")
    _add_common(p, model=False, fmt_default="csv")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--n-trunc", type=int, default=DEFAULT_TRUNCATION)
    p.add_argument("--D", type=float, default=1.0)
    return ap


COMMANDS = {"validate": cmd_validate, "decompose": cmd_decompose, "coeffs": cmd_coeffs,
            "minimize": cmd_minimize, "evolve": cmd_evolve, "spin1": cmd_spin1,
            "sweep": cmd_sweep, "scatter": cmd_scatter, "qbm": cmd_qbm}


_FLAG_NAMES = {"lam": "--lambda"}


def argv_from_manifest(manifest: dict, out: str | None = None) -> list:
    """Command line that reproduces a run from its manifest."""
    config = manifest["config"]
    argv = [config["command"]]
    for key, val in sorted(config.items()):
        if key in ("command", "out") or val is None:
            continue
        argv += [_FLAG_NAMES.get(key, "--" + key.replace("_", "-")), repr(val) if isinstance(val, float) else str(val)]
    if out:
        argv += ["--out", out]
    return argv


def _input_hash(args) -> str:
    model = getattr(args, "model", None)
    if model is None:
        return ""
    try:
        return _load(args).source_hash
    except (InputError, NumericalError):
        return ""


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Output(args.format)
    try:
        COMMANDS[args.command](args, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    text = out.render()
    config = {k: v for k, v in vars(args).items()}
    manifest = RunManifest(args.command, config, _input_hash(args), getattr(args, "seed", None))
    mtext = json.dumps(_jsonable(asdict(manifest)), sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        with open(args.out + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(mtext + "\n")
    else:
        sys.stdout.write(text)
        print(mtext, file=sys.stderr)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
