"""Batch front-end: JSON config in, CSV/JSON artifacts out.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(indefinite Gram matrix, solver breakdown, broken weights), 4 a bundled
verification check ran but failed its threshold.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import groundstate as gsmod
from . import lattice as latmod
from . import material as matmod
from . import projections as projmod
from . import spectrum as specmod
from . import symbol as symmod
from .planewave import FiberBasis, IndefiniteGramError, assemble_gram, check_definiteness, fiber_problem

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECK_FAILED = 4


class ConfigError(ValueError):
    pass


class CheckFailed(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    lattice: latmod.Lattice
    dual: latmod.DualLattice
    weights: matmod.MaterialWeights
    basis: FiberBasis
    cutoff: float                    # absolute cutoff radius
    k_samples: np.ndarray
    arclengths: np.ndarray
    modulation: matmod.ModulationPair
    zero_tol: float
    residual_tol: float
    out_dir: str
    raw: dict
    config_sha256: str
    extras: dict = field(default_factory=dict)


def _build_modulation_field(spec: dict) -> matmod.ModulationField:
    spec = dict(spec)
    family = spec.pop("family")
    try:
        return matmod.ModulationField(family=family, **spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad modulation spec: {exc}") from exc


def _build_primitive(spec: dict) -> matmod.GeometryPrimitive:
    spec = dict(spec)
    try:
        return matmod.GeometryPrimitive(
            kind=spec.pop("kind"), eps=spec.pop("eps"), mu=spec.pop("mu"), **spec
        )
    except matmod.WeightValidationError:
        raise   # broken weights are a numerical failure, not a config error
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad geometry primitive: {exc}") from exc


def _build_weights(spec: dict, lattice: latmod.Lattice,
                   modes: latmod.ModeSet) -> matmod.MaterialWeights:
    kind = spec.get("kind", "primitives")
    if kind == "primitives":
        prims = [_build_primitive(p) for p in spec["primitives"]]
        return matmod.coefficients_from_primitives(prims, lattice, modes)
    if kind == "coefficients":
        with open(spec["path"]) as fh:
            return matmod.weights_from_json(fh.read())
    if kind == "samples":
        data = np.load(spec["path"])
        return matmod.coefficients_from_samples(data["eps"], data["mu"])
    raise ConfigError(f"unknown weights kind {kind!r}")


def load_config(path: str, out_override: str = None) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
        raw = json.loads(blob)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    try:
        lattice = latmod.Lattice(np.array(raw["lattice"]["basis"], dtype=float))
        dual = latmod.dual_basis(lattice)
        scale = np.linalg.norm(dual.basis[0])
        cutoff_rel = float(raw["cutoff"])
        if cutoff_rel < 0:
            raise ConfigError("cutoff must be non-negative")
        cutoff = cutoff_rel * scale
        modes = latmod.cutoff_modes(dual, cutoff)
        basis = FiberBasis(modes)
        weights = _build_weights(raw.get("weights", {"kind": "primitives",
                                                     "primitives": [{"kind": "background",
                                                                     "eps": 1.0, "mu": 1.0}]}),
                                 lattice, modes)

        if "kpath" in raw:
            kp = raw["kpath"]
            verts = np.array(kp["vertices"], dtype=float)
            if kp.get("fractional", True):
                verts = verts @ dual.basis
            path_obj = latmod.kpath(verts, int(kp.get("samples_per_segment", 10)))
            k_samples = path_obj.samples
            arcs = path_obj.arclengths()
        elif "kpoints" in raw:
            pts = np.array(raw["kpoints"], dtype=float)
            if raw.get("kpoints_fractional", True):
                pts = pts @ dual.basis
            k_samples = pts.reshape(-1, 3)
            arcs = np.arange(len(k_samples), dtype=float)
        else:
            k_samples = np.zeros((1, 3))
            arcs = np.zeros(1)

        mod_spec = raw.get("modulation", {})
        modulation = matmod.ModulationPair(
            tau_eps=_build_modulation_field(mod_spec.get("tau_eps", {"family": "constant"})),
            tau_mu=_build_modulation_field(mod_spec.get("tau_mu", {"family": "constant"})),
        )

        zero_tol = float(raw.get("zero_tol", specmod.DEFAULT_ZERO_TOL))
        residual_tol = float(raw.get("residual_tol", 1e-8))
        if zero_tol <= 0 or residual_tol <= 0:
            raise ConfigError("tolerances must be positive")
        out_dir = out_override or raw.get("out", ".")
    except (ConfigError, matmod.WeightValidationError):
        raise
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"bad config: {exc}") from exc

    return RunConfig(
        lattice=lattice, dual=dual, weights=weights, basis=basis, cutoff=cutoff,
        k_samples=k_samples, arclengths=arcs, modulation=modulation,
        zero_tol=zero_tol, residual_tol=residual_tol, out_dir=out_dir, raw=raw,
        config_sha256=hashlib.sha256(blob).hexdigest(),
    )


# ---------------------------------------------------------------------------
# artifact helpers
# ---------------------------------------------------------------------------

def atomic_write(path: str, text: str) -> None:
    dirname = os.path.dirname(path) or "."
    os.makedirs(dirname, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=dirname, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x: float) -> str:
    return "%.17g" % x


def write_manifest(cfg: RunConfig, command: str, wall: float, threads: int) -> None:
    doc = {
        "command": command,
        "config_sha256": cfg.config_sha256,
        "mode_count": len(cfg.basis.modes),
        "matrix_dimension": cfg.basis.n,
        "wall_time_s": wall,
        "threads": threads,
    }
    atomic_write(os.path.join(cfg.out_dir, "manifest.json"),
                 json.dumps(doc, indent=2, sort_keys=True) + "\n")


def parallel_map(func, items, threads: int):
    """Order-preserving map, optionally on a thread pool (merge by index)."""
    if threads <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def weight_hash(w: matmod.MaterialWeights) -> str:
    return hashlib.sha256(matmod.weights_to_json(w).encode()).hexdigest()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_validate(cfg: RunConfig, threads: int) -> int:
    report = matmod.validate_weights(cfg.weights)
    gram = assemble_gram(cfg.weights, cfg.basis)
    check_definiteness(gram)
    atomic_write(os.path.join(cfg.out_dir, "validate.json"),
                 json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_bands(cfg: RunConfig, threads: int) -> int:
    gram = assemble_gram(cfg.weights, cfg.basis)
    check_definiteness(gram)

    def solve(k):
        return specmod.solve_fiber(
            fiber_problem(k, cfg.weights, cfg.basis, gram=gram), cfg.zero_tol)

    spectra = parallel_map(solve, list(cfg.k_samples), threads)
    n_max = int(cfg.raw.get("n_max", 8))
    bs = specmod.label_bands(spectra, cfg.dual, n_max=n_max)

    lines = ["s,k1,k2,k3,n,omega"]
    for i, (s, k) in enumerate(zip(cfg.arclengths, bs.k_samples)):
        for n in sorted(bs.bands):
            lines.append(",".join([fmt(s), fmt(k[0]), fmt(k[1]), fmt(k[2]),
                                   str(n), fmt(bs.bands[n][i])]))
    atomic_write(os.path.join(cfg.out_dir, "bands.csv"), "\n".join(lines) + "\n")
    sidecar = {
        "cutoff": cfg.cutoff,
        "zero_tol": cfg.zero_tol,
        "weight_hash": weight_hash(cfg.weights),
        "n_max": bs.n_max,
        "zero_counts": bs.zero_counts.tolist(),
        "on_dual": bs.on_dual.tolist(),
    }
    atomic_write(os.path.join(cfg.out_dir, "bands.meta.json"),
                 json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, threads: int) -> int:
    """Compare solved nonzero spectra with the free-operator closed form."""
    gram = assemble_gram(cfg.weights, cfg.basis)
    check_definiteness(gram)

    def deviation(k):
        spec = specmod.solve_fiber(
            fiber_problem(k, cfg.weights, cfg.basis, gram=gram), cfg.zero_tol)
        exact = specmod.analytic_free_spectrum(k, cfg.basis.modes)
        exact_nz = exact[exact != 0.0]
        got = spec.nonzero_eigenvalues()
        if got.size != exact_nz.size:
            return float("inf")
        return float(np.abs(np.sort(got) - np.sort(exact_nz)).max()
                     / np.abs(exact_nz).max())

    devs = parallel_map(deviation, list(cfg.k_samples), threads)
    doc = {"max_relative_deviation": max(devs),
           "per_k": [{"k": k.tolist(), "rel_dev": d}
                     for k, d in zip(cfg.k_samples, devs)]}
    atomic_write(os.path.join(cfg.out_dir, "oracle.json"),
                 json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if max(devs) > cfg.residual_tol:
        raise CheckFailed(f"oracle deviation {max(devs):.3e} > {cfg.residual_tol:.3e}")
    return EXIT_OK


def cmd_groundstate(cfg: RunConfig, threads: int) -> int:
    gram = assemble_gram(cfg.weights, cfg.basis)
    check_definiteness(gram)
    scale = np.linalg.norm(cfg.dual.basis[0])
    k_hat = np.array(cfg.raw.get("direction", [1.0, 0.0, 0.0]), dtype=float)
    k_hat = k_hat / np.linalg.norm(k_hat)
    t_list = [t * scale for t in cfg.raw.get("t_list", [1e-1, 3e-2, 1e-2])]
    report = gsmod.slope_validation(cfg.weights, cfg.basis, k_hat, t_list,
                                    gram=gram, zero_tol=cfg.zero_tol)
    atomic_write(os.path.join(cfg.out_dir, "slopes.json"),
                 json.dumps(report, indent=2, sort_keys=True) + "\n")
    worst = [max(row["rel_err"]) for row in report["validation"]]
    slope_tol = float(cfg.raw.get("slope_tol", 5e-2))
    # exactly-linear dispersions sit at round-off; only demand decrease
    # while the error is above that floor
    decreasing = all(b < a or b <= 1e-10 for a, b in zip(worst, worst[1:]))
    if not decreasing or worst[-1] > slope_tol:
        raise CheckFailed(
            f"slope validation: errors {worst} (decreasing={decreasing}, "
            f"tol={slope_tol})")
    return EXIT_OK


def cmd_projections(cfg: RunConfig, threads: int) -> int:
    gram = assemble_gram(cfg.weights, cfg.basis)
    check_definiteness(gram)
    scale = np.linalg.norm(cfg.dual.basis[0])
    k_hat = np.array(cfg.raw.get("direction", [1.0, 0.0, 0.0]), dtype=float)
    k_hat = k_hat / np.linalg.norm(k_hat)
    t_list = [t * scale for t in cfg.raw.get("t_list", [1e-1, 1e-2, 1e-3])]
    rows = projmod.discontinuity_probe(t_list, k_hat, cfg.weights, cfg.basis, gram=gram)
    lines = ["t,norm_plain,norm_reg"]
    for row in rows:
        lines.append(",".join([fmt(row["t"]), fmt(row["norm_plain"]), fmt(row["norm_reg"])]))
    atomic_write(os.path.join(cfg.out_dir, "projections.csv"), "\n".join(lines) + "\n")

    dims = []
    for k in cfg.k_samples:
        dim, sing = projmod.intersection_dimension(k, cfg.weights, cfg.basis,
                                                   gram=gram, full=True)
        dims.append({"k": np.asarray(k).tolist(), "dim": dim,
                     "singular_values": np.asarray(sing).tolist()})
    atomic_write(os.path.join(cfg.out_dir, "intersection.json"),
                 json.dumps({"per_k": dims}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_symbol_check(cfg: RunConfig, threads: int) -> int:
    w_mat = symmod.weight_multiplier(cfg.weights, cfg.basis)
    g = symmod.mper_k_field(cfg.weights, cfg.basis, w_mat=w_mat)
    s_inv = symmod.s_power_field(cfg.modulation, -1, cfg.basis)
    s_inv2 = symmod.s_power_field(cfg.modulation, -2, cfg.basis)
    rng = np.random.default_rng(int(cfg.raw.get("seed", 0)))
    n_samples = int(cfg.raw.get("n_samples", 10))
    scale = np.linalg.norm(cfg.dual.basis[0])

    samples = []
    worst = 0.0
    for _ in range(n_samples):
        r = rng.uniform(-2.0, 2.0, 3)
        k = rng.uniform(-0.5, 0.5, 3) @ cfg.dual.basis
        lam = rng.uniform(0.0, 0.5)
        p = symmod.SymbolPoint(r=r, k=k, lam=lam)
        phys = symmod.eval_symbol_physical(p, cfg.weights, cfg.modulation,
                                           cfg.basis, w_mat=w_mat)
        resc = symmod.eval_symbol_rescaled(p, cfg.weights, cfg.modulation,
                                           cfg.basis, w_mat=w_mat)
        via_moyal = symmod.moyal_two_term(s_inv2, g, p)
        via_sandwich = symmod.moyal_sandwich(s_inv, g, s_inv, p)
        ref = max(np.abs(phys.value).max(), 1.0)
        res_phys = np.abs(via_moyal.value - phys.value).max() / ref
        res_resc = np.abs(via_sandwich.value - resc.value).max() / ref
        second = np.abs(symmod.moyal_second_order(s_inv2, g, p)).max()
        gamma = cfg.basis.modes.coords[rng.integers(len(cfg.basis.modes))]

        def phys_closure(r_, k_):
            pt = symmod.SymbolPoint(r=r_, k=k_, lam=lam)
            return symmod.eval_symbol_physical(pt, cfg.weights, cfg.modulation,
                                               cfg.basis, w_mat=w_mat).value

        res_eq = symmod.symbol_equivariance_check(phys_closure, r, k, gamma, cfg.basis)
        res_eq_rel = res_eq / ref
        samples.append({"r": r.tolist(), "k": k.tolist(), "lambda": lam,
                        "gamma_coord": gamma.tolist(),
                        "physical_vs_moyal": float(res_phys),
                        "rescaled_vs_sandwich": float(res_resc),
                        "second_order_max": float(second),
                        "equivariance": float(res_eq_rel)})
        worst = max(worst, res_phys, res_resc, second, res_eq_rel)

    doc = {"worst_residual": worst, "samples": samples,
           "kscale": scale, "n_modes": len(cfg.basis.modes)}
    atomic_write(os.path.join(cfg.out_dir, "symbol_check.json"),
                 json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if worst > cfg.residual_tol:
        raise CheckFailed(f"symbol identity residual {worst:.3e} > {cfg.residual_tol:.3e}")
    return EXIT_OK


def cmd_convergence(cfg: RunConfig, threads: int) -> int:
    cutoffs = cfg.raw.get("cutoffs")
    if not cutoffs or len(cutoffs) < 3:
        raise ConfigError("convergence needs >= 3 increasing cutoffs")
    cutoffs = [float(c) for c in cutoffs]
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ConfigError("cutoffs must be strictly increasing")
    scale = np.linalg.norm(cfg.dual.basis[0])
    k = cfg.k_samples[0]
    n_track = int(cfg.raw.get("n_max", 4))

    per_cutoff = []
    for c in cutoffs:
        modes = latmod.cutoff_modes(cfg.dual, c * scale)
        basis = FiberBasis(modes)
        w = _build_weights(cfg.raw.get("weights", {"kind": "primitives",
                                                   "primitives": [{"kind": "background",
                                                                   "eps": 1.0, "mu": 1.0}]}),
                           cfg.lattice, modes)
        spec = specmod.solve_fiber(fiber_problem(k, w, basis), cfg.zero_tol)
        nz = spec.nonzero_eigenvalues()
        per_cutoff.append(np.sort(nz[nz > 0])[:n_track])

    rows = []
    for (c0, v0), (c1, v1) in zip(zip(cutoffs, per_cutoff), zip(cutoffs[1:], per_cutoff[1:])):
        m = min(v0.size, v1.size)
        drift = np.abs(v0[:m] - v1[:m])
        rows.append({"cutoff_pair": [c0, c1], "drift": drift.tolist()})
    flags = []
    for band in range(min(len(r_["drift"]) for r_ in rows)):
        drifts = [r_["drift"][band] for r_ in rows]
        if any(b > a for a, b in zip(drifts, drifts[1:])):
            flags.append(band + 1)
    doc = {"k": np.asarray(k).tolist(), "cutoffs": cutoffs, "rows": rows,
           "non_monotone_bands": flags}
    atomic_write(os.path.join(cfg.out_dir, "convergence.json"),
                 json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


COMMANDS = {
    "bands": cmd_bands,
    "groundstate": cmd_groundstate,
    "projections": cmd_projections,
    "symbol-check": cmd_symbol_check,
    "validate": cmd_validate,
    "oracle": cmd_oracle,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pce",
        description="plane-wave engine for periodic Maxwell operators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None)
        sp.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("PCE_THREADS", "1"))

    t0 = time.monotonic()
    try:
        cfg = load_config(args.config, out_override=args.out)
        status = COMMANDS[args.command](cfg, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (matmod.WeightValidationError, IndefiniteGramError,
            gsmod.GroundStateError, scipy.linalg.LinAlgError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    wall = time.monotonic() - t0
    write_manifest(cfg, args.command, wall, threads)
    return status


if __name__ == "__main__":
    sys.exit(main())
