"""Periodic material weights as Fourier-coefficient tables.

Both the permittivity and permeability are Gamma-periodic, hermitian-matrix
valued and bounded away from 0 and infinity.  They are represented by maps
from integer dual-lattice coordinates to complex 3x3 coefficient matrices,
together with coefficient tables of the pointwise inverses (the W-form
needed for symbol evaluation).  The eigensolver path never inverts weights:
it uses the Gram matrix built from eps, mu directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import j1

from .lattice import Lattice, ModeSet


class WeightValidationError(ValueError):
    """A material-weight invariant is violated; .invariant names which."""

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


CoeffTable = dict  # (n1, n2, n3) int triple -> complex (3, 3) ndarray


class ZeroExtendedTable(dict):
    """Coefficient table whose absent entries are exactly zero (not unknown).

    Used for band-limited weights (vacuum, constants, pure cosines) so that
    assembly does not report missing entries as potential truncation loss.
    """


@dataclass
class MaterialWeights:
    eps_hat: CoeffTable
    mu_hat: CoeffTable
    inv_eps_hat: CoeffTable
    inv_mu_hat: CoeffTable
    real_weights: bool
    bounds_estimate: tuple = (None, None)  # (c, C)

    def __post_init__(self):
        for name, table in (("eps", self.eps_hat), ("mu", self.mu_hat),
                            ("inv_eps", self.inv_eps_hat), ("inv_mu", self.inv_mu_hat)):
            for key, mat in table.items():
                table[key] = np.asarray(mat, dtype=complex).reshape(3, 3)
            scale = max((np.abs(m).max() for m in table.values()), default=1.0)
            for key, mat in table.items():
                neg = tuple(-x for x in key)
                if neg not in table:
                    raise WeightValidationError(
                        "hermiticity", f"{name}: coefficient at {key} has no partner at {neg}"
                    )
                if np.abs(table[neg] - mat.conj().T).max() > 1e-10 * scale:
                    raise WeightValidationError(
                        "hermiticity", f"{name}: table[{neg}] != table[{key}]^dagger"
                    )
                if self.real_weights and np.abs(table[neg] - mat.conj()).max() > 1e-10 * scale:
                    raise WeightValidationError(
                        "realness", f"{name}: table[{neg}] != conj(table[{key}])"
                    )

    def reconstruct(self, table: CoeffTable, frac_points: np.ndarray) -> np.ndarray:
        """Evaluate the truncated Fourier series at fractional cell points."""
        pts = np.atleast_2d(np.asarray(frac_points, float))
        out = np.zeros((pts.shape[0], 3, 3), dtype=complex)
        for key, mat in table.items():
            phase = np.exp(2j * np.pi * (pts @ np.asarray(key, float)))
            out += phase[:, None, None] * mat
        return out


def _hermitize(table: CoeffTable) -> CoeffTable:
    """Symmetrize a table so eps_hat(-g) = eps_hat(g)^dagger holds exactly."""
    out = {}
    for key, mat in table.items():
        neg = tuple(-x for x in key)
        partner = table.get(neg)
        if partner is None:
            partner = mat.conj().T
        out[key] = 0.5 * (mat + partner.conj().T)
    return out


# ---------------------------------------------------------------------------
# geometry primitives
# ---------------------------------------------------------------------------

@dataclass
class GeometryPrimitive:
    """Piecewise-constant inclusion with a closed-form Fourier transform.

    kind 'background' fills the whole cell; 'sphere' has center (lattice
    units) and radius; 'cylinder-rod' runs along lattice axis `axis` with
    in-plane radius; 'slab' spans |t_axis - center| <= thickness/2 in
    lattice coordinates.  eps/mu are constant hermitian positive-definite
    3x3 matrices (scalars are promoted).
    """

    kind: str
    eps: np.ndarray
    mu: np.ndarray
    center: np.ndarray = None
    radius: float = None
    axis: int = None
    thickness: float = None

    def __post_init__(self):
        self.eps = _promote_weight(self.eps, "eps")
        self.mu = _promote_weight(self.mu, "mu")
        if self.kind not in ("background", "sphere", "cylinder-rod", "slab"):
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        if self.center is not None:
            self.center = np.asarray(self.center, float)
        if self.radius is not None and self.radius < 0:
            raise ValueError("radius must be non-negative")
        if self.thickness is not None and self.thickness < 0:
            raise ValueError("thickness must be non-negative")


def _promote_weight(w, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    if w.ndim == 0:
        w = w * np.eye(3)
    w = w.reshape(3, 3)
    if np.abs(w - w.conj().T).max() > 1e-12 * max(np.abs(w).max(), 1.0):
        raise WeightValidationError("hermiticity", f"primitive {name} matrix not hermitian")
    ev = np.linalg.eigvalsh(w)
    if ev.min() <= 0:
        raise WeightValidationError("positivity", f"primitive {name} matrix not positive definite")
    return w


def _form_factor(prim: GeometryPrimitive, coord, lattice: Lattice) -> complex:
    """Fourier coefficient of the primitive's indicator at integer mode coord.

    Normalized so that the coefficient at coord = 0 is the volume fraction.
    """
    n = np.asarray(coord, int)
    if prim.kind == "background":
        return 1.0 if not n.any() else 0.0
    vol = lattice.cell_volume
    if prim.kind == "sphere":
        r0 = prim.center @ lattice.basis
        gam = n.astype(float) @ (2.0 * np.pi * np.linalg.inv(lattice.basis).T)
        g = np.linalg.norm(gam)
        f = (4.0 / 3.0) * np.pi * prim.radius**3 / vol
        phase = np.exp(-1j * gam @ r0)
        if g * prim.radius < 1e-10:
            return f * phase
        x = g * prim.radius
        return f * 3.0 * (np.sin(x) - x * np.cos(x)) / x**3 * phase
    if prim.kind == "slab":
        d = prim.thickness
        c = prim.center if np.ndim(prim.center) == 0 else prim.center[prim.axis]
        if any(n[j] != 0 for j in range(3) if j != prim.axis):
            return 0.0
        m = n[prim.axis]
        if m == 0:
            return d
        return d * np.sinc(m * d) * np.exp(-2j * np.pi * m * c)
    if prim.kind == "cylinder-rod":
        if n[prim.axis] != 0:
            return 0.0
        # in-plane geometry: Cartesian projection orthogonal to the rod axis
        axis_vec = lattice.basis[prim.axis]
        axis_hat = axis_vec / np.linalg.norm(axis_vec)
        gam = n.astype(float) @ (2.0 * np.pi * np.linalg.inv(lattice.basis).T)
        gperp = gam - (gam @ axis_hat) * axis_hat
        g = np.linalg.norm(gperp)
        area = vol / np.linalg.norm(axis_vec)
        f = np.pi * prim.radius**2 / area
        r0 = prim.center @ lattice.basis
        phase = np.exp(-1j * gam @ r0)
        if g * prim.radius < 1e-10:
            return f * phase
        x = g * prim.radius
        return f * 2.0 * j1(x) / x * phase
    raise AssertionError(prim.kind)


def _check_disjoint(primitives):
    inclusions = [p for p in primitives if p.kind != "background"]
    for i, a in enumerate(inclusions):
        for b in inclusions[i + 1:]:
            if a.kind == b.kind == "sphere":
                if np.linalg.norm(a.center - b.center) < a.radius + b.radius:
                    raise ValueError(
                        "overlapping spheres: Fourier superposition would be ambiguous; "
                        "make the overwrite order explicit by merging the primitives"
                    )


def _difference_coords(modes: ModeSet) -> np.ndarray:
    diffs = modes.coords[:, None, :] - modes.coords[None, :, :]
    return np.unique(diffs.reshape(-1, 3), axis=0)


def coefficients_from_primitives(primitives, lattice: Lattice, modes: ModeSet) -> MaterialWeights:
    """Closed-form coefficient tables for a background plus disjoint inclusions.

    Tables cover every difference gamma - gamma' occurring over ``modes`` so
    that Gram/multiplier assembly never hits a missing entry.
    """
    if not primitives or primitives[0].kind != "background":
        raise ValueError("primitives must be listed background-first")
    _check_disjoint(primitives)
    bg = primitives[0]
    diffs = _difference_coords(modes)

    tables = {"eps": {}, "mu": {}, "inv_eps": {}, "inv_mu": {}}
    fields = {
        "eps": [(p, p.eps) for p in primitives],
        "mu": [(p, p.mu) for p in primitives],
        "inv_eps": [(p, np.linalg.inv(p.eps)) for p in primitives],
        "inv_mu": [(p, np.linalg.inv(p.mu)) for p in primitives],
    }
    for name, plist in fields.items():
        bg_mat = plist[0][1]
        for coord in diffs:
            key = tuple(int(x) for x in coord)
            acc = bg_mat * _form_factor(bg, coord, lattice)
            for prim, mat in plist[1:]:
                acc = acc + (mat - bg_mat) * _form_factor(prim, coord, lattice)
            tables[name][key] = acc

    real = all(
        np.abs(p.eps.imag).max() < 1e-14 and np.abs(p.mu.imag).max() < 1e-14
        for p in primitives
    )
    evs = [np.linalg.eigvalsh(m).real for p in primitives for m in (p.eps, p.mu)]
    bounds = (float(min(e.min() for e in evs)), float(max(e.max() for e in evs)))
    return MaterialWeights(
        eps_hat=_hermitize(tables["eps"]), mu_hat=_hermitize(tables["mu"]),
        inv_eps_hat=_hermitize(tables["inv_eps"]), inv_mu_hat=_hermitize(tables["inv_mu"]),
        real_weights=real, bounds_estimate=bounds,
    )


# ---------------------------------------------------------------------------
# sampled weights
# ---------------------------------------------------------------------------

def coefficients_from_samples(eps_samples: np.ndarray, mu_samples: np.ndarray) -> MaterialWeights:
    """DFT of weights sampled on a uniform N^3 grid over the unit cell.

    Samples are 3x3 hermitian positive-definite matrices indexed by
    fractional coordinates j/N.  Only modes with every integer coordinate
    of magnitude <= N/2 are retained (everything beyond aliases).
    """
    eps_samples = np.asarray(eps_samples, dtype=complex)
    mu_samples = np.asarray(mu_samples, dtype=complex)
    if eps_samples.shape != mu_samples.shape or eps_samples.ndim != 5:
        raise ValueError("expected matching (N, N, N, 3, 3) sample grids")
    n = eps_samples.shape[0]

    for name, grid in (("eps", eps_samples), ("mu", mu_samples)):
        herm = np.abs(grid - np.conj(np.swapaxes(grid, -1, -2))).max()
        if herm > 1e-10 * max(np.abs(grid).max(), 1.0):
            raise WeightValidationError("hermiticity", f"{name} sample grid not hermitian")
    real = max(np.abs(eps_samples.imag).max(), np.abs(mu_samples.imag).max()) < 1e-12

    inv_eps = np.linalg.inv(eps_samples)
    inv_mu = np.linalg.inv(mu_samples)
    for name, grid in (("eps", eps_samples), ("mu", mu_samples)):
        ev = np.linalg.eigvalsh(grid).real
        if ev.min() <= 0:
            loc = np.unravel_index(int(np.argmin(ev.min(axis=-1))), grid.shape[:3])
            raise WeightValidationError(
                "positivity", f"{name} sample at grid index {loc} is not positive definite"
            )

    def dft(grid):
        coeff = np.fft.fftn(grid, axes=(0, 1, 2)) / n**3
        table = {}
        freqs = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        # strict half-grid bound: an even grid carries -N/2 without its +N/2
        # partner, which would break the hermitian pairing of the table
        half = (n - 1) // 2
        for i, fi in enumerate(freqs):
            if abs(fi) > half:
                continue
            for j, fj in enumerate(freqs):
                if abs(fj) > half:
                    continue
                for l, fl in enumerate(freqs):
                    if abs(fl) > half:
                        continue
                    table[(fi, fj, fl)] = coeff[i, j, l]
        return table

    evs = np.concatenate([np.linalg.eigvalsh(eps_samples).real.ravel(),
                          np.linalg.eigvalsh(mu_samples).real.ravel()])
    return MaterialWeights(
        eps_hat=_hermitize(dft(eps_samples)), mu_hat=_hermitize(dft(mu_samples)),
        inv_eps_hat=_hermitize(dft(inv_eps)), inv_mu_hat=_hermitize(dft(inv_mu)),
        real_weights=bool(real),
        bounds_estimate=(float(evs.min()), float(evs.max())),
    )


def validate_weights(w: MaterialWeights, n_probe: int = 64, seed: int = 0) -> dict:
    """Reconstruct the weights at random cell points and check the invariants.

    Raises WeightValidationError naming the violated invariant; on success
    returns a diagnostic report dict.
    """
    rng = np.random.default_rng(seed)
    pts = rng.random((n_probe, 3))
    report = {}
    for name, table in (("eps", w.eps_hat), ("mu", w.mu_hat)):
        vals = w.reconstruct(table, pts)
        herm = np.abs(vals - np.conj(np.swapaxes(vals, -1, -2))).max()
        vals_h = 0.5 * (vals + np.conj(np.swapaxes(vals, -1, -2)))
        ev = np.linalg.eigvalsh(vals_h).real
        imag = np.abs(vals.imag).max() if w.real_weights else None
        report[name] = {
            "min_eigenvalue": float(ev.min()),
            "max_eigenvalue": float(ev.max()),
            "hermiticity_residual": float(herm),
            "realness_residual": None if imag is None else float(imag),
        }
        if ev.min() <= 0:
            raise WeightValidationError(
                "positivity",
                f"{name} reconstruction has min eigenvalue {ev.min():.3e} <= 0",
            )
    report["bounds"] = (
        min(report["eps"]["min_eigenvalue"], report["mu"]["min_eigenvalue"]),
        max(report["eps"]["max_eigenvalue"], report["mu"]["max_eigenvalue"]),
    )
    return report


# ---------------------------------------------------------------------------
# slow modulation functions
# ---------------------------------------------------------------------------

@dataclass
class ModulationField:
    """Scalar modulation tau(r) from a closed-form family with tau(0) = 1.

    family 'constant': tau = 1.
    family 'gaussian': 1 + alpha (exp(-|r-r0|^2/sigma^2) - exp(-|r0|^2/sigma^2)),
        |alpha| < 1/2 so the field stays positive.
    family 'trig': 1 + alpha sin(q . r), |alpha| < 1.
    """

    family: str
    alpha: float = 0.0
    center: np.ndarray = None
    sigma: float = 1.0
    q: np.ndarray = None

    def __post_init__(self):
        if self.family not in ("constant", "gaussian", "trig"):
            raise ValueError(f"unknown modulation family {self.family!r}")
        if self.family == "gaussian":
            if abs(self.alpha) >= 0.5:
                raise ValueError("gaussian modulation needs |alpha| < 1/2")
            self.center = np.zeros(3) if self.center is None else np.asarray(self.center, float)
        if self.family == "trig":
            if abs(self.alpha) >= 1.0:
                raise ValueError("trig modulation needs |alpha| < 1")
            self.q = np.zeros(3) if self.q is None else np.asarray(self.q, float)

    def value(self, r) -> float:
        r = np.asarray(r, float)
        if self.family == "constant":
            return 1.0
        if self.family == "gaussian":
            d = r - self.center
            return 1.0 + self.alpha * (
                np.exp(-d @ d / self.sigma**2)
                - np.exp(-self.center @ self.center / self.sigma**2)
            )
        return 1.0 + self.alpha * np.sin(self.q @ r)

    def grad(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        if self.family == "constant":
            return np.zeros(3)
        if self.family == "gaussian":
            d = r - self.center
            return self.alpha * np.exp(-d @ d / self.sigma**2) * (-2.0 * d / self.sigma**2)
        return self.alpha * np.cos(self.q @ r) * self.q

    def hess(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        if self.family == "constant":
            return np.zeros((3, 3))
        if self.family == "gaussian":
            d = r - self.center
            e = np.exp(-d @ d / self.sigma**2)
            return self.alpha * e * (
                4.0 * np.outer(d, d) / self.sigma**4 - 2.0 * np.eye(3) / self.sigma**2
            )
        return -self.alpha * np.sin(self.q @ r) * np.outer(self.q, self.q)


@dataclass
class ModulationPair:
    tau_eps: ModulationField
    tau_mu: ModulationField


def modulation_eval(m: ModulationPair, r):
    """(tau_eps, tau_mu, grad tau_eps, grad tau_mu) at macroscopic position r."""
    return (m.tau_eps.value(r), m.tau_mu.value(r),
            m.tau_eps.grad(r), m.tau_mu.grad(r))


# ---------------------------------------------------------------------------
# JSON serialization of coefficient tables
# ---------------------------------------------------------------------------

def _table_to_json(table: CoeffTable) -> dict:
    out = {}
    for key, mat in sorted(table.items()):
        out[",".join(str(x) for x in key)] = [
            [[float(z.real), float(z.imag)] for z in row] for row in mat
        ]
    return out


def _table_from_json(obj: dict) -> CoeffTable:
    table = {}
    for key, rows in obj.items():
        coord = tuple(int(x) for x in key.split(","))
        table[coord] = np.array(
            [[complex(re, im) for re, im in row] for row in rows]
        )
    return table


def weights_to_json(w: MaterialWeights) -> str:
    doc = {
        "real_weights": w.real_weights,
        "bounds_estimate": list(w.bounds_estimate),
        "eps_hat": _table_to_json(w.eps_hat),
        "mu_hat": _table_to_json(w.mu_hat),
        "inv_eps_hat": _table_to_json(w.inv_eps_hat),
        "inv_mu_hat": _table_to_json(w.inv_mu_hat),
    }
    return json.dumps(doc, sort_keys=True)


def weights_from_json(text: str) -> MaterialWeights:
    doc = json.loads(text)
    return MaterialWeights(
        eps_hat=_table_from_json(doc["eps_hat"]),
        mu_hat=_table_from_json(doc["mu_hat"]),
        inv_eps_hat=_table_from_json(doc["inv_eps_hat"]),
        inv_mu_hat=_table_from_json(doc["inv_mu_hat"]),
        real_weights=doc["real_weights"],
        bounds_estimate=tuple(doc.get("bounds_estimate", (None, None))),
    )


def vacuum_weights(modes: ModeSet = None) -> MaterialWeights:
    eye = ZeroExtendedTable({(0, 0, 0): np.eye(3, dtype=complex)})
    return MaterialWeights(
        eps_hat=ZeroExtendedTable(eye), mu_hat=ZeroExtendedTable(eye),
        inv_eps_hat=ZeroExtendedTable(eye), inv_mu_hat=ZeroExtendedTable(eye),
        real_weights=True, bounds_estimate=(1.0, 1.0),
    )


def constant_weights(eps, mu) -> MaterialWeights:
    eps = _promote_weight(eps, "eps")
    mu = _promote_weight(mu, "mu")
    real = np.abs(eps.imag).max() < 1e-14 and np.abs(mu.imag).max() < 1e-14
    evs = np.concatenate([np.linalg.eigvalsh(eps).real, np.linalg.eigvalsh(mu).real])
    return MaterialWeights(
        eps_hat=ZeroExtendedTable({(0, 0, 0): eps}),
        mu_hat=ZeroExtendedTable({(0, 0, 0): mu}),
        inv_eps_hat=ZeroExtendedTable({(0, 0, 0): np.linalg.inv(eps)}),
        inv_mu_hat=ZeroExtendedTable({(0, 0, 0): np.linalg.inv(mu)}),
        real_weights=bool(real),
        bounds_estimate=(float(evs.min()), float(evs.max())),
    )
