"""Bravais lattice, dual lattice, plane-wave mode sets and k-paths.

Conventions: lattice basis vectors are the rows of a 3x3 matrix, the dual
basis satisfies e_j . e*_n = 2 pi delta_jn.  Crystal momenta are stored
unreduced; wrapping into the first Brillouin zone is a separate, explicit
operation so that equivariance checks can compare k and k - gamma*.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SingularBasisError(ValueError):
    """Lattice basis is numerically singular."""


@dataclass(frozen=True)
class Lattice:
    """Bravais lattice spanned (over Z) by the rows of ``basis``."""

    basis: np.ndarray  # (3, 3), row j = e_j

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float).reshape(3, 3)
        object.__setattr__(self, "basis", b)
        cond = np.linalg.cond(b)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularBasisError(
                f"lattice basis is singular or ill-conditioned (cond = {cond:.3e})"
            )

    @property
    def cell_volume(self) -> float:
        return abs(np.linalg.det(self.basis))


@dataclass(frozen=True)
class DualLattice:
    """Dual lattice with e_j . e*_n = 2 pi delta_jn."""

    basis: np.ndarray  # (3, 3), row j = e*_j

    def __post_init__(self):
        object.__setattr__(
            self, "basis", np.asarray(self.basis, dtype=float).reshape(3, 3)
        )

    @property
    def min_norm(self) -> float:
        return float(min(np.linalg.norm(self.basis, axis=1)))


def dual_basis(lattice: Lattice) -> DualLattice:
    """Dual lattice basis solving e_j . e*_n = 2 pi delta_jn."""
    # rows of 2 pi inv(E)^T
    estar = 2.0 * np.pi * np.linalg.inv(lattice.basis).T
    residual = lattice.basis @ estar.T - 2.0 * np.pi * np.eye(3)
    assert np.max(np.abs(residual)) <= 1e-12 * 2.0 * np.pi * np.linalg.cond(
        lattice.basis
    )
    return DualLattice(estar)


@dataclass(frozen=True)
class ModeSet:
    """Deterministically ordered set of dual-lattice vectors gamma*.

    ``coords`` holds the integer coordinates with respect to the dual basis,
    ``gammas`` the Cartesian vectors.  Ordering is (|gamma*|, lexicographic
    integer coordinates), which makes assembled matrices reproducible.
    """

    dual: DualLattice
    coords: np.ndarray  # (M, 3) int
    gammas: np.ndarray = field(init=False)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=int).reshape(-1, 3)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "gammas", coords.astype(float) @ self.dual.basis)

    def __len__(self) -> int:
        return self.coords.shape[0]

    def index_map(self) -> dict:
        return {tuple(c): i for i, c in enumerate(self.coords)}

    def contains(self, coord) -> bool:
        return tuple(int(x) for x in coord) in self.index_map()


def cutoff_modes(dual: DualLattice, radius: float) -> ModeSet:
    """All gamma* with |gamma*| <= radius (Euclidean ball truncation)."""
    if radius < 0:
        raise ValueError("cutoff radius must be non-negative")
    # |n_j| = |gamma . e_j| / 2pi <= radius |e_j| / 2pi
    lat_rows = np.linalg.inv(dual.basis).T * 2.0 * np.pi  # recover e_j rows
    nmax = np.floor(radius * np.linalg.norm(lat_rows, axis=1) / (2.0 * np.pi) + 1e-9)
    nmax = nmax.astype(int)
    rng = [np.arange(-m, m + 1) for m in nmax]
    grid = np.stack(np.meshgrid(*rng, indexing="ij"), axis=-1).reshape(-1, 3)
    gam = grid.astype(float) @ dual.basis
    norm2 = np.einsum("ij,ij->i", gam, gam)
    keep = norm2 <= radius * radius * (1.0 + 1e-12)
    coords = grid[keep]
    norms = np.sqrt(norm2[keep])
    order = np.lexsort((coords[:, 2], coords[:, 1], coords[:, 0], np.round(norms, 12)))
    return ModeSet(dual=dual, coords=coords[order])


@dataclass(frozen=True)
class KPath:
    """Piecewise-linear path through momentum space."""

    vertices: np.ndarray  # (V, 3)
    samples_per_segment: int
    samples: np.ndarray = field(init=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        if verts.shape[0] < 2:
            raise ValueError("a k-path needs at least two vertices")
        if self.samples_per_segment < 1:
            raise ValueError("samples_per_segment must be >= 1")
        object.__setattr__(self, "vertices", verts)
        n = self.samples_per_segment
        pts = []
        for a, b in zip(verts[:-1], verts[1:]):
            for j in range(n):
                pts.append(a + (b - a) * (j / n))
        pts.append(verts[-1])
        object.__setattr__(self, "samples", np.array(pts))

    def arclengths(self) -> np.ndarray:
        d = np.linalg.norm(np.diff(self.samples, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(d)])


def kpath(vertices, samples_per_segment: int) -> KPath:
    return KPath(vertices=np.asarray(vertices, float),
                 samples_per_segment=samples_per_segment)


def wrap_to_bz(k, dual: DualLattice) -> np.ndarray:
    """Translate k by a dual-lattice vector into fractional coords [-1/2, 1/2)."""
    frac = np.linalg.solve(dual.basis.T, np.asarray(k, float))
    frac_wrapped = frac - np.floor(frac + 0.5)
    return frac_wrapped @ dual.basis


def dist_to_dual(k, dual: DualLattice) -> float:
    """Distance of k to the nearest dual-lattice point."""
    frac = np.linalg.solve(dual.basis.T, np.asarray(k, float))
    nearest = np.round(frac)
    return float(np.linalg.norm((frac - nearest) @ dual.basis))


def snap_to_dual(k, dual: DualLattice, tol_rel: float = 1e-9):
    """Snap k onto the dual lattice when it is within tol_rel * |e*_1|.

    Returns (k_snapped, on_dual_flag).
    """
    k = np.asarray(k, float)
    frac = np.linalg.solve(dual.basis.T, k)
    nearest = np.round(frac)
    dist = np.linalg.norm((frac - nearest) @ dual.basis)
    if dist < tol_rel * np.linalg.norm(dual.basis[0]):
        return nearest @ dual.basis, True
    return k, False
