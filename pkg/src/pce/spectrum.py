"""Fiber eigensolves, band labeling and spectral symmetry checks.

Eigenvalues come from the generalized hermitian problem A(k) u = omega B u;
the zero modes (gradient fields) are classified by a relative threshold and
dropped before bands are labeled ..., -2, -1, 1, 2, ... by sorted order as
nonzero eigenvalues.  On dual-lattice points the four ground bands dive
into the kernel; labeling is extended there by continuity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lattice import DualLattice, ModeSet, snap_to_dual
from .material import MaterialWeights
from .planewave import FiberBasis, FiberProblem, assemble_gram, check_definiteness, fiber_problem

DEFAULT_ZERO_TOL = 1e-8


@dataclass
class FiberSpectrum:
    k: np.ndarray
    eigenvalues: np.ndarray      # ascending
    eigenvectors: np.ndarray     # column i pairs with eigenvalues[i], B-orthonormal
    zero_tol: float

    @property
    def zero_mask(self) -> np.ndarray:
        scale = np.abs(self.eigenvalues).max()
        if scale == 0.0:
            return np.ones_like(self.eigenvalues, dtype=bool)
        return np.abs(self.eigenvalues) < self.zero_tol * scale

    @property
    def zero_mode_count(self) -> int:
        return int(np.count_nonzero(self.zero_mask))

    def nonzero_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[~self.zero_mask]


def solve_fiber(problem: FiberProblem, zero_tol: float = DEFAULT_ZERO_TOL) -> FiberSpectrum:
    try:
        vals, vecs = scipy.linalg.eigh(problem.a, problem.b)
    except scipy.linalg.LinAlgError as exc:
        raise scipy.linalg.LinAlgError(
            f"generalized eigensolve failed at k = {problem.k}: {exc}"
        ) from exc
    return FiberSpectrum(k=problem.k, eigenvalues=vals, eigenvectors=vecs,
                         zero_tol=zero_tol)


def analytic_free_spectrum(k, modes: ModeSet) -> np.ndarray:
    """Exact spectrum of the free curl operator at momentum k, sorted.

    Each mode with xi = gamma + k != 0 contributes {+|xi| x2, -|xi| x2, 0 x2};
    a mode with xi = 0 contributes six zeros.
    """
    xi = modes.gammas + np.asarray(k, float)
    norms = np.linalg.norm(xi, axis=1)
    vals = []
    for g in norms:
        if g == 0.0:
            vals.extend([0.0] * 6)
        else:
            vals.extend([g, g, -g, -g, 0.0, 0.0])
    return np.sort(np.array(vals))


@dataclass
class BandStructure:
    """Labeled bands along a k-path sample list.

    ``bands`` maps the integer label n (negative and positive, no 0) to an
    array over samples; ``zero_counts`` holds the per-sample kernel size,
    ``on_dual`` flags samples snapped onto the dual lattice.  Ground-state
    bands are n in {-2, -1, 1, 2}.
    """

    k_samples: np.ndarray
    bands: dict
    zero_counts: np.ndarray
    on_dual: np.ndarray
    n_max: int

    def ground_state_labels(self):
        return (-2, -1, 1, 2)


def label_bands(spectra, dual: DualLattice, n_max: int = None) -> BandStructure:
    dims = {s.eigenvalues.size for s in spectra}
    if len(dims) != 1:
        raise ValueError(f"spectra have inconsistent dimensions: {sorted(dims)}")

    pos_lists, neg_lists, zero_counts, flags = [], [], [], []
    for s in spectra:
        _, on_dual = snap_to_dual(s.k, dual)
        nz = s.nonzero_eigenvalues()
        pos = np.sort(nz[nz > 0])          # pos[0] is omega_1
        neg = np.sort(nz[nz < 0])[::-1]    # neg[0] is omega_-1
        if on_dual:
            # the four ground bands sit in the kernel here; extend by continuity
            pos = np.concatenate([[0.0, 0.0], pos])
            neg = np.concatenate([[0.0, 0.0], neg])
        pos_lists.append(pos)
        neg_lists.append(neg)
        zero_counts.append(s.zero_mode_count)
        flags.append(bool(on_dual))

    avail = min(min(p.size for p in pos_lists), min(q.size for q in neg_lists))
    n_max = avail if n_max is None else min(n_max, avail)
    bands = {}
    for n in range(1, n_max + 1):
        bands[n] = np.array([p[n - 1] for p in pos_lists])
        bands[-n] = np.array([q[n - 1] for q in neg_lists])
    return BandStructure(
        k_samples=np.array([s.k for s in spectra]),
        bands=bands,
        zero_counts=np.array(zero_counts),
        on_dual=np.array(flags),
        n_max=n_max,
    )


def ph_symmetry_check(w: MaterialWeights, basis: FiberBasis, k,
                      gram: np.ndarray = None, zero_tol: float = DEFAULT_ZERO_TOL) -> float:
    """Max mismatch between sorted sigma(k) and the negated sorted sigma(-k).

    Only meaningful for real weights; complex (gyrotropic) tables are
    refused because the reflection symmetry is not expected there.
    """
    if not w.real_weights:
        raise ValueError("particle-hole symmetry check requires real material weights")
    k = np.asarray(k, float)
    if gram is None:
        gram = assemble_gram(w, basis)
        check_definiteness(gram)
    sp = solve_fiber(fiber_problem(k, w, basis, gram=gram), zero_tol)
    sm = solve_fiber(fiber_problem(-k, w, basis, gram=gram), zero_tol)
    return float(np.abs(sp.eigenvalues - np.sort(-sm.eigenvalues)).max())


def spectrum_residuals(problem: FiberProblem, spec: FiberSpectrum) -> dict:
    """Diagnostics: worst eigen-residual and B-orthonormality defect."""
    a, b = problem.a, problem.b
    r = a @ spec.eigenvectors - b @ spec.eigenvectors * spec.eigenvalues
    scale = np.linalg.norm(a) + np.abs(spec.eigenvalues).max() * np.linalg.norm(b)
    gram_defect = spec.eigenvectors.conj().T @ b @ spec.eigenvectors - np.eye(a.shape[0])
    return {
        "eigen_residual": float(np.linalg.norm(r, axis=0).max() / scale),
        "b_orthonormality": float(np.abs(gram_defect).max()),
    }
