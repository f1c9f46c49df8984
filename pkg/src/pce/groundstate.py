"""Ground-state space at k = 0 and first-order dispersion of the four
linear bands.

The kernel of the fiber operator restricted to the regularized physical
subspace at k = 0 is six-dimensional and spanned by the projections of the
constant fields.  First-order degenerate perturbation theory in k reduces
to a 6x6 matrix built from the zeroth Fourier coefficients alone; its four
nonzero eigenvalues are the signed slopes of the ground-state bands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .planewave import FiberBasis, assemble_gram, check_definiteness, fiber_problem, rot_block
from .projections import gradient_basis, weighted_projector
from .spectrum import DEFAULT_ZERO_TOL, solve_fiber


class GroundStateError(RuntimeError):
    """Ground-state construction or validation failed."""


@dataclass
class GroundStateBasis:
    psis: np.ndarray    # (N, 6), B-orthonormal, columns ordered E-constants then H
    lam: np.ndarray     # 6x6 matrix of zeroth coefficients a_(j) as columns
    gram: np.ndarray
    mode0: int          # index of the gamma = 0 mode

    def zeroth_coefficient(self, j: int) -> np.ndarray:
        return self.lam[:, j]


@dataclass
class PerturbationMatrices:
    ka: np.ndarray   # 6x6 hermitian, block-offdiagonal
    kb: np.ndarray   # 3x3 E-rows x H-columns block
    k: np.ndarray


def _b_gram_schmidt(cols: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Classical Gram-Schmidt in the B-inner product, one re-orth pass."""
    out = []
    for j in range(cols.shape[1]):
        v = cols[:, j].copy()
        for _ in range(2):
            for u in out:
                v = v - u * (u.conj() @ (b @ v))
        norm = np.sqrt((v.conj() @ (b @ v)).real)
        if norm < 1e-10:
            raise GroundStateError(
                f"projected constant field {j} is numerically dependent on its "
                "predecessors (rank of the ground space < 6)"
            )
        out.append(v / norm)
    return np.stack(out, axis=1)


def ground_space(w, basis: FiberBasis, gram: np.ndarray = None) -> GroundStateBasis:
    """Project the six constant fields with Preg(0), then orthonormalize.

    The Gram-Schmidt order (E-constants first, H-constants second) together
    with the E/H block-diagonality of B keeps the zero pattern of the
    zeroth coefficients: columns 1..3 have no H-part, columns 4..6 no E-part.
    """
    if gram is None:
        gram = assemble_gram(w, basis)
        check_definiteness(gram)
    preg = weighted_projector(
        gradient_basis(np.zeros(3), basis, regularized=True), gram
    ).complement().p
    m0 = basis.modes.index_map().get((0, 0, 0))
    if m0 is None:
        raise GroundStateError("mode set does not contain gamma = 0")
    seeds = np.zeros((basis.n, 6), dtype=complex)
    for a in range(6):
        seeds[6 * m0 + a, a] = 1.0
    psis = _b_gram_schmidt(preg @ seeds, gram)
    lam = psis[6 * m0:6 * m0 + 6, :]
    if abs(np.linalg.det(lam)) < 1e-10:
        raise GroundStateError("zeroth-coefficient matrix is singular")
    return GroundStateBasis(psis=psis, lam=lam, gram=gram, mode0=m0)


def perturbation_matrices(gs: GroundStateBasis, k) -> PerturbationMatrices:
    """6x6 first-order matrix from the zeroth coefficients alone.

    entry(l, j) = k . (conj(a_l^E) x a_j^H - conj(a_l^H) x a_j^E); the
    E-rows x H-columns corner is the reduced 3x3 block.
    """
    k = np.asarray(k, float)
    a_e = gs.lam[:3, :]   # (3, 6)
    a_h = gs.lam[3:, :]
    ka = np.zeros((6, 6), dtype=complex)
    for l in range(6):
        for j in range(6):
            ka[l, j] = k @ (
                np.cross(a_e[:, l].conj(), a_h[:, j])
                - np.cross(a_h[:, l].conj(), a_e[:, j])
            )
    return PerturbationMatrices(ka=ka, kb=ka[:3, 3:], k=k)


def full_expectation_matrix(gs: GroundStateBasis, k, basis: FiberBasis) -> np.ndarray:
    """The same 6x6 matrix from the full unweighted pairing over all modes.

    The operator whose expectation is taken is A(k) - A(0), i.e. the
    constant block [[0, -k^x], [k^x, 0]] repeated per mode; pairing it
    between ground-state vectors in the plain L2 product must collapse to
    the zeroth-coefficient expression because the nonzero-mode components
    are parallel to their gamma.
    """
    blocks = gs.psis.reshape(len(basis.modes), 6, 6)
    return np.einsum("mil,ij,mjr->lr", blocks.conj(), rot_block(np.asarray(k, float)), blocks)


def ground_slopes(gs: GroundStateBasis, k_hat) -> np.ndarray:
    """The four signed slopes {-c2, -c1, +c1, +c2} along unit direction k_hat."""
    k_hat = np.asarray(k_hat, float)
    if abs(np.linalg.norm(k_hat) - 1.0) > 1e-12:
        raise ValueError("k_hat must be a unit vector")
    sing = np.sort(scipy.linalg.svdvals(perturbation_matrices(gs, k_hat).kb))
    c = sing[-2:]   # rank is 2: two nonzero singular values
    return np.sort(np.concatenate([-c, c]))


def slope_validation(w, basis: FiberBasis, k_hat, t_list, gram: np.ndarray = None,
                     zero_tol: float = DEFAULT_ZERO_TOL) -> dict:
    """Compare predicted linear dispersion with solved spectra at k = t k_hat.

    At each t the four ground-band eigenvalues are isolated as those in the
    annulus c_min t / 2 < |omega| < 2 c_max t, which separates them from
    both the kernel (exact zeros) and the optical bands for small t.
    """
    t_list = [float(t) for t in t_list]
    if any(b >= a for a, b in zip(t_list, t_list[1:])):
        raise ValueError("t_list must be strictly decreasing")
    if gram is None:
        gram = assemble_gram(w, basis)
        check_definiteness(gram)
    gs = ground_space(w, basis, gram=gram)
    slopes = ground_slopes(gs, k_hat)
    c_pos = slopes[slopes > 0]
    c_min, c_max = c_pos.min(), c_pos.max()

    rows = []
    for t in t_list:
        spec = solve_fiber(fiber_problem(t * np.asarray(k_hat, float), w, basis, gram=gram),
                           zero_tol)
        vals = spec.eigenvalues
        cand = vals[(np.abs(vals) > 0.5 * c_min * t) & (np.abs(vals) < 2.0 * c_max * t)]
        if cand.size != 4:
            raise GroundStateError(
                f"expected 4 ground-band candidates at t = {t}, found {cand.size} "
                "(degeneracy clash with optical or flat bands)"
            )
        predicted = t * slopes
        rel_err = np.abs(np.sort(cand) - predicted) / (t * c_max)
        rows.append({"t": t, "omega": np.sort(cand).tolist(),
                     "rel_err": rel_err.tolist()})
    return {"direction": np.asarray(k_hat, float).tolist(),
            "slopes": slopes.tolist(), "validation": rows}
