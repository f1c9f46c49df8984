"""Gradient-field subspaces and their weighted-orthogonal projectors.

The unphysical subspace at momentum k is spanned mode-by-mode by vectors
carrying xi = gamma + k in the E-slot or in the H-slot.  The regularized
variant always excludes the gamma = 0 mode, which removes the rank jump
at dual-lattice points.  Projectors are orthogonal with respect to the
weighted Gram matrix B, hence P^2 = P and B P = P^dagger B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .planewave import FiberBasis, assemble_gram, assemble_rot, check_definiteness


@dataclass
class SubspaceBasis:
    k: np.ndarray
    kind: str                 # 'Gper' or 'Greg'
    columns: np.ndarray       # (N, ncols)

    @property
    def dim(self) -> int:
        return self.columns.shape[1]


@dataclass
class Projector:
    p: np.ndarray
    gram: np.ndarray

    def complement(self) -> "Projector":
        return Projector(p=np.eye(self.p.shape[0]) - self.p, gram=self.gram)

    def invariant_residuals(self) -> dict:
        idem = np.abs(self.p @ self.p - self.p).max()
        selfadj = np.abs(self.gram @ self.p - self.p.conj().T @ self.gram).max()
        return {"idempotency": float(idem), "b_selfadjointness": float(selfadj)}


def gradient_basis(k, basis: FiberBasis, regularized: bool) -> SubspaceBasis:
    """Columns ((gamma+k) in E-slot, (gamma+k) in H-slot) per contributing mode.

    Modes with gamma + k = 0 contribute nothing; the regularized basis
    drops the gamma = 0 mode no matter what k is.
    """
    k = np.asarray(k, float)
    modes = basis.modes
    tiny = 1e-12 * max(modes.dual.min_norm, 1.0)
    cols = []
    for m, (coord, gamma) in enumerate(zip(modes.coords, modes.gammas)):
        if regularized and not coord.any():
            continue
        xi = gamma + k
        if np.linalg.norm(xi) <= tiny:
            continue
        for slot in (0, 3):
            v = np.zeros(basis.n, dtype=complex)
            v[6 * m + slot:6 * m + slot + 3] = xi
            cols.append(v)
    columns = np.stack(cols, axis=1) if cols else np.zeros((basis.n, 0), dtype=complex)
    return SubspaceBasis(k=k, kind="Greg" if regularized else "Gper", columns=columns)


def weighted_projector(s: SubspaceBasis, b: np.ndarray) -> Projector:
    """B-orthogonal projector P = S (S^dagger B S)^-1 S^dagger B onto span(S)."""
    cols = s.columns
    if cols.shape[1] == 0:
        return Projector(p=np.zeros((b.shape[0], b.shape[0]), dtype=complex), gram=b)
    small = cols.conj().T @ b @ cols
    try:
        factor = scipy.linalg.cho_factor(small)
    except scipy.linalg.LinAlgError as exc:
        raise scipy.linalg.LinAlgError(
            "subspace basis is numerically rank deficient in the B-inner product"
        ) from exc
    p = cols @ scipy.linalg.cho_solve(factor, cols.conj().T @ b)
    return Projector(p=p, gram=b)


def _embedded_k_columns(k, basis: FiberBasis) -> np.ndarray:
    """The two vectors (k in the E-slot, k in the H-slot) of the gamma=0 mode."""
    m0 = basis.modes.index_map()[(0, 0, 0)]
    cols = np.zeros((basis.n, 2), dtype=complex)
    cols[6 * m0:6 * m0 + 3, 0] = k
    cols[6 * m0 + 3:6 * m0 + 6, 1] = k
    return cols


def intersection_dimension(k, w, basis: FiberBasis, gram: np.ndarray = None,
                           rank_tol: float = 1e-8, full: bool = False):
    """Dimension of the physical part of the constant-field pair at momentum k.

    Computed as the numerical rank of Preg(k) applied to the two k-carrying
    columns of the zero mode; ``full=True`` additionally returns the
    singular values so borderline ranks can be audited.
    """
    k = np.asarray(k, float)
    if gram is None:
        gram = assemble_gram(w, basis)
        check_definiteness(gram)
    q = weighted_projector(gradient_basis(k, basis, regularized=True), gram)
    preg = q.complement().p
    image = preg @ _embedded_k_columns(k, basis)
    sing = scipy.linalg.svdvals(image)
    top = sing.max() if sing.size else 0.0
    dim = int(np.count_nonzero(sing > rank_tol * top)) if top > rank_tol else 0
    if full:
        return dim, sing
    return dim


def discontinuity_probe(t_list, k_hat, w, basis: FiberBasis,
                        gram: np.ndarray = None) -> list:
    """Spectral-norm distance of Qper/Qreg at k = t k_hat from their k=0 value.

    Returns one row dict per t: {'t', 'norm_plain', 'norm_reg'}.
    """
    k_hat = np.asarray(k_hat, float)
    if gram is None:
        gram = assemble_gram(w, basis)
        check_definiteness(gram)
    q0_plain = weighted_projector(gradient_basis(np.zeros(3), basis, False), gram).p
    q0_reg = weighted_projector(gradient_basis(np.zeros(3), basis, True), gram).p
    rows = []
    for t in t_list:
        k = t * k_hat
        qp = weighted_projector(gradient_basis(k, basis, False), gram).p
        qr = weighted_projector(gradient_basis(k, basis, True), gram).p
        rows.append({
            "t": float(t),
            "norm_plain": float(np.linalg.norm(qp - q0_plain, 2)),
            "norm_reg": float(np.linalg.norm(qr - q0_reg, 2)),
        })
    return rows


def commutation_residual(k, w, basis: FiberBasis, gram: np.ndarray = None) -> float:
    """Relative commutator of B^-1 A(k) with the physical projector Pper(k)."""
    if gram is None:
        gram = assemble_gram(w, basis)
        check_definiteness(gram)
    a = assemble_rot(k, basis)
    op = scipy.linalg.solve(gram, a, assume_a="pos")
    pper = weighted_projector(gradient_basis(k, basis, False), gram).complement().p
    comm = op @ pper - pper @ op
    scale = np.linalg.norm(op, 2)
    return float(np.linalg.norm(comm, 2) / scale) if scale else 0.0
