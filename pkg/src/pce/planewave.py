"""Galerkin assembly on the truncated plane-wave basis.

Basis vectors are e^{i gamma . y} tensor C^6 with the six components per
mode ordered (E1, E2, E3, H1, H2, H3); block m occupies rows 6m..6m+5.
The fiber operator at crystal momentum k is represented by the pair
(A(k), B): A is the block-diagonal curl matrix, B the Gram matrix of the
weighted inner product, so eigenpairs of A u = omega B u are exactly the
eigenpairs of the weighted Maxwell operator at this truncation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lattice import ModeSet
from .material import MaterialWeights, ZeroExtendedTable


class IndefiniteGramError(np.linalg.LinAlgError):
    """Gram matrix failed its definiteness factorization."""


@dataclass(frozen=True)
class FiberBasis:
    modes: ModeSet

    @property
    def n(self) -> int:
        return 6 * len(self.modes)

    def block(self, m: int) -> slice:
        return slice(6 * m, 6 * m + 6)


@dataclass
class FiberProblem:
    """(A(k), B) pair of a fiber eigenproblem A u = omega B u."""

    a: np.ndarray
    b: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        self.k = np.asarray(self.k, float)
        herm = np.abs(self.a - self.a.conj().T).max()
        scale = max(np.abs(self.a).max(), 1e-300)
        if herm > 1e-12 * scale:
            raise ValueError(f"A(k) hermiticity residual {herm:.3e} exceeds 1e-12 relative")


def cross_matrix(v) -> np.ndarray:
    """Antisymmetric matrix of v x (.)."""
    v1, v2, v3 = np.asarray(v)
    return np.array([[0.0, -v3, v2],
                     [v3, 0.0, -v1],
                     [-v2, v1, 0.0]], dtype=complex)


def rot_block(xi) -> np.ndarray:
    """6x6 curl block [[0, -xi^x], [xi^x, 0]] at a single mode."""
    x = cross_matrix(xi)
    blk = np.zeros((6, 6), dtype=complex)
    blk[:3, 3:] = -x
    blk[3:, :3] = x
    return blk


def assemble_rot(k, basis: FiberBasis) -> np.ndarray:
    """Block-diagonal Rot(k): block at mode gamma is rot_block(gamma + k)."""
    k = np.asarray(k, float)
    n = basis.n
    a = np.zeros((n, n), dtype=complex)
    for m, gamma in enumerate(basis.modes.gammas):
        a[basis.block(m), basis.block(m)] = rot_block(gamma + k)
    return a


def rot_k_derivative_blocks(basis: FiberBasis):
    """The three constant matrices A_j with A(k) = A(0) + sum_j k_j A_j."""
    parts = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = 1.0
        blk = rot_block(e)
        a = np.zeros((basis.n, basis.n), dtype=complex)
        for m in range(len(basis.modes)):
            a[basis.block(m), basis.block(m)] = blk
        parts.append(a)
    return parts


def _convolution_block(table, modes: ModeSet) -> np.ndarray:
    """3M x 3M convolution matrix C[m, m'] = table[gamma_m - gamma_m']."""
    coords = modes.coords
    nmodes = coords.shape[0]
    out = np.zeros((3 * nmodes, 3 * nmodes), dtype=complex)
    missing = 0
    for i in range(nmodes):
        for j in range(nmodes):
            key = tuple(int(x) for x in coords[i] - coords[j])
            mat = table.get(key)
            if mat is None:
                missing += 1
                continue
            out[3 * i:3 * i + 3, 3 * j:3 * j + 3] = mat
    if missing and not isinstance(table, ZeroExtendedTable):
        warnings.warn(
            f"coefficient table missing {missing} mode differences (treated as 0)",
            stacklevel=3,
        )
    return out


def _interleave(e_block: np.ndarray, h_block: np.ndarray, nmodes: int) -> np.ndarray:
    """Merge per-slot 3M x 3M matrices into the mode-major 6M x 6M layout."""
    n = 6 * nmodes
    out = np.zeros((n, n), dtype=complex)
    for i in range(nmodes):
        for j in range(nmodes):
            out[6 * i:6 * i + 3, 6 * j:6 * j + 3] = e_block[3 * i:3 * i + 3, 3 * j:3 * j + 3]
            out[6 * i + 3:6 * i + 6, 6 * j + 3:6 * j + 6] = h_block[3 * i:3 * i + 3, 3 * j:3 * j + 3]
    return out


def assemble_multiplier(table, basis: FiberBasis) -> np.ndarray:
    """Convolution matrix of a periodic multiplication operator.

    ``table`` is either a single coefficient map applied to both the E and
    H slots, or a pair (table_E, table_H).
    """
    nmodes = len(basis.modes)
    if isinstance(table, (tuple, list)):
        te, th = table
    else:
        te = th = table
    e_block = _convolution_block(te, basis.modes)
    h_block = e_block if th is te else _convolution_block(th, basis.modes)
    return _interleave(e_block, h_block, nmodes)


def assemble_gram(w: MaterialWeights, basis: FiberBasis) -> np.ndarray:
    """Gram matrix of the (eps, mu)-weighted inner product (hermitian PD)."""
    b = assemble_multiplier((w.eps_hat, w.mu_hat), basis)
    return 0.5 * (b + b.conj().T)


def weight_multiplier(w: MaterialWeights, basis: FiberBasis) -> np.ndarray:
    """W = diag(eps^-1, mu^-1) as a convolution matrix (symbol evaluation)."""
    return assemble_multiplier((w.inv_eps_hat, w.inv_mu_hat), basis)


def check_definiteness(b: np.ndarray) -> None:
    """Raise IndefiniteGramError unless b admits a Cholesky factorization."""
    try:
        scipy.linalg.cholesky(b, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise IndefiniteGramError(
            "Gram matrix is not positive definite at this truncation"
        ) from exc


def fiber_problem(k, w: MaterialWeights, basis: FiberBasis,
                  gram: np.ndarray = None) -> FiberProblem:
    """Assemble (A(k), B); pass a precomputed ``gram`` to reuse B across k."""
    if gram is None:
        gram = assemble_gram(w, basis)
        check_definiteness(gram)
    return FiberProblem(a=assemble_rot(k, basis), b=gram, k=np.asarray(k, float))


# ---------------------------------------------------------------------------
# lattice translations e^{+i gamma . y}
# ---------------------------------------------------------------------------

def shift_matrix(gamma_coord, basis: FiberBasis) -> np.ndarray:
    """Matrix of multiplication by e^{+i gamma . y}: mode gamma' -> gamma' + gamma.

    A partial isometry at finite truncation: modes shifted outside the set
    are annihilated.
    """
    gamma_coord = np.asarray(gamma_coord, int)
    imap = basis.modes.index_map()
    n = basis.n
    t = np.zeros((n, n), dtype=complex)
    for m, c in enumerate(basis.modes.coords):
        target = imap.get(tuple(c + gamma_coord))
        if target is not None:
            t[basis.block(target), basis.block(m)] = np.eye(6)
    return t


def surviving_modes(gamma_coord, basis: FiberBasis) -> np.ndarray:
    """Boolean mask of modes m with gamma_m + gamma still inside the set."""
    gamma_coord = np.asarray(gamma_coord, int)
    imap = basis.modes.index_map()
    return np.array([tuple(c + gamma_coord) in imap for c in basis.modes.coords])


def translate_conjugate(x, gamma_coord, basis: FiberBasis):
    """Conjugate a matrix (or shift a vector) by e^{+i gamma . y}.

    For a matrix X returns T X T^dagger, for a vector T x, where T is the
    index shift gamma' -> gamma' + gamma.  Returns (result, dropped) with
    ``dropped`` the number of modes pushed outside the truncation.
    """
    t = shift_matrix(gamma_coord, basis)
    dropped = len(basis.modes) - int(np.count_nonzero(surviving_modes(gamma_coord, basis)))
    x = np.asarray(x)
    if x.ndim == 1:
        return t @ x, dropped
    return t @ x @ t.conj().T, dropped


def interior_entry_mask(gamma_coord, basis: FiberBasis) -> np.ndarray:
    """N x N boolean mask of entries unaffected by truncation in a shift test.

    Entry blocks (m, m') of T X(k) T^dagger reproduce X(k) exactly when
    both gamma_m - gamma and gamma_m' - gamma stay inside the mode set.
    """
    back = surviving_modes(-np.asarray(gamma_coord, int), basis)
    per_component = np.repeat(back, 6)
    return np.outer(per_component, per_component)
