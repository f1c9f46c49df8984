"""Operator-valued Weyl symbols of the slowly modulated Maxwell operator.

Symbols are evaluated pointwise at macroscopic position r and momentum k
as finite matrices over the plane-wave basis; no quantization is performed.
The composition identities are matrix identities here: with one factor
independent of k and the other affine in k the Moyal expansion terminates
after the first-order term, and that term is assembled from analytic
modulation gradients and the constant k-derivative blocks of the curl.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .material import MaterialWeights, ModulationPair
from .planewave import (FiberBasis, assemble_rot, cross_matrix, interior_entry_mask,
                        rot_k_derivative_blocks, translate_conjugate, weight_multiplier)


@dataclass
class SymbolPoint:
    r: np.ndarray
    k: np.ndarray
    lam: float

    def __post_init__(self):
        self.r = np.asarray(self.r, float)
        self.k = np.asarray(self.k, float)
        if self.lam < 0:
            raise ValueError("semiclassical parameter must be non-negative")


@dataclass
class SymbolMatrix:
    m0: np.ndarray
    m1: np.ndarray
    lam: float

    @property
    def value(self) -> np.ndarray:
        return self.m0 + self.lam * self.m1


def scalar_block_diag(a: complex, b: complex, basis: FiberBasis) -> np.ndarray:
    """diag(a I3, b I3) repeated per mode."""
    return np.diag(np.tile([a, a, a, b, b, b], len(basis.modes)).astype(complex))


def block_repeat(e_h_block: np.ndarray, basis: FiberBasis) -> np.ndarray:
    """A constant 6x6 block repeated along the mode diagonal."""
    n = len(basis.modes)
    out = np.zeros((6 * n, 6 * n), dtype=complex)
    for m in range(n):
        out[6 * m:6 * m + 6, 6 * m:6 * m + 6] = e_h_block
    return out


def _offdiag_cross(upper_vec, lower_vec) -> np.ndarray:
    """6x6 block [[0, (upper)^x], [(lower)^x, 0]]."""
    blk = np.zeros((6, 6), dtype=complex)
    blk[:3, 3:] = cross_matrix(upper_vec)
    blk[3:, :3] = cross_matrix(lower_vec)
    return blk


def eval_symbol_physical(p: SymbolPoint, w: MaterialWeights, m: ModulationPair,
                         basis: FiberBasis, w_mat: np.ndarray = None) -> SymbolMatrix:
    """Leading and first-order symbol in the physical representation.

    m0 scales the E/H blocks of W Rot(k) by the squared modulations at r;
    m1 is k-independent and built from tau grad(tau) cross-product blocks.
    """
    if w_mat is None:
        w_mat = weight_multiplier(w, basis)
    te, tm, ge, gm = (m.tau_eps.value(p.r), m.tau_mu.value(p.r),
                      m.tau_eps.grad(p.r), m.tau_mu.grad(p.r))
    d2 = scalar_block_diag(te**2, tm**2, basis)
    m0 = d2 @ (w_mat @ assemble_rot(p.k, basis))
    m1 = w_mat @ block_repeat(_offdiag_cross(-1j * te * ge, 1j * tm * gm), basis)
    return SymbolMatrix(m0=m0, m1=m1, lam=p.lam)


def eval_symbol_rescaled(p: SymbolPoint, w: MaterialWeights, m: ModulationPair,
                         basis: FiberBasis, w_mat: np.ndarray = None) -> SymbolMatrix:
    """Symbol after conjugation with the modulation square roots.

    m0 = tau_eps tau_mu W Rot(k); m1 carries only the gradient of
    log(tau_eps / tau_mu), so it vanishes when the two modulations agree.
    """
    if w_mat is None:
        w_mat = weight_multiplier(w, basis)
    te, tm, ge, gm = (m.tau_eps.value(p.r), m.tau_mu.value(p.r),
                      m.tau_eps.grad(p.r), m.tau_mu.grad(p.r))
    tau = te * tm
    if tau <= 0:
        raise ValueError("modulation product must stay positive")
    log_ratio_grad = ge / te - gm / tm
    m0 = tau * (w_mat @ assemble_rot(p.k, basis))
    half = 0.5j * log_ratio_grad
    m1 = -tau * (w_mat @ block_repeat(_offdiag_cross(half, half), basis))
    return SymbolMatrix(m0=m0, m1=m1, lam=p.lam)


# ---------------------------------------------------------------------------
# symbol fields for Moyal composition
# ---------------------------------------------------------------------------

@dataclass
class RField:
    """k-independent matrix symbol with analytic r-derivatives."""

    value: callable        # r -> (N, N)
    grad: callable         # r -> list of three (N, N)
    hess: callable = None  # r -> (3, 3) nested list of (N, N)


@dataclass
class KField:
    """k-affine matrix symbol: value(k) = value(0) + sum_j k_j derivs[j]."""

    value: callable
    derivs: list


def s_power_field(m: ModulationPair, power: int, basis: FiberBasis) -> RField:
    """The modulation scaling matrix S(r)^power, S = diag(1/tau_eps, 1/tau_mu)."""

    def val(r):
        return scalar_block_diag(m.tau_eps.value(r) ** (-power),
                                 m.tau_mu.value(r) ** (-power), basis)

    def grad(r):
        te, tm = m.tau_eps.value(r), m.tau_mu.value(r)
        ge, gm = m.tau_eps.grad(r), m.tau_mu.grad(r)
        return [scalar_block_diag(-power * te ** (-power - 1) * ge[j],
                                  -power * tm ** (-power - 1) * gm[j], basis)
                for j in range(3)]

    def hess(r):
        te, tm = m.tau_eps.value(r), m.tau_mu.value(r)
        ge, gm = m.tau_eps.grad(r), m.tau_mu.grad(r)
        he, hm = m.tau_eps.hess(r), m.tau_mu.hess(r)
        out = []
        for i in range(3):
            row = []
            for j in range(3):
                de = (-power * (-power - 1) * te ** (-power - 2) * ge[i] * ge[j]
                      - power * te ** (-power - 1) * he[i, j])
                dm = (-power * (-power - 1) * tm ** (-power - 2) * gm[i] * gm[j]
                      - power * tm ** (-power - 1) * hm[i, j])
                row.append(scalar_block_diag(de, dm, basis))
            out.append(row)
        return out

    return RField(value=val, grad=grad, hess=hess)


def mper_k_field(w: MaterialWeights, basis: FiberBasis,
                 w_mat: np.ndarray = None) -> KField:
    """The periodic fiber symbol W Rot(k) as a k-affine matrix field."""
    if w_mat is None:
        w_mat = weight_multiplier(w, basis)
    derivs = [w_mat @ a for a in rot_k_derivative_blocks(basis)]

    def val(k):
        return w_mat @ assemble_rot(k, basis)

    return KField(value=val, derivs=derivs)


def _check_k_affine(g: KField, rng_seed: int = 7) -> None:
    """Probe that g.value is affine in k with the claimed derivative blocks."""
    rng = np.random.default_rng(rng_seed)
    k0 = rng.standard_normal(3)
    k1 = rng.standard_normal(3)
    lhs = g.value(k1) - g.value(k0)
    rhs = sum((k1[j] - k0[j]) * g.derivs[j] for j in range(3))
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1.0)
    if np.abs(lhs - rhs).max() > 1e-10 * scale:
        raise ValueError(
            "moyal composition requires a k-affine second factor; "
            "the expansion would not terminate"
        )


def moyal_two_term(f: RField, g: KField, p: SymbolPoint) -> SymbolMatrix:
    """(f sharp g)(r, k) for k-independent f and k-affine g.

    Exactly f(r) g(k) + lambda (i/2) sum_j d_{r_j} f . d_{k_j} g; the
    series terminates because every higher term carries a second
    k-derivative of g.
    """
    _check_k_affine(g)
    m0 = f.value(p.r) @ g.value(p.k)
    df = f.grad(p.r)
    m1 = 0.5j * sum(df[j] @ g.derivs[j] for j in range(3))
    return SymbolMatrix(m0=m0, m1=m1, lam=p.lam)


def moyal_second_order(f: RField, g: KField, p: SymbolPoint) -> np.ndarray:
    """The formal second-order Moyal term, assembled without shortcuts.

    For k-independent f every surviving contribution contracts a second
    k-derivative of g, which vanishes for an affine field; the honest
    assembly below therefore returns an exact zero matrix.
    """
    _check_k_affine(g)
    n = g.derivs[0].shape[0]
    d2g_kk = np.zeros((n, n), dtype=complex)   # second k-derivatives of affine g
    hf = f.hess(p.r)
    out = np.zeros((n, n), dtype=complex)
    for i in range(3):
        for j in range(3):
            out += -(1.0 / 8.0) * (hf[i][j] @ d2g_kk)
    return out


def moyal_sandwich(f: RField, g: KField, h: RField, p: SymbolPoint) -> SymbolMatrix:
    """(f sharp g sharp h)(r, k) through first order in lambda.

    With f, h k-independent and g k-affine the two-sided composition also
    terminates: m1 = (i/2) sum_j (d_j f . G_j . h - f . G_j . d_j h).
    """
    _check_k_affine(g)
    fr, hr = f.value(p.r), h.value(p.r)
    df, dh = f.grad(p.r), h.grad(p.r)
    m0 = fr @ g.value(p.k) @ hr
    m1 = 0.5j * sum(df[j] @ g.derivs[j] @ hr - fr @ g.derivs[j] @ dh[j]
                    for j in range(3))
    return SymbolMatrix(m0=m0, m1=m1, lam=p.lam)


def symbol_equivariance_check(sym, r, k, gamma_coord, basis: FiberBasis) -> float:
    """Residual of sym(r, k - gamma) = T(gamma) sym(r, k) T(gamma)^dagger.

    ``sym`` is a closure (r, k) -> N x N matrix.  Boundary modes pushed out
    of the truncation by the index shift are excluded, so the residual
    measures only the identity itself.
    """
    gamma_coord = np.asarray(gamma_coord, int)
    gamma = gamma_coord.astype(float) @ basis.modes.dual.basis
    lhs = sym(r, np.asarray(k, float) - gamma)
    rhs, _dropped = translate_conjugate(sym(r, k), gamma_coord, basis)
    mask = interior_entry_mask(gamma_coord, basis)
    if not mask.any():
        return 0.0
    return float(np.abs((lhs - rhs)[mask]).max())
