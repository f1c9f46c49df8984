import numpy as np
import pytest

from pce import material as mat
from pce import planewave as pw
from pce import symbol as sy


def bump_pair():
    return mat.ModulationPair(
        tau_eps=mat.ModulationField(family="gaussian", alpha=0.3,
                                    center=[0.4, -0.2, 0.1], sigma=1.3),
        tau_mu=mat.ModulationField(family="trig", alpha=0.25, q=[0.7, 0.3, -0.5]),
    )


def trivial_pair():
    return mat.ModulationPair(tau_eps=mat.ModulationField(family="constant"),
                              tau_mu=mat.ModulationField(family="constant"))


def point(r=(0.3, -0.8, 1.1), k=(0.4, 0.1, -0.3), lam=0.2):
    return sy.SymbolPoint(r=np.array(r), k=np.array(k), lam=lam)


def test_trivial_modulation_gives_fiber_symbol(basis_2pi, sphere_weights_2pi):
    w_mat = sy.weight_multiplier(sphere_weights_2pi, basis_2pi)
    p = point()
    s = sy.eval_symbol_physical(p, sphere_weights_2pi, trivial_pair(), basis_2pi,
                                w_mat=w_mat)
    mper = w_mat @ pw.assemble_rot(p.k, basis_2pi)
    assert np.abs(s.m1).max() == 0.0
    assert np.abs(s.value - mper).max() <= 1e-13 * np.abs(mper).max()
    s2 = sy.eval_symbol_rescaled(p, sphere_weights_2pi, trivial_pair(), basis_2pi,
                                 w_mat=w_mat)
    assert np.abs(s2.value - mper).max() <= 1e-13 * np.abs(mper).max()


def test_lambda_zero_drops_first_order(basis_2pi, sphere_weights_2pi):
    m = bump_pair()
    p = sy.SymbolPoint(r=np.array([0.5, 0.1, -0.3]), k=np.array([0.2, 0.0, 0.1]),
                       lam=0.0)
    s = sy.eval_symbol_physical(p, sphere_weights_2pi, m, basis_2pi)
    assert np.array_equal(s.value, s.m0)
    te, tm = m.tau_eps.value(p.r), m.tau_mu.value(p.r)
    d2 = sy.scalar_block_diag(te**2, tm**2, basis_2pi)
    w_mat = sy.weight_multiplier(sphere_weights_2pi, basis_2pi)
    expected = d2 @ (w_mat @ pw.assemble_rot(p.k, basis_2pi))
    assert np.abs(s.m0 - expected).max() <= 1e-13 * np.abs(expected).max()


def test_first_order_vanishes_at_bump_peak(basis_2pi, sphere_weights_2pi):
    center = np.array([0.4, -0.2, 0.1])
    m = mat.ModulationPair(
        tau_eps=mat.ModulationField(family="gaussian", alpha=0.3, center=center,
                                    sigma=1.3),
        tau_mu=mat.ModulationField(family="constant"))
    p = sy.SymbolPoint(r=center, k=np.array([0.3, 0, 0]), lam=0.4)
    s = sy.eval_symbol_physical(p, sphere_weights_2pi, m, basis_2pi)
    assert np.abs(s.m1).max() <= 1e-14


def test_rescaled_first_order_vanishes_for_equal_modulations(basis_2pi,
                                                             sphere_weights_2pi):
    fld = mat.ModulationField(family="trig", alpha=0.2, q=[0.3, -0.4, 0.6])
    m = mat.ModulationPair(tau_eps=fld, tau_mu=fld)
    for r in (np.zeros(3), np.array([0.7, 0.1, -0.9]), np.array([-1.5, 2.0, 0.3])):
        p = sy.SymbolPoint(r=r, k=np.array([0.1, 0.2, 0.3]), lam=0.3)
        s = sy.eval_symbol_rescaled(p, sphere_weights_2pi, m, basis_2pi)
        assert np.abs(s.m1).max() <= 1e-14


def test_moyal_lambda_zero_is_pointwise_product(basis_2pi, sphere_weights_2pi):
    m = bump_pair()
    g = sy.mper_k_field(sphere_weights_2pi, basis_2pi)
    f = sy.s_power_field(m, -2, basis_2pi)
    p = sy.SymbolPoint(r=np.array([0.2, 0.5, -0.1]), k=np.array([0.3, -0.2, 0.4]),
                       lam=0.0)
    s = sy.moyal_two_term(f, g, p)
    assert np.abs(s.value - f.value(p.r) @ g.value(p.k)).max() == 0.0


def test_moyal_matches_physical_symbol(basis_2pi, sphere_weights_2pi):
    m = bump_pair()
    w_mat = sy.weight_multiplier(sphere_weights_2pi, basis_2pi)
    g = sy.mper_k_field(sphere_weights_2pi, basis_2pi, w_mat=w_mat)
    f = sy.s_power_field(m, -2, basis_2pi)
    rng = np.random.default_rng(9)
    for _ in range(4):
        p = sy.SymbolPoint(r=rng.uniform(-2, 2, 3),
                           k=rng.uniform(-0.5, 0.5, 3) @ basis_2pi.modes.dual.basis,
                           lam=rng.uniform(0, 0.5))
        phys = sy.eval_symbol_physical(p, sphere_weights_2pi, m, basis_2pi,
                                       w_mat=w_mat)
        s = sy.moyal_two_term(f, g, p)
        ref = max(np.abs(phys.value).max(), 1.0)
        assert np.abs(s.value - phys.value).max() <= 1e-8 * ref


def test_sandwich_matches_rescaled_symbol(basis_2pi, sphere_weights_2pi):
    m = bump_pair()
    w_mat = sy.weight_multiplier(sphere_weights_2pi, basis_2pi)
    g = sy.mper_k_field(sphere_weights_2pi, basis_2pi, w_mat=w_mat)
    s_inv = sy.s_power_field(m, -1, basis_2pi)
    rng = np.random.default_rng(13)
    for _ in range(4):
        p = sy.SymbolPoint(r=rng.uniform(-2, 2, 3),
                           k=rng.uniform(-0.5, 0.5, 3) @ basis_2pi.modes.dual.basis,
                           lam=rng.uniform(0, 0.5))
        resc = sy.eval_symbol_rescaled(p, sphere_weights_2pi, m, basis_2pi,
                                       w_mat=w_mat)
        s = sy.moyal_sandwich(s_inv, g, s_inv, p)
        ref = max(np.abs(resc.value).max(), 1.0)
        assert np.abs(s.value - resc.value).max() <= 1e-8 * ref


def test_second_order_term_is_exactly_zero(basis_2pi, sphere_weights_2pi):
    m = bump_pair()
    g = sy.mper_k_field(sphere_weights_2pi, basis_2pi)
    f = sy.s_power_field(m, -2, basis_2pi)
    p = point()
    assert np.abs(sy.moyal_second_order(f, g, p)).max() == 0.0


def test_moyal_refuses_k_nonlinear_factor(basis_2pi, sphere_weights_2pi):
    m = bump_pair()
    f = sy.s_power_field(m, -2, basis_2pi)
    n = basis_2pi.n
    quadratic = sy.KField(
        value=lambda k: float(k @ k) * np.eye(n, dtype=complex),
        derivs=[np.zeros((n, n), dtype=complex) for _ in range(3)])
    with pytest.raises(ValueError, match="affine"):
        sy.moyal_two_term(f, quadratic, point())


def test_representation_consistency(basis_2pi, sphere_weights_2pi):
    # rescaled = S . physical . S^-1 plus the lambda commutator correction
    m = bump_pair()
    w_mat = sy.weight_multiplier(sphere_weights_2pi, basis_2pi)
    s_field = sy.s_power_field(m, 1, basis_2pi)
    s_inv = sy.s_power_field(m, -1, basis_2pi)
    rng = np.random.default_rng(31)
    for _ in range(3):
        p = sy.SymbolPoint(r=rng.uniform(-1.5, 1.5, 3),
                           k=rng.uniform(-0.5, 0.5, 3) @ basis_2pi.modes.dual.basis,
                           lam=rng.uniform(0, 0.5))
        phys = sy.eval_symbol_physical(p, sphere_weights_2pi, m, basis_2pi,
                                       w_mat=w_mat)
        resc = sy.eval_symbol_rescaled(p, sphere_weights_2pi, m, basis_2pi,
                                       w_mat=w_mat)
        te, tm = m.tau_eps.value(p.r), m.tau_mu.value(p.r)
        d2 = sy.scalar_block_diag(te**2, tm**2, basis_2pi)
        h = [d2 @ (w_mat @ a) for a in pw.rot_k_derivative_blocks(basis_2pi)]
        sv, siv = s_field.value(p.r), s_inv.value(p.r)
        ds, dsi = s_field.grad(p.r), s_inv.grad(p.r)
        corr = 0.5j * sum(ds[j] @ h[j] @ siv - sv @ h[j] @ dsi[j] for j in range(3))
        rhs = sv @ phys.value @ siv + p.lam * corr
        ref = max(np.abs(resc.value).max(), 1.0)
        assert np.abs(resc.value - rhs).max() <= 1e-8 * ref


def test_finite_difference_gradient_oracle(basis_2pi, sphere_weights_2pi):
    m = bump_pair()
    g = sy.mper_k_field(sphere_weights_2pi, basis_2pi)
    f = sy.s_power_field(m, -2, basis_2pi)
    h = 1e-5

    def fd_grad(r):
        out = []
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            out.append((f.value(r + e) - f.value(r - e)) / (2 * h))
        return out

    f_fd = sy.RField(value=f.value, grad=fd_grad)
    p = point()
    exact = sy.moyal_two_term(f, g, p).value
    approx = sy.moyal_two_term(f_fd, g, p).value
    assert np.abs(exact - approx).max() <= 1e-7 * np.abs(exact).max()


def test_equivariance_zero_shift(basis_2pi, sphere_weights_2pi):
    m = bump_pair()
    w_mat = sy.weight_multiplier(sphere_weights_2pi, basis_2pi)

    def clos(r, k):
        p = sy.SymbolPoint(r=r, k=k, lam=0.3)
        return sy.eval_symbol_physical(p, sphere_weights_2pi, m, basis_2pi,
                                       w_mat=w_mat).value

    res = sy.symbol_equivariance_check(clos, np.array([0.3, 0.1, 0.2]),
                                       np.array([0.2, -0.1, 0.4]),
                                       (0, 0, 0), basis_2pi)
    assert res == 0.0


def test_equivariance_vacuum_physical(basis_2pi):
    w = mat.vacuum_weights()
    m = bump_pair()
    w_mat = sy.weight_multiplier(w, basis_2pi)

    def clos(r, k):
        p = sy.SymbolPoint(r=r, k=k, lam=0.25)
        return sy.eval_symbol_physical(p, w, m, basis_2pi, w_mat=w_mat).value

    res = sy.symbol_equivariance_check(clos, np.array([1.2, -0.3, 0.8]),
                                       np.array([0.5, 0.2, -0.4]),
                                       (1, 0, 0), basis_2pi)
    assert res <= 1e-12


def test_equivariance_sphere_rescaled(basis_2pi, sphere_weights_2pi):
    m = bump_pair()
    w_mat = sy.weight_multiplier(sphere_weights_2pi, basis_2pi)

    def clos(r, k):
        p = sy.SymbolPoint(r=r, k=k, lam=0.25)
        return sy.eval_symbol_rescaled(p, sphere_weights_2pi, m, basis_2pi,
                                       w_mat=w_mat).value

    res = sy.symbol_equivariance_check(clos, np.array([0.4, 0.9, -0.2]),
                                       np.array([-0.3, 0.1, 0.2]),
                                       (0, 1, 0), basis_2pi)
    assert res <= 1e-10


def test_negative_lambda_rejected():
    with pytest.raises(ValueError):
        sy.SymbolPoint(r=np.zeros(3), k=np.zeros(3), lam=-0.1)
