import numpy as np
import pytest
from fractions import Fraction

from airylab import spectral as sp
from airylab import norms
from airylab.norms import (MixedNormParams, NormParams, ParameterError,
                           conjugate_exponent, fl_norm, hrsb_norm, l2_xt_norm,
                           mixed_norm, scale_exponent, xrsb_norm)

from test_spectral import random_real_field


def test_conjugate_exponent_exact():
    p = NormParams(Fraction(3, 2), 0.0, 0.0)
    assert p.r_conj == Fraction(3, 1)
    assert 1 / Fraction(3, 2) + 1 / p.r_conj == 1
    assert conjugate_exponent(2.0) == 2.0
    assert np.isinf(conjugate_exponent(1))


def test_norm_params_range():
    with pytest.raises(ParameterError):
        NormParams(1.0, 0.0, 0.0)
    with pytest.raises(ParameterError):
        NormParams(0.5)


def test_fl_norm_indicator():
    grid = sp.Grid1D(16.0 * np.pi, 128)  # dxi = 1/16
    vals = np.where((grid.xi >= 0.0) & (grid.xi < 1.0), 1.0, 0.0).astype(complex)
    u = sp.SpectralField(grid, vals, sp.FREQUENCY)
    assert np.isclose(fl_norm(u, (2.0, 0.0)), 1.0, rtol=1e-12)


def test_fl_norm_plancherel():
    grid = sp.Grid1D(10.0, 128)
    rng = np.random.default_rng(10)
    u = random_real_field(grid, rng)
    phys = sp.to_physical(u)
    l2x = np.sqrt(np.sum(grid.dx * np.abs(phys.values) ** 2))
    assert np.isclose(fl_norm(u, (2.0, 0.0)), l2x, rtol=1e-10)


def test_fl_norm_gaussian():
    grid = sp.Grid1D(12.0, 256)
    u = sp.SpectralField(grid, np.exp(-grid.xi ** 2).astype(complex), sp.FREQUENCY)
    assert np.isclose(fl_norm(u, (2.0, 0.0)), (np.pi / 2.0) ** 0.25, rtol=1e-10)


def test_fl_norm_airy_isometry():
    grid = sp.Grid1D(10.0, 128)
    rng = np.random.default_rng(11)
    u = random_real_field(grid, rng)
    for (r, s) in [(2.0, 0.25), (1.5, 0.5), (1.8, -0.3)]:
        a = fl_norm(u, (r, s))
        b = fl_norm(sp.airy(u, 0.7), (r, s))
        assert np.isclose(a, b, rtol=1e-12)


def test_norm_axioms_random():
    grid = sp.Grid1D(10.0, 64)
    g = sp.spacetime_grid(grid, 64, 4.0)
    rng = np.random.default_rng(12)
    for _ in range(20):
        A = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
        B = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
        FA = sp.SpaceTimeField(g, A, sp.FREQUENCY)
        FB = sp.SpaceTimeField(g, B, sp.FREQUENCY)
        FS = sp.SpaceTimeField(g, A + B, sp.FREQUENCY)
        lamda = rng.normal() * 2.0
        Fl = sp.SpaceTimeField(g, lamda * A, sp.FREQUENCY)
        p = NormParams(rng.uniform(1.3, 2.0), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.7))
        na, nb, ns = xrsb_norm(FA, p), xrsb_norm(FB, p), xrsb_norm(FS, p)
        assert np.isclose(xrsb_norm(Fl, p), abs(lamda) * na, rtol=1e-10)
        assert ns <= na + nb + 1e-10 * (na + nb)


def test_xrsb_separable_product():
    grid = sp.Grid1D(10.0, 64)
    g = sp.spacetime_grid(grid, 128, 6.0)
    rng = np.random.default_rng(13)
    uhat = np.exp(-(grid.xi - 1.0) ** 2) + 0.3j * np.exp(-(grid.xi + 2.0) ** 2)
    ghat = np.exp(-0.5 * g.tau ** 2) * np.exp(0.2j * g.tau)
    F = sp.SpaceTimeField(g, np.outer(uhat, ghat), sp.FREQUENCY)
    for r in (2.0, 1.5):
        norm_F = xrsb_norm(F, (r, 0.0, 0.0))
        rc = conjugate_exponent(r)
        nu = (np.sum(grid.dxi * np.abs(uhat) ** rc)) ** (1 / rc)
        ng = (np.sum(g.dtau * np.abs(ghat) ** rc)) ** (1 / rc)
        assert np.isclose(norm_F, nu * ng, rtol=1e-12)


def test_xrsb_zero_field():
    g = sp.spacetime_grid(sp.Grid1D(8.0, 32), 32, 2.0)
    F = sp.SpaceTimeField(g, np.zeros((32, 32)), sp.FREQUENCY)
    assert xrsb_norm(F, (2.0, 0.5, 0.5)) == 0.0


def airy_lift_field(g, rng=None):
    """Frequency-layout field concentrated around tau = xi^3."""
    xi = g.space.xi[:, None]
    tau = g.tau[None, :]
    prof_xi = np.exp(-2.0 * (np.abs(xi) - 1.2) ** 2)
    prof_tau = np.exp(-((tau - xi ** 3 - 0.5) ** 2) / (2 * 1.5 ** 2))
    vals = prof_xi * prof_tau * np.exp(0.3j * tau)
    return sp.SpaceTimeField(g, vals, sp.FREQUENCY)


def test_airy_flow_lift_identity():
    # || U(-.) f ||_{H^r_{s,b}} = || f ||_{X^r_{s,b}}
    grid = sp.Grid1D(8.0, 32)
    g = sp.spacetime_grid(grid, 512, 10.0)
    F = airy_lift_field(g)
    conj = sp.to_frequency(sp.airy_flow(sp.to_mixed(F), sign=-1))
    for params in [(2.0, 0.0, 0.5), (1.5, 0.3, 0.4), (2.0, -0.2, 0.6)]:
        a = xrsb_norm(F, params)
        b = hrsb_norm(conj, params)
        assert np.isclose(a, b, rtol=1e-10), (params, a, b)


def test_tau_recentering_isometry():
    # conjugating by airy(t0) leaves the restriction norm invariant
    grid = sp.Grid1D(8.0, 32)
    g = sp.spacetime_grid(grid, 512, 10.0)
    F = airy_lift_field(g)
    mixed = sp.to_mixed(F)
    xi = grid.xi[:, None]
    shifted = mixed.with_values(mixed.values * np.exp(1j * 0.8 * xi ** 3))
    a = xrsb_norm(F, (1.7, 0.2, 0.45))
    b = xrsb_norm(sp.to_frequency(shifted), (1.7, 0.2, 0.45))
    assert np.isclose(a, b, rtol=1e-10)


def test_mixed_norm_plancherel():
    grid = sp.Grid1D(8.0, 32)
    g = sp.spacetime_grid(grid, 128, 5.0)
    rng = np.random.default_rng(14)
    vals = rng.normal(size=(32, 128)) + 1j * rng.normal(size=(32, 128))
    F = sp.SpaceTimeField(g, vals, sp.PHYSICAL)
    mn = mixed_norm(F, MixedNormParams(2.0, 2.0, 0.0))
    Fh = sp.to_frequency(F)
    l2 = l2_xt_norm(Fh)
    assert np.isclose(mn, l2, rtol=1e-10)


def test_mixed_norm_separable():
    grid = sp.Grid1D(10.0, 128)
    g = sp.spacetime_grid(grid, 128, 4.0)
    ux = np.exp(-grid.x ** 2)
    chit = np.exp(-2.0 * g.t ** 2)
    F = sp.SpaceTimeField(g, np.outer(ux, chit), sp.PHYSICAL)
    p, q = 3.0, 5.0
    mn = mixed_norm(F, MixedNormParams(p, q, 0.0))
    nu = (np.sum(grid.dx * np.abs(ux) ** q)) ** (1 / q)
    nchi = (g.dt * np.sum(np.abs(chit) ** p)) ** (1 / p)
    assert np.isclose(mn, nu * nchi, rtol=1e-10)


def test_mixed_norm_gaussian_vs_quadrature_oracle():
    grid = sp.Grid1D(10.0, 128)
    g = sp.spacetime_grid(grid, 128, 4.0)
    F = sp.SpaceTimeField(g, np.outer(np.exp(-grid.x ** 2), np.exp(-g.t ** 2)),
                          sp.PHYSICAL)
    mn = mixed_norm(F, MixedNormParams(4.0, 4.0, 0.0))
    # dense quadrature oracle at double resolution
    x = np.linspace(-10, 10, 4001)
    t = np.linspace(-4, 4, 2001)
    integrand = np.exp(-4.0 * x[:, None] ** 2) * np.exp(-4.0 * t[None, :] ** 2)
    oracle = np.trapezoid(np.trapezoid(integrand, x, axis=0), t) ** 0.25
    assert np.isclose(mn, oracle, rtol=1e-8)


def test_mixed_norm_homogeneous_zero_mode_guard():
    grid = sp.Grid1D(8.0, 32)
    g = sp.spacetime_grid(grid, 32, 2.0)
    vals = np.ones((32, 32), complex)  # constant in x populates the zero mode
    F = sp.SpaceTimeField(g, vals, sp.MIXED)
    with pytest.raises(sp.MultiplierError):
        mixed_norm(F, MixedNormParams(2.0, 2.0, -0.25))


def test_scale_exponent():
    assert scale_exponent(2.0) == 0.25
    assert np.isclose(scale_exponent(1.5), 1.0 / 6.0)
    assert scale_exponent(Fraction(3, 2)) == Fraction(1, 6)
    with pytest.raises(ParameterError):
        scale_exponent(4.0 / 3.0)
    with pytest.raises(ParameterError):
        scale_exponent(2.5)
