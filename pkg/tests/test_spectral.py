import numpy as np
import pytest

from airylab import spectral as sp


def random_real_field(grid, rng, bandlimit=0.5):
    """Smooth real field, band-limited to a fraction of the grid."""
    xi = grid.xi
    ximax = np.max(np.abs(xi))
    prof = np.zeros(grid.n_modes, complex)
    for _ in range(4):
        c = rng.uniform(0.2, bandlimit * 0.7) * ximax * rng.choice([-1, 1])
        w = rng.uniform(0.2, 0.6)
        a = rng.normal() + 1j * rng.normal()
        prof += a * np.exp(-((xi - c) ** 2) / (2 * w ** 2))
    # Hermitian symmetrise for a real field (Nyquist mode zeroed)
    sym = np.conj(np.roll(prof[::-1], 1))
    sym[0] = 0.0
    prof[0] = 0.0
    vals = 0.5 * (prof + sym)
    return sp.SpectralField(grid, vals, sp.FREQUENCY, real_flag=True)


@pytest.fixture
def grid():
    return sp.Grid1D(10.0, 128)


def test_grid_invariants():
    with pytest.raises(sp.GridError):
        sp.Grid1D(-1.0, 64)
    with pytest.raises(sp.GridError):
        sp.Grid1D(5.0, 6)
    with pytest.raises(sp.GridError):
        sp.Grid1D(5.0, 65)
    g = sp.Grid1D(8.0, 64)
    assert g.xi[g.zero_mode_index] == 0.0
    assert np.isclose(g.dxi, np.pi / 8.0)


def test_single_mode_maps_to_delta(grid):
    # e^{i xi_1 x} -> spike at mode xi_1 of height 1/dxi (quadrature delta)
    k1 = grid.zero_mode_index + 5
    xi1 = grid.xi[k1]
    u = sp.SpectralField(grid, np.exp(1j * xi1 * grid.x) / sp.SQRT_2PI, sp.PHYSICAL)
    uh = sp.to_frequency(u)
    expected = np.zeros(grid.n_modes)
    expected[k1] = 1.0 / grid.dxi
    assert np.allclose(uh.values, expected, atol=1e-9 / grid.dxi)


def test_constant_maps_to_zero_mode(grid):
    u = sp.SpectralField(grid, np.ones(grid.n_modes), sp.PHYSICAL)
    uh = sp.to_frequency(u)
    k0 = grid.zero_mode_index
    mask = np.ones(grid.n_modes, bool)
    mask[k0] = False
    assert np.all(np.abs(uh.values[mask]) < 1e-9 * np.abs(uh.values[k0]))


def test_parseval_and_roundtrip(grid):
    rng = np.random.default_rng(0)
    u = random_real_field(grid, rng)
    phys = sp.to_physical(u)
    assert np.max(np.abs(phys.values.imag)) < 1e-10 * np.max(np.abs(phys.values))
    l2_phys = np.sqrt(np.sum(grid.dx * np.abs(phys.values) ** 2))
    l2_freq = np.sqrt(np.sum(grid.dxi * np.abs(u.values) ** 2))
    assert np.isclose(l2_phys, l2_freq, rtol=1e-10)
    back = sp.to_frequency(phys)
    assert np.allclose(back.values, u.values, atol=1e-10 * np.max(np.abs(u.values)))


def test_spacetime_roundtrip():
    g = sp.spacetime_grid(sp.Grid1D(6.0, 32), 64, 3.0)
    rng = np.random.default_rng(1)
    vals = rng.normal(size=(32, 64)) + 1j * rng.normal(size=(32, 64))
    F = sp.SpaceTimeField(g, vals, sp.PHYSICAL)
    F2 = sp.to_physical(sp.to_frequency(F))
    assert np.allclose(F2.values, vals, atol=1e-10 * np.max(np.abs(vals)))
    M = sp.to_mixed(F)
    back = sp.to_physical(M)
    assert np.allclose(back.values, vals, atol=1e-10 * np.max(np.abs(vals)))


def test_offcentre_window_roundtrip():
    g = sp.SpaceTimeGrid(sp.Grid1D(6.0, 16), 32, 0.0, 2.0)
    rng = np.random.default_rng(2)
    vals = rng.normal(size=(16, 32)) + 1j * rng.normal(size=(16, 32))
    F = sp.SpaceTimeField(g, vals, sp.MIXED)
    back = sp.to_mixed(sp.to_frequency(F))
    assert np.allclose(back.values, vals, atol=1e-10 * np.max(np.abs(vals)))


def test_layout_errors(grid):
    u = sp.SpectralField(grid, np.zeros(grid.n_modes), sp.FREQUENCY)
    with pytest.raises(sp.LayoutError):
        sp.to_frequency(u)


def test_bessel_identity_and_composition(grid):
    rng = np.random.default_rng(3)
    u = random_real_field(grid, rng)
    assert np.allclose(sp.bessel(u, 0.0).values, u.values)
    ab = sp.bessel(sp.bessel(u, 0.7), -0.3)
    direct = sp.bessel(u, 0.4)
    assert np.allclose(ab.values, direct.values, rtol=1e-13)


def test_riesz_single_mode():
    grid = sp.Grid1D(8.0 * np.pi, 128)  # dxi = 1/8, so xi = 2 is on-grid
    k = grid.zero_mode_index + int(round(2.0 / grid.dxi))
    assert np.isclose(grid.xi[k], 2.0)
    vals = np.zeros(grid.n_modes, complex)
    vals[k] = 1.0
    u = sp.SpectralField(grid, vals, sp.FREQUENCY)
    out = sp.riesz(u, 1.0)
    assert np.isclose(out.values[k].real, 2.0)


def test_riesz_zero_mode_policy(grid):
    vals = np.zeros(grid.n_modes, complex)
    vals[grid.zero_mode_index] = 1.0
    u = sp.SpectralField(grid, vals, sp.FREQUENCY)
    assert np.allclose(sp.riesz(u, 0.5).values, 0.0)
    with pytest.raises(sp.MultiplierError):
        sp.riesz(u, -0.5)


def test_airy_symbol_values():
    grid = sp.Grid1D(8.0 * np.pi, 128)
    u = sp.SpectralField(grid, np.ones(grid.n_modes, complex), sp.FREQUENCY)
    assert np.allclose(sp.airy(u, 0.0).values, 1.0)
    k = grid.zero_mode_index + int(round(1.0 / grid.dxi))
    assert np.isclose(grid.xi[k], 1.0)
    out = sp.airy(u, np.pi)
    assert np.isclose(out.values[k], -1.0)


def test_airy_group_law(grid):
    rng = np.random.default_rng(4)
    u = random_real_field(grid, rng)
    two_step = sp.airy(sp.airy(u, 0.3), 0.45)
    one_step = sp.airy(u, 0.75)
    assert np.allclose(two_step.values, one_step.values, rtol=1e-12)


def test_duhamel_zero():
    g = sp.spacetime_grid(sp.Grid1D(6.0, 16), 64, 2.0)
    F = sp.SpaceTimeField(g, np.zeros((16, 64)), sp.MIXED)
    v = sp.duhamel_integral(F)
    assert np.allclose(v.values, 0.0)


def test_duhamel_group_property():
    # F(t') = U(t') g  =>  U *_R F (t) = t U(t) g
    g = sp.spacetime_grid(sp.Grid1D(6.0, 32), 256, 2.0)
    rng = np.random.default_rng(5)
    datum = random_real_field(g.space, rng)
    F = sp.free_wave(datum, g)
    v = sp.duhamel_integral(F)
    expected = F.values * g.t[None, :]
    assert np.allclose(v.values, expected, atol=1e-8 * np.max(np.abs(expected)))


def test_duhamel_single_mode_exact():
    # single mode xi, forcing e^{i omega t}: exact scalar quadrature
    grid = sp.Grid1D(6.0, 16)
    g = sp.spacetime_grid(grid, 2048, 2.0)
    k = grid.zero_mode_index + 4
    xi = grid.xi[k]
    omega = 1.3
    vals = np.zeros((16, g.n_times), complex)
    vals[k, :] = np.exp(1j * omega * g.t)
    F = sp.SpaceTimeField(g, vals, sp.MIXED)
    v = sp.duhamel_integral(F)
    d = omega - xi ** 3
    expected = np.exp(1j * g.t * xi ** 3) * (np.exp(1j * g.t * d) - 1.0) / (1j * d)
    assert np.allclose(v.values[k], expected, atol=1e-5)
    izero = np.argmin(np.abs(g.t))
    assert v.values[k, izero] == 0.0


def test_duhamel_linearity():
    g = sp.spacetime_grid(sp.Grid1D(6.0, 16), 128, 2.0)
    rng = np.random.default_rng(6)
    A = rng.normal(size=(16, 128)) + 1j * rng.normal(size=(16, 128))
    B = rng.normal(size=(16, 128)) + 1j * rng.normal(size=(16, 128))
    FA = sp.SpaceTimeField(g, A, sp.MIXED)
    FB = sp.SpaceTimeField(g, B, sp.MIXED)
    FC = sp.SpaceTimeField(g, 2.0 * A - 0.5j * B, sp.MIXED)
    vc = sp.duhamel_integral(FC)
    combo = 2.0 * sp.duhamel_integral(FA).values - 0.5j * sp.duhamel_integral(FB).values
    assert np.allclose(vc.values, combo, atol=1e-12 * np.max(np.abs(combo)))


def test_cutoff_shape():
    t = np.linspace(-3, 3, 601)
    psi = sp.cutoff(t)
    assert np.all(psi[np.abs(t) <= 1.0] == 1.0)
    assert np.all(psi[np.abs(t) >= 2.0] == 0.0)
    assert np.all((psi >= 0) & (psi <= 1))
    assert np.allclose(sp.cutoff_scaled(t, 0.5), sp.cutoff(2 * t))
