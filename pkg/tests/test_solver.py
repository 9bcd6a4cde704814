import numpy as np
import pytest
import sympy

from airylab import solver as sv
from airylab import spectral as sp
from airylab.norms import ParameterError, fl_norm
from airylab.solver import (DivergenceError, InstabilityError, PicardConfig,
                            RealityError, ResolutionError,
                            conserved_quantities, kink_profile, kink_residual,
                            lipschitz_probe, measure_contraction_constant,
                            picard_solve, reference_integrate, smallness_delta,
                            solution_at)


def gaussian_datum(grid, amplitude):
    phys = sp.SpectralField(grid, amplitude * np.exp(-grid.x ** 2), sp.PHYSICAL)
    return sp.to_frequency(phys)


@pytest.fixture(scope="module")
def grid():
    return sp.Grid1D(20.0, 256, representation="periodic-fft")


# ---------------------------------------------------------------------------
# configuration invariants


def test_config_rejects_bad_parameters():
    with pytest.raises(ParameterError, match="delta"):
        PicardConfig(delta=0.0)
    with pytest.raises(ParameterError, match="4/3"):
        PicardConfig(delta=0.5, r=1.2)
    with pytest.raises(ParameterError, match="critical exponent"):
        PicardConfig(delta=0.5, r=2.0, s=0.1)
    with pytest.raises(ParameterError, match="1/r"):
        PicardConfig(delta=0.5, b=0.4)
    with pytest.raises(ParameterError, match="b'"):
        PicardConfig(delta=0.5, b=0.55, b_prime=0.1)
    with pytest.raises(ParameterError, match="b'"):
        PicardConfig(delta=0.5, b=0.9, b_prime=-0.2)


def test_smallness_delta_monotone():
    cfg = PicardConfig(delta=0.5)
    assert smallness_delta(0.0, cfg) == 1.0
    d_small = smallness_delta(0.1, cfg)
    d_big = smallness_delta(10.0, cfg)
    assert 0.0 < d_big < d_small <= 1.0


# ---------------------------------------------------------------------------
# Picard iteration: trivial fixed points and contraction


def test_picard_zero_datum(grid):
    u0 = sp.SpectralField(grid, np.zeros(grid.n_modes, complex), sp.FREQUENCY)
    res = picard_solve(u0, PicardConfig(delta=0.5, n_times=128))
    assert res.converged
    assert res.residual == 0.0
    assert np.all(res.field.values == 0.0)


def test_picard_linear_flow_is_fixed_point(grid):
    u0 = gaussian_datum(grid, 0.3)
    res = picard_solve(u0, PicardConfig(delta=0.5, n_times=256,
                                        nonlinear=False))
    assert res.converged
    assert res.iterations == 1
    assert res.residual < 1e-12
    slice0 = solution_at(res, 0.0)
    scale = np.max(np.abs(u0.values))
    assert np.allclose(slice0.values, u0.values, atol=1e-10 * scale)


def test_picard_contracts_on_small_data(grid):
    u0 = gaussian_datum(grid, 0.1)
    res = picard_solve(u0, PicardConfig(delta=0.5))
    assert res.converged
    assert all(f <= 0.5 for f in res.contraction_factors)
    assert res.residual < 1e-10


def test_picard_enforces_smallness(grid):
    u0 = gaussian_datum(grid, 50.0)
    with pytest.raises(ParameterError, match="smallness"):
        picard_solve(u0, PicardConfig(delta=1.0, n_times=128))


def test_picard_rejects_complex_datum(grid):
    vals = np.exp(-grid.xi ** 2).astype(complex)  # not Hermitian-symmetric
    vals[grid.zero_mode_index + 3] += 0.5j
    u0 = sp.SpectralField(grid, vals, sp.FREQUENCY)
    with pytest.raises(RealityError):
        picard_solve(u0, PicardConfig(delta=0.5, n_times=128))


def test_picard_dealias_band_guard():
    grid = sp.Grid1D(20.0, 128, representation="periodic-fft")
    u0 = gaussian_datum(grid, 3.0)  # tails past the 2/3 band at this N
    with pytest.raises(ResolutionError, match="dealias"):
        picard_solve(u0, PicardConfig(delta=0.1, n_times=64,
                                      enforce_smallness=False))


def test_picard_divergence_detected(grid):
    u0 = gaussian_datum(grid, 3.0)
    with pytest.raises(DivergenceError, match="reduce delta"):
        picard_solve(u0, PicardConfig(delta=1.0, n_times=256,
                                      max_iterations=12,
                                      enforce_smallness=False))


def test_solution_at_rejects_off_grid_time(grid):
    u0 = gaussian_datum(grid, 0.1)
    res = picard_solve(u0, PicardConfig(delta=0.5, n_times=128))
    with pytest.raises(ParameterError, match="time grid"):
        solution_at(res, 0.1234567)


def test_measured_contraction_constant_positive(grid):
    cfg = PicardConfig(delta=0.5, n_times=256)
    c = measure_contraction_constant(grid, cfg, n_samples=2)
    assert np.isfinite(c) and c > 0.0
    # with the measured constant the admissible window is still nontrivial
    assert smallness_delta(0.05, PicardConfig(delta=0.5, constant_c=c)) > 0.0


# ---------------------------------------------------------------------------
# cross-validation against the independent integrator


def test_picard_matches_reference(grid):
    u0 = gaussian_datum(grid, 0.1)
    delta = 0.5
    res = picard_solve(u0, PicardConfig(delta=delta))
    _, snaps = reference_integrate(u0, delta, delta / 512)
    diff = solution_at(res, delta).values - snaps[-1].values
    l2 = np.sqrt(np.sum(grid.dxi * np.abs(diff) ** 2))
    assert l2 < 1e-6


# ---------------------------------------------------------------------------
# reference integrator diagnostics


def test_reference_temporal_order():
    grid = sp.Grid1D(20.0, 128, representation="periodic-fft")
    u0 = gaussian_datum(grid, 0.35)
    errs = []
    for dt in (1e-3, 5e-4):
        _, coarse = reference_integrate(u0, 0.1, dt)
        _, fine = reference_integrate(u0, 0.1, dt / 8)
        errs.append(np.sqrt(np.sum(
            grid.dxi * np.abs(coarse[-1].values - fine[-1].values) ** 2)))
    factor = errs[0] / errs[1]
    assert 10.0 <= factor <= 22.0, factor


def test_reference_conserves_invariants(grid):
    u0 = gaussian_datum(grid, 0.1)
    _, snaps = reference_integrate(u0, 1.0, 1.0 / 1024, sample_times=[0.0])
    q0 = conserved_quantities(snaps[0])
    q1 = conserved_quantities(snaps[-1])
    tols = (1e-10, 1e-8, 1e-6)
    for a, b, tol in zip(q0, q1, tols):
        assert abs(a - b) / (abs(b) + 1e-300) < tol or abs(a - b) < tol


def test_reference_rejects_coarse_dt(grid):
    u0 = gaussian_datum(grid, 0.1)
    with pytest.raises(ResolutionError, match="dt"):
        reference_integrate(u0, 1.0, 0.25)


def test_reference_blowup_guard(grid):
    # a deliberately tight threshold exercises the sup-norm growth check
    u0 = gaussian_datum(grid, 0.5)
    with pytest.raises(InstabilityError, match="sup norm"):
        reference_integrate(u0, 0.5, 1e-3, blowup_factor=0.1)


# ---------------------------------------------------------------------------
# conserved quantities


def test_conserved_quantities_closed_forms():
    grid = sp.Grid1D(20.0, 128)
    zero = sp.SpectralField(grid, np.zeros(grid.n_modes), sp.PHYSICAL)
    assert conserved_quantities(zero) == (0.0, 0.0, 0.0)
    c = 0.7
    const = sp.SpectralField(grid, np.full(grid.n_modes, c), sp.PHYSICAL)
    mass, l2, ham = conserved_quantities(const)
    L = grid.half_length
    assert np.isclose(mass, 2 * L * c, rtol=1e-12)
    assert np.isclose(l2, 2 * L * c ** 2, rtol=1e-12)
    assert np.isclose(ham, L * c ** 4 / 2, rtol=1e-12)


def test_conserved_quantities_reject_complex():
    grid = sp.Grid1D(20.0, 128)
    u = sp.SpectralField(grid, np.exp(-grid.x ** 2) * (1 + 0.1j), sp.PHYSICAL)
    with pytest.raises(RealityError):
        conserved_quantities(u)


# ---------------------------------------------------------------------------
# kink ansatz


def test_kink_residual_vanishes():
    x = np.linspace(-10.0, 10.0, 2001)
    for t, b in [(0.0, 0.5), (0.37, 0.8), (-1.2, 1.3)]:
        assert np.max(np.abs(kink_residual(x, t, b))) < 1e-10


def test_kink_residual_symbolic_oracle():
    # symbolic substitution: a tanh(b(x + v t)) solves the equation exactly
    # iff a^2 = 2 b^2 and v = 2 b^2 (in the x + v t frame)
    x, t, a, b = sympy.symbols("x t a b", real=True)
    u = a * sympy.tanh(b * (x + 2 * b ** 2 * t))
    res = sympy.diff(u, t) + sympy.diff(u, x, 3) - sympy.diff(u ** 3, x)
    matched = sympy.simplify(res.subs(a, sympy.sqrt(2) * b))
    assert matched == 0
    generic = sympy.simplify(res.subs([(a, 1), (b, 1), (x, 1), (t, 0)]))
    assert generic != 0


def test_kink_profile_matches_direct_derivatives():
    # finite differences of the profile agree with the analytic residual
    b = 0.8
    x = np.linspace(-6.0, 6.0, 4001)
    dx = x[1] - x[0]
    dt = 1e-6
    u_t = (kink_profile(x, dt, b) - kink_profile(x, -dt, b)) / (2 * dt)
    u = kink_profile(x, 0.0, b)
    u_xxx = np.gradient(np.gradient(np.gradient(u, dx), dx), dx)
    cube_x = np.gradient(u ** 3, dx)
    interior = slice(10, -10)
    res = (u_t + u_xxx - cube_x)[interior]
    assert np.max(np.abs(res)) < 1e-4  # finite-difference floor


# ---------------------------------------------------------------------------
# data-to-solution continuity


def test_lipschitz_rejects_zero_eps(grid):
    u0 = gaussian_datum(grid, 0.1)
    with pytest.raises(ParameterError, match="eps"):
        lipschitz_probe(u0, [0.0], PicardConfig(delta=0.5, n_times=128))


def test_lipschitz_linear_flow_is_isometry(grid):
    u0 = gaussian_datum(grid, 0.1)
    cfg = PicardConfig(delta=0.5, n_times=256, nonlinear=False)
    out = lipschitz_probe(u0, [1e-2, 1e-3], cfg)
    for q in out.values():
        assert abs(q - 1.0) < 1e-10


def test_lipschitz_quotients_stable(grid):
    u0 = gaussian_datum(grid, 0.1)
    cfg = PicardConfig(delta=0.5, n_times=512)
    out = lipschitz_probe(u0, [1e-2, 1e-3, 1e-4], cfg)
    qs = [q for q in out.values() if not isinstance(q, tuple)]
    assert len(qs) == 3
    assert max(qs) / min(qs) < 2.0
