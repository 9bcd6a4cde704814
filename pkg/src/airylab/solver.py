"""Constructive side of the wellposedness argument: Picard iteration on the
cut-off integral equation for the modified KdV equation

    u_t + u_xxx = (u^3)_x,    u(0) = u_0,

an independent integrating-factor reference integrator, conservation
diagnostics, the exact kink residual check, and the data-to-solution
Lipschitz probe.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import spectral as sp
from .norms import ParameterError, fl_norm, scale_exponent, xrsb_norm
from .spectral import (FREQUENCY, MIXED, PHYSICAL, Grid1D, SpaceTimeField,
                       SpectralField, cutoff, cutoff_scaled, duhamel_integral,
                       free_wave, spacetime_grid, to_frequency, to_mixed,
                       to_physical)


class DivergenceError(RuntimeError):
    """Picard iteration failed to contract; try a smaller delta."""


class ResolutionError(RuntimeError):
    """Aliasing check failed: the nonlinearity leaks past the dealias band."""


class InstabilityError(RuntimeError):
    """Reference integration blew up."""


class RealityError(ValueError):
    """A field expected to be real carries a complex residue."""


ALPHA = 3  # cubic nonlinearity


@dataclass(frozen=True)
class PicardConfig:
    """Window, cutoffs and norm parameters for the contraction argument."""

    delta: float
    r: float = 2.0
    s: float = 0.25
    b: float = 0.55
    b_prime: float = -0.4
    max_iterations: int = 40
    tolerance: float = 1e-10
    n_times: int = 1024
    constant_c: float = 1.0  # measured estimate constant (probe surrogate)
    nonlinear: bool = True
    enforce_smallness: bool = True

    def __post_init__(self):
        r, s, b, bp = (float(self.r), float(self.s), float(self.b),
                       float(self.b_prime))
        if not 0.0 < self.delta <= 1.0:
            raise ParameterError(f"delta = {self.delta} outside (0, 1]")
        if not (4.0 / 3.0 < r <= 2.0):
            raise ParameterError(f"r = {r} outside (4/3, 2]")
        # exact rational comparison so the critical pair (3/2, 1/6) passes
        s_crit = scale_exponent(Fraction(r).limit_denominator(10 ** 6))
        if not Fraction(s).limit_denominator(10 ** 6) >= s_crit:
            raise ParameterError(
                f"s = {s} below the critical exponent {float(s_crit)}")
        if not b > 1.0 / r:
            raise ParameterError(f"b = {b} must exceed 1/r = {1.0 / r}")
        if not (b - 1.0 < bp <= 0.0):
            raise ParameterError(f"b' = {bp} outside (b - 1, 0] = ({b - 1.0}, 0]")
        if not 1.0 - b + bp > 0.0:
            raise ParameterError(f"1 - b + b' = {1.0 - b + bp} must be positive")


@dataclass(frozen=True)
class SolveResult:
    field: SpaceTimeField  # mixed layout on [-2 delta, 2 delta]
    distances: tuple  # X-norm of consecutive differences
    contraction_factors: tuple
    residual: float
    converged: bool
    iterations: int
    config: PicardConfig


def smallness_delta(u0_norm, config):
    """Largest admissible delta: delta^{1-b+b'} <= 1/(4 c R^{alpha-1})."""
    c = config.constant_c
    R = 2.0 * c * u0_norm
    if R == 0.0:
        return 1.0
    gamma = 1.0 - float(config.b) + float(config.b_prime)
    # log space: the bound overflows a float for small c or R
    log_bound = -(np.log(4.0) + np.log(c) + (ALPHA - 1) * np.log(R)) / gamma
    return float(np.exp(min(0.0, log_bound)))


def _dealias_mask(grid):
    # 2/3 rule: the cubic product of modes below the cut stays below Nyquist
    k = np.arange(grid.n_modes) - grid.zero_mode_index
    return np.abs(k) <= grid.n_modes // 3


def _cubed(mixed_vals, grid, mask):
    """Dealiased pseudospectral cube of a mixed-layout value array."""
    vals = mixed_vals * mask[:, None]
    phys = sp._inverse_1d(vals, grid.dxi, grid.n_modes, axis=0)
    cubed = phys ** 3
    out = sp._forward_1d(cubed, grid.dx, axis=0)
    return out * mask[:, None]


def picard_solve(u0, config):
    """Iterate u -> psi U u0 + psi_delta U*_R d_x(u^3) to its fixed point."""
    if u0.layout != FREQUENCY:
        raise ParameterError("picard_solve expects a frequency-layout datum")
    grid = u0.grid
    phys0 = to_physical(u0)
    if np.max(np.abs(phys0.values.imag)) > 1e-10 * (np.max(np.abs(phys0.values)) + 1e-300):
        raise RealityError("datum is not real")
    delta = config.delta
    u0_norm = fl_norm(u0, (config.r, config.s))
    if config.enforce_smallness and config.nonlinear and delta > smallness_delta(u0_norm, config) * (1 + 1e-12):
        raise ParameterError(
            f"delta = {delta} violates the smallness relation "
            f"delta^(1-b+b') <= 1/(4 c R^2); largest admissible is "
            f"{smallness_delta(u0_norm, config):.4g}")
    g = spacetime_grid(grid, config.n_times, 2.0 * delta)
    psi = cutoff(g.t)
    psi_d = cutoff_scaled(g.t, delta)
    mask = _dealias_mask(grid)
    if np.any(~mask & (np.abs(u0.values) > 1e-10 * np.max(np.abs(u0.values) + 1e-300))):
        raise ResolutionError("datum has mass beyond the 2/3 dealias band")
    linear = free_wave(u0, g)
    linear = linear.with_values(linear.values * psi[None, :])
    norm_params = (config.r, config.s, config.b)

    u = linear
    distances = []
    factors = []
    converged = False
    bad_steps = 0
    for it in range(config.max_iterations):
        if config.nonlinear:
            nl_hat = _cubed(u.values, grid, mask) * (1j * grid.xi)[:, None]
            duh = duhamel_integral(SpaceTimeField(g, nl_hat, MIXED))
            new_vals = linear.values + psi_d[None, :] * duh.values
        else:
            new_vals = linear.values
        new = SpaceTimeField(g, new_vals, MIXED)
        diff = to_frequency(new.with_values(new.values - u.values))
        d = xrsb_norm(diff, norm_params)
        distances.append(d)
        if len(distances) >= 2 and distances[-2] > 0:
            factor = d / distances[-2]
            factors.append(factor)
            bad_steps = bad_steps + 1 if factor >= 1.0 else 0
            if bad_steps >= 3:
                raise DivergenceError(
                    f"no contraction for 3 consecutive steps (last factor "
                    f"{factor:.3f}); reduce delta below {delta}")
        u = new
        if d < config.tolerance:
            converged = True
            break
    residual = _fixed_point_residual(u, linear, psi_d, grid, g, mask,
                                     config, norm_params)
    return SolveResult(field=u, distances=tuple(distances),
                       contraction_factors=tuple(factors), residual=residual,
                       converged=converged, iterations=len(distances),
                       config=config)


def measure_contraction_constant(grid, config, n_samples=3, seed=0,
                                 amplitude=0.05, safety=2.0):
    """Surrogate for the constant in the smallness relation.

    Measures || psi_delta U*_R d_x((psi U u0)^3) ||_{X^r_{s,b}} against
    delta^{1-b+b'} ||u0||^3 on small random data: the composite of the
    inhomogeneous-operator gain and the trilinear estimate, which is
    exactly what the ball argument consumes.  Returns max ratio x safety.
    """
    rng = np.random.default_rng(seed)
    g = spacetime_grid(grid, config.n_times, 2.0 * config.delta)
    psi = cutoff(g.t)
    psi_d = cutoff_scaled(g.t, config.delta)
    mask = _dealias_mask(grid)
    gamma = 1.0 - float(config.b) + float(config.b_prime)
    worst = 0.0
    for _ in range(n_samples):
        prof = np.zeros(grid.n_modes, complex)
        for _ in range(3):
            c = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
            aa = rng.normal() + 1j * rng.normal()
            prof += aa * np.exp(-((grid.xi - c) / 0.5) ** 2)
        sym = np.conj(np.roll(prof[::-1], 1))
        sym[0] = prof[0] = 0.0
        u0 = SpectralField(grid, amplitude * 0.5 * (prof + sym), FREQUENCY)
        lin = free_wave(u0, g)
        lin_vals = lin.values * psi[None, :]
        nl_hat = _cubed(lin_vals, grid, mask) * (1j * grid.xi)[:, None]
        duh = duhamel_integral(SpaceTimeField(g, nl_hat, MIXED))
        out = SpaceTimeField(g, psi_d[None, :] * duh.values, MIXED)
        lhs = xrsb_norm(to_frequency(out), (config.r, config.s, config.b))
        rhs = config.delta ** gamma * fl_norm(u0, (config.r, config.s)) ** 3
        if rhs > 0:
            worst = max(worst, lhs / rhs)
    return safety * worst


def _fixed_point_residual(u, linear, psi_d, grid, g, mask, config, norm_params):
    if config.nonlinear:
        nl_hat = _cubed(u.values, grid, mask) * (1j * grid.xi)[:, None]
        duh = duhamel_integral(SpaceTimeField(g, nl_hat, MIXED))
        lam_u = linear.values + psi_d[None, :] * duh.values
    else:
        lam_u = linear.values
    diff = to_frequency(u.with_values(u.values - lam_u))
    return xrsb_norm(diff, norm_params)


def solution_at(result, t):
    """Frequency-layout spatial slice of a solve result at grid time t."""
    g = result.field.grid
    idx = int(np.argmin(np.abs(g.t - t)))
    if abs(g.t[idx] - t) > 1e-12 * max(1.0, abs(t)):
        raise ParameterError(f"t = {t} is not on the stored time grid")
    return SpectralField(g.space, result.field.values[:, idx].copy(), FREQUENCY)


# ---------------------------------------------------------------------------
# independent reference integrator (Lawson-type integrating-factor RK4)


def reference_integrate(u0, t_end, dt, sample_times=(), nonlinear=True,
                        blowup_factor=1e3):
    """March u_t + u_xxx = (u^3)_x with fourth-order steps.

    The linear part is handled exactly by the integrating factor
    exp(-i t xi^3); only the dealiased nonlinearity is stepped explicitly.
    Returns (times, fields) with fields frequency-layout snapshots at the
    requested sample times (always including t_end).
    """
    if u0.layout != FREQUENCY:
        raise ParameterError("reference_integrate expects a frequency-layout datum")
    grid = u0.grid
    mask = _dealias_mask(grid)
    active = np.abs(u0.values) > 1e-12 * (np.max(np.abs(u0.values)) + 1e-300)
    xi_active = np.max(np.abs(grid.xi[active])) if np.any(active) else 0.0
    if dt * xi_active ** 3 > 2.0:
        raise ResolutionError(
            f"dt = {dt} too coarse for the data band: dt * xi_max^3 = "
            f"{dt * xi_active ** 3:.2f} > 2 degrades the nonlinear phase coupling")
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ParameterError("t_end must be an integer number of steps")
    xi = grid.xi
    sup0 = np.max(np.abs(to_physical(u0).values))

    def rhs(uhat, t):
        if not nonlinear:
            return np.zeros_like(uhat)
        vals = uhat * mask
        phys = sp._inverse_1d(vals, grid.dxi, grid.n_modes)
        out = sp._forward_1d(phys ** 3, grid.dx) * mask
        return 1j * xi * out

    wanted = sorted(set(list(sample_times) + [t_end]))
    snaps = []
    uhat = u0.values.copy()
    t = 0.0
    phase_half = np.exp(1j * xi ** 3 * dt / 2.0)
    phase_full = phase_half * phase_half
    next_snap = 0
    for step in range(n_steps + 1):
        while next_snap < len(wanted) and abs(t - wanted[next_snap]) < dt / 2.0:
            snaps.append((t, SpectralField(grid, uhat.copy(), FREQUENCY)))
            next_snap += 1
        if step == n_steps:
            break
        # classical RK4 on v = exp(-i t xi^3) u, written in the u frame
        k1 = rhs(uhat, t)
        k2 = rhs(phase_half * (uhat + 0.5 * dt * k1), t + dt / 2.0)
        k3 = rhs(phase_half * uhat + 0.5 * dt * k2, t + dt / 2.0)
        k4 = rhs(phase_full * uhat + dt * phase_half * k3, t + dt)
        uhat = (phase_full * uhat
                + dt / 6.0 * (phase_full * k1 + 2.0 * phase_half * (k2 + k3) + k4))
        t += dt
        if (step + 1) % 16 == 0 or step == n_steps - 1:
            sup = np.max(np.abs(sp._inverse_1d(uhat, grid.dxi, grid.n_modes)))
            if sup0 > 0 and sup > blowup_factor * sup0:
                raise InstabilityError(
                    f"sup norm grew by {sup / sup0:.1e} at t = {t:.4g}")
    times = np.array([s[0] for s in snaps])
    return times, [s[1] for s in snaps]


# ---------------------------------------------------------------------------
# diagnostics


def conserved_quantities(u):
    """(mass, L^2, Hamiltonian) of a real spatial field.

    mass = int u, l2 = int u^2, H = int (u_x^2 / 2 + u^4 / 4).
    """
    if u.layout == PHYSICAL:
        phys = u
        freq = to_frequency(u)
    else:
        freq = u
        phys = to_physical(u)
    scale = np.max(np.abs(phys.values)) + 1e-300
    if np.max(np.abs(phys.values.imag)) > 1e-10 * scale:
        raise RealityError("conserved quantities need a real field")
    v = phys.values.real
    dx = u.grid.dx
    ux_hat = freq.values * 1j * u.grid.xi
    ux = sp._inverse_1d(ux_hat, u.grid.dxi, u.grid.n_modes).real
    mass = dx * np.sum(v)
    l2 = dx * np.sum(v ** 2)
    ham = dx * np.sum(0.5 * ux ** 2 + 0.25 * v ** 4)
    return float(mass), float(l2), float(ham)


def kink_profile(x, t, b):
    """Travelling kink sqrt(2) b tanh(b(x + 2 b^2 t)) of the equation."""
    return np.sqrt(2.0) * b * np.tanh(b * (x + 2.0 * b ** 2 * t))


def kink_residual(x, t, b):
    """Pointwise u_t + u_xxx - (u^3)_x for the kink, via analytic derivatives.

    With z = b(x + 2 b^2 t), a = sqrt(2) b and T = tanh z:
      u_t   = 2 a b^3 (1 - T^2)
      u_xxx = a b^3 (6 T^2 - 2)(1 - T^2) ... d^3/dz^3 tanh = -2(1 - T^2)(1 - 3 T^2)
      (u^3)_x = 3 a^3 b T^2 (1 - T^2)
    and the amplitude matching a^2 = 2 b^2 cancels everything.
    """
    a = np.sqrt(2.0) * b
    z = b * (np.asarray(x) + 2.0 * b ** 2 * t)
    T = np.tanh(z)
    sech2 = 1.0 - T ** 2
    u_t = a * (2.0 * b ** 2) * b * sech2
    u_xxx = a * b ** 3 * (-2.0) * sech2 * (1.0 - 3.0 * T ** 2)
    cube_x = 3.0 * a ** 3 * b * T ** 2 * sech2
    return u_t + u_xxx - cube_x


def lipschitz_probe(u0, eps_list, config, direction=None, seed=0,
                    t_frac=0.9):
    """Paired solves: quotient of solution distance to data distance.

    For each eps the perturbed datum is u0 + eps * w with a fixed real
    band-limited direction w; the quotient is
    sup_{0 <= t <= t_frac * delta} ||u(t) - v(t)|| / ||u0 - v0|| in the
    data norm.  eps = 0 is rejected (zero denominator).
    """
    grid = u0.grid
    if direction is None:
        rng = np.random.default_rng(seed)
        prof = np.zeros(grid.n_modes, complex)
        xi = grid.xi
        for _ in range(3):
            c = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
            aa = rng.normal() + 1j * rng.normal()
            prof += aa * np.exp(-((xi - c) / 0.5) ** 2)
        sym = np.conj(np.roll(prof[::-1], 1))
        sym[0] = 0.0
        prof[0] = 0.0
        vals = 0.5 * (prof + sym)
        direction = SpectralField(grid, vals, FREQUENCY)
    base = picard_solve(u0, config)
    g = base.field.grid
    t_sel = (g.t >= 0.0) & (g.t <= t_frac * config.delta)
    out = {}
    for eps in eps_list:
        if eps == 0.0:
            raise ParameterError("eps = 0 gives a zero data distance")
        v0 = u0.with_values(u0.values + eps * direction.values)
        denom = fl_norm(u0.with_values(u0.values - v0.values),
                        (config.r, config.s))
        try:
            pert = picard_solve(v0, config)
        except (DivergenceError, ParameterError) as exc:
            out[eps] = ("failed", str(exc))
            continue
        diff = base.field.values - pert.field.values
        rc = float(1.0 / (1.0 - 1.0 / float(config.r))) if float(config.r) != 1.0 else np.inf
        w = sp.japanese_bracket(grid.xi) ** float(config.s)
        per_t = (np.sum(grid.dxi * (w[:, None] * np.abs(diff)) ** rc,
                        axis=0)) ** (1.0 / rc)
        out[eps] = float(np.max(per_t[t_sel]) / denom)
    return out
