"""Discrete 1-d and space-time fields, Fourier multipliers and the retarded
Duhamel integral.

Conventions
-----------
The unitary Fourier transform is used throughout,

    u^(xi) = (2*pi)^(-1/2) * integral u(x) exp(-i x xi) dx,

so Plancherel holds without constants.  A grid covers x in [-L, L) with N
uniformly spaced points; the dual frequencies are xi_k = k * pi / L for
k = -N/2 .. N/2 - 1.  With these choices the discrete transform pair is
exactly unitary up to the quadrature weights dx and dxi, and the discrete
Parseval identity is exact.

Two grid flavours exist: ``quadrature`` grids treat the samples as point
values of smooth rapidly decaying functions on the line (all estimate
probes), ``periodic-fft`` grids treat them as a periodic field (the
solver).  The transform machinery is identical; the tag documents intent
and gates a few operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)

PHYSICAL = "physical"
FREQUENCY = "frequency"
MIXED = "mixed"


class LayoutError(ValueError):
    """Field is in the wrong layout for the requested operation."""


class GridError(ValueError):
    """Invalid grid parameters or mismatched grids."""


class MultiplierError(ValueError):
    """Invalid multiplier, e.g. a singular Riesz symbol on the zero mode."""


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [-L, L) with N modes; dual frequencies k * pi / L."""

    half_length: float
    n_modes: int
    representation: str = "quadrature"

    def __post_init__(self):
        if self.half_length <= 0:
            raise GridError("half_length must be positive")
        if self.n_modes < 8 or self.n_modes % 2 != 0:
            raise GridError("n_modes must be even and >= 8")
        if self.representation not in ("quadrature", "periodic-fft"):
            raise GridError(f"unknown representation {self.representation!r}")

    @property
    def dx(self):
        return 2.0 * self.half_length / self.n_modes

    @property
    def dxi(self):
        return np.pi / self.half_length

    @property
    def x(self):
        return -self.half_length + self.dx * np.arange(self.n_modes)

    @property
    def xi(self):
        return self.dxi * (np.arange(self.n_modes) - self.n_modes // 2)

    @property
    def zero_mode_index(self):
        return self.n_modes // 2


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Product of a spatial grid and a uniform time window [t_lo, t_hi)."""

    space: Grid1D
    n_times: int
    t_lo: float
    t_hi: float

    def __post_init__(self):
        if self.n_times < 8:
            raise GridError("n_times must be >= 8")
        if self.t_hi <= self.t_lo:
            raise GridError("time window must have t_hi > t_lo")

    @property
    def dt(self):
        return (self.t_hi - self.t_lo) / self.n_times

    @property
    def t(self):
        return self.t_lo + self.dt * np.arange(self.n_times)

    @property
    def dtau(self):
        return 2.0 * np.pi / (self.t_hi - self.t_lo)

    @property
    def tau(self):
        return self.dtau * (np.arange(self.n_times) - self.n_times // 2)


def symmetric_grid(half_length, n_modes, representation="quadrature"):
    return Grid1D(half_length, n_modes, representation)


def spacetime_grid(space, n_times, t_half):
    """Symmetric time window [-t_half, t_half)."""
    return SpaceTimeGrid(space, n_times, -t_half, t_half)


# ---------------------------------------------------------------------------
# centred discrete transforms

def _forward_1d(values, step, axis=-1):
    # centred DFT: both sample and frequency index run over [-n/2, n/2)
    out = np.fft.fftshift(
        np.fft.fft(np.fft.ifftshift(values, axes=axis), axis=axis), axes=axis
    )
    return out * (step / SQRT_2PI)


def _inverse_1d(values, step, n, axis=-1):
    out = np.fft.fftshift(
        np.fft.ifft(np.fft.ifftshift(values, axes=axis), axis=axis), axes=axis
    )
    return out * (n * step / SQRT_2PI)


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class SpectralField:
    """A 1-d field, stored either as physical samples or frequency coeffs."""

    grid: Grid1D
    values: np.ndarray
    layout: str = FREQUENCY
    real_flag: bool = False

    def __post_init__(self):
        if self.layout not in (PHYSICAL, FREQUENCY):
            raise LayoutError(f"bad layout {self.layout!r}")
        if self.values.shape != (self.grid.n_modes,):
            raise GridError("coefficient array does not match grid")
        object.__setattr__(self, "values", np.asarray(self.values, complex))

    def with_values(self, values):
        return replace(self, values=np.asarray(values, complex))

    @property
    def coeffs(self):
        if self.layout != FREQUENCY:
            raise LayoutError("field is not in frequency layout")
        return self.values


@dataclass(frozen=True)
class SpaceTimeField:
    """Complex samples on a space-time grid.

    Layouts: ``physical`` (x, t), ``frequency`` (xi, tau), ``mixed`` (xi, t).
    The first array axis is always the spatial one.
    """

    grid: SpaceTimeGrid
    values: np.ndarray
    layout: str = MIXED

    def __post_init__(self):
        if self.layout not in (PHYSICAL, FREQUENCY, MIXED):
            raise LayoutError(f"bad layout {self.layout!r}")
        expected = (self.grid.space.n_modes, self.grid.n_times)
        if self.values.shape != expected:
            raise GridError(f"array shape {self.values.shape} != grid {expected}")
        object.__setattr__(self, "values", np.asarray(self.values, complex))

    def with_values(self, values, layout=None):
        return replace(self, values=np.asarray(values, complex),
                       layout=self.layout if layout is None else layout)


# ---------------------------------------------------------------------------
# layout conversions


def _time_mid(grid):
    return 0.5 * (grid.t_lo + grid.t_hi)


def _forward_time(vals, grid):
    out = _forward_1d(vals, grid.dt, axis=1)
    mid = _time_mid(grid)
    if mid != 0.0:
        # centred DFT transforms with respect to t - t_mid; restore true t
        out = out * np.exp(-1j * mid * grid.tau)[None, :]
    return out


def _inverse_time(vals, grid):
    mid = _time_mid(grid)
    if mid != 0.0:
        vals = vals * np.exp(1j * mid * grid.tau)[None, :]
    return _inverse_1d(vals, grid.dtau, grid.n_times, axis=1)


def to_frequency(f):
    """Hat map: physical -> frequency (1-d), or (x,t)/(xi,t) -> (xi,tau)."""
    if isinstance(f, SpectralField):
        if f.layout != PHYSICAL:
            raise LayoutError("to_frequency expects a physical-layout field")
        return replace(f, values=_forward_1d(f.values, f.grid.dx), layout=FREQUENCY)
    if f.layout == FREQUENCY:
        raise LayoutError("field already in frequency layout")
    vals = f.values
    if f.layout == PHYSICAL:
        vals = _forward_1d(vals, f.grid.space.dx, axis=0)
    return f.with_values(_forward_time(vals, f.grid), FREQUENCY)


def to_physical(f):
    if isinstance(f, SpectralField):
        if f.layout != FREQUENCY:
            raise LayoutError("to_physical expects a frequency-layout field")
        vals = _inverse_1d(f.values, f.grid.dxi, f.grid.n_modes)
        return replace(f, values=vals, layout=PHYSICAL)
    if f.layout == PHYSICAL:
        raise LayoutError("field already in physical layout")
    if f.layout == FREQUENCY:
        f = to_mixed(f)
    vals = _inverse_1d(f.values, f.grid.space.dxi, f.grid.space.n_modes, axis=0)
    return f.with_values(vals, PHYSICAL)


def to_mixed(f):
    """(xi, t) layout from either physical or frequency layout."""
    if f.layout == MIXED:
        return f
    if f.layout == PHYSICAL:
        vals = _forward_1d(f.values, f.grid.space.dx, axis=0)
        return f.with_values(vals, MIXED)
    return f.with_values(_inverse_time(f.values, f.grid), MIXED)


# ---------------------------------------------------------------------------
# multipliers


@dataclass(frozen=True)
class MultiplierSpec:
    """Fourier multiplier: bessel(s), riesz(s), airy(t) or lambda(b)."""

    kind: str
    parameter: float

    def __post_init__(self):
        if self.kind not in ("bessel", "riesz", "airy", "lambda"):
            raise MultiplierError(f"unknown multiplier kind {self.kind!r}")


def japanese_bracket(x):
    return np.sqrt(1.0 + np.asarray(x, float) ** 2)


def bessel_symbol(xi, s):
    return japanese_bracket(xi) ** s


def riesz_symbol(xi, s, zero_mode="zero"):
    """|xi|^s; the zero mode is set to 0 for s > 0 and must be absent for s < 0."""
    xi = np.asarray(xi, float)
    out = np.empty_like(xi)
    nz = xi != 0
    out[nz] = np.abs(xi[nz]) ** s
    if s >= 0:
        out[~nz] = 0.0
    else:
        if zero_mode != "zero":
            raise MultiplierError("riesz(s<0) needs an explicit zero-mode policy")
        out[~nz] = 0.0
    return out


def airy_symbol(xi, t):
    return np.exp(1j * t * np.asarray(xi, float) ** 3)


def apply_multiplier(f, spec):
    """Pointwise symbol multiplication in the appropriate layout.

    bessel/riesz act on the spatial frequency axis (frequency or mixed
    layout), airy(t) acts on the spatial frequency axis at a fixed time,
    lambda(b) weights by <tau - xi^3>^b and needs the full (xi, tau) layout.
    """
    if spec.kind == "lambda":
        if not isinstance(f, SpaceTimeField) or f.layout != FREQUENCY:
            raise LayoutError("lambda(b) needs a frequency-layout space-time field")
        xi = f.grid.space.xi[:, None]
        tau = f.grid.tau[None, :]
        sym = japanese_bracket(tau - xi ** 3) ** spec.parameter
        return f.with_values(f.values * sym)

    if isinstance(f, SpectralField):
        if f.layout != FREQUENCY:
            raise LayoutError("multiplier needs frequency layout")
        grid = f.grid
        zero_slice = f.values[grid.zero_mode_index]
        sym = _space_symbol(grid.xi, spec, zero_slice)
        return f.with_values(f.values * sym)

    if f.layout not in (FREQUENCY, MIXED):
        raise LayoutError("multiplier needs frequency or mixed layout")
    grid = f.grid.space
    zero_slice = f.values[grid.zero_mode_index]
    sym = _space_symbol(grid.xi, spec, zero_slice)
    return f.with_values(f.values * sym[:, None])


def _space_symbol(xi, spec, zero_mode_values):
    if spec.kind == "bessel":
        return bessel_symbol(xi, spec.parameter)
    if spec.kind == "riesz":
        s = spec.parameter
        if s < 0 and np.max(np.abs(zero_mode_values)) > 1e-13:
            raise MultiplierError("riesz(s<0) applied to a field with populated zero mode")
        return riesz_symbol(xi, s)
    if spec.kind == "airy":
        return airy_symbol(xi, spec.parameter)
    raise MultiplierError(spec.kind)


def bessel(f, s):
    return apply_multiplier(f, MultiplierSpec("bessel", s))


def riesz(f, s):
    return apply_multiplier(f, MultiplierSpec("riesz", s))


def airy(f, t):
    return apply_multiplier(f, MultiplierSpec("airy", t))


def lam(f, b):
    return apply_multiplier(f, MultiplierSpec("lambda", b))


def airy_flow(f, sign=+1):
    """Apply U_phi(t) slice-by-slice on a mixed-layout space-time field.

    ``sign=+1`` gives U(t) (each slice multiplied by exp(i t xi^3)),
    ``sign=-1`` gives U(-t).
    """
    if f.layout != MIXED:
        raise LayoutError("airy_flow needs the mixed (xi, t) layout")
    xi = f.grid.space.xi[:, None]
    t = f.grid.t[None, :]
    return f.with_values(f.values * np.exp(1j * sign * t * xi ** 3))


def free_wave(u0, st_grid):
    """Mixed-layout lift t -> U_phi(t) u0 of a frequency-layout datum."""
    if u0.layout != FREQUENCY:
        raise LayoutError("free_wave expects a frequency-layout datum")
    if u0.grid != st_grid.space:
        raise GridError("datum grid does not match the space-time grid")
    vals = np.repeat(u0.values[:, None], st_grid.n_times, axis=1)
    lift = SpaceTimeField(st_grid, vals, MIXED)
    return airy_flow(lift, +1)


def multiply_time_profile(f, profile):
    """Multiply a mixed- or physical-layout field by a function of t."""
    if f.layout == FREQUENCY:
        raise LayoutError("time profile multiplication needs t on an axis")
    w = np.asarray(profile(f.grid.t), complex)
    return f.with_values(f.values * w[None, :])


# ---------------------------------------------------------------------------
# retarded Duhamel integral


def duhamel_integral(F):
    """U_phi *_R F: v(t) = int_0^t U_phi(t - t') F(t') dt'.

    ``F`` must be a mixed-layout field whose time grid contains t = 0
    exactly; the quadrature is composite trapezoid on the stored grid and
    v(0) = 0 holds exactly.
    """
    if F.layout != MIXED:
        raise LayoutError("duhamel_integral needs the mixed (xi, t) layout")
    g = F.grid
    t = g.t
    izero = np.argmin(np.abs(t))
    if abs(t[izero]) > 1e-12 * max(1.0, abs(g.t_hi)):
        raise GridError("time grid must contain t = 0 for the Duhamel integral")
    xi = g.space.xi[:, None]
    integrand = F.values * np.exp(-1j * t[None, :] * xi ** 3)
    # cumulative trapezoid from the left edge, then re-base at t = 0
    steps = 0.5 * (integrand[:, 1:] + integrand[:, :-1]) * g.dt
    cum = np.concatenate([np.zeros((g.space.n_modes, 1), complex),
                          np.cumsum(steps, axis=1)], axis=1)
    cum = cum - cum[:, izero:izero + 1]
    vals = cum * np.exp(1j * t[None, :] * xi ** 3)
    return F.with_values(vals)


# ---------------------------------------------------------------------------
# smooth time cutoff


def _mollifier_edge(x):
    """Smooth step: 0 for x <= 0, 1 for x >= 1, C-infinity in between."""
    x = np.asarray(x, float)
    def h(y):
        out = np.zeros_like(y)
        pos = y > 0
        out[pos] = np.exp(-1.0 / y[pos])
        return out
    num = h(x)
    return num / (num + h(1.0 - x))


def cutoff(t):
    """The canonical psi: equal to 1 on [-1, 1], supported in (-2, 2)."""
    t = np.abs(np.asarray(t, float))
    return _mollifier_edge(2.0 - t)


def cutoff_scaled(t, delta):
    """psi_delta(t) = psi(t / delta)."""
    return cutoff(np.asarray(t, float) / delta)
