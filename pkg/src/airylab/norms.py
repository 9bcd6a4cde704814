"""The norm zoo: weighted-L^{r'} data norms, restriction norms on space-time
fields, mixed L^p_t(H^{sigma,q}) norms, and the exponent bookkeeping.

All discrete integrals use the same uniform step weights as the transforms
(dxi, dtau, dx, dt), so Plancherel-type identities hold to machine
precision at r = 2.  ``r' = infinity`` (the r = 1 modification) is exposed
as a sup over grid samples but is untested against any estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .spectral import (FREQUENCY, MIXED, PHYSICAL, GridError, LayoutError,
                       SpaceTimeField, SpectralField, bessel, japanese_bracket,
                       riesz, to_mixed, to_physical)


class ParameterError(ValueError):
    """Norm or estimate parameters outside their admissible range."""


def conjugate_exponent(r):
    """r' with 1/r + 1/r' = 1; exact for Fraction input, inf for r = 1."""
    if isinstance(r, Fraction):
        if r == 1:
            return np.inf
        return r / (r - 1)
    r = float(r)
    if r == 1.0:
        return np.inf
    return r / (r - 1.0)


@dataclass(frozen=True)
class NormParams:
    """(r, s, b) for the data and restriction norms; r in (1, 2] typically."""

    r: object  # float or Fraction
    s: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if float(self.r) <= 1.0:
            raise ParameterError("r must exceed 1 (r = 1 is the sup-norm edge case)")

    @property
    def r_conj(self):
        return conjugate_exponent(self.r)


@dataclass(frozen=True)
class MixedNormParams:
    """(p, q, sigma) for L^p_t(H^{sigma,q}) norms; homogeneous picks Riesz."""

    p: float
    q: float
    sigma: float = 0.0
    homogeneous: bool = True

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ParameterError("p and q must be >= 1")


def fl_norm(u, params):
    """Data norm: ( sum dxi <xi>^{s r'} |u^(xi)|^{r'} )^{1/r'}."""
    if isinstance(params, tuple):
        params = NormParams(*params)
    if u.layout != FREQUENCY:
        raise LayoutError("fl_norm needs a frequency-layout field")
    rc = params.r_conj
    w = japanese_bracket(u.grid.xi) ** params.s
    if np.isinf(rc):
        return float(np.max(w * np.abs(u.values)))
    rc = float(rc)
    return float((np.sum(u.grid.dxi * (w * np.abs(u.values)) ** rc)) ** (1.0 / rc))


def hrsb_norm(F, params):
    """Space-time norm with plain <tau>^b weight (no dispersion recentering)."""
    if isinstance(params, tuple):
        params = NormParams(*params)
    if F.layout != FREQUENCY:
        raise LayoutError("hrsb_norm needs the (xi, tau) layout")
    g = F.grid
    w = (japanese_bracket(g.space.xi) ** params.s)[:, None] \
        * (japanese_bracket(g.tau) ** params.b)[None, :]
    rc = params.r_conj
    if np.isinf(rc):
        return float(np.max(w * np.abs(F.values)))
    rc = float(rc)
    step = g.space.dxi * g.dtau
    return float((np.sum(step * (w * np.abs(F.values)) ** rc)) ** (1.0 / rc))


def xrsb_norm(F, params):
    """Restriction norm: weight <xi>^s <tau - xi^3>^b in the (xi, tau) layout."""
    if isinstance(params, tuple):
        params = NormParams(*params)
    if F.layout != FREQUENCY:
        raise LayoutError("xrsb_norm needs the (xi, tau) layout")
    g = F.grid
    xi = g.space.xi[:, None]
    tau = g.tau[None, :]
    w = (japanese_bracket(xi) ** params.s) * (japanese_bracket(tau - xi ** 3) ** params.b)
    rc = params.r_conj
    if np.isinf(rc):
        return float(np.max(w * np.abs(F.values)))
    rc = float(rc)
    step = g.space.dxi * g.dtau
    return float((np.sum(step * (w * np.abs(F.values)) ** rc)) ** (1.0 / rc))


def spatial_lq_norm(values_x, dx, q):
    a = np.abs(values_x)
    if np.isinf(q):
        return np.max(a, axis=0)
    return (np.sum(dx * a ** float(q), axis=0)) ** (1.0 / float(q))


def mixed_norm(F, params):
    """( int dt || I^sigma u(t) ||_{L^q_x}^p )^{1/p}; trapezoid in t.

    ``F`` may be in physical or mixed layout; the sigma-derivative is applied
    as a Riesz (homogeneous) or Bessel multiplier on the frequency axis.
    """
    if isinstance(F, SpectralField):
        raise GridError("mixed_norm needs a space-time field")
    if F.layout == FREQUENCY:
        raise LayoutError("mixed_norm needs physical or mixed layout")
    work = to_mixed(F) if F.layout == PHYSICAL else F
    if params.sigma != 0.0:
        work = riesz(work, params.sigma) if params.homogeneous else bessel(work, params.sigma)
    phys = to_physical(work)
    g = F.grid
    per_t = spatial_lq_norm(phys.values, g.space.dx, params.q)
    if np.isinf(params.p):
        return float(np.max(per_t))
    p = float(params.p)
    # uniform-step sum, matching the transform weights (trapezoid on the
    # periodically extended window); exact Plancherel at p = q = 2
    return float((g.dt * np.sum(per_t ** p)) ** (1.0 / p))


def l2_xt_norm(F):
    """Plain L^2_{xt}; computable in any layout via Parseval."""
    g = F.grid
    if F.layout == FREQUENCY:
        step = g.space.dxi * g.dtau
        return float(np.sqrt(np.sum(step * np.abs(F.values) ** 2)))
    if F.layout == MIXED:
        per_t = np.sum(g.space.dxi * np.abs(F.values) ** 2, axis=0)
        return float(np.sqrt(g.dt * np.sum(per_t)))
    per_t = np.sum(g.space.dx * np.abs(F.values) ** 2, axis=0)
    return float(np.sqrt(g.dt * np.sum(per_t)))


def scale_exponent(r):
    """Critical regularity on the Fourier-Lebesgue scale, 1/2 - 1/(2r)."""
    rf = float(r)
    if not (4.0 / 3.0 < rf <= 2.0):
        raise ParameterError(f"r = {r} outside (4/3, 2]")
    if isinstance(r, Fraction):
        return Fraction(1, 2) - 1 / (2 * r)
    return 0.5 - 1.0 / (2.0 * rf)
