"""Empirical probes for the linear, bilinear and trilinear space-time
estimates of the Airy flow.

Each probe samples a random family of band-limited data or space-time
fields, computes both sides of one inequality, and reports the ratios.
Dilation sweeps re-realize the same parametric family at rescaled centers
and widths (parabolically in the time direction), which is the discrete
version of checking that the constant does not depend on the data scale.

Families are described by bump parameters, not by stored arrays: a dilated
sample is exact, not an interpolation.  The time grid is rescaled by
lambda^{-3} per dilation, so every resolution ratio (width over step) is
dilation-invariant and the sweep probes only the genuinely scale-breaking
part of the discretization, the fixed spatial grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

import numpy as np

from . import spectral as sp
from .bilinear import i_minus, lemma3_closed_form
from .norms import (MixedNormParams, NormParams, ParameterError,
                    conjugate_exponent, fl_norm, l2_xt_norm, mixed_norm,
                    scale_exponent, spatial_lq_norm, xrsb_norm)
from .spectral import (FREQUENCY, MIXED, PHYSICAL, SQRT_2PI, Grid1D,
                       SpaceTimeField, SpectralField, cutoff, cutoff_scaled,
                       duhamel_integral, free_wave, japanese_bracket,
                       spacetime_grid, to_frequency, to_mixed, to_physical)


class HypothesisError(ParameterError):
    """Probe parameters violate the hypotheses of the target estimate."""


class BandRangeError(ValueError):
    """A dilated family leaves the resolvable frequency band."""


class RefinementError(RuntimeError):
    """The resolution self-check failed: norms not grid-converged."""


class EstimateKind(Enum):
    L8_STRICHARTZ = "l8_strichartz"
    LEMMA4 = "lemma4"
    FS_AIRY = "fs_airy"
    COR3_GENERAL = "cor3_general"
    XNORM_30 = "xnorm_30"
    XNORM_31 = "xnorm_31"
    BILINEAR_L3 = "bilinear_l3"
    COR_K1 = "cor_k1"
    COR_K2 = "cor_k2"
    COR_K10 = "cor_k10"
    LEMMA2_DELTA = "lemma2_delta"
    HOMOG_5 = "homog_5"
    EMBED_4 = "embed_4"
    EMBED_52 = "embed_52"
    TRILINEAR_T2 = "trilinear_t2"


# diagnostics exponents of the trilinear estimate's interior bookkeeping
def trilinear_mu(r):
    """mu = 1/4 - 1/(3r)."""
    if isinstance(r, Fraction):
        return Fraction(1, 4) - 1 / (3 * r)
    return 0.25 - 1.0 / (3.0 * float(r))


def trilinear_sigma(s):
    """sigma = s/2 + 3/16."""
    if isinstance(s, Fraction):
        return s / 2 + Fraction(3, 16)
    return 0.5 * float(s) + 3.0 / 16.0


def _f(x):
    return float(x)


def validate_params(kind, params):
    """Check the kind's hypotheses; raise HypothesisError naming the one
    violated.  Returns a copy with derived exponents filled in."""
    p = dict(params)
    if kind == EstimateKind.L8_STRICHARTZ:
        return p
    if kind == EstimateKind.LEMMA4:
        q = _f(p["q"])
        if not (4.0 < q < np.inf):
            raise HypothesisError(f"q = {q} outside the required range 4 < q < infinity")
        p["r"] = 1.0 / (0.5 + 1.0 / q)
        return p
    if kind == EstimateKind.FS_AIRY:
        r = _f(p["r"])
        if not (4.0 / 3.0 < r <= 2.0):
            raise HypothesisError(
                f"r = {r} outside (4/3, 2]: the diagonal case needs 0 <= 1/p = 1/(3r) < 1/4")
        p["p"] = p["q"] = 3.0 * r
        return p
    if kind == EstimateKind.COR3_GENERAL:
        pp, q = _f(p["p"]), _f(p["q"])
        inv_p = 0.0 if np.isinf(pp) else 1.0 / pp
        inv_q = 1.0 / q
        cond_i = (0.0 <= inv_p <= 0.25) and (0.0 <= inv_q < 0.25)
        cond_ii = (0.25 <= inv_q) and (inv_q + inv_p < 0.5)
        cond_iii = np.isinf(pp) and q == 2.0
        if not (cond_i or cond_ii or cond_iii):
            raise HypothesisError(
                f"(p, q) = ({pp}, {q}) satisfies none of: "
                "i) 1/p <= 1/4 and 1/q < 1/4; ii) 1/4 <= 1/q and 1/q + 1/p < 1/2; "
                "iii) (p, q) = (inf, 2)")
        p["r"] = 1.0 / (2.0 * inv_p + inv_q)
        if p["r"] <= 1.0:
            raise HypothesisError(f"derived r = {p['r']} must exceed 1")
        return p
    if kind in (EstimateKind.XNORM_30, EstimateKind.XNORM_31):
        p = validate_params(EstimateKind.COR3_GENERAL, p)
        b, r = _f(p["b"]), _f(p["r"])
        if not b > 1.0 / r:
            raise HypothesisError(f"b = {b} must exceed 1/r = {1.0 / r}")
        return p
    if kind == EstimateKind.BILINEAR_L3:
        return p
    if kind in (EstimateKind.COR_K1, EstimateKind.COR_K2):
        s, b, bt = _f(p["s"]), _f(p["b"]), _f(p["b_tilde"])
        if not (b > 0.5 >= s >= 0.0):
            raise HypothesisError(f"(b, s) = ({b}, {s}) must satisfy b > 1/2 >= s >= 0")
        if not bt > 1.0 / 6.0 + 2.0 * s / 3.0:
            raise HypothesisError(
                f"b_tilde = {bt} must exceed 1/6 + 2s/3 = {1.0 / 6.0 + 2.0 * s / 3.0}")
        return p
    if kind == EstimateKind.COR_K10:
        r, sg, beta, bp = _f(p["r"]), _f(p["sigma"]), _f(p["beta"]), _f(p["b_prime"])
        if not (1.0 < r <= 2.0):
            raise HypothesisError(f"r = {r} outside (1, 2]")
        rc = float(conjugate_exponent(r))
        if not (0.0 <= sg <= 1.0 / rc < beta):
            raise HypothesisError(
                f"(sigma, beta) = ({sg}, {beta}) must satisfy 0 <= sigma <= 1/r' = "
                f"{1.0 / rc} < beta")
        if not bp < -(1.0 / rc + 2.0 * sg) / 3.0:
            raise HypothesisError(
                f"b' = {bp} must lie below -(1/3)(1/r' + 2 sigma) = "
                f"{-(1.0 / rc + 2.0 * sg) / 3.0}")
        return p
    if kind == EstimateKind.LEMMA2_DELTA:
        r, b, bp = _f(p["r"]), _f(p["b"]), _f(p["b_prime"])
        if not 1.0 < r < np.inf:
            raise HypothesisError(f"r = {r} outside (1, infinity)")
        rc = float(conjugate_exponent(r))
        if not (bp + 1.0 >= b >= 0.0 >= bp > -1.0 / rc):
            raise HypothesisError(
                f"(b, b') = ({b}, {bp}) must satisfy b' + 1 >= b >= 0 >= b' > -1/r' = "
                f"{-1.0 / rc}")
        return p
    if kind == EstimateKind.HOMOG_5:
        if _f(p["r"]) <= 1.0:
            raise HypothesisError(f"r = {p['r']} must exceed 1")
        return p
    if kind == EstimateKind.EMBED_4:
        r0, r1 = _f(p["r0"]), _f(p["r1"])
        s0, s1 = _f(p["s0"]), _f(p["s1"])
        b0, b1 = _f(p["b0"]), _f(p["b1"])
        if not r1 <= r0:
            raise HypothesisError(f"the embedding needs r1 = {r1} <= r0 = {r0}")
        if not s1 - 1.0 / r1 > s0 - 1.0 / r0:
            raise HypothesisError(
                f"the embedding needs s1 - 1/r1 = {s1 - 1.0 / r1} > s0 - 1/r0 = "
                f"{s0 - 1.0 / r0}")
        if not b1 - 1.0 / r1 > b0 - 1.0 / r0:
            raise HypothesisError(
                f"the embedding needs b1 - 1/r1 = {b1 - 1.0 / r1} > b0 - 1/r0 = "
                f"{b0 - 1.0 / r0}")
        return p
    if kind == EstimateKind.EMBED_52:
        r, b = _f(p["r"]), _f(p["b"])
        if r <= 1.0:
            raise HypothesisError(f"r = {r} must exceed 1")
        if not b > 1.0 / r:
            raise HypothesisError(f"the continuous embedding needs b = {b} > 1/r = {1.0 / r}")
        return p
    if kind == EstimateKind.TRILINEAR_T2:
        r, s, b, bp = _f(p["r"]), _f(p["s"]), _f(p["b"]), _f(p["b_prime"])
        if not (4.0 / 3.0 < r <= 2.0):
            raise HypothesisError(f"r = {r} outside the range 2 >= r > 4/3")
        # exact rational comparison: s = 1/6 at r = 3/2 is exactly critical
        # and must not fail by a last-bit float rounding
        s_crit = scale_exponent(Fraction(r).limit_denominator(10 ** 6))
        if not Fraction(s).limit_denominator(10 ** 6) >= s_crit:
            raise HypothesisError(
                f"s = {s} below the threshold s(r) = 1/2 - 1/(2r) = {float(s_crit)}")
        if not b > 1.0 / r:
            raise HypothesisError(f"b = {b} must exceed 1/r = {1.0 / r}")
        if not bp < 1.0 / (2.0 * r) - 5.0 / 8.0:
            raise HypothesisError(
                f"b' = {bp} must lie below 1/(2r) - 5/8 = {1.0 / (2.0 * r) - 5.0 / 8.0}")
        return p
    raise HypothesisError(f"unknown estimate kind {kind}")


# ---------------------------------------------------------------------------
# parametric sample families


@dataclass(frozen=True)
class BumpSpec:
    """One frequency bump: amp * profile((xi - center)/width)."""

    amp: complex
    center: float
    width: float
    profile: str = "gaussian"  # or "bump" (compactly supported)


@dataclass(frozen=True)
class LiftBumpSpec:
    """One space-time bump riding the dispersion surface: the tau profile is
    centered at xi^3 + tau_offset."""

    amp: complex
    center: float
    width: float
    tau_offset: float
    tau_width: float
    profile: str = "gaussian"
    tau_profile: str = "gaussian"


def _profile_values(z, profile):
    if profile == "gaussian":
        return np.exp(-z * z)
    if profile == "bump":
        out = np.zeros_like(z)
        inside = np.abs(z) < 1.0
        zi = z[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - zi * zi))
        return out
    raise ValueError(f"unknown profile {profile}")


def _extent_factor(profile):
    # effective support radius in units of the width parameter
    return 1.0 if profile == "bump" else 3.5


def _check_band(extent, ximax, lam):
    if extent > 0.85 * ximax:
        raise BandRangeError(
            f"dilation lambda = {lam} pushes the family to |xi| ~ {extent:.2f}, "
            f"outside the resolvable band |xi| <= {0.85 * ximax:.2f}")


def realize_datum(grid, bumps, lam=1.0):
    """Evaluate a dilated bump family on the grid; zero mode cleared."""
    vals = np.zeros(grid.n_modes, complex)
    ximax = np.max(np.abs(grid.xi))
    for b in bumps:
        _check_band(lam * (abs(b.center) + _extent_factor(b.profile) * b.width),
                    ximax, lam)
        z = (grid.xi - lam * b.center) / (lam * b.width)
        vals += b.amp * lam ** -0.5 * _profile_values(z, b.profile)
    vals[grid.zero_mode_index] = 0.0
    return SpectralField(grid, vals, FREQUENCY)


def realize_field(g, bumps, lam=1.0):
    """Evaluate a dilated lift family in the (xi, tau) layout.

    The caller is expected to pair the dilation with a time grid rescaled by
    lambda^{-3}, so the tau-direction widths stay resolved.
    """
    xi = g.space.xi[:, None]
    tau = g.tau[None, :]
    vals = np.zeros((g.space.n_modes, g.n_times), complex)
    ximax = np.max(np.abs(g.space.xi))
    lam3 = lam ** 3
    for b in bumps:
        _check_band(lam * (abs(b.center) + _extent_factor(b.profile) * b.width),
                    ximax, lam)
        zx = (xi - lam * b.center) / (lam * b.width)
        zt = (tau - xi ** 3 - lam3 * b.tau_offset) / (lam3 * b.tau_width)
        vals += (b.amp * lam ** -3.5 * _profile_values(zx, b.profile)
                 * _profile_values(zt, b.tau_profile))
    vals[g.space.zero_mode_index, :] = 0.0
    return SpaceTimeField(g, vals, FREQUENCY)


def _random_amp(rng):
    return complex(rng.normal(), rng.normal())


def random_datum_spec(rng, n_bumps=3, center_range=(0.8, 1.6),
                      width_range=(0.3, 0.6)):
    bumps = []
    for _ in range(n_bumps):
        profile = rng.choice(["gaussian", "bump"])
        width = rng.uniform(*width_range)
        c = rng.uniform(*center_range) * rng.choice([-1.0, 1.0])
        # Gaussians reach further per unit width; rein in their centers so
        # both profiles obey the same band budget
        if profile == "gaussian":
            width = min(width, 0.35)
        bumps.append(BumpSpec(_random_amp(rng), c, width, profile))
    return tuple(bumps)


def random_lift_spec(rng, n_bumps=2, center_range=(0.8, 1.6),
                     width_range=(0.3, 0.6), tau_offset_range=(-1.5, 1.5),
                     tau_width_range=(2.0, 4.0)):
    bumps = []
    for _ in range(n_bumps):
        profile = rng.choice(["gaussian", "bump"])
        width = rng.uniform(*width_range)
        if profile == "gaussian":
            width = min(width, 0.35)
        c = rng.uniform(*center_range) * rng.choice([-1.0, 1.0])
        bumps.append(LiftBumpSpec(_random_amp(rng), c, width,
                                  rng.uniform(*tau_offset_range),
                                  rng.uniform(*tau_width_range),
                                  profile, rng.choice(["gaussian", "bump"])))
    return tuple(bumps)


# ---------------------------------------------------------------------------
# fast per-time-slice bilinear application


class SliceKernel:
    """Vectorized weighted spatial convolution applied to every time slice.

    Precomputes the (k, k1) weight table W and the gather index for
    k2 = k - k1 + n0, so one application is a single einsum over
    mixed-layout value arrays of shape (n_modes, n_times).
    """

    def __init__(self, grid, weight_fn):
        n = grid.n_modes
        n0 = n // 2
        k = np.arange(n)[:, None]
        k1 = np.arange(n)[None, :]
        k2 = k - k1 + n0
        self.valid = (k2 >= 0) & (k2 < n)
        self.k2c = np.clip(k2, 0, n - 1)
        xi = grid.xi
        w = weight_fn(xi[k], xi[k1], xi[self.k2c])
        self.weights = np.where(self.valid, w, 0.0) * (grid.dxi / SQRT_2PI)
        self.grid = grid

    def apply(self, a_vals, b_vals):
        gathered = b_vals[self.k2c]  # (n, n, n_times)
        return np.einsum("kj,jt,kjt->kt", self.weights, a_vals, gathered,
                         optimize=True)


def minus_kernel(grid, s):
    return SliceKernel(grid, lambda xi, xi1, xi2: np.abs(xi1 - xi2) ** s
                       if s != 0 else np.ones_like(xi1 - xi2 + xi * 0.0))


def plus_kernel(grid, s):
    return SliceKernel(grid, lambda xi, xi1, xi2: np.abs(xi + xi2) ** s
                       if s != 0 else np.ones_like(xi1 - xi2 + xi * 0.0))


def _riesz_weight(xi, s):
    w = np.abs(xi) ** s if s != 0 else np.ones_like(xi)
    if s > 0:
        w[np.abs(xi) == 0.0] = 0.0
    return w


# ---------------------------------------------------------------------------
# probe configuration and report


@dataclass(frozen=True)
class ProbeConfig:
    kind: EstimateKind
    params: dict
    n_samples: int = 20
    seed: int = 0
    half_length: float = 48.0
    n_modes: int = 256
    n_times: int = 256
    t_half: float = 2.0
    dilations: tuple = (1.0,)
    deltas: tuple = ()
    check_resolution: bool = False


@dataclass(frozen=True)
class SampleRatio:
    sample_id: int
    lam: float
    lhs: float
    rhs: float
    ratio: float
    delta: float = 0.0
    regions: dict = None


@dataclass(frozen=True)
class EstimateReport:
    kind: EstimateKind
    params: dict
    samples: tuple
    max_ratio: float
    median_ratio: float
    dilation_spread: float
    slope: float = 0.0
    slope_residual: float = 0.0
    regions: dict = None
    diagnostics: dict = None


_DEFAULTS = {
    EstimateKind.L8_STRICHARTZ: dict(n_modes=256, half_length=48.0,
                                     n_times=256, t_half=2.0),
    EstimateKind.LEMMA4: dict(n_modes=256, half_length=48.0,
                              n_times=256, t_half=2.0),
    EstimateKind.FS_AIRY: dict(n_modes=256, half_length=48.0,
                               n_times=256, t_half=2.0),
    EstimateKind.COR3_GENERAL: dict(n_modes=256, half_length=48.0,
                                    n_times=256, t_half=2.0),
    EstimateKind.XNORM_30: dict(n_modes=128, half_length=24.0,
                                n_times=256, t_half=2.5),
    EstimateKind.XNORM_31: dict(n_modes=128, half_length=24.0,
                                n_times=256, t_half=2.5),
    EstimateKind.BILINEAR_L3: dict(n_modes=128, half_length=24.0,
                                   n_times=160, t_half=2.0),
    EstimateKind.COR_K1: dict(n_modes=96, half_length=18.0,
                              n_times=160, t_half=2.5),
    EstimateKind.COR_K2: dict(n_modes=96, half_length=18.0,
                              n_times=160, t_half=2.5),
    EstimateKind.COR_K10: dict(n_modes=96, half_length=18.0,
                               n_times=160, t_half=2.5),
    EstimateKind.LEMMA2_DELTA: dict(n_modes=64, half_length=16.0,
                                    n_times=2048, t_half=2.5,
                                    deltas=tuple(2.0 ** -k for k in range(7))),
    # |psi_hat|^{r'} has derivative kinks at the zeros of psi_hat, so the
    # tau step must be small for the shifted and unshifted quadratures to
    # agree at the identity's 1e-6 level
    EstimateKind.HOMOG_5: dict(n_modes=128, half_length=24.0,
                               n_times=8192, t_half=48.0),
    EstimateKind.EMBED_4: dict(n_modes=128, half_length=24.0,
                               n_times=256, t_half=2.5),
    EstimateKind.EMBED_52: dict(n_modes=128, half_length=24.0,
                                n_times=256, t_half=2.5),
    EstimateKind.TRILINEAR_T2: dict(n_modes=128, half_length=24.0,
                                    n_times=320, t_half=2.5),
}

# which kinds sample initial data (one-dimensional specs) vs space-time lifts
_DATUM_KINDS = {EstimateKind.L8_STRICHARTZ, EstimateKind.LEMMA4,
                EstimateKind.FS_AIRY, EstimateKind.COR3_GENERAL,
                EstimateKind.BILINEAR_L3, EstimateKind.HOMOG_5}

_ARITY = {EstimateKind.BILINEAR_L3: 2, EstimateKind.COR_K1: 2,
          EstimateKind.COR_K2: 2, EstimateKind.COR_K10: 2,
          EstimateKind.TRILINEAR_T2: 3}


def default_config(kind, params, **overrides):
    kw = dict(_DEFAULTS[kind])
    kw.update(overrides)
    return ProbeConfig(kind=kind, params=params, **kw)


def _sample_spec(kind, rng):
    arity = _ARITY.get(kind, 1)
    if kind in _DATUM_KINDS:
        if kind == EstimateKind.HOMOG_5:
            # keep |xi|^3 well inside the tau window of the fixed time grid
            return tuple(random_datum_spec(rng, center_range=(0.6, 1.1),
                                           width_range=(0.2, 0.4))
                         for _ in range(arity))
        return tuple(random_datum_spec(rng) for _ in range(arity))
    if kind == EstimateKind.TRILINEAR_T2:
        # the cubed band must stay below the dealiasing margin
        return tuple(random_lift_spec(rng, center_range=(0.5, 0.85),
                                      width_range=(0.1, 0.2))
                     for _ in range(3))
    return tuple(random_lift_spec(rng) for _ in range(arity))


def _grids(config, lam, scale_time=True):
    space = Grid1D(config.half_length, config.n_modes)
    t_half = config.t_half / lam ** 3 if scale_time else config.t_half
    return space, spacetime_grid(space, config.n_times, t_half)


def _flow_norm(datum, g, mn_params):
    """Mixed norm of the free Airy wave, with a tail diagnostic."""
    F = to_physical(free_wave(datum, g))
    per_t = spatial_lq_norm(F.values, g.space.dx, mn_params.q)
    work = free_wave(datum, g)
    if mn_params.sigma != 0.0:
        lifted = sp.riesz(work, mn_params.sigma) if mn_params.homogeneous \
            else sp.bessel(work, mn_params.sigma)
        per_t = spatial_lq_norm(to_physical(lifted).values, g.space.dx,
                                mn_params.q)
    p = float(mn_params.p)
    contrib = g.dt * per_t ** p
    total = np.sum(contrib)
    tail = (contrib[0] + contrib[-1]) / total if total > 0 else 0.0
    return float(total ** (1.0 / p)), float(tail)


def _evaluate(kind, params, config, spec, lam, caches):
    """Dispatch: returns (lhs, rhs, extras)."""
    K = EstimateKind
    if kind == K.L8_STRICHARTZ:
        space, g = _grids(config, lam)
        u = realize_datum(space, spec[0], lam)
        lhs, tail = _flow_norm(u, g, MixedNormParams(8.0, 8.0, 0.0))
        return lhs, fl_norm(u, (2.0, 0.0)), {"tail": tail}
    if kind in (K.LEMMA4, K.FS_AIRY, K.COR3_GENERAL):
        space, g = _grids(config, lam)
        u = realize_datum(space, spec[0], lam)
        if kind == K.LEMMA4:
            p, q, sigma = 4.0, _f(params["q"]), 0.25
        else:
            p, q = _f(params["p"]), _f(params["q"])
            sigma = 0.0 if np.isinf(p) else 1.0 / p
        lhs, tail = _flow_norm(u, g, MixedNormParams(p, q, sigma))
        return lhs, fl_norm(u, (params["r"], 0.0)), {"tail": tail}
    if kind in (K.XNORM_30, K.XNORM_31):
        space, g = _grids(config, lam)
        F = realize_field(g, spec[0], lam)
        p, q, r, b = (_f(params[k]) for k in ("p", "q", "r", "b"))
        if kind == K.XNORM_30:
            lhs = mixed_norm(to_physical(F),
                             MixedNormParams(p, q, 1.0 / p, homogeneous=False))
            return lhs, xrsb_norm(F, (r, 0.0, b)), {}
        rc = float(conjugate_exponent(r))
        pc = float(conjugate_exponent(p))
        qc = float(conjugate_exponent(q))
        lhs = xrsb_norm(F, (rc, 0.0, -b))
        rhs = mixed_norm(to_physical(F),
                         MixedNormParams(pc, qc, -1.0 / p, homogeneous=False))
        return lhs, rhs, {}
    if kind == K.BILINEAR_L3:
        space, g = _grids(config, lam)
        u1 = realize_datum(space, spec[0], lam)
        u2 = realize_datum(space, spec[1], lam)
        kern = caches.setdefault(("minus", 0.5, space.n_modes),
                                 minus_kernel(space, 0.5))
        F1 = free_wave(u1, g)
        F2 = free_wave(u2, g)
        conv = kern.apply(F1.values, F2.values)
        conv *= _riesz_weight(space.xi, 0.5)[:, None]
        lhs = l2_xt_norm(SpaceTimeField(g, conv, MIXED))
        rhs = fl_norm(u1, (2.0, 0.0)) * fl_norm(u2, (2.0, 0.0))
        closed = float(np.sqrt(lemma3_closed_form(u1, u2)))
        return lhs, rhs, {"closed_form": closed}
    if kind == K.COR_K1:
        space, g = _grids(config, lam)
        s, b, bt = _f(params["s"]), _f(params["b"]), _f(params["b_tilde"])
        u = realize_field(g, spec[0], lam)
        v = realize_field(g, spec[1], lam)
        kern = caches.setdefault(("minus", s, space.n_modes),
                                 minus_kernel(space, s))
        conv = kern.apply(to_mixed(u).values, to_mixed(v).values)
        conv *= _riesz_weight(space.xi, s)[:, None]
        lhs = l2_xt_norm(SpaceTimeField(g, conv, MIXED))
        return lhs, xrsb_norm(u, (2.0, 0.0, b)) * xrsb_norm(v, (2.0, 0.0, bt)), {}
    if kind in (K.COR_K2, K.COR_K10):
        space, g = _grids(config, lam)
        if kind == K.COR_K2:
            s = _f(params["s"])
            r_out, b_out = 2.0, -_f(params["b_tilde"])
            beta = _f(params["b"])
        else:
            s = _f(params["sigma"])
            r_out, b_out = _f(params["r"]), _f(params["b_prime"])
            beta = _f(params["beta"])
        w = realize_field(g, spec[0], lam)
        u = realize_field(g, spec[1], lam)
        kern = caches.setdefault(("plus", s, space.n_modes),
                                 plus_kernel(space, s))
        w_mixed = to_mixed(w).values * _riesz_weight(space.xi, s)[:, None]
        conv = kern.apply(w_mixed, to_mixed(u).values)
        lhs = xrsb_norm(to_frequency(SpaceTimeField(g, conv, MIXED)),
                        (r_out, 0.0, b_out))
        return lhs, l2_xt_norm(w) * xrsb_norm(u, (2.0, 0.0, beta)), {}
    if kind == K.HOMOG_5:
        space, g = _grids(config, lam, scale_time=False)
        u0 = realize_datum(space, spec[0], lam)
        r, s, b = params["r"], _f(params["s"]), _f(params["b"])
        psi = cutoff(g.t)
        F = free_wave(u0, g)
        F = F.with_values(F.values * psi[None, :])
        lhs = xrsb_norm(to_frequency(F), (r, s, b))
        c_psi = _time_profile_norm(psi, g, r, b)
        return lhs, c_psi * fl_norm(u0, (r, s)), {"c_psi": c_psi}
    if kind == K.EMBED_4:
        space, g = _grids(config, lam)
        F = realize_field(g, spec[0], lam)
        lhs = xrsb_norm(F, (params["r0"], _f(params["s0"]), _f(params["b0"])))
        rhs = xrsb_norm(F, (params["r1"], _f(params["s1"]), _f(params["b1"])))
        return lhs, rhs, {}
    if kind == K.EMBED_52:
        space, g = _grids(config, lam)
        F = realize_field(g, spec[0], lam)
        r, s, b = params["r"], _f(params["s"]), _f(params["b"])
        mixed = to_mixed(F)
        rc = float(conjugate_exponent(r))
        wxi = japanese_bracket(space.xi) ** s
        per_t = (np.sum(space.dxi * (wxi[:, None] * np.abs(mixed.values)) ** rc,
                        axis=0)) ** (1.0 / rc)
        return float(np.max(per_t)), xrsb_norm(F, (r, s, b)), {}
    if kind == K.TRILINEAR_T2:
        space, g = _grids(config, lam)
        fields = [realize_field(g, sj, lam) for sj in spec]
        r, s, b, bp = (params["r"], _f(params["s"]), _f(params["b"]),
                       _f(params["b_prime"]))
        prod = np.ones((space.n_modes, g.n_times), complex)
        for F in fields:
            prod = prod * to_physical(F).values
        P = to_frequency(SpaceTimeField(g, prod, PHYSICAL))
        P = P.with_values(P.values * (1j * space.xi)[:, None])
        lhs = xrsb_norm(P, (r, s, bp))
        rhs = 1.0
        for F in fields:
            rhs *= xrsb_norm(F, (r, s, b))
        return lhs, rhs, {}
    raise HypothesisError(f"no evaluator for {kind}")


def _time_profile_norm(profile_t, g, r, b):
    """|| psi ||_{H^r_b}-style norm of a time profile on the grid's tau axis."""
    spec_vals = sp._forward_time(profile_t[None, :], g)[0]
    rc = float(conjugate_exponent(r))
    w = japanese_bracket(g.tau) ** b
    return float((np.sum(g.dtau * (w * np.abs(spec_vals)) ** rc)) ** (1.0 / rc))


def _lemma2_sample(params, config, spec, delta):
    space, g = _grids(config, 1.0, scale_time=False)
    F = realize_field(g, spec[0], 1.0)
    r, s, b, bp = (params["r"], _f(params["s"]), _f(params["b"]),
                   _f(params["b_prime"]))
    v = duhamel_integral(to_mixed(F))
    psi_d = cutoff_scaled(g.t, delta)
    v = v.with_values(v.values * psi_d[None, :])
    lhs = xrsb_norm(to_frequency(v), (r, s, b))
    rhs = delta ** (1.0 + _f(bp) - _f(b)) * xrsb_norm(F, (r, s, bp))
    return lhs, rhs


def run_probe(config):
    """Sample the family, compute both sides of the estimate, report ratios."""
    kind = config.kind
    params = validate_params(kind, config.params)
    rng = np.random.default_rng(config.seed)
    specs = [_sample_spec(kind, rng) for _ in range(config.n_samples)]
    caches = {}
    rows = []
    diagnostics = {}

    if kind == EstimateKind.LEMMA2_DELTA:
        deltas = config.deltas or _DEFAULTS[kind]["deltas"]
        slopes = []
        for sid, spec in enumerate(specs):
            pts = []
            for d in deltas:
                lhs, rhs = _lemma2_sample(params, config, spec, d)
                ratio = lhs / rhs if rhs > 0 else 0.0
                rows.append(SampleRatio(sid, 1.0, lhs, rhs, ratio, delta=d))
                pts.append((np.log(d), np.log(lhs)))
            pts = np.array(pts)
            coef, res = _fit_line(pts[:, 0], pts[:, 1])
            slopes.append((coef, res))
        slope = float(np.median([c for c, _ in slopes]))
        resid = float(np.max([r for _, r in slopes]))
        diagnostics["per_sample_slopes"] = [c for c, _ in slopes]
        report = _assemble(kind, params, rows, diagnostics)
        return replace(report, slope=slope, slope_residual=resid)

    region_rows = {}
    for sid, spec in enumerate(specs):
        for lam in config.dilations:
            lhs, rhs, extra = _evaluate(kind, params, config, spec, lam, caches)
            ratio = lhs / rhs if rhs > 0 else 0.0
            rows.append(SampleRatio(sid, lam, lhs, rhs, ratio))
            for k, v in extra.items():
                diagnostics.setdefault(k, []).append(v)
    if kind == EstimateKind.TRILINEAR_T2 and config.n_samples > 0:
        region_rows = region_breakdown(params, seed=config.seed)
        diagnostics["regions"] = region_rows
    if config.check_resolution:
        _resolution_check(kind, params, config, specs[0], caches)
    report = _assemble(kind, params, rows, diagnostics)
    if region_rows:
        report = replace(report, regions=region_rows)
    return report


def _fit_line(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    return float(coef[0]), residual


def _assemble(kind, params, rows, diagnostics):
    ratios = np.array([r.ratio for r in rows])
    if not np.all(np.isfinite(ratios)) or np.any(ratios < 0):
        raise RefinementError("non-finite or negative ratio in probe output")
    per_sample = {}
    for r in rows:
        per_sample.setdefault(r.sample_id, []).append(r.ratio)
    spreads = [max(v) / min(v) for v in per_sample.values() if min(v) > 0]
    return EstimateReport(
        kind=kind, params=params, samples=tuple(rows),
        max_ratio=float(np.max(ratios)),
        median_ratio=float(np.median(ratios)),
        dilation_spread=float(max(spreads)) if spreads else 1.0,
        diagnostics=diagnostics or None)


def _resolution_check(kind, params, config, spec, caches):
    base = _evaluate(kind, params, config, spec, 1.0, caches)
    fine_cfg = replace(config, n_modes=2 * config.n_modes)
    fine = _evaluate(kind, params, fine_cfg, spec, 1.0, {})
    for a, b in zip(base[:2], fine[:2]):
        if a > 0 and abs(a - b) / a > 0.01:
            raise RefinementError(
                f"norms change by {abs(a - b) / a:.1%} when the spatial grid is "
                "doubled; refine the grid")


def scaling_sweep(config, lam_set):
    """Per-dilation summary: {lambda: (min_ratio, median, max_ratio)}."""
    report = run_probe(replace(config, dilations=tuple(lam_set)))
    out = {}
    for lam in lam_set:
        rs = [r.ratio for r in report.samples if r.lam == lam]
        out[lam] = (float(np.min(rs)), float(np.median(rs)), float(np.max(rs)))
    return out, report


def measured_constant(report, safety=2.0):
    """Surrogate for the estimate's constant: max measured ratio x safety."""
    return safety * report.max_ratio


# ---------------------------------------------------------------------------
# region decomposition of the trilinear estimate


def classify_triple(a1, a2, a3):
    """Partition by comparability of |xi_1|, |xi_2|, |xi_3|.

    With x >> y meaning x > 4y and ~ its negation:
      C: max >> med;  B: max ~ med >> min;  A: the rest (all comparable,
      which subsumes the all-small case).  Exactly one label per triple.
    """
    lo, mid, hi = np.sort(np.abs(np.array([a1, a2, a3], float)))
    if hi > 4.0 * mid:
        return "C"
    if mid > 4.0 * lo:
        return "B"
    return "A"


def _region_masks(xi):
    n = len(xi)
    a1 = np.abs(xi)[:, None, None]
    a2 = np.abs(xi)[None, :, None]
    a3 = np.abs(xi)[None, None, :]
    lo = np.minimum(np.minimum(a1, a2), a3)
    hi = np.maximum(np.maximum(a1, a2), a3)
    mid = a1 + a2 + a3 - lo - hi
    mask_c = hi > 4.0 * mid
    mask_b = ~mask_c & (mid > 4.0 * lo)
    mask_a = ~mask_c & ~mask_b
    return {"A": mask_a, "B": mask_b, "C": mask_c}


def region_breakdown(params, seed=0, n_samples=2, n_modes=32, half_length=12.0,
                     n_times=64, t_half=2.5):
    """Exact masked trilinear convolution at reduced resolution.

    Splits the product's transform by the (xi_1, xi_2, xi_3) region of each
    interacting triple and reports per-region X-norm ratios.  O(N^3) per
    time slice, so N is kept small.  Uses its own multiscale families
    (factor frequencies spread over a decade) so every region is populated.
    """
    space = Grid1D(half_length, n_modes)
    g = spacetime_grid(space, n_times, t_half)
    rng = np.random.default_rng(seed)
    specs = []
    # fixed scale templates guarantee triples in every comparability class:
    # (1.0, 2.4, 2.6) -> A, (0.35, 2.4, 2.6) -> B, (0.35, 0.5, 2.6) -> C
    templates = ((0.35, 1.0), (0.5, 2.4), (0.4, 2.6))
    for _ in range(n_samples):
        factors = []
        # the two high-frequency bumps take opposite signs so their sum,
        # and hence the output frequency of every class-A and class-B
        # triple, stays inside the reduced grid's band
        sgn_hi = rng.choice([-1.0, 1.0])
        for fi, scales in enumerate(templates):
            bumps = []
            for scale in scales:
                if scale >= 2.0:
                    sgn = sgn_hi if fi == 1 else -sgn_hi
                else:
                    sgn = rng.choice([-1.0, 1.0])
                c = scale * rng.uniform(0.95, 1.05) * sgn
                # width floor: the coarse region grid must see every bump
                bumps.append(LiftBumpSpec(_random_amp(rng), c,
                                          max(0.3, 0.12 * abs(c)),
                                          rng.uniform(-0.5, 0.5),
                                          rng.uniform(1.5, 3.0),
                                          profile="bump"))
            factors.append(tuple(bumps))
        specs.append(tuple(factors))
    r, s, b, bp = (params["r"], _f(params["s"]), _f(params["b"]),
                   _f(params["b_prime"]))
    masks = _region_masks(space.xi)
    n = n_modes
    n0 = n // 2
    k = np.arange(n)
    k3 = k[:, None, None] - k[None, :, None] - k[None, None, :] + 2 * n0
    valid = (k3 >= 0) & (k3 < n)
    k3c = np.clip(k3, 0, n - 1)
    out = {}
    for sid, spec in enumerate(specs):
        fields = [to_mixed(realize_field(g, sj, 1.0)).values for sj in spec]
        rhs = 1.0
        for sj in spec:
            rhs *= xrsb_norm(realize_field(g, sj, 1.0), (r, s, b))
        total = None
        per_region = {}
        a_idx = k[None, :, None]
        b_idx = k[None, None, :]
        for name, mask in masks.items():
            # the triple interacting at (k, a, b) is (xi_a, xi_b, xi_{k3})
            W = np.where(valid & mask[a_idx, b_idx, k3c], 1.0, 0.0)
            conv = np.einsum("kab,at,bt,kabt->kt", W, fields[0], fields[1],
                             fields[2][k3c], optimize=True)
            conv = conv * (g.space.dxi / SQRT_2PI) ** 2
            conv = conv * (1j * space.xi)[:, None]
            F = to_frequency(SpaceTimeField(g, conv, MIXED))
            per_region[name] = xrsb_norm(F, (r, s, bp)) / rhs
            total = conv if total is None else total + conv
        full = np.einsum("kab,at,bt,kabt->kt", np.where(valid, 1.0, 0.0),
                         fields[0], fields[1], fields[2][k3c], optimize=True)
        full = full * (g.space.dxi / SQRT_2PI) ** 2 * (1j * space.xi)[:, None]
        per_region["partition_defect"] = float(
            np.max(np.abs(total - full)) / (np.max(np.abs(full)) + 1e-300))
        out[sid] = per_region
    return out
