"""Weighted bilinear convolutions on frequency grids, the resonance-set
algebra of the cubic dispersion relation, and the closed-form value of the
bilinear Airy smoothing quantity.

The convolutions are direct O(N^2) quadratures: the weights |xi_1 - xi_2|^s
destroy convolution structure, and at desk scale (N <= 512) correctness
beats speed.  Both operators carry the transform normalisation constant
(2 pi)^{-1/2} so that the s = 0 case coincides exactly with the transform
of the pointwise product.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .spectral import (FREQUENCY, SQRT_2PI, GridError, LayoutError,
                       SpectralField)


class DegenerateResonanceError(ValueError):
    """xi = 0 or 2 xi_1 = xi: the resonance function has a double zero."""


# ---------------------------------------------------------------------------
# resonance algebra (exact when fed rationals)


@dataclass(frozen=True)
class ResonanceData:
    """Zeros and delta-measure weights of g(x) = 3 xi (x^2 + xi(xi_1 - x) - xi_1^2)."""

    xi: object
    xi1: object
    zeros: tuple
    weights: tuple


def resonance_function(xi, xi1, x):
    """g(x); vanishes exactly on the time-resonance set."""
    return 3 * xi * (x * x + xi * (xi1 - x) - xi1 * xi1)


def cubic_gap(xi, xi1, eta1):
    """xi_1^3 + xi_2^3 - eta_1^3 - eta_2^3 on xi_2 = xi - xi_1, eta_2 = xi - eta_1."""
    xi2 = xi - xi1
    eta2 = xi - eta1
    return xi1 ** 3 + xi2 ** 3 - eta1 ** 3 - eta2 ** 3


def cubic_gap_factored(xi, xi1, eta1):
    """The factored form 3 xi (xi_1^2 - eta_1^2 + xi (eta_1 - xi_1))."""
    return 3 * xi * (xi1 * xi1 - eta1 * eta1 + xi * (eta1 - xi1))


def resonance_data(xi, xi1):
    """Exact zeros {xi_1, xi - xi_1} and weights |g'| = 3 |xi| |2 xi_1 - xi|."""
    if xi == 0 or 2 * xi1 == xi:
        raise DegenerateResonanceError(
            f"double zero of the resonance function at xi={xi}, xi1={xi1}")
    zeros = (xi1, xi - xi1)
    w = abs(3 * xi * (2 * xi1 - xi))
    data = ResonanceData(xi, xi1, zeros, (w, w))
    for z in zeros:
        assert resonance_function(xi, xi1, z) == 0
    return data


# ---------------------------------------------------------------------------
# bilinear convolutions


def _check_pair(f, g):
    if f.layout != FREQUENCY or g.layout != FREQUENCY:
        raise LayoutError("bilinear operators need frequency layout")
    if f.grid != g.grid:
        raise GridError("bilinear operators need matching grids")


def _convolve_weighted(fv, gv, grid, weight_fn):
    """out(k) = (dxi / sqrt(2 pi)) * sum_{k1} weight(xi, xi1) f(k1) g(k - k1 + n0)."""
    n = grid.n_modes
    n0 = grid.n_modes // 2
    xi = grid.xi
    out = np.zeros(n, complex)
    for k in range(n):
        # xi_2 = xi_k - xi_{k1} lands on index k - k1 + n0;
        # bounds: 0 <= k - k1 + n0 <= n-1
        lo = max(0, k + n0 - (n - 1))
        hi = min(n - 1, k + n0)
        k1 = np.arange(lo, hi + 1)
        k2 = k - k1 + n0
        w = weight_fn(xi[k], xi[k1], xi[k2])
        out[k] = np.sum(w * fv[k1] * gv[k2])
    return out * (grid.dxi / SQRT_2PI)


def i_minus(f, g, s):
    """I_-^s: convolution weighted by |xi_1 - xi_2|^s."""
    _check_pair(f, g)
    def w(xi, xi1, xi2):
        d = np.abs(xi1 - xi2)
        if s == 0:
            return np.ones_like(d)
        return d ** s
    return f.with_values(_convolve_weighted(f.values, g.values, f.grid, w))


def i_plus(f, g, s):
    """I_+^s: convolution weighted by |xi + xi_2|^s."""
    _check_pair(f, g)
    def w(xi, xi1, xi2):
        d = np.abs(xi + xi2)
        if s == 0:
            return np.ones_like(d)
        return d ** s
    return f.with_values(_convolve_weighted(f.values, g.values, f.grid, w))


def i_minus_values(fv, gv, grid, s):
    """Array-level I_-^s for inner loops over time slices."""
    def w(xi, xi1, xi2):
        d = np.abs(xi1 - xi2)
        return np.ones_like(d) if s == 0 else d ** s
    return _convolve_weighted(fv, gv, grid, w)


def i_plus_values(fv, gv, grid, s):
    def w(xi, xi1, xi2):
        d = np.abs(xi + xi2)
        return np.ones_like(d) if s == 0 else d ** s
    return _convolve_weighted(fv, gv, grid, w)


def m_op(u, v, s):
    """M^s_u v = I_-^s(u, v)."""
    return i_minus(u, v, s)


def n_op(u, w, s):
    """N^s_u w = I_+^s(w, conj u); the formal adjoint of M^s_u on L^2."""
    # conj(u)^(xi) = conj(u^(-xi)); the grid is asymmetric at the Nyquist
    # mode, so roll to keep xi -> -xi on-grid (Nyquist maps to itself)
    ubar = u.with_values(np.conj(np.roll(u.values[::-1], 1)))
    return i_plus(w, ubar, s)


# ---------------------------------------------------------------------------
# the Lemma-3 closed form


def lemma3_terms(u1, u2):
    """Diagonal and cross resonant sums of the bilinear smoothing quantity.

    Returns (diagonal, cross) with
        diagonal = (1/3) ||u1^||^2 ||u2^||^2
        cross    = (1/3) |<u1^, u2^>|^2
    so that diagonal + cross equals
    || I^{1/2} I_-^{1/2}(e^{-t d^3} u1, e^{-t d^3} u2) ||^2_{L^2_xt}
    after the delta-measure collapse.  The complex inner product is also
    returned so the Cauchy-Schwarz step is itself checkable.
    """
    _check_pair(u1, u2)
    grid = u1.grid
    # the |xi| weights cancel exactly against the delta-measure weights, so a
    # small tail on the zero mode is harmless; only dominant mass there is a
    # sign the degenerate-set hypothesis is badly violated
    for u in (u1, u2):
        peak = np.max(np.abs(u.values))
        if peak > 0 and np.abs(u.values[grid.zero_mode_index]) > 0.5 * peak:
            raise DegenerateResonanceError(
                "closed form assumes most mass away from the zero mode")
    dxi = grid.dxi
    n1sq = np.sum(dxi * np.abs(u1.values) ** 2)
    n2sq = np.sum(dxi * np.abs(u2.values) ** 2)
    ip = np.sum(dxi * u1.values * np.conj(u2.values))
    diagonal = n1sq * n2sq / 3.0
    cross = np.abs(ip) ** 2 / 3.0
    return float(diagonal), float(cross), complex(ip)


def lemma3_closed_form(u1, u2):
    """The resonant-sum value (diagonal plus cross term)."""
    diagonal, cross, _ = lemma3_terms(u1, u2)
    return diagonal + cross
