"""Adaptive quadrature helpers built on scipy's tanh-sinh rule.

The L1 routine splits the support at the sign changes of ``f - g`` so that
every panel integrates a smooth function; the kinks of ``|f - g|`` then sit
at panel endpoints where tanh-sinh is at its best.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import tanhsinh
from scipy.optimize import brentq

from .errors import QuadratureError


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances for the density-based routines.

    ``max_subdivisions`` caps the tanh-sinh refinement level (each level
    halves the step); ``support_window`` overrides the automatic window.
    """

    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    max_subdivisions: int = 12
    support_window: tuple[float, float] | None = None
    scan_points: int = 2048

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.support_window is not None:
            lo, hi = self.support_window
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError("support_window must be a finite interval")


def integrate(f, a, b, abs_tol=1e-10, rel_tol=1e-10, max_level=12):
    """Integrate ``f`` over ``[a, b]`` (arrays allowed, element-wise).

    Returns ``(integral, error)``; raises QuadratureError when any element
    failed to converge to ``max(abs_tol, rel_tol * |integral|)``.
    """
    res = tanhsinh(f, a, b, atol=abs_tol, rtol=rel_tol, maxlevel=max_level)
    integral = np.asarray(res.integral, dtype=float)
    error = np.asarray(res.error, dtype=float)
    bad = ~np.isfinite(integral) | (error > np.maximum(abs_tol, rel_tol * np.abs(integral)) * 10)
    if np.any(bad):
        raise QuadratureError(
            f"tanh-sinh did not converge (max error {np.nanmax(error):.3e})"
        )
    return integral, error


def sign_crossings(d_fn, grid, values, noise):
    """Roots of ``d_fn`` located from sign changes of sampled ``values``.

    Samples with ``|value| <= noise`` are ignored so roundoff in regions where
    both densities vanish does not register as crossings.
    """
    significant = np.flatnonzero(np.abs(values) > noise)
    roots = []
    for i, j in zip(significant[:-1], significant[1:]):
        if np.sign(values[i]) != np.sign(values[j]):
            lo, hi = grid[i], grid[j]
            try:
                roots.append(brentq(d_fn, lo, hi, xtol=1e-15 * max(1.0, abs(hi)), rtol=1e-15, maxiter=200))
            except ValueError:
                roots.append(0.5 * (lo + hi))
    return np.asarray(roots, dtype=float)


def _scan_grid(edges, scan_points):
    # interior midpoints of each segment, so endpoint singularities are never sampled
    per = max(256, scan_points // (len(edges) - 1))
    parts = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        k = np.arange(per) + 0.5
        parts.append(lo + (hi - lo) * k / per)
    return np.concatenate(parts)


def _merge_close(edges, span):
    # panels narrower than a few ulps of the span make tanh-sinh return nan
    edges = np.unique(edges)
    keep = np.concatenate(([True], np.diff(edges) > 1e-13 * span))
    out = edges[keep]
    out[-1] = edges[-1]
    return out


def half_l1(f, g, lo, hi, abs_tol=1e-8, rel_tol=1e-8, max_level=12, scan_points=2048, breaks=()):
    """``0.5 * int_lo^hi |f - g|`` for vectorised densities ``f`` and ``g``.

    ``breaks`` are extra panel boundaries (e.g. the window of a much narrower
    law) that are also used to refine the crossing scan.
    Returns ``(value, error_estimate, crossings)``.
    """
    inner = [b for b in breaks if lo < b < hi]
    base = _merge_close(np.concatenate(([lo], inner, [hi])), hi - lo)
    grid = _scan_grid(base, scan_points)
    with np.errstate(over="ignore", invalid="ignore"):
        fv = np.asarray(f(grid), dtype=float)
        gv = np.asarray(g(grid), dtype=float)
    ok = np.isfinite(fv) & np.isfinite(gv)
    grid, fv, gv = grid[ok], fv[ok], gv[ok]
    d = fv - gv
    scale = max(float(np.max(fv, initial=0.0)), float(np.max(gv, initial=0.0)), 1e-300)
    noise = 1e-12 * scale

    def d_scalar(y):
        y = np.asarray([y])
        return float(f(y)[0] - g(y)[0])

    roots = sign_crossings(d_scalar, grid, d, noise)
    edges = _merge_close(np.concatenate((base, roots)), hi - lo)
    a, b = edges[:-1], edges[1:]
    n_panels = len(a)

    def absdiff(y):
        return np.abs(f(y) - g(y))

    res = tanhsinh(absdiff, a, b, atol=abs_tol / (4 * n_panels), rtol=rel_tol, maxlevel=max_level)
    integral = np.asarray(res.integral, dtype=float)
    error = np.asarray(res.error, dtype=float)
    value = 0.5 * float(np.sum(integral))
    err = 0.5 * float(np.sum(error))
    if not np.isfinite(value) or err > max(abs_tol, rel_tol * value):
        raise QuadratureError(f"L1 quadrature error estimate {err:.3e} exceeds tolerance")
    return value, err, roots
