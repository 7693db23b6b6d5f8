"""Total variation between one-dimensional laws.

Two independent routes:

* ``tv_density_l1``: half the L1 norm of the density difference, integrated
  panel by panel between the crossings of ``f - g``.
* ``tv_fourier``: densities recovered from characteristic functions by a
  discrete Fourier transform on a symmetric frequency grid ``[-L, L]``.  The
  FFT only locates crossings; the integral of ``f - g`` between consecutive
  crossings is the increment of ``F_A - F_B``, which is read off by a
  Gil-Pelaez sum, so no spatial quadrature is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from . import cir
from .distributions import PointMass, power_tail_mass
from .errors import DegenerateInputError, DomainError, TailError
from .quadrature import QuadratureSettings, half_l1

TAIL_TOL = 1e-10
MIN_POINTS = 2**8
DEFAULT_POINTS = 2**14
MAX_POINTS = 2**20
METHODS = ("density-l1", "fourier-l1", "parseval-l2", "closed-form", "monte-carlo", "quantile", "discrete-ot")


@dataclass
class DistanceResult:
    value: float
    method: str
    err_estimate: float
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if not (np.isfinite(self.err_estimate) and self.err_estimate >= 0):
            raise ValueError("err_estimate must be finite and nonnegative")


@dataclass(frozen=True)
class FourierGrid:
    """``n_points`` frequencies ``-L + k dz`` (``dz = 2L / n``) and the dual spatial grid."""

    n_points: int
    freq_cutoff: float
    spatial_origin: float = 0.0

    def __post_init__(self):
        n = self.n_points
        if n < MIN_POINTS or n & (n - 1):
            raise ValueError("n_points must be a power of two >= 256")
        if not self.freq_cutoff > 0:
            raise ValueError("freq_cutoff must be positive")

    @property
    def freq_step(self) -> float:
        return 2.0 * self.freq_cutoff / self.n_points

    @property
    def spatial_step(self) -> float:
        return np.pi / self.freq_cutoff

    @property
    def period(self) -> float:
        return self.n_points * self.spatial_step

    def doubled(self) -> "FourierGrid":
        """Same cutoff, twice the points (halves the frequency step)."""
        return FourierGrid(2 * self.n_points, self.freq_cutoff, self.spatial_origin - 0.5 * self.period)

    def midpoints(self) -> np.ndarray:
        """Positive midpoint frequencies ``(k + 1/2) dz`` covering ``(0, L)``."""
        return (np.arange(self.n_points // 2) + 0.5) * self.freq_step


@dataclass(frozen=True)
class CharFn:
    """A characteristic function given as ``z -> (log_modulus, phase)``.

    ``tail_mass(L, power)`` bounds ``int_{|z|>L} |phi|^power``; ``log_bound``
    (optional) is a pointwise upper bound for the log modulus.  ``window`` is
    an interval carrying essentially all the mass, used to size the grid.
    """

    log_charfn: Callable
    tail_mass: Callable
    window: tuple[float, float]
    spread: float
    log_bound: Callable | None = None

    @classmethod
    def from_law(cls, law) -> "CharFn":
        if getattr(law, "is_atomic", False):
            raise DegenerateInputError("a point mass has no integrable characteristic function")
        return cls(law.log_charfn, law.charfn_tail_mass, law.support_window(), law.sd)

    @classmethod
    def from_cir(cls, params, x: float, t: float) -> "CharFn":
        """Closed-form marginal characteristic function with its modulus bound."""
        law = cir.transition_law(params, x, t)
        if getattr(law, "is_atomic", False):
            raise DegenerateInputError("t = 0 has no density")
        c = cir.c_eps(params, t)
        k = params.b / params.eps**2
        return cls(
            lambda z: cir.charfn_marginal(params, x, t, z),
            lambda L, power=1.0: power_tail_mass(L, power * k, c),
            law.support_window(),
            law.sd,
            lambda z: cir.charfn_modulus_bound(params, t, z),
        )

    def values(self, z, shift=0.0):
        """``phi(z) exp(-i z shift)`` as a complex array."""
        logmod, phase = self.log_charfn(z)
        ang = np.asarray(phase) - np.asarray(z) * shift
        return np.exp(logmod) * (np.cos(ang) + 1j * np.sin(ang))


def _as_charfn(obj) -> CharFn:
    return obj if isinstance(obj, CharFn) else CharFn.from_law(obj)


def _measured_tail(ch: CharFn, L: float, power: float = 1.0) -> float:
    """``int_{|z|>L} |phi|^power`` by adaptive quadrature (``|phi|`` is even)."""
    def mod(z):
        return np.exp(power * np.asarray(ch.log_charfn(z)[0]))

    val, _ = integrate.quad(mod, L, np.inf, epsabs=1e-15, epsrel=1e-8, limit=200)
    return 2.0 * float(val)


def auto_grid(charA, charB, tail_tol: float = TAIL_TOL, n_points: int = DEFAULT_POINTS, power: float = 1.0) -> FourierGrid:
    """Grid whose bound-based tail mass is below ``tail_tol`` and whose period covers both windows twice."""
    A, B = _as_charfn(charA), _as_charfn(charB)
    spread = min(A.spread, B.spread)
    L = 4.0 * np.pi / spread  # spatial step <= spread / 4
    for _ in range(80):
        if A.tail_mass(L, power) + B.tail_mass(L, power) <= tail_tol:
            break
        if not np.isfinite(A.tail_mass(L, power) + B.tail_mass(L, power)):
            raise TailError("characteristic function is not integrable (power-law exponent <= 1/2)")
        L *= 2.0
    else:
        raise TailError("could not reach the tail tolerance")
    lo = min(A.window[0], B.window[0])
    hi = max(A.window[1], B.window[1])
    width = hi - lo
    need = 2.0 * width / (np.pi / L)
    n = max(MIN_POINTS, n_points)
    while n < need:
        n *= 2
    if n > MAX_POINTS:
        raise TailError(f"grid would need {n} points (> 2^20); characteristic function decays too slowly")
    centre = 0.5 * (lo + hi)
    return FourierGrid(n, L, centre - 0.5 * n * np.pi / L)


def _check_tails(A: CharFn, B: CharFn, grid: FourierGrid, tail_tol: float, power: float = 1.0):
    L = grid.freq_cutoff
    bound_a, bound_b = A.tail_mass(L, power), B.tail_mass(L, power)
    if not np.isfinite(bound_a + bound_b):
        raise TailError("characteristic function is not integrable (power-law exponent <= 1/2)")
    meas_a, meas_b = _measured_tail(A, L, power), _measured_tail(B, L, power)
    if meas_a + meas_b > tail_tol:
        raise TailError(f"tail mass {meas_a + meas_b:.3e} beyond |z| > {L:.4g} exceeds {tail_tol:.1e}")
    return dict(tail_A=meas_a, tail_B=meas_b, tail_bound_A=bound_a, tail_bound_B=bound_b)


def _bound_respected(ch: CharFn, z) -> bool:
    if ch.log_bound is None:
        return True
    logmod = np.asarray(ch.log_charfn(z)[0])
    return bool(np.all(logmod <= np.asarray(ch.log_bound(z)) + 1e-12))


def fft_density_difference(A: CharFn, B: CharFn, grid: FourierGrid):
    """``(y, f_A - f_B)`` on the dual spatial grid of ``grid``."""
    n, dz, h, y0 = grid.n_points, grid.freq_step, grid.spatial_step, grid.spatial_origin
    z = -grid.freq_cutoff + dz * np.arange(n)
    dphi = A.values(z, shift=y0) - B.values(z, shift=y0)
    # f(y0 + j h) = dz / (2 pi) sum_k dphi_k e^{-i z_k j h}, z_k j h = -pi j + 2 pi k j / n
    sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    dens = (dz / (2 * np.pi)) * sign * np.fft.fft(dphi).real
    return y0 + h * np.arange(n), dens


class _Inverter:
    """Direct midpoint sums for the density and cdf differences at arbitrary points."""

    def __init__(self, A: CharFn, B: CharFn, grid: FourierGrid, centre: float):
        self.z = grid.midpoints()
        self.dz = grid.freq_step
        self.centre = centre
        self.dphi = A.values(self.z, shift=centre) - B.values(self.z, shift=centre)

    def _rot(self, y):
        ang = self.z * (y - self.centre)
        return np.cos(ang) - 1j * np.sin(ang)

    def density(self, y: float) -> float:
        return float(self.dz / np.pi * np.sum((self._rot(y) * self.dphi).real))

    def cdf(self, y: float) -> float:
        return float(-self.dz / np.pi * np.sum((self._rot(y) * self.dphi).imag / self.z))


def _fourier_tv_once(A, B, grid, noise_floor):
    y, dens = fft_density_difference(A, B, grid)
    lo = min(A.window[0], B.window[0])
    hi = max(A.window[1], B.window[1])
    keep = (y >= lo) & (y <= hi)
    y, dens = y[keep], dens[keep]
    inv = _Inverter(A, B, grid, 0.5 * (lo + hi))
    scale = float(np.max(np.abs(dens), initial=0.0))
    noise = max(1e-9 * scale, noise_floor)
    sig = np.flatnonzero(np.abs(dens) > noise)
    roots = []
    for i, j in zip(sig[:-1], sig[1:]):
        if np.sign(dens[i]) != np.sign(dens[j]):
            a, b = y[i], y[j]
            fa, fb = inv.density(a), inv.density(b)
            if np.sign(fa) == np.sign(fb):
                roots.append(0.5 * (a + b))
            else:
                roots.append(brentq(inv.density, a, b, xtol=1e-14 * max(1.0, abs(b)), rtol=1e-15))
    D = np.array([0.0] + [inv.cdf(r) for r in roots] + [0.0])
    value = 0.5 * float(np.sum(np.abs(np.diff(D))))
    return value, np.asarray(roots)


def tv_fourier(charA, charB, grid: FourierGrid | None = None, tail_tol: float = TAIL_TOL) -> DistanceResult:
    """Total variation from two characteristic functions by Fourier inversion.

    Raises TailError when the tail mass beyond the frequency cutoff exceeds
    ``tail_tol`` (e.g. Gamma laws with shape <= 1/2, whose characteristic
    functions are not integrable).
    """
    A, B = _as_charfn(charA), _as_charfn(charB)
    if grid is None:
        grid = auto_grid(A, B, tail_tol)
    tails = _check_tails(A, B, grid, tail_tol)
    tail = tails["tail_A"] + tails["tail_B"]
    floor = 10 * tail / (2 * np.pi)
    v1, roots = _fourier_tv_once(A, B, grid, floor)
    v2, _ = _fourier_tv_once(A, B, grid.doubled(), floor) if grid.n_points < MAX_POINTS else (v1, None)
    # cdf increments carry a truncation error of at most tail / (pi L) per crossing
    err = abs(v1 - v2) + (len(roots) + 1) * tail / (np.pi * grid.freq_cutoff) + 1e-14
    zs = grid.midpoints()
    extras = dict(tails, n_points=grid.n_points, freq_cutoff=grid.freq_cutoff, crossings=roots.tolist(),
                  bound_respected=_bound_respected(A, zs) and _bound_respected(B, zs))
    return DistanceResult(min(max(v2, 0.0), 1.0), "fourier-l1", err, extras)


def l2_fourier_distance(charA, charB, grid: FourierGrid | None = None, tail_tol: float = TAIL_TOL) -> DistanceResult:
    """``int (f_A - f_B)^2 dy = (1 / 2 pi) int |phi_A - phi_B|^2 dz`` (squared L2 distance)."""
    A, B = _as_charfn(charA), _as_charfn(charB)
    if grid is None:
        grid = auto_grid(A, B, tail_tol, power=2.0)
    tails = _check_tails(A, B, grid, tail_tol, power=2.0)
    centre = 0.5 * (min(A.window[0], B.window[0]) + max(A.window[1], B.window[1]))

    def once(g):
        z = g.midpoints()
        d = A.values(z, shift=centre) - B.values(z, shift=centre)
        return g.freq_step / np.pi * float(np.sum(d.real**2 + d.imag**2))

    v1 = once(grid)
    v2 = once(grid.doubled())
    # |a - b|^2 <= 2(|a|^2 + |b|^2) beyond the cutoff
    err = abs(v1 - v2) + (tails["tail_A"] + tails["tail_B"]) / np.pi
    return DistanceResult(v2, "parseval-l2", err, dict(tails, n_points=grid.n_points, freq_cutoff=grid.freq_cutoff))


def tv_with_atom(point: PointMass, law) -> DistanceResult:
    """A point mass against anything without an atom there is at distance 1."""
    if getattr(law, "is_atomic", False):
        same = float(point.atom) == float(law.atom)
        return DistanceResult(0.0 if same else 1.0, "closed-form", 0.0)
    return DistanceResult(1.0, "closed-form", 0.0)


def _outside_mass(law, lo, hi) -> float:
    return float(law.cdf(lo) + law.sf(hi))


def tv_density_l1(lawA, lawB, settings: QuadratureSettings | None = None) -> DistanceResult:
    """Half the L1 distance between the densities of two absolutely continuous laws."""
    if getattr(lawA, "is_atomic", False) or getattr(lawB, "is_atomic", False):
        raise DegenerateInputError("point masses have no density; use tv_with_atom")
    s = settings or QuadratureSettings()
    wa, wb = lawA.support_window(), lawB.support_window()
    if s.support_window is None and (wa[1] < wb[0] or wb[1] < wa[0]):
        # essentially disjoint supports: TV = 1 - int min(f, g), and the overlap is in the tails
        err = min(_outside_mass(lawA, *wa), 1.0) + min(_outside_mass(lawB, *wb), 1.0)
        return DistanceResult(1.0, "density-l1", err, dict(shortcut="disjoint-windows"))
    if s.support_window is not None:
        lo, hi = s.support_window
        breaks = ()
    else:
        lo, hi = min(wa[0], wb[0]), max(wa[1], wb[1])
        breaks = (*wa, *wb, lawA.mean, lawB.mean)
    value, err, roots = half_l1(lawA.pdf, lawB.pdf, lo, hi, abs_tol=s.abs_tol, rel_tol=s.rel_tol,
                                max_level=s.max_subdivisions, scan_points=s.scan_points, breaks=breaks)
    err += 0.5 * (_outside_mass(lawA, lo, hi) + _outside_mass(lawB, lo, hi))
    return DistanceResult(min(value, 1.0), "density-l1", err, dict(crossings=roots.tolist(), window=(lo, hi)))


def tv_cir(params, x: float, t: float, settings: QuadratureSettings | None = None,
           route: str = "density", cross_check: bool = False) -> DistanceResult:
    """TV between the law of ``X_t(x)`` and the stationary Gamma law.

    ``route`` is ``"density"`` or ``"fourier"``; ``cross_check`` runs both and
    records their gap in ``extras``.
    """
    if route not in ("density", "fourier"):
        raise DomainError(f"unknown route {route!r}")
    if not (np.isfinite(t) and t >= 0):
        raise DomainError("t must be >= 0")
    law = cir.transition_law(params, x, t)
    stat = cir.stationary_law(params)
    if law.is_atomic:
        return tv_with_atom(law, stat)
    if route == "density" or cross_check:
        dens = tv_density_l1(law, stat, settings)
    if route == "fourier" or cross_check:
        four = tv_fourier(CharFn.from_cir(params, x, t), CharFn.from_law(stat))
    res = dens if route == "density" else four
    if cross_check:
        gap = abs(dens.value - four.value)
        res.extras.update(density_value=dens.value, fourier_value=four.value, route_gap=gap,
                          routes_agree=gap <= dens.err_estimate + four.err_estimate + 1e-6)
    return res
