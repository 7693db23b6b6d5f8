"""Cutoff schedule, limiting profiles, mixing times and second-order asymptotics.

Along ``t = t_eps + r * omega_eps`` with ``t_eps = ln(1/eps) / a`` and
``omega_eps = 1 / a`` the distance to equilibrium converges to an explicit
profile in ``r``: ``erf(|C_x| e^{-r} / (2 sqrt 2))`` in total variation and
``(sqrt(2b) / (2a)) |C_x| e^{-r}`` for the renormalised ``W_p``, ``p >= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import cir, specfun
from .distributions import tv_gaussian_shift
from .errors import BracketError, BranchError, DomainError, MonotonicityError, NoCutoffError
from .quadrature import QuadratureSettings
from .tv import DistanceResult, tv_cir
from .wasserstein import wp_cir

MONOTONE_SLACK = 1e-8
BISECT_TOL = 1e-8  # in units of omega_eps
ACCEPT_BAND = 0.05  # engineering choice, in units of omega_eps
R_GRID = np.arange(-4.0, 4.0 + 1e-12, 0.25)
EPS_GRID = (0.1, 0.03, 0.01, 0.003)


@dataclass(frozen=True)
class CutoffSchedule:
    t_eps: float
    omega_eps: float

    @classmethod
    def of(cls, params) -> "CutoffSchedule":
        return cls(np.log(1.0 / params.eps) / params.a, 1.0 / params.a)

    def time_at(self, r: float) -> float:
        return self.t_eps + r * self.omega_eps

    def window_coordinate(self, t: float) -> float:
        return (t - self.t_eps) / self.omega_eps


def cutoff_constant(params, x: float) -> float:
    """``C_x = (sqrt(2b) / b) (a x - b)``; zero exactly at ``x = b/a``."""
    return float(np.sqrt(2 * params.b) / params.b * (params.a * x - params.b))


def _wp_amplitude(params) -> float:
    return float(np.sqrt(2 * params.b) / (2 * params.a))


@dataclass(frozen=True)
class MixingQuery:
    """``eta`` and the distance: ``kind`` is ``"tv"`` or ``"wp"`` (renormalised, order ``p``)."""

    eta: float
    kind: str = "tv"
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in ("tv", "wp"):
            raise DomainError(f"unknown distance kind {self.kind!r}")
        if not self.p > 0:
            raise DomainError("p must be positive")
        if not (self.eta > 0 and self.eta < self.diameter):
            raise DomainError(f"eta must lie in (0, {self.diameter})")

    @property
    def diameter(self) -> float:
        return 1.0 if self.kind == "tv" else np.inf


def profile_tv(params, x: float, r):
    """``G(r) = erf(|C_x| e^{-r} / (2 sqrt 2))``."""
    c = abs(cutoff_constant(params, x))
    r = np.asarray(r, dtype=float)
    out = np.vectorize(tv_gaussian_shift, otypes=[float])(c * np.exp(-r))
    return float(out) if out.ndim == 0 else out


def profile_wp(params, x: float, r, p: float = 1.0):
    """Renormalised ``W_p`` profile; a ``(lower, upper)`` pair when ``p < 1``."""
    if not p > 0:
        raise DomainError("p must be positive")
    k = _wp_amplitude(params)
    c = abs(cutoff_constant(params, x))
    r = np.asarray(r, dtype=float)
    m = c * np.exp(-r)
    if p >= 1:
        out = k * m
        return float(out) if out.ndim == 0 else out
    upper = k**p * m**p
    lower = k**p * np.maximum(m**p - 2.0 * specfun.abs_gaussian_moment(p), 0.0)
    if upper.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


def _nonzero_constant(params, x) -> float:
    c = abs(cutoff_constant(params, x))
    if c == 0:
        raise NoCutoffError("C_x = 0 (x = b/a): the profile vanishes identically")
    return c


def profile_tv_inverse(params, x: float, eta: float) -> float:
    """``r`` with ``profile_tv(r) = eta``: ``-ln(2 sqrt 2 erf^-1(eta) / |C_x|)``."""
    c = _nonzero_constant(params, x)
    if not 0 < eta < 1:
        raise DomainError("eta must lie in (0, 1)")
    return float(-np.log(2.0 * np.sqrt(2.0) * specfun.erf_inv(eta) / c))


def profile_wp_inverse(params, x: float, eta: float) -> float:
    """``ln((sqrt(2b) / (2a)) |C_x| / eta)`` (orders ``p >= 1``)."""
    c = _nonzero_constant(params, x)
    if not eta > 0:
        raise DomainError("eta must be positive")
    return float(np.log(_wp_amplitude(params) * c / eta))


def _distance(params, x, t, query: MixingQuery, settings):
    if query.kind == "tv":
        res = tv_cir(params, x, t, settings)
        return res.value, res.err_estimate
    res = wp_cir(params, x, t, query.p, settings)
    return res.extras["renormalized"], res.extras["renormalized_err"]


def empirical_profile(params, x: float, r: float, distance_kind: str = "tv", settings=None,
                      p: float = 1.0) -> DistanceResult:
    """The actual distance at ``t_eps + r omega_eps``; for ``"wp"`` the renormalised value."""
    sched = CutoffSchedule.of(params)
    t = sched.time_at(r)
    if not t > 0:
        raise DomainError(f"t_eps + r omega_eps = {t:.6g} is not positive")
    if distance_kind == "tv":
        res = tv_cir(params, x, t, settings)
    elif distance_kind == "wp":
        raw = wp_cir(params, x, t, p, settings)
        res = DistanceResult(raw.extras["renormalized"], raw.method, raw.extras["renormalized_err"],
                             dict(raw.extras, raw=raw.value))
    else:
        raise DomainError(f"unknown distance kind {distance_kind!r}")
    res.extras.update(t=t, r=r)
    return res


def mixing_time_numeric(params, x: float, query: MixingQuery, settings: QuadratureSettings | None = None,
                        max_doublings: int = 16) -> float:
    """Smallest ``t`` with distance ``<= eta``.

    The distance is sampled on ``omega 2^k / 16`` until it drops below
    ``eta``; the samples must be nonincreasing (a violation raises
    MonotonicityError), then the crossing is refined by Brent's bracketed
    method to ``1e-8 omega``.
    """
    omega = CutoffSchedule.of(params).omega_eps
    eta = query.eta
    times = [0.0]
    vals = [_distance(params, x, 0.0, query, settings)]
    if vals[0][0] <= eta:
        return 0.0
    for k in range(max_doublings + 1):
        t = omega * 2.0**k / 16.0
        v = _distance(params, x, t, query, settings)
        prev, prev_err = vals[-1]
        if v[0] > prev + MONOTONE_SLACK + v[1] + prev_err:
            raise MonotonicityError(f"distance increased from {prev:.12g} (t={times[-1]:.6g}) to {v[0]:.12g} (t={t:.6g})")
        times.append(t)
        vals.append(v)
        if v[0] <= eta:
            break
    else:
        raise BracketError(f"distance stays above eta = {eta} up to t = {times[-1]:.6g}")
    lo, hi = times[-2], times[-1]

    def f(s):
        return _distance(params, x, s, query, settings)[0] - eta

    return float(brentq(f, lo, hi, xtol=BISECT_TOL * omega, rtol=1e-15))


@dataclass(frozen=True)
class MixingTimeEstimate:
    """``t_eps + omega_eps G^-1(eta)``; the ``o(omega_eps)`` remainder carries no rate."""

    value: float
    window_coordinate: float
    remainder: str = "o(omega_eps), unquantified"

    def __float__(self):
        return float(self.value)


def mixing_time_asymptotic(params, x: float, query: MixingQuery) -> MixingTimeEstimate:
    sched = CutoffSchedule.of(params)
    if query.kind == "tv":
        r = profile_tv_inverse(params, x, query.eta)
    else:
        if query.p < 1:
            raise DomainError("no closed-form profile for p < 1")
        r = profile_wp_inverse(params, x, query.eta)
    return MixingTimeEstimate(float(sched.time_at(r)), float(r))


def _log1p_minus_id(w):
    """``log(1 + w) - w`` (principal branch), by series when ``|w|`` is small."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    out = np.log(1 + w) - w
    small = np.abs(w) < 0.05
    if np.any(small):
        ws = w[small]
        acc = np.zeros_like(ws)
        term = ws * ws
        for k in range(2, 28):
            acc += -term / k if k % 2 == 0 else term / k
            term = term * ws
        out[small] = acc
    return out if out.size > 1 else out[0]


def _check_alpha(alpha):
    if not alpha > 0:
        raise DomainError("alpha must be positive")


def _series_log(alpha, w):
    _check_alpha(alpha)
    w = np.asarray(w, dtype=complex)
    base = 1 + w
    if np.any((base.imag == 0) & (base.real <= 0)):
        raise BranchError("1 + u / sqrt(alpha) lies on the branch cut of the logarithm")
    return alpha * _log1p_minus_id(w)


def asymptotic_seq_I(alpha: float, z: float) -> float:
    """``(1 + z / sqrt(alpha))^alpha exp(-sqrt(alpha) z)``, tending to ``exp(-z^2 / 2)``."""
    _check_alpha(alpha)
    val = np.exp(_series_log(alpha, z / np.sqrt(alpha)))
    return float(val.real)


def asymptotic_seq_II(alpha: float, u: complex, c: complex) -> complex:
    """``(1 + u_a / sqrt(alpha))^alpha exp(-sqrt(alpha) u)`` with ``u_a = u + c / sqrt(alpha)``."""
    _check_alpha(alpha)
    ra = np.sqrt(alpha)
    u_a = u + c / ra
    # alpha log(1 + w) - sqrt(alpha) u = alpha (log(1 + w) - w) + c
    return complex(np.exp(_series_log(alpha, u_a / ra) + c))


def asymptotic_seq_III(alpha: float, u_alpha: complex) -> complex:
    """``(1 + u_a / sqrt(alpha))^alpha exp(-sqrt(alpha) u_a)``, tending to ``exp(-u^2 / 2)``."""
    _check_alpha(alpha)
    return complex(np.exp(_series_log(alpha, u_alpha / np.sqrt(alpha))))


def normalized_clt_gap(params, x: float, z: float, r: float = 0.0, t: float | None = None) -> float:
    """``|E exp(z Y_t) - exp(z^2/2 + z C_x e^{-r})|`` at ``t = t_eps + r omega_eps``.

    Passing ``t`` directly overrides ``r``, which is then read off the schedule.
    """
    sched = CutoffSchedule.of(params)
    if t is None:
        t = sched.time_at(r)
    else:
        r = sched.window_coordinate(t)
    val = cir.normalized_mgf(params, x, t, z)
    target = np.exp(0.5 * z * z + z * cutoff_constant(params, x) * np.exp(-r))
    return float(abs(val - target))
