"""The CIR / Feller square-root diffusion ``dX = (b - aX) dt + eps sqrt(X) dB``.

Parameters, the exact transition and stationary laws, the moment generating
and characteristic functions of the marginal, the Gaussian normalisation
``Y = (c_inf X - (q + 1)) / sqrt(q + 1)``, and two samplers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import GammaDist, PointMass, ScaledNoncentralChiSquare
from .errors import DomainError


@dataclass(frozen=True)
class CIRParams:
    """Drift speed ``a``, long-term level ``b`` and noise ``eps``.

    Only the ergodic Feller regime ``eps < sqrt(2 b)`` is accepted.
    """

    a: float
    b: float
    eps: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise DomainError(f"a must be positive, got {self.a}")
        if not (np.isfinite(self.b) and self.b > 0):
            raise DomainError(f"b must be positive, got {self.b}")
        if not (self.eps > 0 and self.eps < np.sqrt(2 * self.b)):
            raise DomainError(f"eps must lie in (0, sqrt(2b)) = (0, {np.sqrt(2 * self.b):.6g}), got {self.eps}")

    @property
    def derived(self) -> "DerivedConstants":
        return DerivedConstants.of(self)


@dataclass(frozen=True)
class DerivedConstants:
    q_plus_1: float
    c_inf: float
    m_eps: float
    sigma_eps: float

    @classmethod
    def of(cls, params: CIRParams) -> "DerivedConstants":
        a, b, e = params.a, params.b, params.eps
        return cls(
            q_plus_1=2 * b / e**2,
            c_inf=2 * a / e**2,
            m_eps=b / a,
            sigma_eps=np.sqrt(2 * b) / (2 * a) * e,
        )


def _check_x(x):
    if not (np.isfinite(x) and x >= 0):
        raise DomainError(f"initial state must be >= 0, got {x}")


def _check_t(t, allow_zero=False):
    ok = t >= 0 if allow_zero else t > 0
    if not (np.isfinite(t) and ok):
        raise DomainError(f"time must be {'>=' if allow_zero else '>'} 0, got {t}")


def c_eps(params: CIRParams, t: float) -> float:
    """``(2a/eps^2) / (1 - exp(-a t))``; tends to ``c_inf`` as ``t`` grows."""
    _check_t(t)
    return float(2 * params.a / params.eps**2 / -np.expm1(-params.a * t))


def mean_at(params: CIRParams, x: float, t: float) -> float:
    """``E X_t(x) = x e^{-at} + (b/a)(1 - e^{-at})``."""
    decay = np.exp(-params.a * t)
    return float(x * decay + params.b / params.a * -np.expm1(-params.a * t))


def var_at(params: CIRParams, x: float, t: float) -> float:
    a, b, e = params.a, params.b, params.eps
    d = np.exp(-a * t)
    one_m = -np.expm1(-a * t)
    return float(e**2 / a * (x * d * one_m + b / (2 * a) * one_m**2))


def transition_law(params: CIRParams, x: float, t: float):
    """Law of ``X_t`` started at ``x``; a point mass at ``t = 0``."""
    _check_x(x)
    _check_t(t, allow_zero=True)
    if t == 0:
        return PointMass(float(x))
    c = c_eps(params, t)
    return ScaledNoncentralChiSquare(
        dof=4 * params.b / params.eps**2,
        noncentrality=2 * c * x * np.exp(-params.a * t),
        scale=1.0 / (2 * c),
    )


def stationary_law(params: CIRParams) -> GammaDist:
    d = params.derived
    return GammaDist(d.q_plus_1, d.c_inf)


def log_mgf(params: CIRParams, x: float, t: float, z):
    """Principal-branch ``log E exp(z X_t)`` for real or complex ``z`` (``Re z < c``)."""
    _check_x(x)
    c = c_eps(params, t)
    z = np.asarray(z)
    if np.any(np.real(z) >= c):
        raise DomainError(f"mgf requires Re z < c_eps(t) = {c:.6g}")
    q1 = 2 * params.b / params.eps**2
    y0 = c * x * np.exp(-params.a * t)
    if np.iscomplexobj(z):
        out = -q1 * np.log(1 - z / c) + z * y0 / (c - z)
    else:
        out = -q1 * np.log1p(-z / c) + z * y0 / (c - z)
    return out if np.ndim(out) else out[()]


def mgf(params: CIRParams, x: float, t: float, z):
    """``(1 - z/c)^{-2b/eps^2} exp(z c x e^{-at} / (c - z))`` for ``z < c``."""
    return np.exp(log_mgf(params, x, t, z))


def charfn_marginal(params: CIRParams, x: float, t: float, z):
    """Characteristic function of ``X_t(x)`` as ``(log_modulus, phase)``.

    The phase is returned unwrapped (not reduced mod 2 pi).
    """
    _check_x(x)
    c = c_eps(params, t)
    z = np.asarray(z, dtype=float)
    y0 = x * np.exp(-params.a * t)
    den = c * c + z * z
    k = params.b / params.eps**2
    logmod = -k * np.log1p((z / c) ** 2) - z * z * c * y0 / den
    phase = 2 * k * np.arctan(z / c) + z * c * c * y0 / den
    if np.ndim(logmod) == 0:
        return float(logmod), float(phase)
    return logmod, phase


def charfn_modulus_bound(params: CIRParams, t: float, z):
    """Log of ``(1 + z^2 / c^2)^{-b/eps^2}``, an upper bound for ``log |psi|``."""
    c = c_eps(params, t)
    z = np.asarray(z, dtype=float)
    return -params.b / params.eps**2 * np.log1p((z / c) ** 2)


def mgf_domain_limit(params: CIRParams, t: float) -> float:
    """Upper end of the normalised MGF domain, ``sqrt(q + 1) c_eps(t) / c_inf``."""
    d = params.derived
    return float(np.sqrt(d.q_plus_1) * c_eps(params, t) / d.c_inf)


def normalized_mgf(params: CIRParams, x: float, t: float, z: float) -> float:
    """``E exp(z Y_t)`` with ``Y_t = (c_inf X_t - (q + 1)) / sqrt(q + 1)``."""
    d = params.derived
    zmax = mgf_domain_limit(params, t)
    if not z < zmax:
        raise DomainError(f"normalized mgf requires z < {zmax:.6g}, got {z}")
    rq = np.sqrt(d.q_plus_1)
    return float(np.exp(-z * rq + log_mgf(params, x, t, z * d.c_inf / rq)))


def normalization_map(params: CIRParams) -> tuple[float, float]:
    """``(scale, shift)`` with ``Y = scale * X + shift``, from ``c_inf`` and ``q + 1``."""
    d = params.derived
    rq = np.sqrt(d.q_plus_1)
    return d.c_inf / rq, -rq


def normalization_map_moments(params: CIRParams) -> tuple[float, float]:
    """Same map written as ``(X - m_eps) / sigma_eps``."""
    d = params.derived
    return 1.0 / d.sigma_eps, -d.m_eps / d.sigma_eps


def normalize(params: CIRParams, values):
    scale, shift = normalization_map(params)
    return scale * np.asarray(values, dtype=float) + shift


def sample_exact(params: CIRParams, x: float, t: float, n: int, rng: np.random.Generator):
    """``n`` exact draws of ``X_t(x)`` through the Poisson-Gamma mixture."""
    _check_x(x)
    _check_t(t)
    if n < 1:
        raise DomainError("n must be >= 1")
    return transition_law(params, x, t).sample(int(n), rng)


def sample_euler(params: CIRParams, x: float, t: float, dt: float, n: int, rng: np.random.Generator):
    """Endpoints of ``n`` full-truncation Euler paths with step close to ``dt``.

    The step is shrunk to ``t / ceil(t / dt)`` so the grid ends exactly at ``t``.
    """
    _check_x(x)
    _check_t(t)
    if not (dt > 0 and dt <= t):
        raise DomainError("need 0 < dt <= t")
    if n < 1:
        raise DomainError("n must be >= 1")
    steps = int(np.ceil(t / dt - 1e-12))
    h = t / steps
    sh = np.sqrt(h)
    a, b, e = params.a, params.b, params.eps
    X = np.full(int(n), float(x))
    for _ in range(steps):
        xp = np.maximum(X, 0.0)
        X = X + (b - a * xp) * h + e * np.sqrt(xp) * sh * rng.standard_normal(X.size)
    return X
