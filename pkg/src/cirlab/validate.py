"""Named numerical checks: per-module properties and the acceptance criteria.

Every check reports a measured quantity, the tolerance it is held to and a
pass flag.  ``run(only=...)`` filters by module name or check name.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import stats

from . import cir, cutoff, specfun
from .distributions import (
    AffineLaw,
    GammaDist,
    GaussianDist,
    ScaledNoncentralChiSquare,
    gamma_rescale,
    standardized_gamma_tv_to_gaussian,
    tv_gaussian_shift,
)
from .quadrature import integrate
from .tv import CharFn, _measured_tail, auto_grid, l2_fourier_distance, tv_cir, tv_density_l1, tv_fourier
from .wasserstein import DiscreteMeasure, wp_discrete_ot, wp_quantile

MODULES = ("specfun", "distributions", "cir-model", "tv-engine", "wasserstein", "cutoff", "acceptance")
BAND_NOTE = "0.05 omega band is an engineering choice; the o(omega) remainder has no known rate"


@dataclass
class CheckResult:
    name: str
    module: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.module:<13} {self.name:<34} measured={self.measured:.6g} tol={self.tolerance:.3g}  {self.detail}"


_REGISTRY: list[tuple[str, str, Callable]] = []
_CACHE: dict[str, CheckResult] = {}


def check(module: str, name: str):
    def deco(fn):
        _REGISTRY.append((module, name, fn))
        return fn
    return deco


def registered(only=None) -> list[tuple[str, str, Callable]]:
    if only is None:
        return list(_REGISTRY)
    keys = {only} if isinstance(only, str) else set(only)
    unknown = keys - set(MODULES) - {n for _, n, _ in _REGISTRY}
    if unknown:
        raise KeyError(f"unknown module or check: {sorted(unknown)}")
    return [e for e in _REGISTRY if e[0] in keys or e[1] in keys]


def run_one(module: str, name: str, fn: Callable, use_cache: bool = True) -> CheckResult:
    if use_cache and name in _CACHE:
        return _CACHE[name]
    t0 = time.perf_counter()
    try:
        out = fn()
        measured, tol = float(out[0]), float(out[1])
        passed = out[2] if len(out) > 2 and out[2] is not None else measured <= tol
        detail = out[3] if len(out) > 3 else ""
        res = CheckResult(name, module, measured, tol, bool(passed), detail)
    except Exception as exc:  # an engine error is a failed check
        res = CheckResult(name, module, float("nan"), float("nan"), False, f"{type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t0
    _CACHE[name] = res
    return res


def run(only=None, use_cache: bool = False) -> list[CheckResult]:
    if not use_cache:
        _CACHE.clear()
    return [run_one(m, n, f) for m, n, f in registered(only)]


def _strictly_decreasing(vals) -> bool:
    return bool(np.all(np.diff(np.asarray(vals, dtype=float)) < 0))


# ---------------------------------------------------------------- specfun

@check("specfun", "ln-gamma-recurrence")
def _ln_gamma_recurrence():
    x = np.logspace(-3, 2, 400)
    gap = np.abs(specfun.ln_gamma(x + 1) - specfun.ln_gamma(x) - np.log(x))
    return gap.max(), 1e-12


@check("specfun", "inc-gamma-monotone-range")
def _inc_gamma_monotone():
    worst = 0.0
    for a in (0.3, 1.0, 7.5, 200.0):
        x = np.concatenate(([0.0], np.logspace(-6, 4, 2000)))
        p = specfun.reg_lower_inc_gamma(a, x)
        worst = max(worst, float(np.max(np.maximum(-np.diff(p), 0.0))), float(p[0]))
        if np.any(p < 0) or np.any(p > 1):
            worst = max(worst, 1.0)
    return worst, 0.0


@check("specfun", "erf-odd")
def _erf_odd():
    x = np.linspace(0, 6, 1201)
    return np.max(np.abs(specfun.erf(-x) + specfun.erf(x))), 0.0


@check("specfun", "erf-inv-residual")
def _erf_inv_residual():
    y = np.concatenate((specfun.erf(np.linspace(-5, 5, 2001)), np.linspace(-1 + 1e-12, 1 - 1e-12, 2001)))
    return np.max(np.abs(specfun.erf(specfun.erf_inv(y)) - y)), 1e-12


@check("specfun", "erf-inv-roundtrip")
def _erf_inv_roundtrip():
    # beyond |x| ~ 3.7 one ulp of erf(x) exceeds 1e-10 in x, so the inverse is probed where it is resolvable
    x = np.linspace(-3.5, 3.5, 2001)
    return np.max(np.abs(specfun.erf_inv(specfun.erf(x)) - x)), 1e-10, None, "|x| <= 3.5"


@check("specfun", "poisson-normalization")
def _poisson_norm():
    worst = 0.0
    for mu in (0.5, 50.0, 5000.0):
        lo, hi, _ = specfun.poisson_window(mu, 1e-12)
        k = np.arange(lo, hi + 1)
        total = np.exp(specfun.log_poisson_pmf(k, mu)).sum()
        worst = max(worst, abs(total - 1.0))
    return worst, 1e-10


# ---------------------------------------------------------------- distributions

def _sample_laws():
    return [
        GammaDist(3.0, 2.0),
        GammaDist(0.7, 1.0),
        GaussianDist(1.0, 2.0),
        ScaledNoncentralChiSquare(4.0, 10.0, 0.3),
        cir.transition_law(cir.CIRParams(1.0, 1.0, 0.1), 2.0, 3.0),
        cir.transition_law(cir.CIRParams(1.0, 1.0, 0.003), 2.0, 1.0),
        AffineLaw(GammaDist(5.0, 1.0), -2.0, 1.0),
    ]


@check("distributions", "quantile-cdf-roundtrip")
def _quantile_roundtrip():
    u = np.linspace(0.001, 0.999, 199)
    worst = max(float(np.max(np.abs(law.cdf(law.quantile(u)) - u))) for law in _sample_laws())
    return worst, 1e-8


@check("distributions", "pdf-normalization")
def _pdf_norm():
    worst = 0.0
    for law in _sample_laws():
        lo, hi = law.support_window()
        inner = law.mean + law.sd * np.arange(-12.0, 13.0)
        edges = np.unique(np.concatenate(([lo], inner[(inner > lo) & (inner < hi)], [hi])))
        total, _ = integrate(law.pdf, edges[:-1], edges[1:], abs_tol=1e-13, rel_tol=1e-12)
        worst = max(worst, abs(float(np.sum(total)) - 1.0))
    return worst, 1e-8


@check("distributions", "tv-gaussian-shift-quadrature")
def _tv_shift():
    worst = 0.0
    for m in (0.1, 0.5, 1.0, 2.0, 5.0):
        num = tv_density_l1(GaussianDist(m, 1.0), GaussianDist(0.0, 1.0)).value
        worst = max(worst, abs(num - tv_gaussian_shift(m)))
    return worst, 1e-8


@check("distributions", "gamma-rescale-invariance")
def _gamma_rescale():
    worst = 0.0
    for alpha, r1, r2 in ((2.5, 1.0, 1.7), (12.0, 3.0, 2.0)):
        g1, g2 = GammaDist(alpha, r1), GammaDist(alpha, r2)
        base = tv_density_l1(g1, g2).value
        for c in (0.2, 7.0):
            worst = max(worst, abs(tv_density_l1(gamma_rescale(g1, c), gamma_rescale(g2, c)).value - base))
    return worst, 1e-8


@check("distributions", "noncentral-truncation")
def _truncation():
    laws = [ScaledNoncentralChiSquare(4.0, lam, 0.5) for lam in (0.1, 10.0, 1e3, 1e6)]
    return max(law.truncation[2] for law in laws), 1e-12


# ---------------------------------------------------------------- cir-model

_PARAM_SETS = (cir.CIRParams(1.0, 1.0, 0.1), cir.CIRParams(2.0, 0.5, 0.3), cir.CIRParams(0.5, 2.0, 1.0))


@check("cir-model", "charfn-mgf-consistency")
def _charfn_mgf():
    z = np.linspace(-50, 50, 1001)
    worst = 0.0
    for p, x, t in zip(_PARAM_SETS, (2.0, 0.1, 6.0), (0.7, 1.5, 3.0)):
        logmod, phase = cir.charfn_marginal(p, x, t, z)
        lm = cir.log_mgf(p, x, t, 1j * z)
        dphase = np.angle(np.exp(1j * (phase - lm.imag)))
        worst = max(worst, float(np.max(np.abs(logmod - lm.real))), float(np.max(np.abs(dphase))))
    return worst, 1e-10


@check("cir-model", "ergodic-monotone")
def _ergodic_monotone():
    worst = 0.0
    for p, x in zip(_PARAM_SETS, (2.0, 0.1, 6.0)):
        vals = [tv_cir(p, x, k / p.a).value for k in (1, 2, 4, 8, 16)]
        worst = max(worst, float(np.max(np.diff(vals))))
    return worst, 1e-8


@check("cir-model", "normalization-identity")
def _norm_identity():
    worst = 0.0
    for p in _PARAM_SETS + (cir.CIRParams(1.0, 1.0, 0.003),):
        s1, h1 = cir.normalization_map(p)
        s2, h2 = cir.normalization_map_moments(p)
        worst = max(worst, abs(s1 - s2) / abs(s2), abs(h1 - h2) / abs(h2))
    return worst, 4 * np.finfo(float).eps


@check("cir-model", "feller-gate")
def _feller_gate():
    rejected = 0
    for eps in (np.sqrt(2.0), 1.5, 3.0):
        try:
            cir.CIRParams(1.0, 1.0, eps)
        except ValueError:
            rejected += 1
    return 3 - rejected, 0


@check("cir-model", "sampler-determinism")
def _sampler_determinism():
    p = cir.CIRParams(1.0, 1.0, 0.3)
    a = cir.sample_exact(p, 2.0, 1.0, 1000, np.random.default_rng(5))
    b = cir.sample_exact(p, 2.0, 1.0, 1000, np.random.default_rng(5))
    c = cir.sample_euler(p, 2.0, 1.0, 0.01, 200, np.random.default_rng(5))
    d = cir.sample_euler(p, 2.0, 1.0, 0.01, 200, np.random.default_rng(5))
    return float(np.max(np.abs(a - b)) + np.max(np.abs(c - d))), 0.0


def moment_zscores(samples, mean, var) -> tuple[float, float]:
    """Standardised errors of the sample mean and variance."""
    s = np.asarray(samples, dtype=float)
    n = s.size
    z_mean = (s.mean() - mean) / np.sqrt(var / n)
    m4 = np.mean((s - s.mean()) ** 4)
    z_var = (s.var(ddof=1) - var) / np.sqrt(max(m4 - var**2, 1e-300) / n)
    return float(z_mean), float(z_var)


@check("cir-model", "sampler-moments")
def _sampler_moments():
    rng = np.random.default_rng(20240)
    worst = 0.0
    for p, x, t in zip(_PARAM_SETS, (2.0, 0.1, 6.0), (0.7, 1.5, 3.0)):
        s = cir.sample_exact(p, x, t, 200_000, rng)
        zm, zv = moment_zscores(s, cir.mean_at(p, x, t), cir.var_at(p, x, t))
        worst = max(worst, abs(zm), abs(zv))
    return worst, 5.0, None, "max |z| of mean and variance"


@check("cir-model", "euler-vs-exact")
def _euler_vs_exact():
    p = cir.CIRParams(1.0, 1.0, 0.3)
    rng = np.random.default_rng(77)
    e = cir.sample_euler(p, 2.0, 1.0, 1e-3, 20_000, rng)
    x = cir.sample_exact(p, 2.0, 1.0, 20_000, rng)
    z = abs(e.mean() - x.mean()) / np.sqrt(e.var() / e.size + x.var() / x.size)
    return z, 5.0, None, "joint MC sd units, dt = 1e-3"


# ---------------------------------------------------------------- tv-engine

def _tv_pairs():
    return [
        (GaussianDist(0.0, 1.0), GaussianDist(0.7, 1.3), True),
        (GammaDist(3.0, 1.0), GammaDist(4.0, 1.5), False),
        (GammaDist(12.0, 2.0), GammaDist(14.0, 3.0), True),
        (cir.transition_law(cir.CIRParams(1.0, 1.0, 0.2), 2.0, 1.5), cir.stationary_law(cir.CIRParams(1.0, 1.0, 0.2)), True),
    ]


def _routes(A, B, fourier_ok):
    out = [tv_density_l1(A, B)]
    if fourier_ok:
        out.append(tv_fourier(A, B))
    return out


@check("tv-engine", "symmetry")
def _tv_symmetry():
    worst = 0.0
    for A, B, f_ok in _tv_pairs():
        for r1, r2 in zip(_routes(A, B, f_ok), _routes(B, A, f_ok)):
            worst = max(worst, abs(r1.value - r2.value))
    return worst, 1e-12


@check("tv-engine", "range")
def _tv_range():
    worst = 0.0
    for A, B, f_ok in _tv_pairs():
        for r in _routes(A, B, f_ok):
            worst = max(worst, -r.value, r.value - 1.0 - r.err_estimate)
    p = cir.CIRParams(1.0, 1.0, 0.1)
    for t in (0.0, 1e-3, 0.5, 30.0):
        r = tv_cir(p, 3.0, t)
        worst = max(worst, -r.value, r.value - 1.0 - r.err_estimate)
    return max(worst, 0.0), 0.0


@check("tv-engine", "affine-invariance")
def _tv_affine():
    worst = 0.0
    for A, B, f_ok in _tv_pairs()[:3]:
        base = _routes(A, B, f_ok)
        for c in (0.5, 3.0):
            for v in (-1.0, 2.0):
                moved = _routes(AffineLaw(A, c, v), AffineLaw(B, c, v), f_ok)
                for r0, r1 in zip(base, moved):
                    worst = max(worst, abs(r1.value - r0.value) / (2.0 * max(r0.err_estimate, r1.err_estimate)))
    return worst, 1.0, None, "ratio |diff| / (2 err_estimate)"


def random_cir_cases(n: int = 10, seed: int = 11):
    """Random ``(params, x, t)`` with moderate ``q + 1`` in ``[5, 100]``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        a, b, q1 = rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(5.0, 100.0)
        p = cir.CIRParams(a, b, np.sqrt(2 * b / q1))
        out.append((p, rng.uniform(0.0, 3.0 * b / a), rng.uniform(0.2, 3.0) / a))
    return out


@check("tv-engine", "route-agreement")
def _route_agreement():
    worst = 0.0
    for p, x, t in random_cir_cases():
        law, stat = cir.transition_law(p, x, t), cir.stationary_law(p)
        d = tv_density_l1(law, stat)
        f = tv_fourier(CharFn.from_cir(p, x, t), CharFn.from_law(stat))
        worst = max(worst, abs(d.value - f.value) / (d.err_estimate + f.err_estimate))
    return worst, 1.0, None, "ratio gap / (sum of err_estimates)"


@check("tv-engine", "triangle-inequality")
def _tv_triangle():
    worst = -np.inf
    rng = np.random.default_rng(3)
    for _ in range(4):
        A, B, C = (GaussianDist(rng.uniform(-1, 1), rng.uniform(0.5, 2)) for _ in range(3))
        ab, bc, ac = tv_density_l1(A, B), tv_density_l1(B, C), tv_density_l1(A, C)
        slack = 3.0 * (ab.err_estimate + bc.err_estimate + ac.err_estimate)
        worst = max(worst, ac.value - ab.value - bc.value - slack)
    return max(worst, 0.0), 0.0


# ---------------------------------------------------------------- wasserstein

def _wp_pairs():
    return [(GaussianDist(0.0, 1.0), GaussianDist(0.7, 1.3)), (GammaDist(3.0, 1.0), GammaDist(4.0, 1.5))]


@check("wasserstein", "shift-invariance")
def _wp_shift():
    worst = 0.0
    for A, B in _wp_pairs():
        for p in (1.0, 2.0):
            w = wp_quantile(A, B, p)
            for v in (-2.0, 5.0):
                w2 = wp_quantile(AffineLaw(A, 1.0, v), AffineLaw(B, 1.0, v), p)
                worst = max(worst, abs(w2.value - w.value) / (2.0 * max(w.err_estimate, w2.err_estimate)))
    return worst, 1.0, None, "ratio |diff| / (2 err_estimate)"


@check("wasserstein", "homogeneity")
def _wp_homogeneity():
    worst = 0.0
    for A, B in _wp_pairs():
        for c in (0.5, 4.0):
            for p in (1.0, 2.0):
                w = wp_quantile(A, B, p)
                w2 = wp_quantile(AffineLaw(A, c, 0.0), AffineLaw(B, c, 0.0), p)
                worst = max(worst, abs(w2.value - c * w.value) / (2.0 * max(c * w.err_estimate, w2.err_estimate)))
            # p = 1/2: exact OT between atom sets, scaling every atom by c
            da, db = DiscreteMeasure.from_law(A, 128), DiscreteMeasure.from_law(B, 128)
            base = wp_discrete_ot(da, db, 0.5)
            scaled = wp_discrete_ot(DiscreteMeasure.uniform(c * da.locations), DiscreteMeasure.uniform(c * db.locations), 0.5)
            worst = max(worst, abs(scaled - c**0.5 * base) / (1e-12 * max(base, 1e-300)))
    return worst, 1.0, None, "ratio |diff| / (2 err_estimate); p = 0.5 relative to 1e-12"


def random_wp_pairs(n: int = 6, seed: int = 7):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        if k % 2:
            out.append((GaussianDist(rng.uniform(-2, 2), rng.uniform(0.5, 2)), GaussianDist(rng.uniform(-2, 2), rng.uniform(0.5, 2))))
        else:
            out.append((GammaDist(rng.uniform(4, 12), rng.uniform(1, 3)), GammaDist(rng.uniform(4, 12), rng.uniform(1, 3))))
    return out


@check("wasserstein", "quantile-vs-ot")
def _quantile_vs_ot():
    worst_ratio, worst_gap = 0.0, 0.0
    for A, B in random_wp_pairs():
        for p in (1.0, 2.0):
            w = wp_quantile(A, B, p)
            o512 = wp_discrete_ot(DiscreteMeasure.from_law(A, 512), DiscreteMeasure.from_law(B, 512), p)
            o256 = wp_discrete_ot(DiscreteMeasure.from_law(A, 256), DiscreteMeasure.from_law(B, 256), p)
            gap = abs(o512 - o256)
            worst_gap = max(worst_gap, gap)
            # the quantile route itself is only asked for 1e-8 relative accuracy
            tol = 2.0 * gap + w.err_estimate + 1e-8 * w.value
            worst_ratio = max(worst_ratio, abs(o512 - w.value) / tol)
    return worst_gap, 1e-3, worst_ratio <= 1.0, f"refinement gap; route ratio {worst_ratio:.3g} (must be <= 1)"


@check("wasserstein", "metric-axioms")
def _wp_metric():
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(3):
        A, B, C = (GaussianDist(rng.uniform(-1, 1), rng.uniform(0.5, 2)) for _ in range(3))
        for p in (1.0, 2.0):
            ab, ba = wp_quantile(A, B, p), wp_quantile(B, A, p)
            bc, ac = wp_quantile(B, C, p), wp_quantile(A, C, p)
            worst = max(worst, abs(ab.value - ba.value) - 2 * (ab.err_estimate + ba.err_estimate) - 1e-15,
                        ac.value - ab.value - bc.value - 3 * (ab.err_estimate + bc.err_estimate + ac.err_estimate))
    return max(worst, 0.0), 0.0


# ---------------------------------------------------------------- cutoff

_P11 = cir.CIRParams(1.0, 1.0, 0.01)


@check("cutoff", "profile-composition")
def _profile_composition():
    r = np.linspace(-3, 5, 33)
    c = abs(cutoff.cutoff_constant(_P11, 2.0))
    direct = np.array([tv_gaussian_shift(c * np.exp(-ri)) for ri in r])
    return float(np.max(np.abs(cutoff.profile_tv(_P11, 2.0, r) - direct))), 0.0


@check("cutoff", "profile-strict-decrease")
def _profile_decrease():
    # erf saturates to 1.0 in double precision below r ~ -2.3 for |C| = sqrt 2
    r = np.arange(-2.0, 8.0 + 1e-12, 0.25)
    ok = (_strictly_decreasing(cutoff.profile_tv(_P11, 2.0, r))
          and _strictly_decreasing(cutoff.profile_wp(_P11, 2.0, r, 1.0))
          and _strictly_decreasing(cutoff.profile_wp(_P11, 2.0, r, 2.0)))
    return 0.0 if ok else 1.0, 0.0, None, "r in [-2, 8]"


@check("cutoff", "profile-tail-asymptotics")
def _profile_tail():
    x = 1.0 + 1.0 / np.sqrt(2.0)  # |C_x| = 1 for a = b = 1
    c = abs(cutoff.cutoff_constant(_P11, x))
    ratio = cutoff.profile_tv(_P11, x, 8.0) * np.sqrt(2 * np.pi) * np.exp(8.0) / c
    return abs(ratio - 1.0), 0.01, None, f"ratio {ratio:.8f}"


@check("cutoff", "mixing-time-equivalence")
def _mixing_equivalence():
    p = cir.CIRParams(1.0, 1.0, 0.003)
    q = cutoff.MixingQuery(0.25)
    t = cutoff.mixing_time_numeric(p, 2.0, q)
    s = cutoff.CutoffSchedule.of(p)
    gap = abs(s.window_coordinate(t) - cutoff.profile_tv_inverse(p, 2.0, 0.25))
    return gap, cutoff.ACCEPT_BAND, None, BAND_NOTE


@check("cutoff", "constant-symmetry")
def _constant_symmetry():
    worst = 0.0
    for p in (_P11, cir.CIRParams(2.0, 3.0, 0.1)):
        m = p.b / p.a
        for d in (0.1, 0.5):
            worst = max(worst, abs(abs(cutoff.cutoff_constant(p, m + d)) - abs(cutoff.cutoff_constant(p, m - d))))
    return worst, 1e-14


# ---------------------------------------------------------------- acceptance

_A1 = dict(a=1.0, b=1.0, x=2.0)


@check("acceptance", "criterion-1-tv-profile")
def _criterion_1():
    rs = (-2.0, -1.0, 0.0, 1.0, 2.0)
    gaps = np.zeros((len(rs), len(cutoff.EPS_GRID)))
    for j, eps in enumerate(cutoff.EPS_GRID):
        p = cir.CIRParams(_A1["a"], _A1["b"], eps)
        for i, r in enumerate(rs):
            gaps[i, j] = abs(cutoff.empirical_profile(p, _A1["x"], r).value - cutoff.profile_tv(p, _A1["x"], r))
    # a gap already at the 1e-6 level (saturated profile) counts as converged
    trend = bool(np.all(np.diff(gaps, axis=1) <= 1e-6))
    final = float(gaps[:, -1].max())
    return final, 0.02, final <= 0.02 and trend, f"final gaps {np.array2string(gaps[:, -1], precision=3)}; monotone trend {trend}"


@check("acceptance", "criterion-2-w1-profile")
def _criterion_2():
    rs = (-2.0, -1.0, 0.0, 1.0, 2.0)
    rel = np.zeros((len(rs), len(cutoff.EPS_GRID)))
    for j, eps in enumerate(cutoff.EPS_GRID):
        p = cir.CIRParams(_A1["a"], _A1["b"], eps)
        for i, r in enumerate(rs):
            emp = cutoff.empirical_profile(p, _A1["x"], r, "wp", p=1.0).value
            rel[i, j] = abs(emp / np.exp(-r) - 1.0)
    return float(rel[:, -1].max()), 0.02


@check("acceptance", "criterion-3-mixing-anchor")
def _criterion_3():
    p = cir.CIRParams(1.0, 2.0, 0.003)
    x = 4.0
    r_inv = cutoff.profile_tv_inverse(p, x, 0.25)
    s = cutoff.CutoffSchedule.of(p)
    t = cutoff.mixing_time_numeric(p, x, cutoff.MixingQuery(0.25))
    gap = abs(t - s.time_at(1.1435)) / s.omega_eps
    ok = abs(r_inv - 1.1435) <= 5e-4 and gap <= cutoff.ACCEPT_BAND
    return gap, cutoff.ACCEPT_BAND, ok, f"G^-1(0.25) = {r_inv:.7f}; {BAND_NOTE}"


@check("acceptance", "criterion-4-no-cutoff")
def _criterion_4():
    p = cir.CIRParams(1.0, 1.0, 0.003)
    x = p.b / p.a
    worst = 0.0
    for r in (-2.0, 0.0, 2.0):
        worst = max(worst, cutoff.empirical_profile(p, x, r).value,
                    cutoff.empirical_profile(p, x, r, "wp", p=1.0).value)
    return worst, 0.02


@check("acceptance", "criterion-5-local-clt")
def _criterion_5():
    ladder = [standardized_gamma_tv_to_gaussian(a) for a in (1e2, 1e3, 1e4)]
    stat = []
    for eps in (0.1, 0.01):
        p = cir.CIRParams(1.0, 1.0, eps)
        scale, shift = cir.normalization_map(p)
        stat.append(tv_density_l1(AffineLaw(cir.stationary_law(p), scale, shift), GaussianDist(0.0, 1.0)).value)
    final = max(ladder[-1], stat[-1])
    ok = _strictly_decreasing(ladder) and _strictly_decreasing(stat) and final <= 0.01
    return final, 0.01, ok, f"gamma ladder {np.round(ladder, 6).tolist()}; stationary {np.round(stat, 6).tolist()}"


def _spatial_l2(A, B) -> float:
    lo = min(A.mean - 14 * A.sd, B.mean - 14 * B.sd)
    hi = max(A.mean + 14 * A.sd, B.mean + 14 * B.sd)
    edges = np.unique(np.concatenate((np.linspace(lo, hi, 41), [A.mean, B.mean])))
    val, _ = integrate(lambda y: (A.pdf(y) - B.pdf(y)) ** 2, edges[:-1], edges[1:], abs_tol=1e-15, rel_tol=1e-13)
    return float(np.sum(val))


@check("acceptance", "criterion-6-fourier-consistency")
def _criterion_6():
    route_gap = 0.0
    bounds_ok = True
    for p, x, t in random_cir_cases():
        law, stat = cir.transition_law(p, x, t), cir.stationary_law(p)
        A, B = CharFn.from_cir(p, x, t), CharFn.from_law(stat)
        route_gap = max(route_gap, abs(tv_density_l1(law, stat).value - tv_fourier(A, B).value))
        # the modulus bound must hold on every grid the engine might pick
        g = auto_grid(A, B)
        for L in (g.freq_cutoff, 2 * g.freq_cutoff, 4 * g.freq_cutoff):
            z = np.linspace(0.0, L, 4097)
            bounds_ok &= bool(np.all(A.log_charfn(z)[0] <= A.log_bound(z) + 1e-12))
            bounds_ok &= _measured_tail(A, L) <= A.tail_mass(L) * (1 + 1e-8) + 1e-300
    l2_gap = 0.0
    for A, B in ((GaussianDist(0.0, 1.0), GaussianDist(0.5, 1.2)), (GaussianDist(-1.0, 0.7), GaussianDist(1.0, 2.0)),
                 (GaussianDist(2.0, 0.3), GaussianDist(2.1, 0.35))):
        l2_gap = max(l2_gap, abs(l2_fourier_distance(A, B).value - _spatial_l2(A, B)))
    ok = route_gap <= 1e-6 and l2_gap <= 1e-8 and bounds_ok
    return route_gap, 1e-6, ok, f"L2 gap {l2_gap:.3g} (tol 1e-8); tail bound respected {bounds_ok}"


@check("acceptance", "criterion-7-mgf-clt")
def _criterion_7():
    eps_grid = (0.1, 0.01, 0.001)
    final = 0.0
    shrinking = True
    for z in (-1.0, 0.5, 1.0):
        gaps = [cutoff.normalized_clt_gap(cir.CIRParams(1.0, 1.0, e), 2.0, z, r=0.0) for e in eps_grid]
        shrinking &= _strictly_decreasing(gaps)
        final = max(final, gaps[-1])
    # x = b/a, growing time 1/eps: target exp(z^2 / 2)
    p = cir.CIRParams(1.0, 1.0, 0.001)
    centred = max(cutoff.normalized_clt_gap(p, 1.0, z, t=1.0 / p.eps) for z in (-1.0, 0.5, 1.0))
    final = max(final, centred)
    return final, 1e-2, shrinking and final <= 1e-2, f"x = b/a gap {centred:.3g}"


def second_order_gaps(alphas=(1e2, 1e4, 1e6)) -> dict[str, list[float]]:
    """Relative gaps of the three second-order sequences to their limits."""
    lim_i, lim_ii, lim_iii = np.exp(-0.5), np.exp(-0.5 + 2.0), np.exp(0.5)
    return {
        "I": [abs(cutoff.asymptotic_seq_I(a, 1.0) / lim_i - 1) for a in alphas],
        "II": [abs(cutoff.asymptotic_seq_II(a, 1.0, 2.0) / lim_ii - 1) for a in alphas],
        "III": [abs(cutoff.asymptotic_seq_III(a, 1j) / lim_iii - 1) for a in alphas],
    }


@check("acceptance", "criterion-8-second-order")
def _criterion_8():
    gaps = second_order_gaps()
    final = max(g[-1] for g in gaps.values())
    trend = all(_strictly_decreasing(g) for g in gaps.values())
    detail = "; ".join(f"{k} final {v[-1]:.3g}" for k, v in gaps.items())
    return final, 1e-3, trend and final <= 1e-3, detail


@check("acceptance", "criterion-9-property-suites")
def _criterion_9():
    results = [run_one(m, n, f) for m, n, f in _REGISTRY if m != "acceptance"]
    failed = [r.name for r in results if not r.passed]
    return len(failed), 0, None, ("failed: " + ", ".join(failed)) if failed else f"{len(results)} checks green"


@check("acceptance", "criterion-10-monotonicity")
def _criterion_10():
    worst = -np.inf
    cases = ((cir.CIRParams(1.0, 1.0, 0.1), 2.0), (cir.CIRParams(2.0, 1.0, 0.3), 0.1), (cir.CIRParams(0.5, 2.0, 0.05), 8.0))
    for p, x in cases:
        vals = [tv_cir(p, x, k / p.a).value for k in (0.5, 1, 2, 4, 8, 16)]
        worst = max(worst, float(np.max(np.diff(vals))))
    return max(worst, 0.0), 1e-8, None, f"max increase {worst:.3g}"


def ks_statistic(samples, law) -> float:
    return float(stats.kstest(np.asarray(samples, dtype=float), law.cdf).statistic)
