"""Numerical laboratory for the cutoff phenomenon of the CIR / Feller diffusion."""

from .cir import CIRParams, DerivedConstants, stationary_law, transition_law
from .cutoff import (
    CutoffSchedule,
    MixingQuery,
    MixingTimeEstimate,
    cutoff_constant,
    empirical_profile,
    mixing_time_asymptotic,
    mixing_time_numeric,
    profile_tv,
    profile_tv_inverse,
    profile_wp,
    profile_wp_inverse,
)
from .errors import CirlabError
from .quadrature import QuadratureSettings
from .tv import CharFn, DistanceResult, FourierGrid, tv_cir, tv_density_l1, tv_fourier
from .wasserstein import DiscreteMeasure, WassersteinOrder, wp_cir, wp_quantile

__version__ = "0.1.0"

__all__ = [
    "CIRParams", "DerivedConstants", "stationary_law", "transition_law",
    "CutoffSchedule", "MixingQuery", "MixingTimeEstimate", "cutoff_constant", "empirical_profile",
    "mixing_time_asymptotic", "mixing_time_numeric", "profile_tv", "profile_tv_inverse",
    "profile_wp", "profile_wp_inverse", "CirlabError", "QuadratureSettings", "CharFn",
    "DistanceResult", "FourierGrid", "tv_cir", "tv_density_l1", "tv_fourier",
    "DiscreteMeasure", "WassersteinOrder", "wp_cir", "wp_quantile", "__version__",
]
