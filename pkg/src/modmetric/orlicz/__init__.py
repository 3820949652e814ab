"""Discrete Orlicz spaces: measures, integrands, modulars and compactness evidence."""

from .integrands import Integrand, build_integrand, exp_squared, lp, variable_exponent
from .kr import (
    BoundaryShiftWarning,
    StageFailure,
    averaging,
    emc_check,
    jensen_gap,
    kr_compactness,
    net_table_csv,
    tightness_check,
    translation_modulus,
    worst_set,
)
from .measure import DiscreteMeasureSpace, Partition, dyadic_ladder, dyadic_partition
from .modular import OrliczModular, induced_modular, modular_convergence_check, rho

__all__ = [
    "BoundaryShiftWarning",
    "DiscreteMeasureSpace",
    "Integrand",
    "OrliczModular",
    "Partition",
    "StageFailure",
    "averaging",
    "build_integrand",
    "dyadic_ladder",
    "dyadic_partition",
    "emc_check",
    "exp_squared",
    "induced_modular",
    "jensen_gap",
    "kr_compactness",
    "lp",
    "modular_convergence_check",
    "net_table_csv",
    "rho",
    "tightness_check",
    "translation_modulus",
    "variable_exponent",
    "worst_set",
]
