"""Point spaces, modular families and sampled axiom checks."""

from .axioms import (
    Membership,
    NonMonotoneWarning,
    check_modular_axioms,
    check_phi_convexity,
    inverse_gauge,
    modular_set_membership,
    regularize,
)
from .family import (
    Claims,
    ModularFamily,
    build,
    from_exponential_family,
    from_function,
    from_orlicz,
    from_saturating_metric,
    from_scaled_metric,
    power_law,
    scaled_power,
    step_modular,
)
from .spaces import TOL_METRIC, LambdaGrid, PointSpace, metric_violations

__all__ = [
    "Claims",
    "LambdaGrid",
    "Membership",
    "ModularFamily",
    "NonMonotoneWarning",
    "PointSpace",
    "TOL_METRIC",
    "build",
    "check_modular_axioms",
    "check_phi_convexity",
    "from_exponential_family",
    "from_function",
    "from_orlicz",
    "from_saturating_metric",
    "from_scaled_metric",
    "inverse_gauge",
    "metric_violations",
    "modular_set_membership",
    "power_law",
    "regularize",
    "scaled_power",
    "step_modular",
]
