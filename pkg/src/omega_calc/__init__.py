"""Finite-dimensional complex interpolation of Köthe spaces.

Calderón norms and their differentials, indicator (entropy) functionals,
centralizers and twisted sums, plus a discretized circle lab for the
Szegő projection.
"""

__version__ = "0.1.0"

from .measure import (
    L0Metric,
    MeasureSpace,
    MVec,
    NonConvergenceError,
    PreconditionError,
    lp_norm,
    measure_of_superlevel,
    superlevel_measures,
)
from .spaces import (
    CalderonProduct,
    IndicatorInduced,
    KotheSpace,
    Multiplier,
    ScaledSpace,
    WeightedLp,
    dual_norm,
    multiplier_apply,
    norm,
)
from .interpolate import (
    Couple,
    Factorization,
    calderon_norm,
    canonical_omega,
    closed_form_lp_couple,
    scaling_shift,
    wolff_glue,
)
from .indicator import (
    AffineIndicator,
    ClosedFormLp,
    IndicatorFn,
    Lozanovsky,
    NumericIndicator,
    delta_phi,
    estimate_delta,
    indicator_affine,
    indicator_eval,
    indicator_extend,
    indicator_of,
    l1_indicator,
    lozanovsky_factorize,
    norm_from_indicator,
)
from .centralizer import (
    AffineCentralizer,
    CanonicalOmega,
    Centralizer,
    LogModulus,
    LogSymbol,
    PhiOmegaIndicator,
    RankLog,
    ZeroCentralizer,
    check_axioms,
    fit_equivalence,
    lift,
    phi_omega,
    split_centralizer,
)
from .twisted import (
    LinearOperator,
    TwistedElement,
    commutator_bound,
    derived_norm_upper,
    twisted_quasinorm,
)
from .circle import (
    CircleGrid,
    SzegoProjection,
    commutator_experiment,
    omega1,
    omega2,
    omega3,
    project_hardy,
)
