"""Periodic solutions of a two-patch Nicholson system with saturating mortality.

Hypothesis checks, a priori bounds, averaged-map degree certificates and
delay-differential simulation of periodic orbits.
"""

from .coeffs import Extrema, Harmonic, PeriodicCoefficient, extrema, period_integral
from .model import (
    BirthTerm,
    MortalityTerm,
    NicholsonSystem,
    PoleError,
    birth_f,
    mortality,
    phi,
    rhs,
)
from .analysis import (
    ChenWangReport,
    ConditionResult,
    EmptyInterval,
    HypothesisReport,
    admissible_parameter_interval,
    check_chen_wang,
    check_hypotheses,
)
from .bounds import (
    BoundsReport,
    BoundsUnderflow,
    HypothesisViolated,
    Rectangle,
    build_rectangle,
    conjugate_r1,
    lower_threshold,
    upper_threshold,
)
from .degree import (
    AveragedMap,
    MirandaCertificate,
    NoConvergence,
    RefinementExceeded,
    ZeroOnBoundary,
    brouwer_degree,
    eval_g,
    find_root_g,
    miranda_check,
)
from .dde import (
    HistorySegment,
    NonFiniteState,
    OutOfRange,
    Trajectory,
    integrate,
    interpolate,
)
from .periodic import (
    NotConverged,
    PeriodicOrbit,
    find_periodic,
    periodicity_residual,
    verify_in_rectangle,
)
from .config import ConfigError, SimulationSettings, SystemConfig

__version__ = "0.1.0"
