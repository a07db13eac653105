"""Hypocoercive Langevin dynamics on the planar motion group.

A self-driven particle translates along its heading while the heading
diffuses on the circle and couples to a confining potential.  The package
verifies the operator identities behind the exponential-decay estimate
exactly, discretizes the generator for general potentials, simulates path
ensembles, and assembles certified decay-rate reports.
"""
from .errors import (
    BoxTooSmallError,
    ConfigurationError,
    FitError,
    NumericalError,
    TableFormatError,
    UnsupportedPotentialError,
)
from .geometry import (
    FieldId,
    GroupPoint,
    apply_field,
    group_compose,
    group_inverse,
    heading_vector,
    identity,
    normal_vector,
    wrap_angle,
)
from .operators import OperatorParams, apply_generator, inner_product, random_test_function
from .polytrig import PolyTrig
from .potentials import (
    DoubleWell,
    Grid2D,
    Potential,
    Quadratic,
    Tabulated,
    from_config,
    gibbs_weights,
    normalization,
    poincare_constant,
)
from .rates import RateReport, build_report, microscopic_constant, macroscopic_constant, rate_bound, validate
from .simulate import (
    InitialLaw,
    ObservableSeries,
    SimConfig,
    autocovariance_rate,
    decay_rate_fit,
    ensemble_autocovariance,
    sample_equilibrium,
    simulate_ensemble,
    stationarity_test,
)
from .spectral import (
    Discretization,
    OperatorSet,
    assemble,
    build_discretization,
    coercivity_report,
    elliptic_estimate_check,
    poincare_macroscopic,
    spectral_gap,
    verify_projection_identities,
)

__version__ = "0.1.0"
