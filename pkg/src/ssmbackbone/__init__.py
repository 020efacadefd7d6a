"""Spectral-submanifold and backbone-curve identification from decay data.

Workflow: load or simulate decaying scalar signals, shift the equilibrium to
the origin, delay-embed, fit a polynomial one-step map, diagonalize its
linear part, solve the invariance equations for each selected mode pair, and
trace the backbone curve (instantaneous frequency vs amplitude).
"""

from .backbone import (
    BackboneCurve,
    backbone_curve,
    default_rho_grid,
    instantaneous_frequency,
    nominal_amplitude,
    observed_amplitude,
    validity_radius,
)
from .benchkit import (
    MechanicalParams,
    Trajectory,
    analytic_backbone,
    analytic_ssm_coefficients,
    complex_normal_form,
    generate_decay_signals,
    integrate,
    modal_initial_conditions,
    modal_matrix,
    sample_observable,
    shaw_pierre_rhs,
)
from .errors import (
    ConfigError,
    DataError,
    NumericalError,
    ResonanceError,
    SsmBackboneError,
)
from .polyfit import (
    PolyMap,
    compose_linear_change,
    evaluate_basis,
    fit_nar,
    monomial_basis,
    predict,
    residual_error,
)
from .signal_io import (
    DelayDataset,
    SignalSet,
    build_delay_dataset,
    load_signals,
    save_signals,
    shift_to_fixed_point,
)
from .spectral import (
    AuditReport,
    ModalParameters,
    SpectralData,
    eigendecompose,
    linear_part,
    modal_parameters,
    resonance_audit,
    spectral_quotient,
)
from .ssm import (
    InvarianceResidual,
    SsmModel,
    brute_force_homological,
    evaluate_ssm,
    invariance_residual,
    ssm_cubic_continuous,
    ssm_cubic_discrete,
    ssm_recursive,
)

__version__ = "0.1.0"
