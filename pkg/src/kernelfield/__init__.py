"""Kernel-expansion modeling, estimation, and control of spatiotemporal
scalar fields.

A field f(x) is represented as a weighted sum of kernel sections at fixed
centers; the weights follow a linear dynamical system.  The package learns
that system from data, analyzes how many point sensors/actuators it needs,
estimates the weight state with a Kalman filter, and drives the field to a
reference with an LQR controller.
"""

from .errors import (
    ConfigError,
    FilterError,
    InputError,
    NumericalError,
    OutputExistsError,
    ParseError,
    PlacementError,
    SchemaError,
    SynthesisError,
    UncontrollableError,
)
from .kernels import (
    FAMILIES,
    KernelSpec,
    ShadedReport,
    eval_kernel,
    is_l_shaded,
    is_shaded,
    kernel_matrix,
)
from .rkhs import (
    Dictionary,
    SampleSet,
    bandwidth_grid_search,
    evaluate_field,
    infer_weights,
    sparsify_dictionary,
)
from .sysid import (
    ControllabilityReport,
    LinearModel,
    ObservabilityReport,
    PlacementCertificate,
    PlacementResult,
    SpectralSummary,
    controllability_matrix,
    is_controllable,
    is_observable,
    learn_transition,
    observability_matrix,
    propose_placement,
    spectral_summary,
)
from .observer import (
    FieldPrediction,
    ObserverConfig,
    ObserverState,
    observer_init,
    observer_predict,
    observer_step,
    predict_field,
)
from .controller import (
    ActuatorSet,
    ControllerGains,
    apply_control_field,
    control_operator,
    solve_lqr,
    tracking_command,
    with_reference,
)
from .field_sim import (
    Grid1D,
    SyntheticDataset,
    cfl_limit,
    diffusion_step,
    generate_synthetic_field_data,
    ingest_grid_csv,
    simulate_diffusion,
    write_grid_csv,
    write_trajectory_csv,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
