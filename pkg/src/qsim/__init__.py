"""State-vector simulation of driven Rydberg atom arrays."""

__version__ = "0.1.0"

from .evolution import (  # noqa: E402
    BitstringHistogram,
    IntegrationError,
    IntegratorConfig,
    QuantumState,
    evolve,
    evolve_states,
    probabilities,
    rydberg_density,
    sample_shots,
)
from .fitting import FitError, FitResult, binomial_errors, chi_squared, fit_binomial, fit_damped_sinusoid  # noqa: E402
from .graphs import (  # noqa: E402
    UnitDiskGraph,
    classify_histogram,
    enumerate_max_independent_sets,
    is_independent_set,
    is_maximal,
    unit_disk_graph,
)
from .hamiltonian import apply_hamiltonian, blockade_radius, interaction_table  # noqa: E402
from .mitigation import ReadoutModel, apply_error_channel, mitigate_exact, mitigate_first_order  # noqa: E402
from .model import (  # noqa: E402
    AtomRegister,
    DeviceProfile,
    PulseSchedule,
    make_ramp_plateau_ramp,
    mhz,
    to_mhz,
    validate_register,
    validate_schedule,
)
from .optimize import (  # noqa: E402
    OptimizationResult,
    OptimizerConfig,
    ScheduleParameterization,
    build_detuning_schedule,
    objective_target_probability,
    optimize,
)
