"""Simulation of reconfigurable networks of coupled mechanical resonators.

The envelope model evolves exactly through piecewise-constant coupling
schedules; the full model integrates the pumped second-order equations and
reads them out with a software lock-in.
"""

from .calibration import VoltageCalibration, coupling_from_voltage, fit_calibration, voltage_for_coupling
from .config import ExperimentConfig, load_config, parse_config, serialize_config
from .exceptions import (
    ConfigError,
    DegenerateFit,
    InvalidArgument,
    InvalidSchedule,
    InvalidState,
    NumericalFailure,
    NumericalOverflow,
    OutOfRange,
    PhaseUndefined,
    ResonetError,
    TransientRegion,
    UnsupportedTopology,
)
from .full import (
    MechanicalTrajectory,
    PumpTerm,
    compare_to_rwa,
    evolve_full,
    lambda_from_rwa,
    run_full_pst,
    step_halving_change,
)
from .linalg import jacobi_eigh
from .lockin import DemodChannel, LockInConfig, LockInDemodulator, channel_phase_shift, demodulate
from .model import (
    CouplingSpec,
    EnvelopeState,
    ExcitationPulse,
    Network,
    ResonatorSpec,
    Schedule,
    Segment,
    fixture_resonators,
    validate_network,
)
from .runner import ResultBundle, emit_results, run_experiment
from .rwa import (
    CouplingMatrix,
    EnvelopePropagator,
    EnvelopeTrajectory,
    apply_damping_envelope,
    build_coupling_matrix,
    evolve_envelope,
    evolve_schedule,
    normalize_snapshot,
    phase_at,
    transfer_fidelity,
)
from .spectrum import ResponseCurve, eigenvalues, frequency_response, peak_positions
from .synthesis import (
    PstProfile,
    is_strong_coupling,
    mirror_index,
    parity_phase,
    pst_couplings,
    pst_network,
    pst_segment,
    transfer_period,
)

__version__ = "0.1.0"
