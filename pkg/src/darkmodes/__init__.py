"""Dark modes of quantum linear systems: analysis, synthesis and moment simulation."""
from .decomposition import (
    IODecomposition,
    ModeDecomposition,
    PMatrix,
    build_analysis_pmatrix,
    check_dark_condition,
    check_invariance_condition,
    classify_modes,
    decompose,
    decompose_io,
    pbh_oracle,
    pmatrix,
)
from .errors import (
    DarkModeError,
    DimensionError,
    InsufficientDataError,
    InvalidInputError,
    NoSteadyStateError,
    StructureError,
)
from .model import (
    QuantumLinearSystem,
    build_C_matrix,
    build_system,
    check_physical_realizability,
    system_from_C,
    transform,
)
from .moments import MomentTrajectory, NoiseModel, simulate, steady_state_covariance
from .symplectic import (
    Tolerances,
    kernel_basis,
    make_sigma,
    numeric_rank,
    symplectic_pair_basis,
)
from .synthesis import (
    InterconnectionSpec,
    cascade,
    cross_feedback,
    dark_hamiltonian_basis,
    direct_coupling,
    feedback_loop,
    hamiltonian_invariant_family,
    hamiltonian_range_invariant_check,
    interconnect,
)

__version__ = "0.1.0"
