"""sparsemud: noiseless sparse-CDMA multiuser detection by unit clause propagation.

Generates sparse spreading codes (Poissonian and regular ensembles), decodes
superposed BPSK signals by iterated decimation with guess and contradiction
tracking, and predicts the deterministic-phase threshold x_D from the
mean-field differential equations of the decoding process.
"""

from .ensemble import (
    SparseCode,
    DegreeStats,
    sample_poissonian,
    sample_regular,
    degree_stats,
    read_code,
    write_code,
)
from .channel import (
    BitVector,
    Signal,
    random_bits,
    transmit,
    apply_erasure,
    erase_chips,
    read_signal,
    write_signal,
    read_bits,
    write_bits,
)
from .ucp import (
    UnitClauseSet,
    DecoderState,
    DecodeResult,
    initial_unit_clauses,
    decimate,
    run_ucp,
    bit_error_rate,
)
from .oracle import (
    SolutionSet,
    enumerate_solutions,
    verify_deterministic_phase,
    z_factor_oracle,
)
from .asymptotics import (
    OdeState,
    PolynomialSolution,
    Trajectory,
    z_factor,
    z_factor_exact,
    poisson_initial_state,
    regular_initial_state,
    ode_rhs_poisson,
    ode_rhs_regular,
    integrate,
    poisson_polynomial_solution,
    write_trajectory_csv,
    find_xd,
)
from .experiments import (
    BatchConfig,
    BatchStats,
    run_batch,
    sweep_phase_diagram,
    compare_asymptotic_empirical,
)

__version__ = "0.1.0"

__all__ = [
    "SparseCode",
    "DegreeStats",
    "sample_poissonian",
    "sample_regular",
    "degree_stats",
    "read_code",
    "write_code",
    "BitVector",
    "Signal",
    "random_bits",
    "transmit",
    "apply_erasure",
    "erase_chips",
    "read_signal",
    "write_signal",
    "read_bits",
    "write_bits",
    "UnitClauseSet",
    "DecoderState",
    "DecodeResult",
    "initial_unit_clauses",
    "decimate",
    "run_ucp",
    "bit_error_rate",
    "SolutionSet",
    "enumerate_solutions",
    "verify_deterministic_phase",
    "z_factor_oracle",
    "OdeState",
    "PolynomialSolution",
    "Trajectory",
    "z_factor",
    "z_factor_exact",
    "poisson_initial_state",
    "regular_initial_state",
    "ode_rhs_poisson",
    "ode_rhs_regular",
    "integrate",
    "poisson_polynomial_solution",
    "write_trajectory_csv",
    "find_xd",
    "BatchConfig",
    "BatchStats",
    "run_batch",
    "sweep_phase_diagram",
    "compare_asymptotic_empirical",
]
