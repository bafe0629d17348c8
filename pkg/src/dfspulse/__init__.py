"""DFS-encoded trapped-ion qubits: gate algebra, decoupling sequences, baths."""

from .pauli import (
    OperatorSum, PauliTerm, commutator, anticommutator, commutes, pauli_mul,
    to_dense, expm_i, generator_of, embed_sites, is_valid_state,
)
from .dfs import (
    DfsRegister, ErrorDecomposition, basis_operator, classify, code_isometry,
    encode, leakage_probability, logical_error_norms, logical_operators,
    tilde_operators, bucket_norms,
)
from .gates import (
    HardwareParams, SmGateSpec, cancellation_constraints, dfs_restrict,
    lamb_dicke_margin, logical_gate, off_resonant_penalty, sm_decompose,
    sm_unitary, tau_sm, u4, x_phi,
)
from .sequences import (
    Drive, EvolutionModel, Free, NamedPulse, PulseSequence, RawPulse, SmPulse,
    combined_gate, euler_rotation, four_pulse_cycle, leak_elim_cycle,
    named_pulse, parity_kick, propagator, seq_from_text, seq_to_text,
    symmetrize_block4, symmetrize_pair, ten_pulse_cycle,
)
from .baths import (
    DephasingBath, SpectralNoise, VibBath, bch_bound, dephasing_run,
    qubit_motional_error, sample_1f_trajectory, suppression_scan,
    thermal_numbers, timescale_check, vib_bindings, vib_hamiltonian,
)

__version__ = "0.1.0"
