"""Spectrum finding for pair-interaction Hamiltonians via pulse-engineered conditional evolution."""

__version__ = "0.1.0"

from .conditional import (
    IDEAL,
    PULSE,
    ConditionalEvolution,
    ConversionParams,
    conditional_evolution,
    ideal_conditional,
    resolve_conventions,
)
from .document import dump_document, parse_document
from .hamiltonian import PairHamiltonian, random_hamiltonian, spread_bound, to_dense
from .pauli import NumericalError, PauliAxis, PauliString, hermitian_eig
from .pulses import PulseSchedule, build_orthogonal_array, decoupling_schedule, simulate_schedule, symbolic_average
from .qpe import PEConfig, density_of_states, gap_report, run_qpe, sample_qpe

__all__ = [
    "IDEAL",
    "PULSE",
    "ConditionalEvolution",
    "ConversionParams",
    "NumericalError",
    "PEConfig",
    "PairHamiltonian",
    "PauliAxis",
    "PauliString",
    "PulseSchedule",
    "build_orthogonal_array",
    "conditional_evolution",
    "decoupling_schedule",
    "density_of_states",
    "dump_document",
    "gap_report",
    "hermitian_eig",
    "ideal_conditional",
    "parse_document",
    "random_hamiltonian",
    "resolve_conventions",
    "run_qpe",
    "sample_qpe",
    "simulate_schedule",
    "spread_bound",
    "symbolic_average",
    "to_dense",
]
