"""causalis: certification tools for processes with indefinite causal order.

Process-matrix validity and causal separability, device-dependent /
device-independent / semi-device-independent certification of causal
order, assemblage membership for every partial-trust scenario, and
noise robustness of the quantum switch.
"""

from .assemblages import (
    Assemblage,
    AssemblageCausalDecomposition,
    AssemblageMembership,
    AssemblageReport,
    AssemblageWitness,
    SCENARIOS,
    SDI_BIPARTITE,
    SemiDeviceIndependentVerdict,
    SemiDeviceWitness,
    TTU,
    TUU,
    UTT,
    UUT,
    assemblage_from_process,
    certify_sdi,
    is_causal_assemblage,
    nonprocess_assemblage_example,
    realize_causal_assemblage,
    validate_assemblage,
)
from .behaviours import (
    Behaviour,
    CausalInequality,
    CausalMembership,
    DeterministicCausalStrategy,
    DeviceIndependentVerdict,
    DeviceDependentVerdict,
    born,
    certify_dd,
    certify_di,
    deterministic_strategy_count,
    enumerate_deterministic_causal,
    gyni_success,
    is_causal_behaviour,
    realize_causal_behaviour,
    realize_causal_behaviour_tripartite,
)
from .errors import (
    CausalisError,
    DimensionMismatchError,
    DuplicateLabelError,
    ExplosionGuardError,
    IllPosedProgramError,
    InvalidDecompositionError,
    MismatchedFactorsError,
    MissingCertificateError,
    ScenarioError,
    SolverFailureError,
    UnknownLabelError,
    UnsupportedScenarioError,
    ValidationError,
)
from .instruments import (
    InstrumentSet,
    POVMSet,
    random_instruments,
    random_povms,
    tomographic_instruments,
    validate_instruments,
)
from .processes import (
    CausalDecomposition,
    CausalWitness,
    PartyStructure,
    ProcessMatrix,
    ValidityReport,
    check_causal_separability,
    gyni_bound,
    gyni_operator,
    is_causally_ordered,
    lemma_positivity_margin,
    max_gyni_over_processes,
    membership_basis,
    random_ordered_process,
    random_process_matrix,
    random_separable_process,
    transpose_criterion,
    validate_process,
    white_noise_process,
)
from .spaces import (
    LabeledOperator,
    SpaceLabel,
    TensorSpace,
    embed,
    identity,
    max_entangled,
    partial_trace,
    partial_transpose,
    permute_to,
    tensor,
    trace_and_replace,
    uniform_state,
)

__all__ = [
    "SpaceLabel",
    "TensorSpace",
    "LabeledOperator",
    "tensor",
    "partial_trace",
    "trace_and_replace",
    "partial_transpose",
    "permute_to",
    "identity",
    "uniform_state",
    "max_entangled",
    "embed",
    "InstrumentSet",
    "POVMSet",
    "tomographic_instruments",
    "random_instruments",
    "random_povms",
    "validate_instruments",
    "PartyStructure",
    "ProcessMatrix",
    "ValidityReport",
    "CausalDecomposition",
    "CausalWitness",
    "validate_process",
    "white_noise_process",
    "membership_basis",
    "is_causally_ordered",
    "check_causal_separability",
    "transpose_criterion",
    "gyni_bound",
    "gyni_operator",
    "max_gyni_over_processes",
    "lemma_positivity_margin",
    "random_process_matrix",
    "random_ordered_process",
    "random_separable_process",
    "Behaviour",
    "born",
    "DeterministicCausalStrategy",
    "enumerate_deterministic_causal",
    "CausalInequality",
    "CausalMembership",
    "is_causal_behaviour",
    "gyni_success",
    "deterministic_strategy_count",
    "certify_dd",
    "certify_di",
    "DeviceDependentVerdict",
    "DeviceIndependentVerdict",
    "realize_causal_behaviour",
    "realize_causal_behaviour_tripartite",
    "Assemblage",
    "AssemblageReport",
    "AssemblageCausalDecomposition",
    "AssemblageWitness",
    "AssemblageMembership",
    "SemiDeviceWitness",
    "SemiDeviceIndependentVerdict",
    "SCENARIOS",
    "SDI_BIPARTITE",
    "TTU",
    "TUU",
    "UTT",
    "UUT",
    "validate_assemblage",
    "is_causal_assemblage",
    "assemblage_from_process",
    "certify_sdi",
    "realize_causal_assemblage",
    "nonprocess_assemblage_example",
    "CausalisError",
    "DuplicateLabelError",
    "UnknownLabelError",
    "MismatchedFactorsError",
    "DimensionMismatchError",
    "ValidationError",
    "ScenarioError",
    "ExplosionGuardError",
    "InvalidDecompositionError",
    "UnsupportedScenarioError",
    "IllPosedProgramError",
    "SolverFailureError",
    "MissingCertificateError",
]

__version__ = "0.1.0"
