"""Exact desk-scale simulator of an unentangled-proof verification protocol
for frustration-free ground state connectivity.

The package builds honest and adversarial proof states, runs the verifier's
eight tests in exact-probability and counter-based sampled modes, derives the
full threshold ledger in extended precision, and certifies the completeness
and soundness margins empirically on built-in fixtures.
"""

from .instances import (
    GsconInstance,
    HamiltonianTerm,
    TraversalCertificate,
    energy_of,
    energy_test_reject_prob,
    energy_test_sample,
    load_instance,
    prepare_state_from_circuit,
    save_instance,
    validate_instance,
)
from .fixtures import Fixture, brute_force_no_check, builtin_instances, get_fixture, verify_certificate
from .harness import ExperimentConfig, RunReport, emit_report, run_lemma_suite, run_monte_carlo
from .ledger import ParameterLedger, Qma2Tuning, derive_parameters, gap_order_estimate, qma2_tuning
from .rng import CounterStream
from .states import (
    LocalGate,
    RegisteredState,
    RegisterShape,
    apply_local_gate,
    measure_register_sample,
    phase_optimized_distance,
    project_onto,
    swap_test_reject_prob,
    swap_test_sample,
    tensor_with,
)
from .verifier import TestOutcome, product_test, run_protocol_round, run_test
from .witnesses import (
    AdversaryKind,
    AdversarySpec,
    ForgedWitnesses,
    WitnessS,
    WitnessU,
    apply_W,
    build_honest_S,
    build_honest_U,
    dump_amplitude_table,
    forge_adversary,
    forge_composed,
    honest_gate_assignment,
)

__version__ = "0.1.0"
