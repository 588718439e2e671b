"""Re-optimization evolutionary algorithms on bit strings.

The (gamma+1) Re-Optimization EA, the (1+1) EA baseline, LeadingOnes,
cardinality-constrained linear functions and minimum spanning trees, their
perturbation models, exact oracles and a seeded experiment harness.
"""

from .algorithm import (
    ReaConfig,
    ReaState,
    RunBudget,
    RunRecord,
    Slot,
    Termination,
    check_state_invariants,
    oea_run,
    rea_init,
    rea_run,
    rea_select_parent,
    rea_step,
)
from .bitstring import (
    ContractViolation,
    Genome,
    MutationConfig,
    flip_bits,
    hamming_distance,
    make_rng,
    standard_bit_mutation,
)
from .graphs import GraphInstance, random_connected_graph, random_new_edges
from .harness import (
    AggregateResult,
    ExperimentSpec,
    aggregate,
    check_upper_bound,
    fit_scaling_exponent,
    format_summary,
    read_results,
    run_experiment,
    tail_cap,
    upper_bound,
    write_results,
)
from .oracles import (
    NeutralBitModel,
    OracleRefusal,
    ball_optimum,
    greedy_linear_optimum,
    lemma_hami_witness,
    mst_oracle,
    neutral_bit_probability,
)
from .perturbations import (
    PerturbationKind,
    PerturbationSpec,
    ReoptInstance,
    make_leadingones_reopt,
    make_linear_reopt,
    make_mst_addition_reopt,
    make_mst_removal_reopt,
)
from .problems import Direction, LeadingOnes, LinearConstrained, MstProblem

__version__ = "0.1.0"
