"""LFSR keystream cryptanalysis over a wiretap channel.

Simulates a single-LFSR keystream model seen through binary symmetric
channels, runs the noniterative and iterative fast correlation attacks, and
measures the eavesdropper's mutual information and EXIT behaviour.
"""

from .attack_iter import (
    Attack2Params,
    RoundTrace,
    compute_thresholds,
    estimate_p1,
    run_attack2,
    run_round,
    smatrix_entry,
    update_pstar_individual,
)
from .attack_noniter import (
    Attack1Outcome,
    expected_wrong_selected,
    fold_s,
    pstar,
    reliability_vector,
    run_attack1,
    select_reliable_independent,
    trials_budget,
)
from .channel import ChannelParams, apply_bsc, cascade, secrecy_capacity
from .exitchart import ExitChart, ExitRecord, bin_records, gap_report, trace_to_records
from .gf2lfsr import (
    CheckSystem,
    ConnectionPolynomial,
    LfsrKey,
    dependency_rows,
    derive_checks,
    generate_sequence,
    is_primitive,
    solve_initial_state,
    table_polynomial,
)
from .infomath import binary_entropy, closed_form_mi, empirical_mi, lfsr_marginal_one

__version__ = "0.1.0"
