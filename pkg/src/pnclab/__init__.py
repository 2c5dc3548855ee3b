"""Adaptive binary physical-layer network coding for the N-MIMO uplink."""

from .gf2 import (
    BitMatrix,
    BitVector,
    EnumerationTooLargeError,
    SingularMatrixError,
    det_f2,
    enumerate_matrices,
    inverse_f2,
    mat_mul,
    mul,
    rank_f2,
    solve,
)
from .modulation import Constellation, demodulate_hard, make_constellation, modulate
from .fade_states import (
    DegenerateChannelError,
    FadeState,
    SfsCatalog,
    build_catalog,
    enumerate_sfs,
    load_catalog,
    nearest_sfs,
    rank_principal_sfs,
    remove_image_sfs,
    save_catalog,
    truncate_catalog,
)
from .mapping import (
    MappingAssignment,
    MappingQuality,
    SuperimposedConstellation,
    build_assignment,
    coincident_partition,
    evaluate_mapping,
    min_cardinality_t,
    superimpose,
)
from .search import (
    CandidateEntry,
    CandidateStore,
    Selection,
    SelectionInfeasibleError,
    SelectionTable,
    build_selection_table,
    build_store,
    certify_store,
    load_store,
    load_table,
    mine_candidates,
    save_store,
    save_table,
    select_mappings,
    table_lookup,
)
from .link import (
    QuantizerSpec,
    comp_combine,
    comp_ideal,
    comp_nonideal_llrs,
    cpu_recover,
    detect_ncv,
    estimate_channel,
    hard_ncv,
    noise_variance,
    transmit,
    transmit_pilots,
)
from .sim import ExperimentConfig, MetricsRecord, backhaul_accounting, emit_results, run_experiment

__version__ = "0.1.0"
