"""rc-sentinel: decides whether transaction workloads stay serializable when
executed under multiversion Read Committed, produces verifiable counterexample
schedules when they do not, finds maximal robust subsets, and computes minimal
read-promotion repairs."""

from .errors import (
    GuardExceeded,
    InconsistentInterleaving,
    InstantiationError,
    InternalInvariantError,
    ParseError,
    PromotionError,
    RcSentinelError,
    SplitConditionError,
)
from .model import (
    COMMIT,
    R,
    RW,
    U,
    W,
    WR,
    WW,
    Diagnostic,
    Operation,
    Relation,
    Schema,
    Template,
    Transaction,
    TupleId,
    Variable,
    Workload,
    coarsen_to_tuple_level,
    commit,
    instantiate,
    ops_conflict,
    potentially_conflicting,
    read,
    split_updates,
    update,
    validate_workload,
    write,
)
from .schedule import (
    OP0,
    ConflictGraph,
    DependencyEdge,
    OpRef,
    OracleVerdict,
    Schedule,
    build_rlc_schedule,
    conflict_graph,
    dependency_edges,
    enumerate_rc_schedules,
    exhibits_dirty_write,
    interleaving_count,
    is_conflict_serializable,
    is_rc_allowed,
    robust_oracle,
)
from .txcheck import (
    ConflictQuadruple,
    SplitWitness,
    TxRobustnessResult,
    build_split_schedule,
    is_robust_transactions,
    prefix_conflict_free_graph,
)
from .templates import (
    ChainLink,
    PotentialQuadrupleChain,
    TemplateGraphNode,
    TemplateRobustnessResult,
    TemplateWitness,
    TypeMapping,
    canonical_mapping,
    connected_variables,
    is_robust_templates,
    materialize_counterexample,
    pt_prefix_conflict_free_graph,
)
from .workload_tools import (
    ATOMIC_UPDATES,
    ATTRIBUTE_CONFLICTS,
    ONLY_R_AND_W,
    AnalysisSetting,
    PromotionSet,
    apply_setting,
    maximal_robust_subsets,
    minimal_promotions,
    promote,
    read_positions,
)
from .dsl import parse_schedule, parse_workload, print_schedule, print_workload

__version__ = "0.1.0"
