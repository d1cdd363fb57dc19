"""Segregated spatial coalescent: simulation and exact analytics.

A library plus CLI for a coalescing stochastic flow on Cantor-like
geographical spaces driven by a hierarchical Poisson reproduction process:
seeded, reproducible realizations; lineage tracing and block/dust
decompositions; exact branching-process analytics; five-phase
classification; and dust-dimension estimation.
"""

from .events import Event, EventStore, replicate_seed
from .flow import (
    Block,
    BlockDecomposition,
    FlowCheckReport,
    Lineage,
    SurvivorTree,
    apply_flow,
    block_count_from_counts,
    decompose,
    survivor_counts_batch,
    survivor_tree,
    survivor_trees_batch,
    trace_lineage,
    verify_flow_property,
)
from .gwve import (
    DegeneracyReport,
    ExtinctionLimit,
    GwveSpec,
    degeneracy_test,
    extinct_prob_by,
    extinct_prob_limit,
    g_partial,
    g_term,
    log_m,
    m,
    mean_b,
    simulate,
    simulate_many,
)
from .phase import (
    DimensionReport,
    Phase,
    PhaseLabel,
    classify,
    critical_time,
    dust_dimension_analytic,
    dust_dimension_empirical,
    space_dimension,
)
from .rates import (
    Constant,
    CustomTable,
    Geometric,
    Harmonic,
    Linear,
    RateFamily,
    RateSpecError,
    TailMeta,
    Truncated,
    analytics,
    parse_rates,
    rate,
)
from .space import (
    CANTOR,
    HALF_OPEN,
    ROOT,
    Alphabet,
    Geometry,
    GeometryKind,
    SpaceConfig,
    Word,
    child,
    embed,
    is_ancestor,
    measure,
    parent,
    sample_uniform_point,
    word_from_string,
    word_to_string,
)

__version__ = "0.1.0"
