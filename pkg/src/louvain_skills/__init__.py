"""Skill hierarchies for tabular RL from multi-level graph clustering."""

from .graph import (
    StateIndex,
    WeightedDigraph,
    aggregate_graph,
    build_graph,
    extract_transition_graph,
    graph_from_json,
    graph_to_json,
    knn_graph,
    weakly_connected_components,
)
from .louvain import (
    ClusterHierarchy,
    Level,
    hierarchy_from_json,
    hierarchy_to_json,
    local_moves,
    partition_score,
    prune,
    run_louvain,
    update_partitions,
)
from .learning import (
    TabularModel,
    TrainParams,
    Trainer,
    evaluate,
    run_training,
)
from .modularity import Partition, modularity, move_gain
from .skills import (
    OfflineParams,
    Option,
    OptionHierarchy,
    build_option_hierarchy,
    flatten_hierarchy,
    options_from_json,
    options_to_json,
    select_level,
    train_option_policies,
)

__version__ = "0.1.0"
