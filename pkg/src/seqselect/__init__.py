"""Position-based dimension reduction for categorical sequences.

Identifies the small set of sequence positions whose categorical states best
explain a sequence-level outcome, via penalized multinomial regression
(L1 / group / sparse-group), thresholded and repeated LASSO, a random-forest
baseline, and an optimal-matching clustering pipeline to construct the
outcome labels.
"""

__version__ = "0.1.0"

from .data import (
    CsvFormat,
    DesignMatrix,
    FormatError,
    SequenceDataset,
    StateAlphabet,
    ValidationError,
    decode_states,
    encode_one_hot,
    load_alphabet,
    load_sequences,
    save_sequences,
)
from .alignment import (
    CostScheme,
    DistanceMatrix,
    default_cost_scheme,
    om_distance,
    pairwise_distances,
)
from .clustering import (
    ClusterLabels,
    Dendrogram,
    average_linkage,
    cut,
    dunn_index,
    merge_small,
    select_num_clusters,
)
from .regression import (
    CoefficientTensor,
    CVResult,
    FitResult,
    PenaltySpec,
    SolverError,
    cross_validate,
    fit_path,
    fit_penalized,
    lambda_grid,
    lambda_max,
    misclassification_rate,
    nll,
    nll_gradient,
    penalty_value,
    predict_classes,
    prox_l1,
    prox_group,
    prox_sparse_group,
    stratified_folds,
)
from .selection import (
    CVConfig,
    PositionSet,
    SelectionReport,
    active_positions,
    default_threshold_grid,
    lambda_path_table,
    lasso_selection,
    pick_elbow,
    repeated_lasso,
    threshold_sweep,
    thresholded_lasso,
)
from .forest import (
    Forest,
    ImportanceVector,
    fit_forest,
    gini_importance,
    predict_forest,
    select_depth,
    select_positions_by_importance,
)
from .synthetic import (
    GroundTruth,
    SynthSpec,
    default_benchmark,
    generate,
    irrepresentability_by_position,
    irrepresentability_stat,
    score_selection,
)
