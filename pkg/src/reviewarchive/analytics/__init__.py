"""Statistics over paperlists and the snapshot archive."""

from .binning import Bin, Binning, bin_scores
from .dynamics import (
    ConsensusSeries,
    DynamicsReport,
    Flow,
    PrePost,
    PrePostReport,
    consensus_series,
    daily_grid,
    dimension_update_fractions,
    dynamics_report,
    flow_matrix,
    prepost_distributions,
)
from .entropy import BinEntropy, EntropyReport, decision_entropy, entropy_from_pairs, shannon_entropy
from .ordered_logit import (
    OrderedLogitModel,
    fit_ordered_logit,
    fit_ordered_logit_arrays,
    fit_ordered_logit_joint,
    status_probabilities,
    tier_probabilities,
)
from .scaling import ScalingFit, fit_log_scaling
from .tables import (
    CombinationRow,
    GridCell,
    GroupRow,
    TierStat,
    acceptance_by_combination,
    aggregate_by_group,
    status_mix_by_bin,
    tier_stats,
)
