"""Fair private learning lab.

Gated noisy-vote aggregation, fairness-regularized private training, Renyi
accounting, and Pareto-frontier extraction over (privacy, fairness, utility).
"""

from .accounting import (
    BudgetTracker,
    ChargeStatus,
    DEFAULT_ORDERS,
    RdpCurve,
    charge_query,
    data_dependent_rdp,
    gaussian_rdp,
    q_tilde,
    rdp_to_dp,
    subsampled_gaussian_rdp,
    threshold_check_rdp,
)
from .aggregation import (
    AggregationOutcome,
    AggregatorParams,
    RejectionReason,
    collect_votes,
    confident_fair_gnmax,
    confident_gnmax,
)
from .core import (
    ExperimentRecord,
    GroupClassCounter,
    LabeledExample,
    PrivacyBudget,
    SeededRng,
    VoteHistogram,
    accuracy,
    coverage,
)
from .fairness import (
    DisparityVariant,
    GateDecision,
    GateParams,
    disparity_matrix,
    fairness_gate,
    group_privacy_transform,
    k_gamma,
    max_disparity,
    ordered_offline_preprocess,
    postprocess_stream,
    preprocess_stream,
)
from .learners import (
    DpSgdParams,
    FairRegParams,
    Model,
    StudentParams,
    TrainingSet,
    clip,
    dp_sgd_train,
    dpl,
    fair_dp_sgd_train,
    load_model,
    per_example_grad,
    save_model,
    student_train,
)
from .pareto import ObjectiveSpec, dominates, frontier, frontier_query
from .harness import (
    DatasetSplits,
    GridSpec,
    HarnessConfig,
    SyntheticSpec,
    generate,
    load,
    partition_teachers,
    persist,
    run_fairpate,
    run_grid,
)

__version__ = "0.1.0"
