"""Regressor Elimination for realizable contextual bandits over finite tabular regressor classes."""

from .baselines import BaselineKind, BaselineLearner
from .core import (
    ActionSpace,
    CapacityError,
    ConstructionError,
    ContextSpace,
    InputError,
    InternalError,
    Regressor,
    RegressorClass,
    RoundLog,
    active_actions,
    argmax_action,
    avg_squared_loss,
    expected_instant_regret,
)
from .instances import (
    Instance,
    gen_lower_bound,
    gen_nontrivial,
    gen_random_tabular,
    load_instance,
    random_nontrivial,
    sample_round,
    save_instance,
)
from .learner import (
    LearnerConfig,
    LearnerState,
    RegressorElimination,
    RunRecord,
    delta_t,
    elimination_radius,
    mu_value,
    run_episode,
)
from .solver import (
    ConvergenceError,
    ExplorationDist,
    SolveReport,
    max_violation,
    mixed_action_dist,
    solve_exploration_dist,
)

__version__ = "0.1.0"
