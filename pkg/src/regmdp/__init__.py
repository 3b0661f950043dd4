"""Entropy-regularized two-timescale actor-critic on finite MDPs, with exact oracles."""

from .actor import ProjectionBox, SoftmaxPolicy, actor_step, gamma_hat, projected_field_residual, psi_literal, psi_sample
from .critic import (
    CriticState,
    CriticTrace,
    StepSchedule,
    check_step_sizes,
    critic_step,
    run_policy_evaluation,
    td_error,
)
from .errors import (
    ConfigError,
    DimensionError,
    DistributionError,
    DivergenceError,
    DomainError,
    ErgodicityError,
    IllConditionedError,
    NumericError,
    RegMdpError,
)
from .harness import (
    RunConfig,
    RunReport,
    bandit_instance,
    generate_random_instance,
    run_actor_critic,
    validate_kushner_clark,
)
from .mdp import (
    FiniteMdp,
    StateActionChain,
    TabularPolicy,
    discounted_occupancy,
    induced_chain,
    restart_chain,
    stationary_distribution,
    validate_assumptions,
)
from .oracle import (
    ExactSolution,
    FeatureMap,
    bellman_q,
    exact_actor_field,
    h_infinity_stability,
    mean_field,
    objective_J,
    projected_fixed_point,
    soft_optimality_backup,
    soft_value_iteration,
    solve_q_pi,
)
from .regularizers import Regularizer, omega_grad, omega_sample_estimate, omega_value, omega_vectors
from .sampler import Sampler, Transition

__version__ = "0.1.0"
