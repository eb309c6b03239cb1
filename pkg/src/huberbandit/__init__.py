"""Heavy-tailed linear bandit simulation and benchmark harness.

A one-pass robust estimator (mirror descent on a per-round Huber loss with
a local-norm regularizer) plus comparison baselines, a synthetic
environment, and a reproducible multi-trial experiment runner.
"""

from .baselines import AdaptiveHuberAgent, OfulAgent, run_round
from .env import BanditInstance, NoiseSpec, play, regret_increment, sample_instance, sample_noise
from .estimator import (
    HuberParams,
    HvtUcbAgent,
    RoundSchedule,
    confidence_radius,
    normalization_factor,
    robustification_threshold,
    select_arm,
    ucb_score,
    ucb_scores,
)
from .huber import huber_derivative, huber_value, residual_loss_grad, residual_loss_value
from .linalg import (
    ConvergenceError,
    NumericalDegeneracyError,
    SpdMatrix,
    project_ball_vnorm,
    smw_rank1_update,
    spd_identity,
    vnorm,
)
from .runner import (
    ExperimentConfig,
    ExperimentSummary,
    RoundTrace,
    compare_runtimes,
    run_experiment,
    run_trial,
    summarize,
)

__all__ = [
    "AdaptiveHuberAgent",
    "BanditInstance",
    "ConvergenceError",
    "ExperimentConfig",
    "ExperimentSummary",
    "HuberParams",
    "HvtUcbAgent",
    "NoiseSpec",
    "NumericalDegeneracyError",
    "OfulAgent",
    "RoundSchedule",
    "RoundTrace",
    "SpdMatrix",
    "compare_runtimes",
    "confidence_radius",
    "huber_derivative",
    "huber_value",
    "normalization_factor",
    "play",
    "project_ball_vnorm",
    "regret_increment",
    "residual_loss_grad",
    "residual_loss_value",
    "robustification_threshold",
    "run_experiment",
    "run_round",
    "run_trial",
    "sample_instance",
    "sample_noise",
    "select_arm",
    "smw_rank1_update",
    "spd_identity",
    "summarize",
    "ucb_score",
    "ucb_scores",
    "vnorm",
]

__version__ = "0.1.0"
