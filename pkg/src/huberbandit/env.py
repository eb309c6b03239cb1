"""Synthetic bandit environments: arm sets, ground truth, noise, regret oracle.

Arm coordinates are sampled uniformly on [-1, 1]; each arm is then clamped
to the norm bound (x <- x * L / max(1, ||x||)) so norms are bounded but not
all equal, while the hidden parameter is rescaled to lie exactly on the
radius-S sphere.  Instances are immutable after construction and safe to
share; random streams are per-trial and never shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NOISE_FAMILIES = ("student_t", "gaussian")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise family plus the moment-bound bookkeeping the learner receives.

    ``epsilon`` is the tail exponent of the assumed bounded (1+eps)-th
    moment and ``nu`` the configured bound reported to the learner each
    round.  nu is a config input, not recomputed from the family (for the
    student_t family there is no canonical finite choice near df = 1+eps).
    """

    family: str
    epsilon: float
    nu: float
    df: float | None = None   # student_t degrees of freedom
    std: float | None = None  # gaussian standard deviation (0 = noiseless)

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.nu < 0.0:
            raise ValueError(f"moment bound nu must be nonnegative, got {self.nu}")
        if self.family == "student_t":
            if self.df is None or not self.df > 1.0 + self.epsilon:
                raise ValueError(
                    f"student_t requires df > 1 + epsilon for a finite "
                    f"(1+eps)-th moment, got df={self.df}, epsilon={self.epsilon}"
                )
        else:
            if self.std is None or self.std < 0.0:
                raise ValueError(f"gaussian requires std >= 0, got {self.std}")

    @classmethod
    def student_t(cls, df=2.1, epsilon=0.99, nu=1.31):
        return cls(family="student_t", epsilon=epsilon, nu=nu, df=df)

    @classmethod
    def gaussian(cls, std=1.0, epsilon=1.0, nu=None):
        if nu is None:
            nu = std  # for epsilon=1 the second moment of N(0, std^2) is tight
        return cls(family="gaussian", epsilon=epsilon, nu=nu, std=std)


def sample_noise(spec, rng):
    """One mean-zero draw from the configured family."""
    if spec.family == "student_t":
        return float(rng.standard_t(spec.df))
    return float(rng.normal(0.0, spec.std))


@dataclass(frozen=True)
class BanditInstance:
    """Ground truth of one simulation: arms, hidden parameter, noise model."""

    theta_star: np.ndarray
    arms: np.ndarray
    noise: NoiseSpec
    param_bound: float
    arm_bound: float
    arm_values: np.ndarray = field(init=False, repr=False)
    best_value: float = field(init=False, repr=False)

    def __post_init__(self):
        values = self.arms @ self.theta_star
        object.__setattr__(self, "arm_values", values)
        object.__setattr__(self, "best_value", float(values.max()))

    @property
    def n_arms(self):
        return self.arms.shape[0]

    @property
    def dim(self):
        return self.arms.shape[1]


def _clamp_rows(points, bound):
    norms = np.linalg.norm(points, axis=1)
    return points * (bound / np.maximum(1.0, norms))[:, None]


def sample_instance(d, n, param_bound, arm_bound, noise, seed):
    """Deterministic-in-seed instance with bounded arms and on-sphere truth."""
    if d < 1 or n < 1:
        raise ValueError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    rng = np.random.default_rng(seed)
    arms = _clamp_rows(rng.uniform(-1.0, 1.0, size=(n, d)), arm_bound)
    theta = rng.uniform(-1.0, 1.0, size=d)
    norm = np.linalg.norm(theta)
    while norm == 0.0:  # probability-zero guard
        theta = rng.uniform(-1.0, 1.0, size=d)
        norm = np.linalg.norm(theta)
    theta = theta * (param_bound / norm)
    return BanditInstance(theta, arms, noise, float(param_bound), float(arm_bound))


def resample_arms(instance, rng):
    """Fresh arm set for per-round arm resampling (same bounds and truth)."""
    arms = _clamp_rows(
        rng.uniform(-1.0, 1.0, size=instance.arms.shape), instance.arm_bound
    )
    return BanditInstance(
        instance.theta_star, arms, instance.noise,
        instance.param_bound, instance.arm_bound,
    )


def play(instance, arm_index, rng):
    """Reward draw for the chosen arm, plus the round's moment bound."""
    if not 0 <= arm_index < instance.n_arms:
        raise ValueError(f"arm index {arm_index} out of range [0, {instance.n_arms})")
    reward = float(instance.arm_values[arm_index]) + sample_noise(instance.noise, rng)
    return reward, instance.noise.nu


def regret_increment(instance, arm_index):
    """Gap between the best arm's mean reward and the chosen arm's."""
    if not 0 <= arm_index < instance.n_arms:
        raise ValueError(f"arm index {arm_index} out of range [0, {instance.n_arms})")
    return instance.best_value - float(instance.arm_values[arm_index])
