"""One-pass robust estimator: schedules, mirror-descent update, UCB scoring.

Each round proceeds as: score arms with the previous confidence radius,
observe a reward, compute the round's normalization factor and
robustification threshold, fold the arm into the design matrix, take a
single projected gradient step in the design-matrix geometry, and advance
the confidence radius.  Per-round cost is O(d^2) plus an O(d^3) projection
when the step leaves the parameter ball — independent of the round index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import project_ball_vnorm, spd_identity


class DegenerateArmError(ValueError):
    """Raised when a schedule quantity is requested for a zero arm."""


# Safety margin from the schedule analysis: whenever the data-driven branch
# of the normalization factor is the active max and the confidence radius
# satisfies its own recursion, alpha * w_t^2 must stay below 1/8.
_ALPHA_W2_BOUND = 0.125 + 1e-10


@dataclass(frozen=True)
class HuberParams:
    """All schedule constants, with the two derived ones validated on build.

    ``tau0`` and ``kappa`` are functions of the rest; construct via
    :meth:`create` to have them filled in.  Direct construction re-derives
    and cross-checks them to 1e-12 relative, so a stale or hand-edited value
    is rejected.
    """

    dim: int
    horizon: int
    epsilon: float
    delta: float
    reg_lambda: float
    sigma_min: float
    param_bound: float  # radius of the feasible parameter ball
    arm_bound: float    # upper bound on arm Euclidean norms
    alpha: float = 4.0
    tau0: float = field(default=float("nan"))
    kappa: float = field(default=float("nan"))

    def __post_init__(self):
        if not (isinstance(self.dim, (int, np.integer)) and self.dim >= 1):
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if not (isinstance(self.horizon, (int, np.integer)) and self.horizon >= 1):
            raise ValueError(f"horizon must be a positive integer, got {self.horizon}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        for name in ("reg_lambda", "sigma_min", "param_bound", "arm_bound", "alpha"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        kappa = self._derive_kappa()
        tau0 = self._derive_tau0(kappa)
        if math.isnan(self.tau0) and math.isnan(self.kappa):
            object.__setattr__(self, "kappa", kappa)
            object.__setattr__(self, "tau0", tau0)
        else:
            if abs(self.kappa - kappa) > 1e-12 * max(1.0, abs(kappa)):
                raise ValueError(
                    f"kappa={self.kappa} inconsistent with derived value {kappa}"
                )
            if abs(self.tau0 - tau0) > 1e-12 * max(1.0, abs(tau0)):
                raise ValueError(
                    f"tau0={self.tau0} inconsistent with derived value {tau0}"
                )

    @classmethod
    def create(cls, dim, horizon, epsilon, delta, reg_lambda, sigma_min,
               param_bound, arm_bound, alpha=4.0):
        return cls(
            dim=int(dim), horizon=int(horizon), epsilon=float(epsilon),
            delta=float(delta), reg_lambda=float(reg_lambda),
            sigma_min=float(sigma_min), param_bound=float(param_bound),
            arm_bound=float(arm_bound), alpha=float(alpha),
        )

    def _derive_kappa(self):
        ratio = (self.arm_bound ** 2 * self.horizon) / (
            self.sigma_min ** 2 * self.reg_lambda * self.alpha * self.dim
        )
        return self.dim * math.log1p(ratio)

    def _derive_tau0(self, kappa):
        c = self.t_exponent
        return (
            math.sqrt(2.0 * kappa)
            * math.log(3.0 * self.horizon) ** c
            / self.log_confidence ** (1.0 / (1.0 + self.epsilon))
        )

    @property
    def t_exponent(self):
        """Exponent of the round index in every schedule power law."""
        return (1.0 - self.epsilon) / (2.0 * (1.0 + self.epsilon))

    @property
    def log_confidence(self):
        """log(2 T^2 / delta), assembled in log space to dodge overflow."""
        return math.log(2.0) + 2.0 * math.log(self.horizon) - math.log(self.delta)


def confidence_radius(t, params):
    """Radius of the parameter confidence ellipsoid after t rounds.

    Strictly positive and non-decreasing in t; at t=0 only the ridge floor
    sqrt(lambda (2 + 4 S^2)) remains (the power term vanishes for
    epsilon < 1 and is constant for epsilon == 1, where 0^0 == 1).
    """
    if t < 0:
        raise ValueError(f"round index must be nonnegative, got {t}")
    p = params
    floor = math.sqrt(p.reg_lambda * (2.0 + 4.0 * p.param_bound ** 2))
    return 107.0 * p.log_confidence * p.tau0 * t ** p.t_exponent + floor


def normalization_factor(nu_t, x_vnorm, radius_prev, t, params):
    """Per-round residual normalizer: three-way max of the schedule.

    nu_t is the known moment bound for the round (the global bound when only
    that is available); x_vnorm is the chosen arm's norm in the inverse
    design-matrix geometry; radius_prev is the previous confidence radius.
    """
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    if nu_t < 0.0 or radius_prev < 0.0 or x_vnorm < 0.0:
        raise ValueError("nu_t, x_vnorm and radius_prev must be nonnegative")
    p = params
    data_branch = x_vnorm * math.sqrt(
        2.0 * radius_prev / (p.tau0 * math.sqrt(p.alpha) * t ** p.t_exponent)
    )
    return max(nu_t, p.sigma_min, data_branch)


def robustification_threshold(w, t, params):
    """Round-t Huber threshold; decreasing in the normalized arm weight w."""
    if w <= 0.0:
        raise DegenerateArmError(
            "robustification threshold is undefined for a zero arm (w == 0)"
        )
    p = params
    return p.tau0 * (math.sqrt(1.0 + w * w) / w) * t ** p.t_exponent


@dataclass
class RoundSchedule:
    """Frozen per-round schedule quantities, for logging and baselines."""

    sigma: float
    w: float
    tau: float
    x_vnorm: float
    data_branch_active: bool


@dataclass
class SafetyStats:
    """Counters for the schedule-safety bound alpha * w^2 <= 1/8."""

    checked: int = 0
    violations: int = 0
    data_branch_rounds: int = 0


def compute_round_schedule(x, nu_t, V, radius_prev, t, params, stats=None):
    """Schedule for round t given the chosen arm and the current geometry.

    Shared by the one-pass estimator and the offline-refit baseline, which
    run the identical schedule.  When ``stats`` is given, the safety bound
    is checked on every round where the data-driven branch attains the max
    and the radius recursion premise
    radius_prev >= 107 * log(2T^2/delta) * tau0 * t^exp holds; violations
    are counted, not raised.
    """
    p = params
    x_vnorm = V.vnorm_inv(x)
    data_branch = x_vnorm * math.sqrt(
        2.0 * radius_prev / (p.tau0 * math.sqrt(p.alpha) * t ** p.t_exponent)
    )
    sigma = max(nu_t, p.sigma_min, data_branch)
    w = x_vnorm / (math.sqrt(p.alpha) * sigma)
    tau = robustification_threshold(w, t, p)
    data_active = data_branch >= max(nu_t, p.sigma_min)
    if stats is not None and data_active:
        stats.data_branch_rounds += 1
        premise = radius_prev >= 107.0 * p.log_confidence * p.tau0 * t ** p.t_exponent
        if premise:
            stats.checked += 1
            if p.alpha * w * w > _ALPHA_W2_BOUND:
                stats.violations += 1
    return RoundSchedule(sigma, w, tau, x_vnorm, data_active)


def ucb_scores(arms, theta_hat, v_inv, radius):
    """Vector of optimistic scores <x, theta> + radius * ||x||_{V^-1}."""
    arms = np.asarray(arms, dtype=float)
    quad = np.einsum("ij,ij->i", arms @ v_inv, arms)
    np.maximum(quad, 0.0, out=quad)
    np.sqrt(quad, out=quad)
    quad *= radius
    quad += arms @ theta_hat
    return quad


def select_arm(arms, state):
    """Index and vector of the score-maximizing arm; ties go to the lowest index."""
    arms = np.asarray(arms, dtype=float)
    if arms.ndim != 2 or arms.shape[0] == 0:
        raise ValueError("arm set must be a nonempty (n, d) array")
    idx = int(np.argmax(ucb_scores(arms, state.theta_hat, state.V.m_inv, state.radius_prev)))
    return idx, arms[idx]


def ucb_score(x, state):
    """Optimistic score of a single arm under the current state."""
    x = np.asarray(x, dtype=float)
    return float(x @ state.theta_hat) + state.radius_prev * state.V.vnorm_inv(x)


class HvtUcbAgent:
    """One-pass mirror-descent estimator with optimistic arm selection.

    Owns its state (round counter, estimate, design matrix with maintained
    inverse, confidence radius); a simulation loop is the single writer.
    Distinct trials run independent agents.
    """

    def __init__(self, params: HuberParams, refresh_every=0):
        self.params = params
        self.t = 0
        self.theta_hat = np.zeros(params.dim)
        self.V = spd_identity(params.reg_lambda, params.dim, refresh_every)
        self.radius_prev = confidence_radius(0, params)
        self.last_schedule = None
        self.safety = SafetyStats()

    def select(self, arms):
        idx, _ = select_arm(arms, self)
        return idx

    def compute_schedule(self, x, nu_t):
        """Schedule for the upcoming round, given the chosen arm."""
        return compute_round_schedule(
            x, nu_t, self.V, self.radius_prev, self.t + 1, self.params, self.safety
        )

    def omd_step(self, x, reward, sched):
        """Single projected gradient step in the V_t geometry.

        Precondition: ``self.V`` has already been rank-one updated with this
        round's arm (the design matrix advances before the estimate).  Does
        not touch the round counter; callers normally use :meth:`observe`.
        """
        p = self.params
        z = (reward - float(x @ self.theta_hat)) / sched.sigma
        # Scalar clip of the residual; same kernel as huber_derivative.
        tau = sched.tau
        slope = tau if z > tau else (-tau if z < -tau else z)
        # V_t^{-1} grad = -(slope/sigma) * V_t^{-1} x; fold the sign in.
        theta_new = self.theta_hat + (slope / sched.sigma) * (self.V.m_inv @ x)
        if math.sqrt(float(theta_new @ theta_new)) > p.param_bound:
            theta_new = project_ball_vnorm(theta_new, self.V, p.param_bound)
        self.theta_hat = theta_new

    def observe(self, x, reward, nu_t):
        """Atomic round advance: schedule, design update, estimate, radius.

        The ordering (design matrix before estimate) is load-bearing: the
        mirror-descent step must use the regularizer of the round it closes.
        """
        x = np.asarray(x, dtype=float)
        p = self.params
        if not np.any(x):
            # A zero arm carries no information: no-op on V and theta.
            self.t += 1
            self.radius_prev = confidence_radius(self.t, p)
            self.last_schedule = None
            return
        sched = self.compute_schedule(x, nu_t)
        self.V.rank1_update(x, 1.0 / (p.alpha * sched.sigma ** 2))
        self.omd_step(x, reward, sched)
        self.t += 1
        self.radius_prev = confidence_radius(self.t, p)
        self.last_schedule = sched
