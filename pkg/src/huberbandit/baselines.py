"""Comparison algorithms: ridge least squares (OFUL) and offline Huber refit.

The offline baseline keeps every observation with its frozen per-round
normalization factor and threshold, and re-solves the regularized Huber
regression by projected gradient descent each round.  Its objective and
gradient are accumulated observation by observation, so the per-call cost
is proportional to history length times iteration count — the cost model
this library benchmarks the one-pass estimator against.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .estimator import (
    HuberParams,
    compute_round_schedule,
    confidence_radius,
    ucb_scores,
    SafetyStats,
)
from .linalg import spd_identity


class OfulAgent:
    """Ridge least-squares UCB with a rank-one-maintained inverse.

    The confidence radius sqrt(lambda)*S + R*sqrt(d*log((1 + t L^2/lambda)/delta))
    is the standard self-normalized bound with a configured sub-Gaussian
    scale R; it is benchmarking plumbing, not tuned to heavy tails.
    """

    def __init__(self, dim, reg_lambda, param_bound, arm_bound, delta,
                 noise_scale=1.0, refresh_every=0):
        if not reg_lambda > 0.0:
            raise ValueError(f"reg_lambda must be positive, got {reg_lambda}")
        self.dim = int(dim)
        self.reg_lambda = float(reg_lambda)
        self.param_bound = float(param_bound)
        self.arm_bound = float(arm_bound)
        self.delta = float(delta)
        self.noise_scale = float(noise_scale)
        self.t = 0
        self.A = spd_identity(self.reg_lambda, self.dim, refresh_every)
        self.b = np.zeros(self.dim)
        self.theta_hat = np.zeros(self.dim)
        self.radius = self._radius()

    def _radius(self):
        grow = math.log1p(self.t * self.arm_bound ** 2 / self.reg_lambda)
        return math.sqrt(self.reg_lambda) * self.param_bound + self.noise_scale * math.sqrt(
            self.dim * (grow - math.log(self.delta))
        )

    def select(self, arms):
        arms = np.asarray(arms, dtype=float)
        if arms.ndim != 2 or arms.shape[0] == 0:
            raise ValueError("arm set must be a nonempty (n, d) array")
        return int(np.argmax(ucb_scores(arms, self.theta_hat, self.A.m_inv, self.radius)))

    def observe(self, x, reward, nu_t=None):
        x = np.asarray(x, dtype=float)
        self.A.rank1_update(x, 1.0)
        self.b += reward * x
        self.theta_hat = self.A.m_inv @ self.b
        self.t += 1
        self.radius = self._radius()


class AdaptiveHuberAgent:
    """Offline adaptive Huber regression refit each round (growing cost).

    Arm selection and the sigma/tau/radius schedule are identical to the
    one-pass agent; only the estimate differs: it minimizes

        (lambda/2) ||theta||^2 + sum_s huber_{tau_s}((r_s - x_s'theta)/sigma_s)

    over the parameter ball by projected gradient descent with a fixed step
    1/(smoothness estimate), backtracking, warm start from the previous
    round's estimate, and gradient tolerance 1/sqrt(T).
    """

    MAX_BACKTRACKS = 40

    def __init__(self, params: HuberParams, refresh_every=0):
        self.params = params
        self.t = 0
        self.theta_hat = np.zeros(params.dim)
        self.V = spd_identity(params.reg_lambda, params.dim, refresh_every)
        self.radius_prev = confidence_radius(0, params)
        self.last_schedule = None
        self.safety = SafetyStats()
        # Frozen history: arm tuples, rewards, 1/sigma_s, tau_s.
        self._xs = []
        self._rs = []
        self._inv_sigmas = []
        self._taus = []
        # Smoothness estimate lambda + sum ||x_s/sigma_s||^2 (upper bounds the
        # Hessian spectral norm, so 1/smoothness is always a stable step).
        self._smoothness = params.reg_lambda
        self.gd_tolerance = 1.0 / math.sqrt(params.horizon)
        self.iteration_budget = max(1, math.ceil(10.0 * math.log(max(params.horizon, 2))))
        self.fit_warnings = 0
        self.last_fit_iterations = 0
        self.last_fit_grad_norm = 0.0
        self.last_fit_objectives = []

    @property
    def history_length(self):
        return len(self._rs)

    def select(self, arms):
        arms = np.asarray(arms, dtype=float)
        if arms.ndim != 2 or arms.shape[0] == 0:
            raise ValueError("arm set must be a nonempty (n, d) array")
        return int(np.argmax(ucb_scores(arms, self.theta_hat, self.V.m_inv, self.radius_prev)))

    def append_observation(self, x, reward, sigma, tau):
        self._xs.append(tuple(float(v) for v in x))
        self._rs.append(float(reward))
        self._inv_sigmas.append(1.0 / sigma)
        self._taus.append(float(tau))
        scale = sum(v * v for v in self._xs[-1]) * self._inv_sigmas[-1] ** 2
        self._smoothness += scale

    def _objective(self, theta):
        p = self.params
        total = 0.5 * p.reg_lambda * sum(v * v for v in theta)
        for x, r, inv_s, tau in zip(self._xs, self._rs, self._inv_sigmas, self._taus):
            z = r
            for xj, tj in zip(x, theta):
                z -= xj * tj
            z *= inv_s
            az = abs(z)
            if az <= tau:
                total += 0.5 * z * z
            else:
                total += tau * az - 0.5 * tau * tau
        return total

    def _gradient(self, theta):
        p = self.params
        grad = [p.reg_lambda * v for v in theta]
        for x, r, inv_s, tau in zip(self._xs, self._rs, self._inv_sigmas, self._taus):
            z = r
            for xj, tj in zip(x, theta):
                z -= xj * tj
            z *= inv_s
            if z > tau:
                z = tau
            elif z < -tau:
                z = -tau
            coef = z * inv_s
            for j, xj in enumerate(x):
                grad[j] -= coef * xj
        return grad

    @staticmethod
    def _project_ball(theta, bound):
        norm = math.sqrt(sum(v * v for v in theta))
        if norm <= bound:
            return theta
        scale = bound / norm
        return [v * scale for v in theta]

    def fit(self):
        """Minimize the frozen-history objective; returns the new estimate.

        Warm-started projected gradient descent; stops when either the raw
        gradient norm or the projected-gradient-mapping norm falls below the
        tolerance.  An exhausted iteration budget emits a warning and keeps
        the best (monotone) iterate.
        """
        p = self.params
        if not self._rs:
            self.theta_hat = np.zeros(p.dim)
            self.last_fit_grad_norm = 0.0
            self.last_fit_iterations = 0
            return self.theta_hat
        theta = [float(v) for v in self.theta_hat]
        step0 = 1.0 / self._smoothness
        tol = self.gd_tolerance
        converged = False
        iterations = 0
        grad_norm = 0.0
        objectives = []
        for _ in range(self.iteration_budget):
            grad = self._gradient(theta)
            grad_norm = math.sqrt(sum(g * g for g in grad))
            if grad_norm <= tol:
                converged = True
                break
            iterations += 1
            f_cur = self._objective(theta)
            objectives.append(f_cur)
            step = step0
            accepted = False
            for _ in range(self.MAX_BACKTRACKS):
                cand = self._project_ball(
                    [v - step * g for v, g in zip(theta, grad)], p.param_bound
                )
                if self._objective(cand) <= f_cur:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break  # line search stalled at floating-point resolution
            move = math.sqrt(sum((a - b) ** 2 for a, b in zip(theta, cand)))
            theta = cand
            if move / step <= tol:
                converged = True
                grad_norm = math.sqrt(sum(g * g for g in self._gradient(theta)))
                break
        if not converged:
            self.fit_warnings += 1
            warnings.warn(
                f"huber refit stopped at gradient norm {grad_norm:.3e} "
                f"after {iterations} iterations (tolerance {tol:.3e})",
                RuntimeWarning,
                stacklevel=2,
            )
        self.last_fit_iterations = iterations
        self.last_fit_grad_norm = grad_norm
        self.last_fit_objectives = objectives
        self.theta_hat = np.array(theta)
        return self.theta_hat

    def observe(self, x, reward, nu_t):
        """Round advance: schedule, design update, history append, refit."""
        x = np.asarray(x, dtype=float)
        p = self.params
        if not np.any(x):
            self.t += 1
            self.radius_prev = confidence_radius(self.t, p)
            self.last_schedule = None
            return
        sched = compute_round_schedule(
            x, nu_t, self.V, self.radius_prev, self.t + 1, p, self.safety
        )
        self.V.rank1_update(x, 1.0 / (p.alpha * sched.sigma ** 2))
        self.append_observation(x, reward, sched.sigma, sched.tau)
        self.fit()
        self.t += 1
        self.radius_prev = confidence_radius(self.t, p)
        self.last_schedule = sched


def run_round(agent, arms, play_fn):
    """One select/observe cycle: returns (arm index, reward)."""
    arms = np.asarray(arms, dtype=float)
    idx = agent.select(arms)
    reward, nu_t = play_fn(idx)
    agent.observe(arms[idx], reward, nu_t)
    return idx, reward
