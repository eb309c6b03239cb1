"""Experiment orchestration: config, trials, timing, aggregation, CSV output.

A trial plays one algorithm against one sampled instance for T rounds,
timing only the algorithmic work (arm scoring, schedule, estimate update);
environment sampling, regret bookkeeping and I/O happen outside the timed
regions.  Trials are seeded independently from (master_seed, trial index)
so they can run in any order, or in parallel, with identical results.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as _scipy_stats

from .baselines import AdaptiveHuberAgent, OfulAgent
from .env import NoiseSpec, play, regret_increment, resample_arms, sample_instance
from .estimator import HuberParams, HvtUcbAgent
from .linalg import ConvergenceError, vnorm

ALGORITHMS = ("hvt_ucb", "heavy_oful_gd", "oful")

ROUNDS_HEADER = "trial,t,arm_index,reward,inst_regret,cum_regret,round_time_ns"
SUMMARY_HEADER = "checkpoint_t,mean_cum_regret,std_cum_regret,mean_cum_time_ns,std_cum_time_ns"


class ConfigError(ValueError):
    """Invalid or unknown experiment configuration."""


def _fmt(x):
    """17-significant-digit decimal, the CSV wire format for reals."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class RoundTrace:
    """One row of the per-round log."""

    trial: int
    t: int
    arm_index: int
    reward: float
    inst_regret: float
    cum_regret: float
    round_time_ns: int

    def to_csv_row(self):
        return (
            f"{self.trial},{self.t},{self.arm_index},{_fmt(self.reward)},"
            f"{_fmt(self.inst_regret)},{_fmt(self.cum_regret)},{self.round_time_ns}"
        )

    @classmethod
    def from_csv_row(cls, row):
        f = row.split(",")
        return cls(int(f[0]), int(f[1]), int(f[2]), float(f[3]),
                   float(f[4]), float(f[5]), int(f[6]))


@dataclass
class TrialDiagnostics:
    """Per-trial invariant counters gathered outside the timed regions."""

    coverage_violations: int = 0
    kink_violations: int = 0
    safety_checked: int = 0
    safety_violations: int = 0
    data_branch_rounds: int = 0
    fit_warnings: int = 0
    error: str | None = None


@dataclass
class TrialResult:
    traces: list
    diagnostics: TrialDiagnostics


_NOISE_KEYS = {"family", "epsilon", "nu", "df", "std"}
_CONFIG_KEYS = {
    "algo", "noise", "d", "n", "T", "trials", "master_seed",
    "S", "L", "lambda", "sigma_min", "delta", "alpha", "out_dir",
    "sequential", "oful_noise_scale", "resample_arms", "inverse_refresh_every",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative experiment description.

    Unset entries of lambda / sigma_min / delta resolve to the standard
    defaults lambda = d, sigma_min = 1/sqrt(T), delta = 1/(8T).
    """

    algo: str
    noise: NoiseSpec
    d: int = 2
    n: int = 50
    T: int = 18000
    trials: int = 10
    master_seed: int = 0
    S: float = 1.0
    L: float = 1.0
    reg_lambda: float = None
    sigma_min: float = None
    delta: float = None
    alpha: float = 4.0
    out_dir: str = "results"
    sequential: bool = True
    oful_noise_scale: float = 1.0
    resample_arms: bool = False
    inverse_refresh_every: int = 0

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"algo must be one of {ALGORITHMS}, got {self.algo!r}")
        for name in ("d", "n", "trials"):
            if not (isinstance(getattr(self, name), int) and getattr(self, name) >= 1):
                raise ConfigError(f"{name} must be a positive integer")
        if not (isinstance(self.T, int) and self.T >= 0):
            raise ConfigError("T must be a nonnegative integer")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ConfigError("master_seed must be a nonnegative integer")
        if self.reg_lambda is None:
            object.__setattr__(self, "reg_lambda", float(self.d))
        if self.sigma_min is None:
            object.__setattr__(self, "sigma_min", 1.0 / np.sqrt(max(self.T, 1)))
        if self.delta is None:
            object.__setattr__(self, "delta", 1.0 / (8.0 * max(self.T, 1)))
        for name in ("S", "L", "reg_lambda", "sigma_min", "alpha"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")

    @classmethod
    def from_dict(cls, raw):
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "algo" not in raw or "noise" not in raw:
            raise ConfigError("config requires at least 'algo' and 'noise'")
        noise_raw = dict(raw["noise"])
        unknown = set(noise_raw) - _NOISE_KEYS
        if unknown:
            raise ConfigError(f"unknown noise keys: {sorted(unknown)}")
        family = noise_raw.get("family")
        try:
            if family == "student_t":
                noise = NoiseSpec.student_t(
                    df=noise_raw.get("df", 2.1),
                    epsilon=noise_raw.get("epsilon", 0.99),
                    nu=noise_raw.get("nu", 1.31),
                )
            elif family == "gaussian":
                noise = NoiseSpec.gaussian(
                    std=noise_raw.get("std", 1.0),
                    epsilon=noise_raw.get("epsilon", 1.0),
                    nu=noise_raw.get("nu"),
                )
            else:
                raise ValueError(f"unknown noise family {family!r}")
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid noise spec: {exc}") from exc
        kwargs = {k: v for k, v in raw.items() if k not in ("noise", "lambda")}
        if "lambda" in raw:
            kwargs["reg_lambda"] = raw["lambda"]
        try:
            return cls(noise=noise, **kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path):
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def huber_params(self):
        return HuberParams.create(
            dim=self.d, horizon=self.T, epsilon=self.noise.epsilon,
            delta=self.delta, reg_lambda=self.reg_lambda,
            sigma_min=self.sigma_min, param_bound=self.S, arm_bound=self.L,
            alpha=self.alpha,
        )


def make_agent(config):
    if config.algo == "oful":
        return OfulAgent(
            dim=config.d, reg_lambda=config.reg_lambda, param_bound=config.S,
            arm_bound=config.L, delta=config.delta,
            noise_scale=config.oful_noise_scale,
            refresh_every=config.inverse_refresh_every,
        )
    params = config.huber_params()
    if config.algo == "hvt_ucb":
        return HvtUcbAgent(params, refresh_every=config.inverse_refresh_every)
    return AdaptiveHuberAgent(params, refresh_every=config.inverse_refresh_every)


def _trial_seeds(master_seed, trial_index):
    instance_seed = np.random.SeedSequence([master_seed, trial_index, 0])
    noise_seed = np.random.SeedSequence([master_seed, trial_index, 1])
    arms_seed = np.random.SeedSequence([master_seed, trial_index, 2])
    return instance_seed, noise_seed, arms_seed


def run_trial(config, trial_index):
    """Play T rounds; returns traces plus invariant diagnostics.

    Deterministic in (config, trial_index) except for round_time_ns.
    Estimator convergence errors abort the trial; the partial trace is kept
    and the failure recorded in the diagnostics for the experiment level to
    surface.
    """
    diag = TrialDiagnostics()
    traces = []
    if config.T == 0:
        return TrialResult(traces, diag)
    instance_seed, noise_seed, arms_seed = _trial_seeds(config.master_seed, trial_index)
    instance = sample_instance(config.d, config.n, config.S, config.L,
                               config.noise, instance_seed)
    noise_rng = np.random.default_rng(noise_seed)
    arms_rng = np.random.default_rng(arms_seed) if config.resample_arms else None
    agent = make_agent(config)
    check_coverage = config.algo in ("hvt_ucb", "heavy_oful_gd")
    theta_star = instance.theta_star
    cum_regret = 0.0
    clock = time.perf_counter_ns
    try:
        for t in range(1, config.T + 1):
            if arms_rng is not None:
                instance = resample_arms(instance, arms_rng)
            arms = instance.arms
            covered = True
            if check_coverage:
                err = agent.theta_hat - theta_star
                if vnorm(err, agent.V.m) > agent.radius_prev:
                    diag.coverage_violations += 1
                    covered = False
            t0 = clock()
            idx = agent.select(arms)
            t1 = clock()
            reward, nu_t = play(instance, idx, noise_rng)
            x = arms[idx]
            theta_before = agent.theta_hat if check_coverage else None
            t2 = clock()
            agent.observe(x, reward, nu_t)
            t3 = clock()
            if check_coverage and covered and agent.last_schedule is not None:
                sched = agent.last_schedule
                gap = abs(float(x @ (theta_before - theta_star))) / sched.sigma
                if gap > 0.5 * sched.tau + 1e-10:
                    diag.kink_violations += 1
            inst_regret = regret_increment(instance, idx)
            cum_regret += inst_regret
            traces.append(RoundTrace(
                trial=trial_index, t=t, arm_index=idx, reward=reward,
                inst_regret=inst_regret, cum_regret=cum_regret,
                round_time_ns=(t1 - t0) + (t3 - t2),
            ))
    except ConvergenceError as exc:
        # abort the trial but keep the partial trace and a diagnostic record
        diag.error = f"{type(exc).__name__}: {exc}"
    finally:
        safety = getattr(agent, "safety", None)
        if safety is not None:
            diag.safety_checked = safety.checked
            diag.safety_violations = safety.violations
            diag.data_branch_rounds = safety.data_branch_rounds
        diag.fit_warnings = getattr(agent, "fit_warnings", 0)
    return TrialResult(traces, diag)


def checkpoints_for(T, count=100):
    """Evenly spaced integer round indices ending at T (fewer when T < count)."""
    if T <= 0:
        return []
    points = sorted({max(1, round(T * k / count)) for k in range(1, count + 1)})
    return points


@dataclass
class ExperimentSummary:
    algo: str
    checkpoints: list
    mean_cum_regret: np.ndarray
    std_cum_regret: np.ndarray
    mean_cum_time_ns: np.ndarray
    std_cum_time_ns: np.ndarray
    rounds_path: str | None = None
    summary_path: str | None = None
    diagnostics: list = field(default_factory=list)


def summarize(results, T, algo="", count=100):
    """Checkpointed mean/std (population) of cumulative regret and time.

    Trials are ordered by their trial index before aggregation, so the
    summary is independent of execution order.
    """
    points = checkpoints_for(T, count)
    trace_lists = [res.traces if isinstance(res, TrialResult) else res for res in results]
    order = sorted(range(len(results)),
                   key=lambda i: trace_lists[i][0].trial if trace_lists[i] else i)
    results = [results[i] for i in order]
    reg_rows, time_rows = [], []
    for res in results:
        traces = res.traces if isinstance(res, TrialResult) else res
        if len(traces) != T:
            raise ValueError(f"trial has {len(traces)} rounds, expected {T}")
        cum_reg = [tr.cum_regret for tr in traces]
        cum_time = np.cumsum([tr.round_time_ns for tr in traces])
        reg_rows.append([cum_reg[p - 1] for p in points])
        time_rows.append([cum_time[p - 1] for p in points])
    reg = np.asarray(reg_rows, dtype=float)
    tim = np.asarray(time_rows, dtype=float)
    if len(results) == 0:
        reg = np.zeros((0, len(points)))
        tim = np.zeros((0, len(points)))
    return ExperimentSummary(
        algo=algo,
        checkpoints=points,
        mean_cum_regret=reg.mean(axis=0) if len(results) else np.zeros(len(points)),
        std_cum_regret=reg.std(axis=0) if len(results) else np.zeros(len(points)),
        mean_cum_time_ns=tim.mean(axis=0) if len(results) else np.zeros(len(points)),
        std_cum_time_ns=tim.std(axis=0) if len(results) else np.zeros(len(points)),
        diagnostics=[res.diagnostics for res in results if isinstance(res, TrialResult)],
    )


def write_rounds_csv(path, results):
    with open(path, "w") as fh:
        fh.write(ROUNDS_HEADER + "\n")
        for res in results:
            traces = res.traces if isinstance(res, TrialResult) else res
            for tr in traces:
                fh.write(tr.to_csv_row() + "\n")


def read_rounds_csv(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if header != ROUNDS_HEADER:
            raise ValueError(f"unexpected rounds header {header!r}")
        return [RoundTrace.from_csv_row(line) for line in fh if line.strip()]


def write_summary_csv(path, summary):
    with open(path, "w") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for i, cp in enumerate(summary.checkpoints):
            fh.write(
                f"{cp},{_fmt(summary.mean_cum_regret[i])},"
                f"{_fmt(summary.std_cum_regret[i])},"
                f"{_fmt(summary.mean_cum_time_ns[i])},"
                f"{_fmt(summary.std_cum_time_ns[i])}\n"
            )


def read_summary_csv(path, algo=None):
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SUMMARY_HEADER:
            raise ValueError(f"unexpected summary header {header!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if algo is None:
        algo = Path(path).stem.removesuffix("_summary")
    return ExperimentSummary(
        algo=algo,
        checkpoints=[int(r[0]) for r in rows],
        mean_cum_regret=np.array([float(r[1]) for r in rows]),
        std_cum_regret=np.array([float(r[2]) for r in rows]),
        mean_cum_time_ns=np.array([float(r[3]) for r in rows]),
        std_cum_time_ns=np.array([float(r[4]) for r in rows]),
        summary_path=str(path),
    )


def _run_trial_star(args):
    return run_trial(*args)


def run_experiment(config):
    """Run all trials, write the per-round and summary CSVs, return the summary."""
    out_dir = Path(config.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out_dir} is not writable: {exc}") from exc

    jobs = [(config, i) for i in range(config.trials)]
    if config.sequential or config.trials == 1:
        results = [run_trial(config, i) for i in range(config.trials)]
    else:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_run_trial_star, jobs))

    failed = [(i, r.diagnostics.error) for i, r in enumerate(results)
              if r.diagnostics.error]
    if failed:
        raise RuntimeError(f"trials aborted on convergence failures: {failed}")

    summary = summarize(results, config.T, algo=config.algo)
    rounds_path = out_dir / f"{config.algo}_rounds.csv"
    summary_path = out_dir / f"{config.algo}_summary.csv"
    write_rounds_csv(rounds_path, results)
    write_summary_csv(summary_path, summary)
    summary.rounds_path = str(rounds_path)
    summary.summary_path = str(summary_path)
    return summary


def per_round_times(summary):
    """Average per-round time within each checkpoint window, from cumulative."""
    cps = np.asarray(summary.checkpoints, dtype=float)
    cum = np.asarray(summary.mean_cum_time_ns, dtype=float)
    widths = np.diff(np.concatenate([[0.0], cps]))
    increments = np.diff(np.concatenate([[0.0], cum]))
    return increments / widths


def compare_runtimes(summary_a, summary_b, window_start_frac=0.5):
    """Total-time ratio and per-round-time trend for two same-horizon runs.

    The trend is a least-squares slope of checkpoint-window per-round times
    against t over the tail window [window_start_frac * T, T], reported with
    a one-sided p-value for slope > 0 and as a fraction of the mean
    per-round time.
    """
    if list(summary_a.checkpoints) != list(summary_b.checkpoints):
        raise ValueError("summaries cover different checkpoint grids")
    if not summary_a.checkpoints:
        raise ValueError("summaries are empty")

    def algo_stats(summary):
        cps = np.asarray(summary.checkpoints, dtype=float)
        per_round = per_round_times(summary)
        total = float(summary.mean_cum_time_ns[-1])
        cut = window_start_frac * cps[-1]
        mask = cps >= cut
        slope = 0.0
        p_positive = 1.0
        if mask.sum() >= 3 and np.ptp(per_round[mask]) > 0.0:
            fit = _scipy_stats.linregress(cps[mask], per_round[mask])
            slope = float(fit.slope)
            p_two = float(fit.pvalue)
            p_positive = p_two / 2.0 if slope > 0 else 1.0 - p_two / 2.0
        mean_pr = float(per_round[mask].mean()) if mask.any() else 0.0
        return {
            "total_time_ns": total,
            "per_round_slope_ns": slope,
            "per_round_mean_ns": mean_pr,
            "slope_fraction_of_mean": slope / mean_pr if mean_pr > 0 else 0.0,
            "p_slope_positive": p_positive,
        }

    a = algo_stats(summary_a)
    b = algo_stats(summary_b)
    ratio = b["total_time_ns"] / a["total_time_ns"] if a["total_time_ns"] > 0 else float("inf")
    return {
        "algo_a": summary_a.algo,
        "algo_b": summary_b.algo,
        "total_time_ratio_b_over_a": ratio,
        "a": a,
        "b": b,
    }


def write_compare_csv(path, report):
    rows = [
        ("algo_a", report["algo_a"]),
        ("algo_b", report["algo_b"]),
        ("total_time_ratio_b_over_a", _fmt(report["total_time_ratio_b_over_a"])),
    ]
    for side in ("a", "b"):
        for key, val in report[side].items():
            rows.append((f"{side}_{key}", _fmt(val)))
    with open(path, "w") as fh:
        fh.write("key,value\n")
        for key, val in rows:
            fh.write(f"{key},{val}\n")
