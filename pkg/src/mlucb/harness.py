"""Seeded simulation runs, multi-policy comparisons and the regret-bound check."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _io, rng
from .cf_env import EnvConfig, Environment, GroundTruth, generate_ground_truth
from .cgf import gaussian_conjugate
from .errors import ConfigError, DomainError, InsufficientDataError, MlUcbError
from .learning_curve import LearningCurve, fit_power_law, fit_stable_regime
from .mf_model import MfModel, validation_mse
from .policies import (
    LinUcbPolicy,
    MlUcbConfig,
    MlUcbPolicy,
    OraclePolicy,
    PsiUcbPolicy,
    RandomPolicy,
    UcbPolicy,
)

TRACE_HEADER = ["t", "user", "item", "instant_regret", "cum_regret", "regret_rate", "optimal"]
KNOWN_POLICIES = ("ucb", "psi-ucb", "ml-ucb", "linucb", "oracle", "random")


class EpisodeError(MlUcbError, RuntimeError):
    """A policy or model failed mid-episode; ``step`` is the 1-based step."""

    def __init__(self, step, cause):
        super().__init__(f"step {step}: {type(cause).__name__}: {cause}")
        self.step = step


@dataclass(frozen=True)
class PolicyConfig:
    name: str = "ml-ucb"
    alpha: float = 1.0
    s: float = 0.5
    count_scope: str = "per_item"
    score_form: str = "bonus"
    sigma2: float = 1.0
    learn_rate: float = 0.01
    replay_batch: int = 0
    factor_dim: int | None = None
    init_var: float = 0.01
    label: str | None = None

    def __post_init__(self):
        if self.name not in KNOWN_POLICIES:
            raise ConfigError(f"unknown policy {self.name!r}; expected one of {KNOWN_POLICIES}")
        if not self.alpha >= 0:
            raise ConfigError("alpha must be nonnegative")
        if not self.s > 0:
            raise ConfigError("s must be positive")

    @property
    def display(self) -> str:
        if self.label:
            return self.label
        if self.name == "ml-ucb":
            return f"ml-ucb(s={self.s:g},alpha={self.alpha:g})"
        if self.name == "linucb":
            return f"linucb(alpha={self.alpha:g})"
        if self.name == "psi-ucb":
            return f"psi-ucb(s={self.s:g})"
        return self.name

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class RunConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    horizon: int = 33_333
    validation_interval: int | None = None
    validation_pairs: int = 1000
    tail_fraction: float = 0.2
    ground_truth: str | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.validation_interval is not None and self.validation_interval < 1:
            raise ConfigError("validation_interval must be >= 1")
        if self.validation_pairs < 1:
            raise ConfigError("validation_pairs must be >= 1")

    @property
    def seed(self) -> int:
        return self.env.seed

    @property
    def interval(self) -> int:
        return self.validation_interval or max(1, self.horizon // 100)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["validation_interval"] = self.interval
        return d

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(self, env=dataclasses.replace(self.env, seed=seed))


def build_policy(pc: PolicyConfig, gt: GroundTruth, seed: int):
    cfg = gt.config
    lo_hi = (cfg.rating_min, cfg.rating_max)
    if pc.name == "ucb":
        return UcbPolicy(gt.n_items, lo_hi)
    if pc.name == "psi-ucb":
        return PsiUcbPolicy(gt.n_items, pc.sigma2, pc.s, lo_hi)
    if pc.name == "ml-ucb":
        model = MfModel(
            gt.n_users,
            gt.n_items,
            pc.factor_dim or cfg.latent_dim,
            learn_rate=pc.learn_rate,
            replay_batch=pc.replay_batch,
            init_var=pc.init_var,
            generator=rng.stream(seed, rng.POLICY),
            rating_range=lo_hi,
        )
        return MlUcbPolicy(model, MlUcbConfig(pc.alpha, pc.s, pc.count_scope), pc.score_form, pc.sigma2)
    if pc.name == "linucb":
        return LinUcbPolicy(gt.user_embeddings, gt.item_embeddings, pc.alpha, lo_hi)
    if pc.name == "oracle":
        return OraclePolicy(gt.optimal_items)
    return RandomPolicy(gt.n_items, rng.stream(seed, rng.POLICY))


def validation_set(gt: GroundTruth, size: int, seed: int) -> np.ndarray:
    g = rng.stream(seed, rng.VALIDATION)
    return np.column_stack([g.integers(gt.n_users, size=size), g.integers(gt.n_items, size=size)])


@dataclass
class RunTrace:
    config: RunConfig
    users: np.ndarray
    items: np.ndarray
    instant_regret: np.ndarray
    cum_regret: np.ndarray
    optimal: np.ndarray
    curve_n: list = field(default_factory=list)
    curve_mse: list = field(default_factory=list)

    @property
    def steps(self) -> int:
        return self.users.size

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, self.steps + 1)

    @property
    def regret_rate(self) -> np.ndarray:
        return self.cum_regret / self.t

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1])

    @property
    def accuracy(self) -> float:
        return float(np.mean(self.optimal))

    def learning_curve(self) -> LearningCurve:
        return LearningCurve(self.curve_n, self.curve_mse)

    def fitted_s(self) -> tuple[float | None, float | None]:
        try:
            curve = self.learning_curve()
            return fit_power_law(curve).s, fit_stable_regime(curve, self.config.tail_fraction).s
        except (InsufficientDataError, DomainError):
            return None, None

    def summary(self) -> dict:
        s_full, s_stable = self.fitted_s()
        return {
            "policy": self.config.policy.display,
            "final_regret": self.final_regret,
            "regret_rate": self.final_regret / self.steps,
            "accuracy": self.accuracy,
            "fitted_s_full": s_full,
            "fitted_s_stable": s_stable,
            "seed": self.config.seed,
            "config": self.config.to_dict(),
        }

    def trace_csv(self, every: int = 1) -> str:
        idx = np.arange(self.steps)
        if every > 1:
            idx = idx[((idx + 1) % every == 0) | (idx == self.steps - 1)]
        rate = self.regret_rate
        rows = (
            (i + 1, self.users[i], self.items[i], self.instant_regret[i], self.cum_regret[i], rate[i], bool(self.optimal[i]))
            for i in idx
        )
        return _io.csv_text(TRACE_HEADER, rows)

    def curve_csv(self) -> str:
        return _io.csv_text(["n", "mse"], zip(self.curve_n, self.curve_mse))


def run_episode(config: RunConfig, gt: GroundTruth | None = None, policy=None) -> RunTrace:
    """Simulate ``config.horizon`` steps of arrive / select / observe / update.

    Every ``config.interval`` steps the policy's validation MSE against the
    true mean ratings is recorded at the current number of training
    observations. ``policy`` overrides the one built from the config.
    """
    if gt is None:
        gt = _resolve_ground_truth(config)
    if gt.config != config.env:
        config = dataclasses.replace(config, env=gt.config)
    seed = config.seed
    env = Environment(gt, seed)
    if policy is None:
        policy = build_policy(config.policy, gt, seed)
    pairs = validation_set(gt, config.validation_pairs, seed)
    track = hasattr(policy, "predict_pairs")
    T = config.horizon
    users = np.empty(T, dtype=np.int64)
    items = np.empty(T, dtype=np.int64)
    inst = np.empty(T)
    cum = np.empty(T)
    opt = np.empty(T, dtype=bool)
    curve_n, curve_mse = [], []
    total = 0.0
    best = gt.optimal_means
    means = gt.mean_ratings
    for t in range(1, T + 1):
        try:
            u = env.next_user()
            i = policy.select(u, t)
            r = env.reward(u, i)
            policy.update(u, i, r)
            if track and t % config.interval == 0 and policy.n_observed > 0:
                curve_n.append(int(policy.n_observed))
                curve_mse.append(validation_mse(policy, gt, pairs))
        except Exception as exc:  # noqa: BLE001 - re-raised with step context
            raise EpisodeError(t, exc) from exc
        reg = float(best[u] - means[u, i])
        total += reg
        users[t - 1], items[t - 1], inst[t - 1], cum[t - 1] = u, i, reg, total
        opt[t - 1] = means[u, i] >= best[u]
    return RunTrace(config, users, items, inst, cum, opt, curve_n, curve_mse)


def run_seeds(config: RunConfig, seeds: Sequence[int], workers: int = 1) -> list[RunTrace]:
    """Independent episodes, one per seed (each seed draws its own ground truth)."""
    cfgs = [config.with_seed(s) for s in seeds]
    if workers <= 1:
        return [run_episode(c) for c in cfgs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_episode, cfgs))


def percentage_matrix(regrets: Sequence[float]) -> list[list[float | None]]:
    """``pct[p][b] = (R_b - R_p) / R_b * 100``: how much lower p's regret is than b's."""
    return [[None if rb == 0 else (rb - rp) / rb * 100.0 for rb in regrets] for rp in regrets]


@dataclass
class ComparisonReport:
    traces: list[RunTrace]
    ground_truth_hash: str

    @property
    def summaries(self) -> list[dict]:
        return [tr.summary() for tr in self.traces]

    @property
    def labels(self) -> list[str]:
        return [tr.config.policy.display for tr in self.traces]

    @property
    def pct(self) -> list[list[float | None]]:
        return percentage_matrix([tr.final_regret for tr in self.traces])

    def to_dict(self) -> dict:
        return {
            "ground_truth_hash": self.ground_truth_hash,
            "labels": self.labels,
            "summaries": self.summaries,
            "pct_lower_regret": self.pct,
        }


def _resolve_ground_truth(config: RunConfig) -> GroundTruth:
    if config.ground_truth:
        return GroundTruth.load(config.ground_truth)
    return generate_ground_truth(config.env)


def compare_policies(
    configs: Sequence[RunConfig], workers: int = 1, ground_truth: GroundTruth | None = None
) -> ComparisonReport:
    """Run every config against one shared ground truth.

    Results are ordered by config index regardless of ``workers``.

    Raises:
        ConfigError: the configs resolve to ground truths with different hashes.
    """
    if not configs:
        raise ConfigError("no runs to compare")
    if ground_truth is not None:
        gts = [ground_truth] * len(configs)
    else:
        cache: dict = {}
        gts = []
        for c in configs:
            key = c.ground_truth or ("gen", tuple(sorted(c.env.to_dict().items())))
            if key not in cache:
                cache[key] = _resolve_ground_truth(c)
            gts.append(cache[key])
    hashes = {gt.content_hash() for gt in gts}
    if len(hashes) != 1:
        raise ConfigError(f"runs reference {len(hashes)} different ground truths")
    jobs = list(zip(configs, gts))
    if workers <= 1:
        traces = [run_episode(c, g) for c, g in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(lambda job: run_episode(*job), jobs))
    return ComparisonReport(traces, hashes.pop())


# --- regret bound check ---------------------------------------------------------


@dataclass
class BoundReport:
    means: list[float]
    sigma2: float
    s: float
    horizon: int
    gaps: list[float]
    thresholds: list[float]
    bound: float
    slack: float
    regrets: list[float]
    mean_regret: float
    stderr: float
    passed: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def pull_threshold(gap: float, sigma2: float, s: float, horizon: int) -> float:
    """``(3 log n / psi*_1(gap/2)) ** (1/s)`` with the Gaussian one-sample conjugate."""
    if not gap > 0:
        raise DomainError(f"gap must be positive, got {gap}")
    psi_star = gaussian_conjugate(sigma2).evaluate(gap / 2.0)
    return (3.0 * math.log(horizon) / psi_star) ** (1.0 / s)


def _gaussian_bandit_regret(means, sigma2, s, horizon, seed) -> float:
    mu = np.asarray(means, dtype=float)
    gaps = mu.max() - mu
    policy = PsiUcbPolicy(mu.size, sigma2=sigma2, s=s, rating_range=(-np.inf, np.inf))
    noise = rng.stream(seed, rng.BANDIT_NOISE).standard_normal(horizon) * math.sqrt(sigma2)
    regret = 0.0
    for t in range(1, horizon + 1):
        j = policy.select(0, t)
        policy.update(0, j, mu[j] + noise[t - 1])
        regret += gaps[j]
    return regret


def verify_regret_bound(
    means: Sequence[float],
    sigma2: float = 1.0,
    s: float = 1.0,
    horizon: int = 10_000,
    seeds: Sequence[int] = tuple(range(20)),
    slack_per_arm: float = 50.0,
) -> BoundReport:
    """Empirical pseudo-regret of sample-mean psi-UCB against ``sum_j gap_j * m_j``.

    Passes when the mean regret over seeds is at most the bound plus
    ``slack_per_arm * K``.
    """
    mu = np.asarray(means, dtype=float)
    if mu.size < 1:
        raise DomainError("need at least one arm")
    if horizon < 2:
        raise DomainError("horizon must be >= 2")
    gaps = mu.max() - mu
    best = int(np.argmax(mu))
    others = np.delete(gaps, best)
    if np.any(others <= 0):
        raise DomainError("every suboptimal arm needs a positive gap")
    thresholds = [pull_threshold(g, sigma2, s, horizon) for g in others]
    bound = float(sum(g * m for g, m in zip(others, thresholds)))
    regrets = [_gaussian_bandit_regret(mu, sigma2, s, horizon, sd) for sd in seeds]
    mean = float(np.mean(regrets))
    stderr = float(np.std(regrets, ddof=1) / math.sqrt(len(regrets))) if len(regrets) > 1 else 0.0
    slack = slack_per_arm * mu.size
    return BoundReport(
        means=mu.tolist(),
        sigma2=float(sigma2),
        s=float(s),
        horizon=int(horizon),
        gaps=others.tolist(),
        thresholds=thresholds,
        bound=bound,
        slack=slack,
        regrets=regrets,
        mean_regret=mean,
        stderr=stderr,
        passed=mean <= bound + slack,
    )
