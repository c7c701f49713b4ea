"""Arm-selection policies: classical UCB, psi-UCB, ML-UCB and disjoint LinUCB.

Every policy exposes ``select(user, t) -> item`` for the 1-based step ``t``
and ``update(user, item, reward)``. Ties in every argmax go to the lowest
index. Logs are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cgf import ConjugateBound, conjugate_inverse, gaussian_conjugate, scale_by_samples
from .errors import ConfigError, DomainError, InvariantError
from .mf_model import MfModel

POLICY_IDS = ("ucb", "psi-ucb", "ml-ucb", "linucb")


@dataclass(frozen=True)
class MlUcbConfig:
    alpha: float = 1.0
    s: float = 0.5
    count_scope: str = "per_item"

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ConfigError("alpha must be nonnegative")
        if not self.s > 0:
            raise ConfigError("s must be positive")
        if self.count_scope not in ("per_item", "per_user_item"):
            raise ConfigError(f"unknown count_scope {self.count_scope!r}")


# --- scores -----------------------------------------------------------------


def classical_ucb_score(mean, std, count, t: int):
    """``mean + sqrt(6 log t / count) * std``; unplayed arms score +inf."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    count = np.asarray(count, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        bonus = np.sqrt(6.0 * math.log(max(t, 1)) / count) * std
        score = np.where(count > 0, mean + np.where(std > 0, bonus, 0.0), np.inf)
    return float(score) if score.ndim == 0 else score


def psi_ucb_score(estimate: float, conj: ConjugateBound, t: int) -> float:
    """``estimate + (psi*)^{-1}(3 log t)`` for a conjugate already scaled to the arm's sample size."""
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    return estimate + conjugate_inverse(conj, 3.0 * math.log(t))


def ml_ucb_bonus(t, n_i, cfg: MlUcbConfig):
    """``alpha * sqrt(log(t+1)**(1/s) / (n_i + 1))``."""
    n_i = np.asarray(n_i, dtype=float)
    out = cfg.alpha * np.sqrt(np.log1p(t) ** (1.0 / cfg.s) / (n_i + 1.0))
    return float(out) if out.ndim == 0 else out


def ml_ucb_select(model: MfModel, counts: np.ndarray, user: int, t: int, cfg: MlUcbConfig) -> int:
    """Argmax of prediction plus bonus; increments the chosen count in place.

    ``counts`` has shape ``(n_items,)`` for per-item scope or
    ``(n_users, n_items)`` for per-user-item scope.
    """
    row = counts if counts.ndim == 1 else counts[user]
    scores = model.predict_user(user) + ml_ucb_bonus(t, row, cfg)
    item = int(np.argmax(scores))
    row[item] += 1
    return item


# --- LinUCB -------------------------------------------------------------------


class LinUcbState:
    """Per-item ridge statistics ``A_i = I + sum x x^T`` and ``b_i = sum r x``."""

    def __init__(self, n_items: int, dim: int):
        self.A = np.broadcast_to(np.eye(dim), (n_items, dim, dim)).copy()
        self.b = np.zeros((n_items, dim))

    @property
    def dim(self) -> int:
        return self.b.shape[1]

    def theta(self) -> np.ndarray:
        return np.linalg.solve(self.A, self.b[..., None])[..., 0]


def linucb_scores(state: LinUcbState, contexts: np.ndarray, alpha: float) -> np.ndarray:
    """``theta_i . x_i + alpha * sqrt(x_i^T A_i^{-1} x_i)`` for every item."""
    try:
        np.linalg.cholesky(state.A)
    except np.linalg.LinAlgError as exc:
        raise InvariantError("LinUCB design matrix lost positive definiteness") from exc
    rhs = np.concatenate([state.b[..., None], contexts[..., None]], axis=2)
    sol = np.linalg.solve(state.A, rhs)
    theta, ainv_x = sol[..., 0], sol[..., 1]
    mean = np.einsum("ij,ij->i", theta, contexts)
    width = np.sqrt(np.maximum(np.einsum("ij,ij->i", contexts, ainv_x), 0.0))
    return mean + alpha * width


def linucb_select(state: LinUcbState, contexts: np.ndarray, alpha: float) -> int:
    return int(np.argmax(linucb_scores(state, contexts, alpha)))


def linucb_update(state: LinUcbState, item: int, context, reward: float) -> LinUcbState:
    x = np.asarray(context, dtype=float)
    if x.shape != (state.dim,):
        raise DomainError(f"context has shape {x.shape}, expected ({state.dim},)")
    state.A[item] += np.outer(x, x)
    state.b[item] += reward * x
    return state


def partial_contexts(user_vec: np.ndarray, item_matrix: np.ndarray) -> np.ndarray:
    """First ceil(d/2) coordinates of the user vector joined with those of each item."""
    h = math.ceil(user_vec.shape[0] / 2)
    n = item_matrix.shape[0]
    return np.hstack([np.broadcast_to(user_vec[:h], (n, h)), item_matrix[:, :h]])


# --- policy objects -------------------------------------------------------------


class _ArmStats:
    """Welford running mean/variance per arm."""

    def __init__(self, n_arms: int):
        self.counts = np.zeros(n_arms, dtype=np.int64)
        self.means = np.zeros(n_arms)
        self._m2 = np.zeros(n_arms)

    def push(self, arm: int, x: float):
        self.counts[arm] += 1
        d = x - self.means[arm]
        self.means[arm] += d / self.counts[arm]
        self._m2[arm] += d * (x - self.means[arm])

    @property
    def stds(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            var = np.where(self.counts >= 2, self._m2 / (self.counts - 1), 0.0)
        return np.sqrt(np.maximum(var, 0.0))


class Policy:
    name = "policy"

    def select(self, user: int, t: int) -> int:
        raise NotImplementedError

    def update(self, user: int, item: int, reward: float) -> None:
        pass

    @property
    def n_observed(self) -> int:
        return 0


class UcbPolicy(Policy):
    """Context-free UCB on per-item sample means and standard deviations."""

    name = "ucb"

    def __init__(self, n_items: int, rating_range=(0.0, 5.0)):
        self.stats = _ArmStats(n_items)
        self.rating_range = rating_range

    def select(self, user, t):
        return int(np.argmax(classical_ucb_score(self.stats.means, self.stats.stds, self.stats.counts, t)))

    def update(self, user, item, reward):
        self.stats.push(item, reward)

    @property
    def n_observed(self):
        return int(self.stats.counts.sum())

    def predict_pairs(self, users, items):
        return np.clip(self.stats.means[np.asarray(items)], *self.rating_range)


class PsiUcbPolicy(UcbPolicy):
    """Sample-mean psi-UCB with a Gaussian base bound scaled by ``T_j**s``."""

    name = "psi-ucb"

    def __init__(self, n_items: int, sigma2: float = 1.0, s: float = 1.0, rating_range=(0.0, 5.0)):
        super().__init__(n_items, rating_range)
        self.base = gaussian_conjugate(sigma2)
        self.s = s

    def select(self, user, t):
        counts = self.stats.counts
        unplayed = np.flatnonzero(counts == 0)
        if unplayed.size:
            return int(unplayed[0])
        scores = [
            psi_ucb_score(self.stats.means[j], scale_by_samples(self.base, int(counts[j]), self.s), t)
            for j in range(counts.size)
        ]
        return int(np.argmax(scores))


class MlUcbPolicy(Policy):
    """Matrix-factorization estimator with a learning-curve calibrated bonus.

    ``score_form="bonus"`` uses ``alpha * sqrt(log(t+1)**(1/s) / (n_i+1))``;
    ``score_form="conjugate"`` uses the Gaussian conjugate inverse
    ``sqrt(2 sigma2 * 3 log t / (n_i+1)**s)`` with ``sigma2`` typically the
    fitted learning-curve amplitude ``C``.
    """

    name = "ml-ucb"

    def __init__(self, model: MfModel, cfg: MlUcbConfig, score_form: str = "bonus", sigma2: float = 1.0):
        if score_form not in ("bonus", "conjugate"):
            raise ConfigError(f"unknown score_form {score_form!r}")
        self.model = model
        self.cfg = cfg
        self.score_form = score_form
        self.base = gaussian_conjugate(sigma2)
        shape = (model.n_items,) if cfg.count_scope == "per_item" else (model.n_users, model.n_items)
        self.counts = np.zeros(shape, dtype=np.int64)

    def select(self, user, t):
        if self.score_form == "bonus":
            return ml_ucb_select(self.model, self.counts, user, t, self.cfg)
        row = self.counts if self.counts.ndim == 1 else self.counts[user]
        pred = self.model.predict_user(user)
        scores = [
            psi_ucb_score(pred[i], scale_by_samples(self.base, int(row[i]) + 1, self.cfg.s), t)
            for i in range(pred.size)
        ]
        item = int(np.argmax(scores))
        row[item] += 1
        return item

    def update(self, user, item, reward):
        self.model.sgd_step(user, item, reward)

    @property
    def n_observed(self):
        return self.model.n_observed

    def predict_pairs(self, users, items):
        return self.model.predict_pairs(users, items)


class LinUcbPolicy(Policy):
    """Disjoint LinUCB on half of the true user and item latent coordinates."""

    name = "linucb"

    def __init__(self, user_embeddings, item_embeddings, alpha: float = 1.0, rating_range=(0.0, 5.0)):
        self.U = np.asarray(user_embeddings)
        self.M = np.asarray(item_embeddings)
        self.alpha = float(alpha)
        self.rating_range = rating_range
        h = math.ceil(self.U.shape[1] / 2)
        self.state = LinUcbState(self.M.shape[0], 2 * h)
        self._n = 0

    def contexts(self, user):
        return partial_contexts(self.U[user], self.M)

    def select(self, user, t):
        return linucb_select(self.state, self.contexts(user), self.alpha)

    def update(self, user, item, reward):
        linucb_update(self.state, item, self.contexts(user)[item], reward)
        self._n += 1

    @property
    def n_observed(self):
        return self._n

    def predict_pairs(self, users, items):
        users = np.asarray(users)
        items = np.asarray(items)
        h = self.state.dim // 2
        x = np.hstack([self.U[users, :h], self.M[items, :h]])
        theta = self.state.theta()[items]
        return np.clip(np.einsum("ij,ij->i", theta, x), *self.rating_range)


class OraclePolicy(Policy):
    name = "oracle"

    def __init__(self, optimal_items):
        self.optimal_items = np.asarray(optimal_items)

    def select(self, user, t):
        return int(self.optimal_items[user])


class RandomPolicy(Policy):
    name = "random"

    def __init__(self, n_items: int, generator: np.random.Generator):
        self.n_items = n_items
        self.rng = generator

    def select(self, user, t):
        return int(self.rng.integers(self.n_items))
