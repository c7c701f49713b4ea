"""Two-tower matrix-factorization reward model trained online by SGD.

Loss over the observed set ``O``: ``L = 1/2 sum_{(u,i) in O} (U[u] . V[i] - r)**2``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import _io
from .errors import DomainError


class MfModel:
    """User/item factor matrices with a per-observation SGD update.

    Args:
        n_users, n_items, factor_dim: matrix shapes.
        learn_rate: SGD step size.
        replay_batch: extra buffered observations replayed after every update
            (0 means pure online SGD).
        init_var: variance of the i.i.d. normal initialisation.
        generator: source for initialisation and replay sampling.
    """

    def __init__(
        self,
        n_users: int,
        n_items: int,
        factor_dim: int,
        learn_rate: float = 0.01,
        replay_batch: int = 0,
        init_var: float = 0.01,
        generator: np.random.Generator | None = None,
        rating_range: tuple[float, float] = (0.0, 5.0),
    ):
        if not learn_rate > 0:
            raise DomainError("learn_rate must be positive")
        if replay_batch < 0:
            raise DomainError("replay_batch must be >= 0")
        self.learn_rate = float(learn_rate)
        self.replay_batch = int(replay_batch)
        self.factor_dim = int(factor_dim)
        self.rating_range = (float(rating_range[0]), float(rating_range[1]))
        self._rng = generator if generator is not None else np.random.default_rng(0)
        sd = math.sqrt(init_var)
        self.user_factors = sd * self._rng.standard_normal((n_users, factor_dim)) if sd > 0 else np.zeros((n_users, factor_dim))
        self.item_factors = sd * self._rng.standard_normal((n_items, factor_dim)) if sd > 0 else np.zeros((n_items, factor_dim))
        self._obs_u: list[int] = []
        self._obs_i: list[int] = []
        self._obs_r: list[float] = []

    @classmethod
    def from_factors(cls, user_factors, item_factors, learn_rate=0.01, replay_batch=0, generator=None):
        U = np.array(user_factors, dtype=float, ndmin=2)
        V = np.array(item_factors, dtype=float, ndmin=2)
        if U.shape[1] != V.shape[1]:
            raise DomainError("factor dimensions differ")
        model = cls(U.shape[0], V.shape[0], U.shape[1], learn_rate, replay_batch, init_var=0.0, generator=generator)
        model.user_factors = U
        model.item_factors = V
        return model

    @property
    def n_users(self) -> int:
        return self.user_factors.shape[0]

    @property
    def n_items(self) -> int:
        return self.item_factors.shape[0]

    @property
    def n_observed(self) -> int:
        return len(self._obs_r)

    @property
    def observations(self) -> list[tuple[int, int, float]]:
        return list(zip(self._obs_u, self._obs_i, self._obs_r))

    def _check(self, user, item):
        if not 0 <= user < self.n_users:
            raise IndexError(f"user index {user} out of range")
        if not 0 <= item < self.n_items:
            raise IndexError(f"item index {item} out of range")

    def raw_score(self, user: int, item: int) -> float:
        return float(self.user_factors[user] @ self.item_factors[item])

    def predict(self, user: int, item: int) -> float:
        self._check(user, item)
        lo, hi = self.rating_range
        return min(max(self.raw_score(user, item), lo), hi)

    def predict_user(self, user: int) -> np.ndarray:
        """Clipped predictions for every item for one user."""
        if not 0 <= user < self.n_users:
            raise IndexError(f"user index {user} out of range")
        return np.clip(self.item_factors @ self.user_factors[user], *self.rating_range)

    def predict_pairs(self, users, items) -> np.ndarray:
        users = np.asarray(users)
        items = np.asarray(items)
        raw = np.einsum("ij,ij->i", self.user_factors[users], self.item_factors[items])
        return np.clip(raw, *self.rating_range)

    def gradients(self, user: int, item: int, rating: float) -> tuple[np.ndarray, np.ndarray]:
        """Gradient of ``1/2 (U[u].V[i] - r)**2`` w.r.t. ``U[u]`` and ``V[i]``."""
        u = self.user_factors[user]
        m = self.item_factors[item]
        e = float(u @ m) - rating
        return e * m, e * u

    def _apply(self, user, item, rating):
        gu, gm = self.gradients(user, item, rating)
        self.user_factors[user] -= self.learn_rate * gu
        self.item_factors[item] -= self.learn_rate * gm

    def sgd_step(self, user: int, item: int, rating: float) -> "MfModel":
        """Update both factor rows from their pre-update values, then replay."""
        self._check(user, item)
        if not math.isfinite(rating):
            raise DomainError(f"rating must be finite, got {rating}")
        self._apply(user, item, rating)
        self._obs_u.append(int(user))
        self._obs_i.append(int(item))
        self._obs_r.append(float(rating))
        if self.replay_batch:
            for k in self._rng.integers(self.n_observed, size=self.replay_batch):
                self._apply(self._obs_u[k], self._obs_i[k], self._obs_r[k])
        return self

    def loss(self, observations=None) -> float:
        """The half sum-of-squares training loss over ``observations`` (default: buffer)."""
        obs = self.observations if observations is None else list(observations)
        if not obs:
            return 0.0
        u, i, r = (np.array(c) for c in zip(*obs))
        raw = np.einsum("ij,ij->i", self.user_factors[u.astype(int)], self.item_factors[i.astype(int)])
        return 0.5 * float(np.sum((raw - r) ** 2))

    def save(self, directory, seed: int | None = None) -> None:
        directory = Path(directory)
        _io.atomic_write_text(directory / "user_factors.csv", _io.matrix_csv_text(self.user_factors))
        _io.atomic_write_text(directory / "item_factors.csv", _io.matrix_csv_text(self.item_factors))
        _io.write_json(
            directory / "model.json",
            {
                "n_users": self.n_users,
                "n_items": self.n_items,
                "factor_dim": self.factor_dim,
                "learn_rate": self.learn_rate,
                "replay_batch": self.replay_batch,
                "seed": seed,
                "n_observed": self.n_observed,
            },
        )

    @classmethod
    def load(cls, directory) -> "MfModel":
        directory = Path(directory)
        header = json.loads((directory / "model.json").read_text())
        U = _io.read_numeric_csv(directory / "user_factors.csv")
        V = _io.read_numeric_csv(directory / "item_factors.csv")
        return cls.from_factors(U, V, header["learn_rate"], header["replay_batch"])


def validation_mse(model, gt, pairs) -> float:
    """Mean squared gap between clipped predictions and true mean ratings.

    ``model`` is anything with ``predict_pairs(users, items)``.
    """
    pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
    if pairs.shape[0] == 0:
        raise DomainError("validation pair list is empty")
    users, items = pairs[:, 0], pairs[:, 1]
    pred = np.asarray(model.predict_pairs(users, items), dtype=float)
    return float(np.mean((pred - gt.mean_ratings[users, items]) ** 2))
