"""Simulated collaborative-filtering environment.

Users and items carry latent vectors; the mean rating of a pair is their dot
product clipped to the rating range, and observed ratings add Gaussian noise
before clipping.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _io, rng
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class EnvConfig:
    n_users: int = 1000
    n_items: int = 100
    latent_dim: int = 10
    noise_var: float = 0.25
    rating_min: float = 0.0
    rating_max: float = 5.0
    embed_dist: str = "uniform"
    embed_low: float = 0.0
    embed_high: float = 1.0
    embed_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("n_users", "n_items", "latent_dim"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.rating_min < self.rating_max:
            raise ConfigError("rating_min must be below rating_max")
        if not self.noise_var >= 0:
            raise ConfigError("noise_var must be nonnegative")
        if self.embed_dist not in ("uniform", "normal"):
            raise ConfigError(f"embed_dist must be 'uniform' or 'normal', got {self.embed_dist!r}")
        if not self.embed_scale >= 0:
            raise ConfigError("embed_scale must be nonnegative")
        if self.embed_low > self.embed_high:
            raise ConfigError("embed_low must not exceed embed_high")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "EnvConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown env fields: {sorted(unknown)}")
        return cls(**known)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    config: EnvConfig
    user_embeddings: np.ndarray
    item_embeddings: np.ndarray
    mean_ratings: np.ndarray = field(init=False, repr=False)
    optimal_items: np.ndarray = field(init=False, repr=False)
    optimal_means: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cfg = self.config
        U = np.ascontiguousarray(self.user_embeddings, dtype=float)
        M = np.ascontiguousarray(self.item_embeddings, dtype=float)
        if U.shape != (cfg.n_users, cfg.latent_dim) or M.shape != (cfg.n_items, cfg.latent_dim):
            raise ConfigError(f"embedding shapes {U.shape}, {M.shape} do not match config")
        means = np.clip(U @ M.T, cfg.rating_min, cfg.rating_max)
        opt = np.argmax(means, axis=1)  # first maximum, i.e. lowest index on ties
        for name, arr in (
            ("user_embeddings", U),
            ("item_embeddings", M),
            ("mean_ratings", means),
            ("optimal_items", opt),
            ("optimal_means", means[np.arange(cfg.n_users), opt]),
        ):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_users(self) -> int:
        return self.config.n_users

    @property
    def n_items(self) -> int:
        return self.config.n_items

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(self.config.to_dict(), sort_keys=True).encode())
        h.update(np.ascontiguousarray(self.user_embeddings, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.item_embeddings, dtype="<f8").tobytes())
        return h.hexdigest()

    def save(self, directory) -> str:
        """Write ``ground_truth.json`` plus two embedding CSVs; returns the hash."""
        directory = Path(directory)
        digest = self.content_hash()
        _io.atomic_write_text(directory / "user_embeddings.csv", _io.matrix_csv_text(self.user_embeddings))
        _io.atomic_write_text(directory / "item_embeddings.csv", _io.matrix_csv_text(self.item_embeddings))
        _io.write_json(
            directory / "ground_truth.json",
            {
                "config": self.config.to_dict(),
                "hash": digest,
                "user_embeddings": "user_embeddings.csv",
                "item_embeddings": "item_embeddings.csv",
            },
        )
        return digest

    @classmethod
    def load(cls, directory, verify: bool = True) -> "GroundTruth":
        directory = Path(directory)
        header = json.loads((directory / "ground_truth.json").read_text())
        cfg = EnvConfig.from_dict(header["config"])
        U = _io.read_numeric_csv(directory / header.get("user_embeddings", "user_embeddings.csv"))
        M = _io.read_numeric_csv(directory / header.get("item_embeddings", "item_embeddings.csv"))
        gt = cls(cfg, U, M)
        if verify and "hash" in header and header["hash"] != gt.content_hash():
            raise ConfigError(f"ground truth in {directory} does not match its recorded hash")
        return gt


def generate_ground_truth(config: EnvConfig) -> GroundTruth:
    """Draw i.i.d. embedding entries from the ground-truth stream.

    ``embed_dist="uniform"`` samples Uniform[embed_low, embed_high];
    ``"normal"`` samples N(0, embed_scale**2). User rows come first.
    """
    g = rng.stream(config.seed, rng.GROUND_TRUTH)
    shapes = (config.n_users, config.latent_dim), (config.n_items, config.latent_dim)
    if config.embed_dist == "uniform":
        U, M = (g.uniform(config.embed_low, config.embed_high, size=sh) for sh in shapes)
    else:
        U, M = (config.embed_scale * g.standard_normal(sh) for sh in shapes)
    return GroundTruth(config, U, M)


def _check_index(value, size, what):
    if not 0 <= value < size:
        raise IndexError(f"{what} index {value} out of range [0, {size})")


def sample_reward(gt: GroundTruth, user: int, item: int, generator: np.random.Generator) -> float:
    """One noisy clipped rating; consumes one standard normal from ``generator``."""
    _check_index(user, gt.n_users, "user")
    _check_index(item, gt.n_items, "item")
    cfg = gt.config
    z = generator.standard_normal()
    raw = float(gt.user_embeddings[user] @ gt.item_embeddings[item]) + math.sqrt(cfg.noise_var) * z
    return min(max(raw, cfg.rating_min), cfg.rating_max)


def instant_regret(gt: GroundTruth, user: int, item: int) -> float:
    _check_index(user, gt.n_users, "user")
    _check_index(item, gt.n_items, "item")
    return float(gt.optimal_means[user] - gt.mean_ratings[user, item])


class Environment:
    """Ground truth plus the arrival and reward-noise streams of one episode."""

    def __init__(self, gt: GroundTruth, seed: int | None = None):
        self.gt = gt
        seed = gt.config.seed if seed is None else seed
        self._arrivals = rng.stream(seed, rng.ARRIVALS)
        self._noise = rng.stream(seed, rng.NOISE)

    def next_user(self) -> int:
        return int(self._arrivals.integers(self.gt.n_users))

    def reward(self, user: int, item: int) -> float:
        return sample_reward(self.gt, user, item, self._noise)

    def regret(self, user: int, item: int) -> float:
        return instant_regret(self.gt, user, item)

    def is_optimal(self, user: int, item: int) -> bool:
        # equal-mean items count as optimal
        return bool(self.gt.mean_ratings[user, item] >= self.gt.optimal_means[user])


def uniform_policy_regret_rate(gt: GroundTruth) -> float:
    """Expected per-step regret of uniformly random play under uniform arrivals."""
    if gt.n_items < 1:
        raise DomainError("no items")
    return float(np.mean(gt.optimal_means[:, None] - gt.mean_ratings))
