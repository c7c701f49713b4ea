"""Run configuration files, presets and flag overrides.

Configuration is a nested mapping (YAML on disk) mirroring the field names of
:class:`~mlucb.harness.RunConfig`::

    horizon: 5000
    env: {n_users: 100, n_items: 20, latent_dim: 5, seed: 3}
    policy: {name: ml-ucb, s: 0.5, alpha: 1.0}
    policies:           # used by ``compare`` instead of ``policy``
      - {name: linucb, alpha: 1.0}
    bound: {means: [1.0, 0.5], sigma2: 1.0, s: 1.0, horizon: 10000, seeds: 20}

Resolution order is preset, then file, then flags.
"""

from __future__ import annotations

import copy
from pathlib import Path

import yaml

from .cf_env import EnvConfig
from .errors import ConfigError
from .harness import PolicyConfig, RunConfig

_DECAY_RATES = (0.272, 0.5, 0.97)

PRESETS: dict[str, dict] = {
    "paper-full": {
        "horizon": 33_333,
        "env": {"n_users": 1000, "n_items": 100, "latent_dim": 10},
        "policy": {"name": "ml-ucb", "s": 1.0, "alpha": 10.0},
        "policies": [{"name": "ml-ucb", "s": s, "alpha": 10.0} for s in _DECAY_RATES]
        + [{"name": "linucb", "alpha": 1.0}, {"name": "linucb", "alpha": 1.4}],
    },
    "paper-desk": {
        "horizon": 5000,
        "env": {"n_users": 100, "n_items": 20, "latent_dim": 5},
        "policy": {"name": "ml-ucb", "s": 0.5, "alpha": 1.0, "learn_rate": 0.1},
        "policies": [{"name": "ml-ucb", "s": s, "alpha": 1.0, "learn_rate": 0.1} for s in _DECAY_RATES]
        + [{"name": "linucb", "alpha": 1.0}, {"name": "linucb", "alpha": 1.4}],
    },
}

DEFAULT_BOUND = {"means": [1.0, 0.5], "sigma2": 1.0, "s": 1.0, "horizon": 10_000, "seeds": 20}


def deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def preset(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None


def load_file(path) -> dict:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def set_path(d: dict, assignment: str) -> dict:
    """Apply ``a.b.c=value`` (value parsed as YAML) to ``d`` in place."""
    key, sep, raw = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    parts = key.strip().split(".")
    node = d
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {assignment!r}: {p!r} is not a mapping")
    node[parts[-1]] = yaml.safe_load(raw)
    return d


def _build(cls, d: dict, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(d) - set(cls.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown {where} fields: {sorted(unknown)}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_RUN_KEYS = {"horizon", "validation_interval", "validation_pairs", "tail_fraction", "ground_truth"}


def run_config(d: dict, policy: dict | None = None) -> RunConfig:
    env = _build(EnvConfig, d.get("env", {}), "env")
    pol = _build(PolicyConfig, policy if policy is not None else d.get("policy", {}), "policy")
    extra = {k: d[k] for k in _RUN_KEYS if k in d}
    try:
        return RunConfig(env=env, policy=pol, **extra)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def compare_configs(d: dict) -> list[RunConfig]:
    """One RunConfig per ``policies`` entry (or the single ``policy``).

    An entry may carry its own ``ground_truth`` directory.
    """
    entries = d.get("policies") or [d.get("policy", {})]
    out = []
    for entry in entries:
        entry = dict(entry)
        gt = entry.pop("ground_truth", None)
        out.append(run_config(d if gt is None else {**d, "ground_truth": gt}, entry))
    return out


def bound_params(d: dict) -> dict:
    b = deep_merge(DEFAULT_BOUND, d.get("bound", {}))
    unknown = set(b) - set(DEFAULT_BOUND)
    if unknown:
        raise ConfigError(f"unknown bound fields: {sorted(unknown)}")
    seeds = b["seeds"]
    b["seeds"] = list(range(seeds)) if isinstance(seeds, int) else [int(x) for x in seeds]
    return b
