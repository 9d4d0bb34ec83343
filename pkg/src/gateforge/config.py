"""Versioned defaults with optional flat JSON overrides."""

import json
import os
from importlib import resources

CONFIG_VERSION = 1
SEED_ENV = "GATEFORGE_SEED"


def builtin_defaults():
    with resources.files("gateforge").joinpath("defaults.json").open() as fh:
        return json.load(fh)


def load_config(path=None, overrides=None):
    """Built-in defaults, then ``path`` (flat key/value JSON), then ``overrides``.

    ``GATEFORGE_SEED`` replaces the default seed but not an explicit one
    given in ``overrides``.
    """
    cfg = builtin_defaults()
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        if not isinstance(user, dict) or any(isinstance(v, dict) for v in user.values()):
            raise ValueError(f"{path}: config must be a flat JSON object")
        version = user.get("config_version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ValueError(f"{path}: unsupported config_version {version}")
        unknown = sorted(set(user) - set(cfg))
        if unknown:
            raise ValueError(f"{path}: unknown keys {unknown}")
        cfg.update(user)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            cfg["seed"] = int(env)
        except ValueError as exc:
            raise ValueError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    return cfg


def default_restarts(n_ions, cfg=None):
    cfg = cfg or builtin_defaults()
    return cfg["restarts_large"] if n_ions >= cfg["large_chain"] else cfg["restarts_small"]
