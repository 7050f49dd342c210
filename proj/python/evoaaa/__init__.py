"""Evolutionary search over autoencoder architectures.

The heavy lifting happens in the compiled ``_evoaaa`` core; this module turns
its JSON results into plain dicts and lets search settings be passed as keywords.
"""

import json

from . import _evoaaa
from ._evoaaa import (
    ConfigError,
    Dataset,
    DecodeError,
    Error,
    IncompleteTable,
    InvalidDataset,
    ParseError,
    count_valid_unit_assignments,
    dataset_from_array,
    friedman_test,
    is_valid,
    load_dataset,
    penalty,
    random_chromosome,
    rank_methods,
    space_size,
)

__all__ = [
    "ConfigError", "Dataset", "DecodeError", "Error", "IncompleteTable", "InvalidDataset", "ParseError",
    "count_valid_unit_assignments", "dataset_from_array", "decode", "default_config", "evaluate",
    "friedman_test", "is_valid", "load_dataset", "penalty", "random_chromosome", "rank_methods",
    "search", "space_size",
]

_TRAIN_KEYS = {"epochs", "batch_size", "learning_rate", "rho", "epsilon"}
_BUDGET_KEYS = {"max_wall_clock_ms", "max_evaluations", "termination_cost"}


def default_config(strategy="ga"):
    """Harness defaults for a strategy, as a nested dict."""
    return json.loads(_evoaaa.default_config_json(strategy))


def _config(strategy, overrides):
    cfg = default_config(strategy)
    for key, value in overrides.items():
        if key in _TRAIN_KEYS:
            cfg["train"][key] = value
        elif key in _BUDGET_KEYS:
            cfg["budget"][key] = value
        elif key == "seed":
            cfg["master_seed"] = value
        elif key in cfg:
            cfg[key] = value
        else:
            raise TypeError(f"unknown search setting {key!r}")
    return json.dumps(cfg)


def decode(genes, features):
    """Architecture described by a 15-gene chromosome."""
    return json.loads(_evoaaa.decode_json(list(genes), features))


def evaluate(dataset, genes, **settings):
    """Train and score one chromosome; returns the fitness record."""
    return json.loads(_evoaaa.evaluate_json(dataset, _config("random", settings), list(genes)))


def search(dataset, strategy="ga", **settings):
    """Run one search. Returns the best record summary plus the full trajectory."""
    return json.loads(_evoaaa.search_json(dataset, _config(strategy, settings)))
