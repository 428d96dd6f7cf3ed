"""Python access to the aleanav simulator, uncertainty head and filter."""

import json

from ._core import (
    AleanavError,
    Dataset,
    FilterResult,
    Head,
    TrainOutcome,
    central_z,
    gram_schmidt_rotation,
    load_dataset,
    nll_loss,
    nll_loss_gradient,
    picp,
    rotate_covariance,
    so3_exp,
    so3_log,
)
from . import _core


def _text(config):
    if config is None or isinstance(config, str):
        return config
    return json.dumps(config)


def default_config():
    return json.loads(_core.default_config())


def normalize_config(config):
    return json.loads(_core.normalize_config(_text(config)))


def simulate(config=None):
    return _core.simulate(_text(config))


def train_head(config=None):
    return _core.train_head(_text(config))


def run_filter(dataset, mode="fixed", config=None, head=None):
    return _core.run_filter(dataset, mode, _text(config), head)


def metrics(result, dataset):
    return json.loads(_core.metrics(result, dataset))


__all__ = [
    "AleanavError",
    "Dataset",
    "FilterResult",
    "Head",
    "TrainOutcome",
    "central_z",
    "default_config",
    "gram_schmidt_rotation",
    "load_dataset",
    "metrics",
    "nll_loss",
    "nll_loss_gradient",
    "normalize_config",
    "picp",
    "rotate_covariance",
    "run_filter",
    "simulate",
    "so3_exp",
    "so3_log",
    "train_head",
]
