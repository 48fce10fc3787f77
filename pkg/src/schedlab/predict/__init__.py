"""Runtime-prediction models: regression tree, random forest, gradient
boosting and a fully connected network."""
from .boosting import BoostedEnsemble, fit_boosted
from .forest import Forest, fit_forest
from .model import (DEFAULT_PARAMS, KINDS, RuntimeModel, constant_model, fit_runtime_model,
                    load_model, resolve_params, save_model)
from .network import Network, fit_network, huber
from .tree import RegressionTree, fit_tree

__all__ = [
    "BoostedEnsemble", "Forest", "Network", "RegressionTree", "RuntimeModel",
    "DEFAULT_PARAMS", "KINDS", "constant_model", "fit_boosted", "fit_forest", "fit_network",
    "fit_runtime_model", "fit_tree", "huber", "load_model", "resolve_params", "save_model",
]
