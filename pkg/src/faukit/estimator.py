"""Scikit-learn style estimator wrapping the dense classifier core.

BottleneckClassifier follows the usual fit/predict/predict_proba contract
(BaseEstimator gives get_params/set_params, so clone() and Pipeline work).
Two stock head configurations are provided:

* heatmap_head(): the 5-layer funnel 5760 -> 2048 -> 1024 -> 512 -> 256 -> 7
  for flattened 10x24x24 heatmap stacks.
* probvec_head(): a single fully-connected layer K -> 7 for per-AU
  probability vectors.

Training is deterministic given the seed: weight init and the per-epoch
shuffle come from fixed streams, and batches are reduced in a fixed order.
"""

from __future__ import annotations

import copy

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from . import network
from .errors import DataError, DimensionError, DomainError
from .facs import N_EMOTIONS
from .network import LayerSpec
from .validation import check_feature_matrix, check_labels, check_non_negative

HEATMAP_HEAD_HIDDEN = (2048, 1024, 512, 256)
HEATMAP_INPUT_SHAPE = (10, 24, 24)
HEATMAP_INPUT_DIM = int(np.prod(HEATMAP_INPUT_SHAPE))  # 5760

HEAD_HEATMAP5 = "heatmap5"
HEAD_PROBVEC1 = "probvec1"
HEAD_NAMES = (HEAD_HEATMAP5, HEAD_PROBVEC1)


def flatten_stack(stack) -> np.ndarray:
    """Flatten a (K, H, W) stack so element (c, r, col) lands at c*H*W + r*W + col."""
    arr = np.asarray(stack, dtype=np.float64)
    if arr.ndim != 3:
        raise DimensionError(f"expected a (K, H, W) stack, got ndim={arr.ndim}")
    return arr.reshape(-1)


def flatten_stacks(stacks) -> np.ndarray:
    """Batch version of flatten_stack for (n, K, H, W) arrays."""
    arr = np.asarray(stacks, dtype=np.float64)
    if arr.ndim != 4:
        raise DimensionError(f"expected an (n, K, H, W) batch, got ndim={arr.ndim}")
    return arr.reshape(arr.shape[0], -1)


def layer_specs_for_head(head: str, input_dim: int | None = None) -> list[LayerSpec]:
    """Layer chain for a named head variant.

    heatmap5 is pinned to the 5760-wide input (10x24x24 flattened); probvec1
    takes its input width from input_dim.
    """
    if head == HEAD_HEATMAP5:
        if input_dim is not None and input_dim != HEATMAP_INPUT_DIM:
            raise DimensionError(
                f"heatmap5 expects {HEATMAP_INPUT_DIM} inputs "
                f"(flattened {'x'.join(map(str, HEATMAP_INPUT_SHAPE))}), got {input_dim}"
            )
        return network.chain_specs(HEATMAP_INPUT_DIM, HEATMAP_HEAD_HIDDEN)
    if head == HEAD_PROBVEC1:
        if input_dim is None:
            raise DimensionError("probvec1 needs the vocabulary size as input_dim")
        return network.chain_specs(input_dim, ())
    raise DomainError(f"unknown head {head!r} (expected one of {HEAD_NAMES})")


class BottleneckClassifier(BaseEstimator, ClassifierMixin):
    """Fully-connected softmax classifier over AU feature vectors.

    Parameters
    ----------
    hidden_dims : tuple of int
        Widths of the ReLU hidden layers; the output layer is always a
        linear 7-way layer. An empty tuple gives a single-layer classifier.
    learning_rate : float
        Step size; must be >= 0 (0 leaves the weights at initialization).
    optimizer : {"adam", "sgd"}
    batch_size : int
    epochs : int
    l2_weight : float
        Coupled L2 penalty on the weight matrices (not biases).
    patience : int or None
        Early-stopping patience on validation accuracy; needs validation
        data passed to fit, None disables.
    seed : int
        Seeds both weight initialization and the epoch shuffles.

    Attributes (after fit)
    ----------------------
    layer_specs_ : list of LayerSpec
    params_ : list of (W, b) float64 arrays, the best-validation weights
    history_ : dict with per-epoch "train_loss" and "val_accuracy"
    best_epoch_ : int index into the history of the kept weights
    classes_ : ndarray of the 7 label ids
    """

    def __init__(
        self,
        hidden_dims=(2048, 1024, 512, 256),
        learning_rate=1e-3,
        optimizer="adam",
        batch_size=32,
        epochs=100,
        l2_weight=0.0,
        patience=10,
        seed=0,
    ):
        self.hidden_dims = hidden_dims
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.batch_size = batch_size
        self.epochs = epochs
        self.l2_weight = l2_weight
        self.patience = patience
        self.seed = seed

    def _validate_hyperparams(self):
        if self.learning_rate < 0.0:
            raise DomainError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if int(self.batch_size) < 1:
            raise DomainError(f"batch_size must be >= 1, got {self.batch_size}")
        if int(self.epochs) < 0:
            raise DomainError(f"epochs must be >= 0, got {self.epochs}")
        if self.patience is not None and int(self.patience) < 1:
            raise DomainError(f"patience must be >= 1 or None, got {self.patience}")
        check_non_negative(self.l2_weight, "l2_weight")

    def fit(self, X, y, X_val=None, y_val=None):
        """Train on (X, y); track validation accuracy when X_val/y_val given.

        Keeps the weights of the epoch with the best validation accuracy
        (earliest epoch wins ties); without validation data the final
        weights are kept and early stopping is disabled.
        """
        self._validate_hyperparams()
        X = check_feature_matrix(X)
        y = check_labels(y, N_EMOTIONS)
        if X.shape[0] == 0 or y.shape[0] == 0:
            raise DataError("training set is empty")
        if X.shape[0] != y.shape[0]:
            raise DimensionError(f"{X.shape[0]} samples but {y.shape[0]} labels")
        have_val = X_val is not None
        if have_val:
            X_val = check_feature_matrix(X_val, expected_dim=X.shape[1], name="X_val")
            y_val = check_labels(y_val, N_EMOTIONS, name="y_val")
            if X_val.shape[0] != y_val.shape[0]:
                raise DimensionError("validation sample/label counts differ")

        seed = int(self.seed) % 2**64
        specs = network.chain_specs(X.shape[1], self.hidden_dims)
        params = network.init_params(specs, seed)
        opt = network.make_optimizer(self.optimizer, params, float(self.learning_rate))
        shuffle_rng = np.random.default_rng([seed, 1])

        n = X.shape[0]
        batch = int(self.batch_size)
        history = {"train_loss": [], "val_accuracy": []}
        best_params = copy.deepcopy(params)
        best_val = -np.inf
        best_epoch = -1
        since_best = 0

        for epoch in range(int(self.epochs)):
            order = shuffle_rng.permutation(n)
            for start in range(0, n, batch):
                idx = order[start : start + batch]
                grads = network.backward(params, specs, X[idx], y[idx], float(self.l2_weight))
                opt.step(params, grads)
            history["train_loss"].append(
                network.batch_loss(params, specs, X, y, float(self.l2_weight))
            )
            if have_val:
                val_acc = float(
                    np.mean(np.argmax(network.forward(params, specs, X_val), axis=1) == y_val)
                )
                history["val_accuracy"].append(val_acc)
                if val_acc > best_val:
                    best_val = val_acc
                    best_epoch = epoch
                    best_params = copy.deepcopy(params)
                    since_best = 0
                else:
                    since_best += 1
                    if self.patience is not None and since_best > int(self.patience):
                        break
            else:
                history["val_accuracy"].append(None)

        if not have_val or best_epoch < 0:
            best_params = params
            best_epoch = len(history["train_loss"]) - 1

        self.layer_specs_ = specs
        self.params_ = best_params
        self.history_ = history
        self.best_epoch_ = best_epoch
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.arange(N_EMOTIONS)
        return self

    def _require_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("this BottleneckClassifier has not been fitted yet")

    def decision_function(self, X) -> np.ndarray:
        """Raw logits, shape (n, 7)."""
        self._require_fitted()
        X = check_feature_matrix(X, expected_dim=self.n_features_in_)
        return network.forward(self.params_, self.layer_specs_, X)

    def predict_proba(self, X) -> np.ndarray:
        return network.softmax(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        """Label ids by argmax probability; ties go to the lowest label id."""
        return np.argmax(self.predict_proba(X), axis=1)

    def save(self, path) -> None:
        """Write the fitted network to a checkpoint file."""
        self._require_fitted()
        network.save_checkpoint(path, self.layer_specs_, self.params_)


def heatmap_head(**overrides) -> BottleneckClassifier:
    """The 5-layer classifier for flattened heatmap stacks."""
    return BottleneckClassifier(hidden_dims=HEATMAP_HEAD_HIDDEN, **overrides)


def probvec_head(**overrides) -> BottleneckClassifier:
    """The single-layer classifier for AU probability vectors."""
    return BottleneckClassifier(hidden_dims=(), **overrides)


def head_estimator(head: str, **overrides) -> BottleneckClassifier:
    if head == HEAD_HEATMAP5:
        return heatmap_head(**overrides)
    if head == HEAD_PROBVEC1:
        return probvec_head(**overrides)
    raise DomainError(f"unknown head {head!r} (expected one of {HEAD_NAMES})")


def load_model(path) -> BottleneckClassifier:
    """Rebuild a fitted estimator from a checkpoint."""
    specs, params = network.load_checkpoint(path)
    est = BottleneckClassifier(hidden_dims=tuple(s.out_dim for s in specs[:-1]))
    est.layer_specs_ = specs
    est.params_ = params
    est.history_ = {"train_loss": [], "val_accuracy": []}
    est.best_epoch_ = -1
    est.n_features_in_ = specs[0].in_dim
    est.classes_ = np.arange(N_EMOTIONS)
    return est
