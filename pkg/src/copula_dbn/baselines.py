"""Comparator models: a randomly initialized back-prop MLP and an extreme learning machine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import dbn
from .ingest import FeatureMatrix
from .seeding import rng_for
from .transform import ScaleParams

ELM_RIDGE = 1e-6


@dataclass(frozen=True)
class MlpModel:
    layers: tuple
    head_w: np.ndarray
    head_b: float
    input_scale: tuple
    target_scale: ScaleParams
    architecture: tuple
    config: dbn.TrainConfig
    history: tuple = ()

    @property
    def kind(self) -> str:
        return "mlp"

    @property
    def with_indicators(self) -> bool:
        return self.architecture[0] == 14

    def predict(self, inputs) -> np.ndarray:
        return dbn.predict(self, inputs)


@dataclass(frozen=True)
class ElmModel:
    hidden_W: np.ndarray
    hidden_b: np.ndarray
    output_w: np.ndarray
    output_b: float
    input_scale: tuple
    target_scale: ScaleParams
    seed: int

    @property
    def kind(self) -> str:
        return "elm"

    @property
    def with_indicators(self) -> bool:
        return self.hidden_W.shape[1] == 14

    @property
    def hidden(self) -> int:
        return self.hidden_W.shape[0]

    def activations(self, scaled_inputs) -> np.ndarray:
        return expit(scaled_inputs @ self.hidden_W.T + self.hidden_b)

    def predict(self, inputs) -> np.ndarray:
        H = self.activations(dbn.scale_inputs(self.input_scale, inputs))
        return self.target_scale.invert(H @ self.output_w + self.output_b)


def init_mlp_layers(architecture, seed: int):
    """Normal(0, 1/fan_in) weights and zero biases for hidden layers and head."""
    rng = rng_for(seed, "mlp/init")
    widths = list(architecture)
    layers = []
    for n_in, n_out in zip(widths[:-2], widths[1:-1]):
        layers.append((rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_out, n_in)), np.zeros(n_out)))
    head_w = rng.normal(0.0, 1.0 / np.sqrt(widths[-2]), size=widths[-2])
    return layers, head_w, 0.0


def train_mlp(data: FeatureMatrix, architecture=None, cfg: dbn.TrainConfig | None = None,
              init=None) -> MlpModel:
    """Back-prop from a random start, with the same stopping rule as DBN fine-tuning.

    ``init`` overrides the random start with ``(layers, head_w, head_b)``.
    """
    cfg = dbn.TrainConfig() if cfg is None else cfg
    if architecture is None:
        architecture = dbn.default_architecture(data.with_indicators)
    architecture = tuple(architecture)
    if architecture[0] != data.inputs.shape[1]:
        raise dbn.ShapeError(f"architecture input width {architecture[0]} != data width {data.inputs.shape[1]}")
    input_scale = dbn.fit_input_scale(data.inputs, data.with_indicators)
    target_scale = dbn.fit_target_scale(data.targets)
    layers, head_w, head_b = init if init is not None else init_mlp_layers(architecture, cfg.seed)
    if cfg.max_finetune_epochs == 0:
        return MlpModel(tuple(layers), np.asarray(head_w), float(head_b), tuple(input_scale),
                        target_scale, architecture, cfg)
    X = dbn.scale_inputs(input_scale, data.inputs)
    t = dbn.scale_target(target_scale, data.targets)
    fit = dbn.fit_network(layers, head_w, head_b, X, t, cfg)
    return MlpModel(tuple(fit.layers), fit.head_w, fit.head_b, tuple(input_scale), target_scale,
                    architecture, cfg, history=(("finetune", tuple(fit.errors)),))


def train_elm(data: FeatureMatrix, hidden: int = 30, seed: int = 0, ridge: float = ELM_RIDGE) -> ElmModel:
    """Frozen random sigmoid layer plus a ridge least-squares linear readout with intercept."""
    if hidden < 1:
        raise ValueError("hidden must be at least 1")
    input_scale = tuple(dbn.fit_input_scale(data.inputs, data.with_indicators))
    target_scale = dbn.fit_target_scale(data.targets)
    X = dbn.scale_inputs(input_scale, data.inputs)
    rng = rng_for(seed, "elm/hidden")
    n_in = X.shape[1]
    W = rng.uniform(-1.0, 1.0, size=(hidden, n_in))
    b = rng.uniform(-1.0, 1.0, size=hidden)
    model = ElmModel(W, b, np.zeros(hidden), 0.0, input_scale, target_scale, seed)
    w, c = ridge_readout(model.activations(X), target_scale.apply(data.targets), ridge)
    return ElmModel(W, b, w, c, input_scale, target_scale, seed)


def ridge_readout(H, y, ridge: float = ELM_RIDGE):
    """Solve (A'A + ridge I) beta = A'y with A = [H, 1]; returns (weights, intercept)."""
    A = np.column_stack([H, np.ones(H.shape[0])])
    gram = A.T @ A + ridge * np.eye(A.shape[1])
    beta = np.linalg.solve(gram, A.T @ y)
    return beta[:-1], float(beta[-1])
