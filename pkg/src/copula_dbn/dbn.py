"""Deep belief network: Bernoulli RBMs, CD-1 pre-training and back-prop fine-tuning.

Visible units take real values in [0, 1] as activation probabilities. The
network maps scaled inputs through the sigmoid hidden layers of the stacked
RBMs into a single sigmoid output unit on the min-max scaled load.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, logsumexp

from .ingest import FeatureMatrix
from .seeding import child_seed, rng_for
from .transform import ScaleParams

INDICATOR_COLUMNS = (12, 13)
MAX_ENUMERATION_UNITS = 16


class ShapeError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


class DivergenceError(TrainingError):
    pass


class StateError(RuntimeError):
    pass


@dataclass(frozen=True)
class RbmParams:
    """Weights ``W`` (n_h x n_v), visible biases ``a``, hidden biases ``b``."""

    W: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if W.ndim != 2 or a.shape != (W.shape[1],) or b.shape != (W.shape[0],):
            raise ShapeError(f"inconsistent RBM shapes W{W.shape} a{a.shape} b{b.shape}")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n_visible(self) -> int:
        return self.W.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.W.shape[0]

    @classmethod
    def init(cls, n_visible: int, n_hidden: int, rng: np.random.Generator, sd: float = 0.01):
        return cls(rng.normal(0.0, sd, size=(n_hidden, n_visible)), np.zeros(n_visible), np.zeros(n_hidden))


@dataclass(frozen=True)
class TrainConfig:
    eta_pretrain: float = 0.05
    eta_finetune: float = 0.01
    pretrain_epochs: int = 100
    max_finetune_epochs: int = 1000
    batch_size: int = 10
    beta: float = 0.01
    seed: int = 0
    init_sd: float = 0.01

    def __post_init__(self):
        if self.eta_pretrain <= 0 or self.eta_finetune <= 0 or self.beta <= 0:
            raise ValueError("learning rates and beta must be positive")
        if self.pretrain_epochs < 0 or self.max_finetune_epochs < 0 or self.batch_size < 1:
            raise ValueError("epoch counts must be non-negative and batch_size positive")


@dataclass(frozen=True)
class DbnModel:
    rbms: tuple
    head_w: np.ndarray
    head_b: float
    input_scale: tuple
    target_scale: ScaleParams
    architecture: tuple
    config: TrainConfig = field(default_factory=TrainConfig)
    history: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rbms", tuple(self.rbms))
        object.__setattr__(self, "input_scale", tuple(self.input_scale))
        object.__setattr__(self, "architecture", tuple(int(x) for x in self.architecture))
        object.__setattr__(self, "head_w", np.asarray(self.head_w, dtype=float))
        object.__setattr__(self, "head_b", float(self.head_b))
        for lower, upper in zip(self.rbms, self.rbms[1:]):
            if lower.n_hidden != upper.n_visible:
                raise ShapeError("adjacent RBM widths do not chain")
        widths = [self.rbms[0].n_visible] + [r.n_hidden for r in self.rbms] + [1] if self.rbms else []
        if self.rbms and tuple(widths) != self.architecture:
            raise ShapeError(f"architecture {self.architecture} does not match RBM stack {widths}")
        if self.architecture and (self.architecture[0] not in (12, 14) or self.architecture[-1] != 1):
            raise ShapeError("architecture must start at 12 or 14 inputs and end in 1 output")
        if self.head_w.shape != (self.architecture[-2],):
            raise ShapeError("head weights do not match the top hidden layer")
        if len(self.input_scale) != self.architecture[0]:
            raise ShapeError("one input scale per input column is required")

    @property
    def kind(self) -> str:
        return "dbn"

    @property
    def with_indicators(self) -> bool:
        return self.architecture[0] == 14

    @property
    def layers(self) -> list:
        return [(r.W, r.b) for r in self.rbms]

    def predict(self, inputs) -> np.ndarray:
        return predict(self, inputs)


# --- RBM primitives -----------------------------------------------------------

def _check_visible(params: RbmParams, v: np.ndarray) -> None:
    if v.shape[-1] != params.n_visible:
        raise ShapeError(f"visible vector has {v.shape[-1]} units, RBM expects {params.n_visible}")


def _check_hidden(params: RbmParams, h: np.ndarray) -> None:
    if h.shape[-1] != params.n_hidden:
        raise ShapeError(f"hidden vector has {h.shape[-1]} units, RBM expects {params.n_hidden}")


def rbm_energy(v, h, params: RbmParams):
    v = np.asarray(v, dtype=float)
    h = np.asarray(h, dtype=float)
    _check_visible(params, v)
    _check_hidden(params, h)
    return -(v @ params.a) - (h @ params.b) - np.einsum("...j,ji,...i->...", h, params.W, v)


def hidden_probs(params: RbmParams, v):
    v = np.asarray(v, dtype=float)
    _check_visible(params, v)
    return expit(v @ params.W.T + params.b)


def visible_probs(params: RbmParams, h):
    h = np.asarray(h, dtype=float)
    _check_hidden(params, h)
    return expit(h @ params.W + params.a)


def reconstruction_error(params: RbmParams, data) -> float:
    """Mean squared distance between rows and their mean-field reconstructions."""
    data = np.asarray(data, dtype=float)
    recon = visible_probs(params, hidden_probs(params, data))
    return float(np.mean(np.sum((data - recon) ** 2, axis=1)))


def cd1_statistics(params: RbmParams, v0, h0):
    """CD-1 gradient estimate given data ``v0`` and sampled hidden states ``h0``."""
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    h0 = np.atleast_2d(np.asarray(h0, dtype=float))
    ph0 = hidden_probs(params, v0)
    pv1 = visible_probs(params, h0)
    ph1 = hidden_probs(params, pv1)
    m = v0.shape[0]
    dW = (ph0.T @ v0 - ph1.T @ pv1) / m
    da = np.mean(v0 - pv1, axis=0)
    db = np.mean(ph0 - ph1, axis=0)
    return dW, da, db


def cd1_update(params: RbmParams, batch, eta: float, rng: np.random.Generator) -> RbmParams:
    """One CD-1 step: probabilities for statistics, sampled hidden states for the reconstruction."""
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    _check_visible(params, batch)
    ph0 = hidden_probs(params, batch)
    h0 = (rng.random(ph0.shape) < ph0).astype(float)
    if eta == 0:
        return params
    dW, da, db = cd1_statistics(params, batch, h0)
    return RbmParams(params.W + eta * dW, params.a + eta * da, params.b + eta * db)


def _all_states(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=n))).reshape(-1, n)


def _joint_table(params: RbmParams):
    if params.n_visible + params.n_hidden > MAX_ENUMERATION_UNITS:
        raise ShapeError(f"enumeration needs n_v + n_h <= {MAX_ENUMERATION_UNITS}")
    vs = _all_states(params.n_visible)
    hs = _all_states(params.n_hidden)
    neg_energy = vs @ params.a[:, None] + (hs @ params.b)[None, :] + vs @ params.W.T @ hs.T
    log_z = logsumexp(neg_energy)
    return vs, hs, neg_energy, log_z


def joint_probabilities(params: RbmParams):
    """Exact P(v, h) over all binary states as a (2^n_v, 2^n_h) table."""
    vs, hs, neg_energy, log_z = _joint_table(params)
    return vs, hs, np.exp(neg_energy - log_z)


def free_energy(params: RbmParams, v):
    v = np.asarray(v, dtype=float)
    return -(v @ params.a) - np.sum(np.logaddexp(0.0, v @ params.W.T + params.b), axis=-1)


def exact_log_likelihood(params: RbmParams, data) -> float:
    """Mean log marginal likelihood of the rows, partition function by enumeration."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    _, _, _, log_z = _joint_table(params)
    return float(np.mean(-free_energy(params, data)) - log_z)


def exact_loglik_gradient(params: RbmParams, data):
    """Exact gradient of :func:`exact_log_likelihood`: data term minus model expectation."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    vs, hs, prob = joint_probabilities(params)
    ph = hidden_probs(params, data)
    pos_W = ph.T @ data / data.shape[0]
    neg_W = hs.T @ prob.T @ vs
    dW = pos_W - neg_W
    da = data.mean(axis=0) - prob.sum(axis=1) @ vs
    db = ph.mean(axis=0) - prob.sum(axis=0) @ hs
    return dW, da, db


# --- layer-wise pre-training --------------------------------------------------

def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def train_rbm(params: RbmParams, data, epochs: int, eta: float, batch_size: int,
              rng: np.random.Generator) -> tuple[RbmParams, list[float]]:
    errors = []
    for _ in range(epochs):
        for idx in _batches(data.shape[0], batch_size, rng):
            params = cd1_update(params, data[idx], eta, rng)
        errors.append(reconstruction_error(params, data))
    return params, errors


def pretrain(architecture, data, cfg: TrainConfig, return_history: bool = False):
    """Greedy layer-wise CD-1 training of the RBM stack.

    ``architecture`` lists visible and hidden widths (a trailing output width
    of 1 is ignored). Each RBM sees the hidden probabilities of the one below.
    """
    widths = list(architecture)
    if len(widths) > 2 and widths[-1] == 1:
        widths = widths[:-1]
    data = np.asarray(data.inputs if isinstance(data, FeatureMatrix) else data, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise TrainingError("pre-training needs a non-empty 2-D data matrix")
    if data.shape[1] != widths[0]:
        raise ShapeError(f"data has {data.shape[1]} columns, architecture expects {widths[0]}")
    rbms, history = [], []
    layer_input = data
    for k, (n_v, n_h) in enumerate(zip(widths, widths[1:])):
        init_rng = rng_for(cfg.seed, f"pretrain/init/{k}")
        params = RbmParams.init(n_v, n_h, init_rng, cfg.init_sd)
        params, errors = train_rbm(params, layer_input, cfg.pretrain_epochs, cfg.eta_pretrain,
                                   cfg.batch_size, rng_for(cfg.seed, f"pretrain/cd/{k}"))
        rbms.append(params)
        history.append(errors)
        layer_input = hidden_probs(params, layer_input)
    return (rbms, history) if return_history else rbms


# --- supervised network -------------------------------------------------------

def forward(layers, head_w, head_b, X):
    """Activations of every hidden layer plus the sigmoid output."""
    acts = [np.asarray(X, dtype=float)]
    for W, b in layers:
        acts.append(expit(acts[-1] @ W.T + b))
    out = expit(acts[-1] @ head_w + head_b)
    return acts, out


def squared_error(layers, head_w, head_b, X, t) -> float:
    _, out = forward(layers, head_w, head_b, X)
    return float(np.sum((out - t) ** 2))


def loss_gradients(layers, head_w, head_b, X, t):
    """Gradients of the summed squared error over the rows of ``X``."""
    acts, out = forward(layers, head_w, head_b, X)
    delta = 2.0 * (out - t) * out * (1.0 - out)
    g_head_w = acts[-1].T @ delta
    g_head_b = float(np.sum(delta))
    back = np.outer(delta, head_w) * acts[-1] * (1.0 - acts[-1])
    grads = [None] * len(layers)
    for k in range(len(layers) - 1, -1, -1):
        grads[k] = (back.T @ acts[k], back.sum(axis=0))
        if k:
            back = (back @ layers[k][0]) * acts[k] * (1.0 - acts[k])
    return grads, g_head_w, g_head_b


@dataclass
class FitResult:
    layers: list
    head_w: np.ndarray
    head_b: float
    errors: list
    epochs: int
    stopped_by_beta: bool


def fit_network(layers, head_w, head_b, X, t, cfg: TrainConfig, label: str = "finetune") -> FitResult:
    """Mini-batch back-propagation on squared error with the |delta error| < beta stop.

    The returned parameters are those with the lowest training error seen,
    so the result is never worse than the starting point.
    """
    layers = [(W.copy(), b.copy()) for W, b in layers]
    head_w = np.asarray(head_w, dtype=float).copy()
    head_b = float(head_b)
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    rng = rng_for(cfg.seed, label)
    initial = squared_error(layers, head_w, head_b, X, t)
    errors = [initial]
    best = (initial, [(W.copy(), b.copy()) for W, b in layers], head_w.copy(), head_b)
    stopped = False
    eta = cfg.eta_finetune
    for _ in range(cfg.max_finetune_epochs):
        for idx in _batches(X.shape[0], cfg.batch_size, rng):
            grads, g_w, g_b = loss_gradients(layers, head_w, head_b, X[idx], t[idx])
            layers = [(W - eta * gW, b - eta * gb) for (W, b), (gW, gb) in zip(layers, grads)]
            head_w = head_w - eta * g_w
            head_b = head_b - eta * g_b
        err = squared_error(layers, head_w, head_b, X, t)
        if not np.isfinite(err) or err > 10.0 * max(initial, 1e-12):
            raise DivergenceError(f"training error {err:.4g} exceeded 10x the initial {initial:.4g}")
        errors.append(err)
        if err < best[0]:
            best = (err, [(W.copy(), b.copy()) for W, b in layers], head_w.copy(), head_b)
        if abs(errors[-1] - errors[-2]) < cfg.beta:
            stopped = True
            break
    _, layers, head_w, head_b = best
    return FitResult(layers, head_w, head_b, errors, len(errors) - 1, stopped)


# --- scaling ------------------------------------------------------------------

def fit_input_scale(inputs, with_indicators: bool) -> list[ScaleParams]:
    inputs = np.asarray(inputs, dtype=float)
    scales = []
    for j in range(inputs.shape[1]):
        if with_indicators and j in INDICATOR_COLUMNS:
            scales.append(ScaleParams(0.0, 1.0))
            continue
        lo, hi = float(inputs[:, j].min()), float(inputs[:, j].max())
        # constant training column: unit width keeps the scale invertible
        scales.append(ScaleParams(lo, hi) if hi > lo else ScaleParams(lo, lo + 1.0))
    return scales


def fit_target_scale(targets) -> ScaleParams:
    targets = np.asarray(targets, dtype=float)
    lo, hi = float(targets.min()), float(targets.max())
    return ScaleParams(lo, hi) if hi > lo else ScaleParams(lo - 0.5, lo + 0.5)


def scale_inputs(scales, inputs) -> np.ndarray:
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[1] != len(scales):
        raise ShapeError(f"expected {len(scales)} input columns, got {inputs.shape[1]}")
    return np.column_stack([s.apply(inputs[:, j]) for j, s in enumerate(scales)])


def scale_target(scale: ScaleParams, targets) -> np.ndarray:
    # the sigmoid head cannot reach 0 or 1; keep targets strictly inside
    return 0.05 + 0.9 * scale.apply(targets)


def unscale_target(scale: ScaleParams, scaled) -> np.ndarray:
    return scale.invert((np.asarray(scaled, dtype=float) - 0.05) / 0.9)


# --- DBN assembly -------------------------------------------------------------

def default_architecture(with_indicators: bool = True, width: int = 30, depth: int = 3) -> tuple:
    return (14 if with_indicators else 12,) + (width,) * depth + (1,)


def init_dbn(data: FeatureMatrix, architecture, cfg: TrainConfig) -> DbnModel:
    """Pre-train the RBM stack on scaled inputs and attach a small random output unit."""
    architecture = tuple(architecture)
    if architecture[0] != data.inputs.shape[1]:
        raise ShapeError(f"architecture input width {architecture[0]} != data width {data.inputs.shape[1]}")
    input_scale = fit_input_scale(data.inputs, data.with_indicators)
    target_scale = fit_target_scale(data.targets)
    X = scale_inputs(input_scale, data.inputs)
    rbms, history = pretrain(architecture, X, cfg, return_history=True)
    head_w = rng_for(cfg.seed, "head/init").normal(0.0, cfg.init_sd, size=architecture[-2])
    head_b = 0.0
    return DbnModel(rbms, head_w, head_b, input_scale, target_scale, architecture, cfg,
                    history=(("pretrain", tuple(tuple(e) for e in history)),))


def fine_tune(model: DbnModel, data: FeatureMatrix, cfg: TrainConfig | None = None) -> DbnModel:
    cfg = model.config if cfg is None else cfg
    if cfg.max_finetune_epochs == 0:
        return model
    X = scale_inputs(model.input_scale, data.inputs)
    t = scale_target(model.target_scale, data.targets)
    fit = fit_network(model.layers, model.head_w, model.head_b, X, t, cfg)
    rbms = [RbmParams(W, r.a, b) for r, (W, b) in zip(model.rbms, fit.layers)]
    history = model.history + (("finetune", tuple(fit.errors)),)
    return replace(model, rbms=tuple(rbms), head_w=fit.head_w, head_b=fit.head_b, history=history)


def train_dbn(data: FeatureMatrix, architecture=None, cfg: TrainConfig | None = None) -> DbnModel:
    cfg = TrainConfig() if cfg is None else cfg
    if architecture is None:
        architecture = default_architecture(data.with_indicators)
    return fine_tune(init_dbn(data, architecture, cfg), data, cfg)


def predict(model, inputs) -> np.ndarray:
    """Raw-unit load for raw input rows (a single row gives a length-1 array)."""
    if model is None or not getattr(model, "input_scale", None) or model.target_scale is None:
        raise StateError("model is not trained")
    X = scale_inputs(model.input_scale, inputs)
    _, out = forward(model.layers, model.head_w, model.head_b, X)
    return unscale_target(model.target_scale, out)


def training_error(model, data: FeatureMatrix) -> float:
    X = scale_inputs(model.input_scale, data.inputs)
    t = scale_target(model.target_scale, data.targets)
    return squared_error(model.layers, model.head_w, model.head_b, X, t)


# --- structure search ---------------------------------------------------------

@dataclass(frozen=True)
class SearchResult:
    architecture: tuple
    width_scores: tuple
    depth_scores: tuple


def _holdout_mape(train: FeatureMatrix, test: FeatureMatrix, architecture, cfg) -> float:
    model = train_dbn(train, architecture, cfg)
    pred = predict(model, test.inputs)
    return float(np.mean(np.abs((pred - test.targets) / test.targets)))


def structure_search(data: FeatureMatrix, neurons=range(2, 41), layers=range(1, 7),
                     cfg: TrainConfig | None = None, fraction: float = 0.1,
                     holdout: float = 0.2) -> SearchResult:
    """Two-phase search: best width with one hidden layer, then best depth at that width.

    Candidates are scored by holdout MAPE on a seeded ``fraction`` subsample;
    ties go to the smaller network.
    """
    cfg = TrainConfig() if cfg is None else cfg
    rng = rng_for(cfg.seed, "structure/subsample")
    m = int(round(fraction * len(data)))
    n_hold = int(round(holdout * m))
    if m - n_hold < 10 or n_hold < 1:
        raise TrainingError(f"{len(data)} rows are too few for a {fraction:.0%} search sample")
    idx = rng.choice(len(data), size=m, replace=False)
    test, train = data.take(idx[:n_hold]), data.take(idx[n_hold:])
    n_in = data.inputs.shape[1]

    def run(width, depth):
        arch = (n_in,) + (width,) * depth + (1,)
        sub = replace(cfg, seed=child_seed(cfg.seed, f"structure/{width}x{depth}"))
        return _holdout_mape(train, test, arch, sub)

    width_scores = tuple((w, run(w, 1)) for w in sorted(neurons))
    best_width = min(width_scores, key=lambda s: s[1])[0]
    depth_scores = tuple((d, run(best_width, d)) for d in sorted(layers))
    best_depth = min(depth_scores, key=lambda s: s[1])[0]
    return SearchResult((n_in,) + (best_width,) * best_depth + (1,), width_scores, depth_scores)
