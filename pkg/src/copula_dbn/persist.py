"""Versioned JSON documents for trained models and fitted copulas.

Floats are written with ``repr`` precision, which round-trips every double
exactly, so a reloaded model predicts bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import baselines, dbn
from .copula import GumbelModel
from .transform import ScaleParams

FORMAT_VERSION = 1


class ModelLoadError(ValueError):
    def __init__(self, field: str, problem: str):
        super().__init__(f"model document field {field!r}: {problem}")
        self.field = field


def _matrix(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _scales(scales) -> list:
    return [[s.min, s.max] for s in scales]


def model_to_dict(model) -> dict:
    doc = {"format_version": FORMAT_VERSION, "kind": model.kind}
    doc["input_scale"] = _scales(model.input_scale)
    doc["target_scale"] = [model.target_scale.min, model.target_scale.max]
    if isinstance(model, dbn.DbnModel):
        doc["architecture"] = list(model.architecture)
        doc["rbms"] = [{"W": _matrix(r.W), "a": _matrix(r.a), "b": _matrix(r.b)} for r in model.rbms]
        doc["head"] = {"w": _matrix(model.head_w), "b": model.head_b}
        doc["train_config"] = asdict(model.config)
    elif isinstance(model, baselines.MlpModel):
        doc["architecture"] = list(model.architecture)
        doc["layers"] = [{"W": _matrix(W), "b": _matrix(b)} for W, b in model.layers]
        doc["head"] = {"w": _matrix(model.head_w), "b": model.head_b}
        doc["train_config"] = asdict(model.config)
    elif isinstance(model, baselines.ElmModel):
        doc["hidden"] = {"W": _matrix(model.hidden_W), "b": _matrix(model.hidden_b)}
        doc["output"] = {"w": _matrix(model.output_w), "b": model.output_b}
        doc["seed"] = model.seed
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return doc


def _get(doc: dict, path: str):
    node = doc
    for key in path.split("."):
        if not isinstance(node, dict) or key not in node:
            raise ModelLoadError(path, "missing")
        node = node[key]
    return node


def _array(doc: dict, path: str, ndim: int) -> np.ndarray:
    raw = _get(doc, path)
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelLoadError(path, f"not numeric ({exc})") from None
    if arr.ndim != ndim:
        raise ModelLoadError(path, f"expected {ndim}-D array, got {arr.ndim}-D")
    if not np.all(np.isfinite(arr)):
        raise ModelLoadError(path, "contains non-finite values")
    return arr


def _float(doc: dict, path: str) -> float:
    raw = _get(doc, path)
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not np.isfinite(raw):
        raise ModelLoadError(path, f"expected a finite number, got {raw!r}")
    return float(raw)


def _scale_list(doc: dict, path: str) -> list:
    arr = _array(doc, path, 2)
    try:
        return [ScaleParams(lo, hi) for lo, hi in arr]
    except ValueError as exc:
        raise ModelLoadError(path, str(exc)) from None


def model_from_dict(doc: dict):
    if not isinstance(doc, dict):
        raise ModelLoadError("<root>", "not a JSON object")
    version = _get(doc, "format_version")
    if version != FORMAT_VERSION:
        raise ModelLoadError("format_version", f"unsupported version {version!r}")
    kind = _get(doc, "kind")
    input_scale = _scale_list(doc, "input_scale")
    lo_hi = _array(doc, "target_scale", 1)
    if lo_hi.shape != (2,):
        raise ModelLoadError("target_scale", "expected [min, max]")
    try:
        target_scale = ScaleParams(*lo_hi)
    except ValueError as exc:
        raise ModelLoadError("target_scale", str(exc)) from None
    try:
        if kind in ("dbn", "mlp"):
            cfg = dbn.TrainConfig(**_get(doc, "train_config"))
            architecture = tuple(int(x) for x in _get(doc, "architecture"))
            head_w = _array(doc, "head.w", 1)
            head_b = _float(doc, "head.b")
        if kind == "dbn":
            rbms = []
            for i in range(len(_get(doc, "rbms"))):
                block = _get(doc, "rbms")[i]
                rbms.append(dbn.RbmParams(
                    _array(block, "W", 2), _array(block, "a", 1), _array(block, "b", 1)))
            return dbn.DbnModel(rbms, head_w, head_b, input_scale, target_scale, architecture, cfg)
        if kind == "mlp":
            layers = tuple((_array(layer, "W", 2), _array(layer, "b", 1)) for layer in _get(doc, "layers"))
            return baselines.MlpModel(layers, head_w, head_b, tuple(input_scale), target_scale,
                                      architecture, cfg)
        if kind == "elm":
            return baselines.ElmModel(
                _array(doc, "hidden.W", 2), _array(doc, "hidden.b", 1),
                _array(doc, "output.w", 1), _float(doc, "output.b"),
                tuple(input_scale), target_scale, int(_get(doc, "seed")))
    except ModelLoadError:
        raise
    except (TypeError, ValueError) as exc:
        raise ModelLoadError(kind if isinstance(kind, str) else "kind", str(exc)) from None
    raise ModelLoadError("kind", f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelLoadError("<root>", f"invalid JSON ({exc})") from None
    return model_from_dict(doc)


def save_copulas(models, path) -> None:
    doc = {"format_version": FORMAT_VERSION, "copulas": [m.to_dict() for m in models]}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_copulas(path) -> tuple:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        models = tuple(GumbelModel.from_dict(d) for d in doc["copulas"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelLoadError("copulas", str(exc)) from None
    by_name = {m.variable_name: m for m in models}
    if set(by_name) != {"temperature", "price"}:
        raise ModelLoadError("copulas", "expected one temperature and one price model")
    return by_name["temperature"], by_name["price"]
