"""JSON dataset and model files (format version 1)."""
from __future__ import annotations

import json
import os
from pathlib import Path

import jsonschema
import numpy as np
import orjson

from .classifier import KERNELS, BinarySvm, KernelSpec, MulticlassSvm
from .evaluation import Hyperparams, Standardizer, TdBaseline, TrainedPipeline
from .features import FeatureRanking, PlanePartition
from .signal_model import Dataset
from .spectral import ORDER_METHODS, SpectralConfig

FORMAT_VERSION = 1


class FormatError(ValueError):
    """A dataset or model file violates its schema."""


DATASET_SCHEMA = {
    "type": "object",
    "required": ["version", "T", "num_classes", "signals"],
    "properties": {
        "version": {"type": "integer"},
        "T": {"type": "integer", "minimum": 1},
        "num_classes": {"type": "integer", "minimum": 2},
        "signals": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "re", "im"],
                "properties": {
                    "label": {"type": "integer"},
                    "re": {"type": "array"},
                    "im": {"type": "array"},
                },
            },
        },
    },
}

_VEC = {"type": "array", "items": {"type": "number"}}
_KERNEL = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KERNELS)},
        "degree": {"type": "integer", "minimum": 1},
        "gamma": {"type": "number", "exclusiveMinimum": 0},
    },
}
_SVM = {
    "type": "object",
    "required": ["class_ids", "binaries"],
    "properties": {
        "class_ids": {"type": "array", "items": {"type": "integer"}},
        "binaries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["support_vectors", "dual_coeffs", "bias", "kernel", "C"],
                "properties": {
                    "support_vectors": {"type": "array", "items": _VEC},
                    "dual_coeffs": _VEC,
                    "bias": {"type": "number"},
                    "kernel": _KERNEL,
                    "C": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
    },
}
_SCALER = {"type": "object", "required": ["mean", "std"], "properties": {"mean": _VEC, "std": _VEC}}
MODEL_SCHEMA = {
    "type": "object",
    "required": ["version", "spectral_cfg", "partition", "ranking", "standardization", "svm", "hyperparams"],
    "properties": {
        "version": {"type": "integer"},
        "spectral_cfg": {
            "type": "object",
            "required": ["order_method", "max_order", "denoise_iters", "denoise_tol", "hankel_rows_fraction"],
            "properties": {"order_method": {"enum": list(ORDER_METHODS)}},
        },
        "partition": {
            "type": "object",
            "required": ["re", "im", "d_th"],
            "properties": {"re": _VEC, "im": _VEC, "d_th": {"type": "number"}},
        },
        "ranking": {
            "type": "object",
            "required": ["scores", "selected"],
            "properties": {"scores": _VEC, "selected": {"type": "array", "items": {"type": "integer"}}},
        },
        "standardization": _SCALER,
        "svm": _SVM,
        "hyperparams": {
            "type": "object",
            "required": ["d_th", "c_percent", "C", "kernel", "standardize"],
            "properties": {"kernel": _KERNEL},
        },
        "latetime_offset": {"type": ["integer", "null"]},
        "td_baseline": {
            "type": "object",
            "required": ["T", "svm", "standardization"],
            "properties": {"T": {"type": "integer"}, "svm": _SVM, "standardization": _SCALER},
        },
    },
}


def _check(doc, schema, what: str) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise FormatError(f"invalid {what} at {where}: {exc.message}") from None
    if doc["version"] != FORMAT_VERSION:
        raise FormatError(f"unsupported {what} version {doc['version']} (expected {FORMAT_VERSION})")


def _read_json(path):
    try:
        # orjson parses large float arrays several times faster than the stdlib
        return orjson.loads(Path(path).read_bytes())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _write_json(doc, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"), allow_nan=False)
        fh.write("\n")
    os.replace(tmp, path)


def _floats(values) -> list[float]:
    return [float(v) for v in np.asarray(values, dtype=float).ravel()]


# ---------------------------------------------------------------------------
# Datasets


def dataset_to_dict(ds: Dataset) -> dict:
    return {
        "version": FORMAT_VERSION,
        "T": int(ds.T),
        "num_classes": int(ds.num_classes),
        "signals": [
            {"label": int(lab), "re": _floats(y.real), "im": _floats(y.imag)}
            for y, lab in zip(ds.signals, ds.labels)
        ],
    }


def dataset_from_dict(doc) -> Dataset:
    _check(doc, DATASET_SCHEMA, "dataset")
    T, P = doc["T"], doc["num_classes"]
    signals = np.empty((len(doc["signals"]), T), dtype=np.complex128)
    labels = np.empty(len(doc["signals"]), dtype=np.int64)
    for n, rec in enumerate(doc["signals"]):
        if not 1 <= rec["label"] <= P:
            raise FormatError(f"invalid dataset at signals/{n}/label: {rec['label']} not in 1..{P}")
        for part in ("re", "im"):
            if len(rec[part]) != T:
                raise FormatError(f"invalid dataset at signals/{n}/{part}: length {len(rec[part])} != T={T}")
        try:
            re = np.array(rec["re"], dtype=float)
            im = np.array(rec["im"], dtype=float)
        except (TypeError, ValueError):
            raise FormatError(f"invalid dataset at signals/{n}: non-numeric samples") from None
        if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
            raise FormatError(f"invalid dataset at signals/{n}: non-finite samples")
        signals[n] = re + 1j * im
        labels[n] = rec["label"]
    return Dataset(signals, labels, P)


def save_dataset(ds: Dataset, path) -> None:
    _write_json(dataset_to_dict(ds), path)


def load_dataset(path) -> Dataset:
    return dataset_from_dict(_read_json(path))


# ---------------------------------------------------------------------------
# Models


def _kernel_to_dict(k: KernelSpec) -> dict:
    return {"kind": k.kind, "degree": int(k.degree), "gamma": float(k.gamma)}


def _kernel_from_dict(d) -> KernelSpec:
    return KernelSpec(d["kind"], int(d.get("degree", 2)), float(d.get("gamma", 1.0)))


def _svm_to_dict(m: MulticlassSvm) -> dict:
    return {
        "class_ids": [int(c) for c in m.class_ids],
        "dim": int(m.dim),
        "binaries": [
            {
                "support_vectors": [_floats(v) for v in b.support_vectors],
                "dual_coeffs": _floats(b.dual_coeffs),
                "bias": float(b.bias),
                "kernel": _kernel_to_dict(b.kernel),
                "C": float(b.C),
            }
            for b in m.binaries
        ],
    }


def _svm_from_dict(d) -> MulticlassSvm:
    dim = int(d.get("dim", 0))
    binaries = []
    for b in d["binaries"]:
        sv = np.array(b["support_vectors"], dtype=float).reshape(len(b["support_vectors"]), -1)
        if sv.size == 0:
            sv = np.zeros((0, dim))
        binaries.append(BinarySvm(sv, np.array(b["dual_coeffs"], dtype=float), float(b["bias"]),
                                  _kernel_from_dict(b["kernel"]), float(b["C"])))
    return MulticlassSvm(binaries, d["class_ids"])


def _scaler_to_dict(s: Standardizer) -> dict:
    return {"mean": _floats(s.mean), "std": _floats(s.std)}


def _scaler_from_dict(d) -> Standardizer:
    return Standardizer(np.array(d["mean"], dtype=float), np.array(d["std"], dtype=float))


def model_to_dict(p: TrainedPipeline, td: TdBaseline | None = None) -> dict:
    cfg, hp = p.spectral_cfg, p.hyperparams
    doc = {
        "version": FORMAT_VERSION,
        "spectral_cfg": {
            "order_method": cfg.order_method,
            "max_order": cfg.max_order,
            "denoise_iters": cfg.denoise_iters,
            "denoise_tol": cfg.denoise_tol,
            "hankel_rows_fraction": cfg.hankel_rows_fraction,
            "ester_threshold": cfg.ester_threshold,
        },
        "partition": {
            "re": _floats(p.partition.centroids.real),
            "im": _floats(p.partition.centroids.imag),
            "d_th": float(p.partition.d_th),
        },
        "ranking": {"scores": _floats(p.ranking.scores), "selected": [int(i) for i in p.ranking.selected]},
        "standardization": _scaler_to_dict(p.standardization),
        "svm": _svm_to_dict(p.svm),
        "hyperparams": {
            "d_th": hp.d_th,
            "c_percent": hp.c_percent,
            "C": hp.C,
            "kernel": _kernel_to_dict(hp.kernel),
            "standardize": hp.standardize,
        },
        "latetime_offset": p.latetime_offset,
    }
    if td is not None:
        doc["td_baseline"] = {"T": td.T, "svm": _svm_to_dict(td.svm),
                              "standardization": _scaler_to_dict(td.standardization)}
    return doc


def model_from_dict(doc) -> tuple[TrainedPipeline, TdBaseline | None]:
    _check(doc, MODEL_SCHEMA, "model")
    try:
        c = doc["spectral_cfg"]
        cfg = SpectralConfig(c["order_method"], int(c["max_order"]), int(c["denoise_iters"]),
                             float(c["denoise_tol"]), float(c["hankel_rows_fraction"]),
                             float(c.get("ester_threshold", SpectralConfig.ester_threshold)))
        part = doc["partition"]
        partition = PlanePartition(np.array(part["re"]) + 1j * np.array(part["im"]), float(part["d_th"]))
        ranking = FeatureRanking(np.array(doc["ranking"]["scores"], dtype=float),
                                 np.array(doc["ranking"]["selected"], dtype=np.int64))
        h = doc["hyperparams"]
        hp = Hyperparams(float(h["d_th"]), float(h["c_percent"]), float(h["C"]), _kernel_from_dict(h["kernel"]),
                         bool(h["standardize"]))
        pipeline = TrainedPipeline(cfg, partition, ranking, _svm_from_dict(doc["svm"]),
                                   _scaler_from_dict(doc["standardization"]), hp, doc.get("latetime_offset"))
    except (ValueError, TypeError) as exc:
        raise FormatError(f"invalid model: {exc}") from None
    if ranking.selected.size and ranking.selected.max() >= 2 * partition.M:
        raise FormatError("invalid model: selected feature index out of range")
    if pipeline.standardization.mean.size != ranking.selected.size:
        raise FormatError("invalid model: standardization size does not match selected features")
    td = None
    if "td_baseline" in doc:
        t = doc["td_baseline"]
        td = TdBaseline(_svm_from_dict(t["svm"]), _scaler_from_dict(t["standardization"]), int(t["T"]))
    return pipeline, td


def save_model(p: TrainedPipeline, path, td: TdBaseline | None = None) -> None:
    _write_json(model_to_dict(p, td), path)


def load_model(path) -> tuple[TrainedPipeline, TdBaseline | None]:
    return model_from_dict(_read_json(path))
