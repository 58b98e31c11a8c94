"""Command-line front end: ``resonant {synth,train,predict,eval,sweep,inspect}``.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings

import numpy as np

from .classifier import KernelSpec
from .evaluation import (
    Grid,
    Hyperparams,
    cross_validate,
    evaluate,
    run_scenario_sweep,
    train_pipeline,
    train_td_baseline,
    write_sweep_csv,
)
from .io import FormatError, load_dataset, load_model, save_dataset, save_model
from .signal_model import generate_scenario
from .spectral import EstimationError, SpectralConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

#: JSON schema of ``eval --json`` output.
EVAL_JSON_SCHEMA = {
    "type": "object",
    "required": ["method", "error_rate", "confusion", "n_test", "class_ids"],
    "properties": {
        "method": {"enum": ["NF", "TD"]},
        "error_rate": {"type": "number", "minimum": 0, "maximum": 1},
        "confusion": {"type": "array", "items": {"type": "array", "items": {"type": ["number", "null"]}}},
        "n_test": {"type": "integer", "minimum": 1},
        "class_ids": {"type": "array", "items": {"type": "integer"}},
    },
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _default_seed() -> int:
    raw = os.environ.get("RESONANT_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"RESONANT_SEED must be an integer, got {raw!r}") from None


def _kernel(text: str) -> KernelSpec:
    try:
        return KernelSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty value list")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="resonant", description="Classify sums of complex exponentials by natural frequencies.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a synthetic train/test split")
    s.add_argument("--scenario", type=int, choices=(1, 2, 3), required=True)
    s.add_argument("--sweep", type=float, required=True, help="SNR dB (1), residue std (2) or freq std (3)")
    s.add_argument("--train-per-class", type=_positive(int), default=3)
    s.add_argument("--test-per-class", type=_positive(int), default=1000)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out-train", required=True)
    s.add_argument("--out-test", required=True)

    t = sub.add_parser("train", help="fit the NF pipeline (and the TD baseline)")
    t.add_argument("--data", required=True)
    t.add_argument("--dth", type=_positive(float), default=0.03)
    t.add_argument("--c-percent", type=float, default=50.0)
    t.add_argument("--svm-c", type=_positive(float), default=0.95)
    t.add_argument("--kernel", type=_kernel, default=KernelSpec("polynomial", degree=2))
    t.add_argument("--no-standardize", action="store_true")
    t.add_argument("--td-standardize", action="store_true", help="z-score the time-domain baseline inputs")
    t.add_argument("--cross-validate", metavar="GRIDFILE", help="JSON grid {d_th, c_percent, C, kernel}")
    t.add_argument("--folds", type=int, default=3)
    t.add_argument("--latetime-offset", type=int, default=None,
                   help="keep samples starting this many after the first |y| peak (NF only)")
    t.add_argument("--ester-threshold", type=float, default=SpectralConfig.ester_threshold)
    t.add_argument("--max-order", type=_positive(int), default=SpectralConfig.max_order)
    t.add_argument("--out", required=True)

    r = sub.add_parser("predict", help="label a dataset with a trained model")
    r.add_argument("--model", required=True)
    r.add_argument("--data", required=True)
    r.add_argument("--out", required=True, help="CSV with columns index,predicted_label")

    e = sub.add_parser("eval", help="error rate and confusion matrix on a labeled dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--baseline", choices=("td",), default=None)
    e.add_argument("--json", action="store_true")

    w = sub.add_parser("sweep", help="NF vs TD error over a scenario sweep")
    w.add_argument("--scenario", type=int, choices=(1, 2, 3), required=True)
    w.add_argument("--values", type=_float_list, required=True)
    w.add_argument("--seeds", type=_positive(int), default=10, help="number of seeds per value")
    w.add_argument("--seed", type=int, default=None, help="first seed")
    w.add_argument("--train-per-class", type=_positive(int), default=3)
    w.add_argument("--test-per-class", type=_positive(int), default=1000)
    w.add_argument("--out", required=True)

    i = sub.add_parser("inspect", help="summarize a model file")
    i.add_argument("--model", required=True)
    return p


def _load_grid(path: str) -> Grid:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: grid must be a JSON object")
    base = Grid()
    try:
        return Grid(
            tuple(float(v) for v in doc.get("d_th", base.d_th)),
            tuple(float(v) for v in doc.get("c_percent", base.c_percent)),
            tuple(float(v) for v in doc.get("C", base.C)),
            tuple(KernelSpec.parse(k) if isinstance(k, str) else k for k in doc.get("kernel", ["poly:2"])),
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: invalid grid: {exc}") from None


def _cmd_synth(a) -> int:
    seed = _default_seed() if a.seed is None else a.seed
    train, test = generate_scenario(a.scenario, a.sweep, a.train_per_class, a.test_per_class, seed)
    save_dataset(train, a.out_train)
    save_dataset(test, a.out_test)
    print(f"wrote {len(train)} training and {len(test)} test signals (T={train.T})")
    return EXIT_OK


def _cmd_train(a) -> int:
    if not 0 < a.c_percent <= 100:
        raise UsageError("--c-percent must lie in (0, 100]")
    if not 0 < a.ester_threshold <= 1:
        raise UsageError("--ester-threshold must lie in (0, 1]")
    data = load_dataset(a.data)
    if len(data) == 0:
        raise FormatError(f"{a.data}: dataset is empty")
    cfg = SpectralConfig(max_order=a.max_order, ester_threshold=a.ester_threshold)
    hp = Hyperparams(a.dth, a.c_percent, a.svm_c, a.kernel, not a.no_standardize)
    if a.cross_validate:
        grid = _load_grid(a.cross_validate)
        res = cross_validate(data, grid, a.folds, cfg, hp, latetime_offset=a.latetime_offset)
        hp = res.best
        print(f"cross-validation picked d_th={hp.d_th:g} c={hp.c_percent:g} C={hp.C:g} kernel={hp.kernel}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pipeline = train_pipeline(data, hp, cfg, a.latetime_offset)
    td = train_td_baseline(data, hp, a.td_standardize)
    save_model(pipeline, a.out, td)
    print(f"trained on {len(data)} signals: M={pipeline.partition.M} regions, "
          f"{pipeline.ranking.selected.size} of {2 * pipeline.partition.M} features kept")
    return EXIT_OK


def _load_nonempty(path):
    data = load_dataset(path)
    if len(data) == 0:
        raise FormatError(f"{path}: dataset contains no signals")
    return data


def _cmd_predict(a) -> int:
    pipeline, _ = load_model(a.model)
    data = _load_nonempty(a.data)
    labels = pipeline.predict(data.signals)
    with open(a.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "predicted_label"])
        w.writerows((n, int(lab)) for n, lab in enumerate(labels))
    print(f"wrote {len(labels)} predictions to {a.out}")
    return EXIT_OK


def format_report(method: str, report, class_ids) -> str:
    lines = [f"method: {method}", f"n_test: {report.n_test}", f"error_rate: {report.error_rate:.4f}",
             "confusion (% of true class, rows=true, cols=predicted):"]
    head = "".join(f"{f'F{c}':>9}" for c in class_ids)
    lines.append(f"{'':>6}{head}")
    for c, row in zip(class_ids, report.confusion):
        cells = "".join(f"{'n/a':>9}" if np.isnan(v) else f"{v:8.1f}%" for v in row)
        lines.append(f"{f'F{c}':>6}{cells}")
    return "\n".join(lines)


def _cmd_eval(a) -> int:
    pipeline, td = load_model(a.model)
    data = _load_nonempty(a.data)
    if a.baseline == "td":
        if td is None:
            raise FormatError(f"{a.model}: model file has no TD baseline")
        model, method = td, "TD"
    else:
        model, method = pipeline, "NF"
    report = evaluate(model, data)
    class_ids = list(range(1, data.num_classes + 1))
    if a.json:
        doc = {
            "method": method,
            "error_rate": report.error_rate,
            "confusion": [[None if np.isnan(v) else float(v) for v in row] for row in report.confusion],
            "n_test": report.n_test,
            "class_ids": class_ids,
        }
        print(json.dumps(doc))
    else:
        print(format_report(method, report, class_ids))
    return EXIT_OK


def _cmd_sweep(a) -> int:
    first = _default_seed() if a.seed is None else a.seed
    rows, cells = run_scenario_sweep(a.scenario, a.values, range(first, first + a.seeds),
                                     a.train_per_class, a.test_per_class)
    with open(a.out, "w", newline="", encoding="utf-8") as fh:
        write_sweep_csv(rows, fh)
    failed = sum(c.failed is not None for c in cells)
    print(f"wrote {len(rows)} rows to {a.out}" + (f" ({failed} failed cells)" if failed else ""))
    return EXIT_OK


def _cmd_inspect(a) -> int:
    pipeline, td = load_model(a.model)
    part, rank, hp = pipeline.partition, pipeline.ranking, pipeline.hyperparams
    retained = set(rank.retained_regions().tolist())
    print(f"regions M: {part.M} (d_th={part.d_th:g})")
    print(f"selected features: {rank.selected.size} of {2 * part.M} (c={hp.c_percent:g}%)")
    print("centroids:")
    for k, z in enumerate(part.centroids):
        mark = "*" if k in retained else " "
        print(f"  {mark}{k:3d}  {z.real:+.5f} {z.imag:+.5f}j  H_re={rank.scores[k]:.3f} H_im={rank.scores[part.M + k]:.3f}")
    print(f"svm: kernel={hp.kernel} C={hp.C:g} classes={list(pipeline.svm.class_ids)} "
          f"support vectors={[b.support_vectors.shape[0] for b in pipeline.svm.binaries]}")
    if td is not None:
        print(f"td baseline: T={td.T} support vectors={[b.support_vectors.shape[0] for b in td.svm.binaries]}")
    return EXIT_OK


COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "inspect": _cmd_inspect,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"resonant: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EstimationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"resonant: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, ValueError, OSError) as exc:
        print(f"resonant: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
