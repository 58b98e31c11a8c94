"""End-to-end natural-frequency (NF) pipeline, time-domain (TD) baseline and metrics."""
from __future__ import annotations

import csv
import itertools
import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .classifier import KernelSpec, MulticlassSvm, train_multiclass
from .features import (
    FeatureRanking,
    PlanePartition,
    cluster_resonances,
    featurize,
    select_features,
)
from .signal_model import Dataset, as_series, generate_scenario
from .spectral import EstimationError, ResonanceSet, SpectralConfig, SpectralWarning, estimate_resonances

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Hyperparams:
    d_th: float = 0.03
    c_percent: float = 50.0
    C: float = 0.95
    kernel: KernelSpec = KernelSpec("polynomial", degree=2)
    standardize: bool = True

    def __post_init__(self):
        if not self.d_th > 0:
            raise ValueError("d_th must be positive")
        if not 0 < self.c_percent <= 100:
            raise ValueError("c_percent must lie in (0, 100]")
        if not self.C > 0:
            raise ValueError("C must be positive")


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X, enabled: bool = True) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        if not enabled:
            return cls(np.zeros(X.shape[1]), np.ones(X.shape[1]))
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 0, std, 1.0))

    def __call__(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std


@dataclass
class TrainedPipeline:
    spectral_cfg: SpectralConfig
    partition: PlanePartition
    ranking: FeatureRanking
    svm: MulticlassSvm
    standardization: Standardizer
    hyperparams: Hyperparams
    latetime_offset: int | None = None

    def features(self, resonance_sets) -> np.ndarray:
        """Selected, standardized real features for each resonance set."""
        X = np.array([featurize(rs, self.partition).flat() for rs in resonance_sets])
        return self.standardization(X[:, self.ranking.selected])

    def resonances(self, signals) -> list[ResonanceSet]:
        return [robust_resonances(late_time(y, self.latetime_offset), self.spectral_cfg) for y in signals]

    def predict(self, signals) -> np.ndarray:
        signals = np.atleast_2d(np.asarray(signals, dtype=np.complex128))
        return self.svm.predict(self.features(self.resonances(signals)))


@dataclass
class TdBaseline:
    """SVM on raw samples, real parts then imaginary parts (2T inputs)."""

    svm: MulticlassSvm
    standardization: Standardizer
    T: int

    def predict(self, signals) -> np.ndarray:
        signals = np.atleast_2d(np.asarray(signals, dtype=np.complex128))
        if signals.shape[1] != self.T:
            raise ValueError(f"TD baseline expects series of length {self.T}, got {signals.shape[1]}")
        return self.svm.predict(self.standardization(_td_features(signals)))


@dataclass
class EvalReport:
    error_rate: float
    confusion: np.ndarray  # percent; rows = true class, cols = predicted; NaN rows when absent
    n_test: int
    class_counts: np.ndarray = field(repr=False)

    @property
    def undefined_rows(self) -> list[int]:
        return [p + 1 for p, n in enumerate(self.class_counts) if n == 0]


def late_time(y, offset: int | None) -> np.ndarray:
    """Crop ``y`` to start ``offset`` samples after the first peak of ``|y|``."""
    y = np.asarray(y, dtype=np.complex128)
    if offset is None:
        return y
    start = int(np.argmax(np.abs(y))) + int(offset)
    return y[min(start, y.size - 1):]


def robust_resonances(y, cfg: SpectralConfig) -> ResonanceSet:
    """estimate_resonances, mapping estimation failures to the empty set."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SpectralWarning)
            return estimate_resonances(y, cfg)
    except (EstimationError, np.linalg.LinAlgError) as exc:
        log.warning("spectral estimation failed (%s); using an empty resonance set", exc)
        return ResonanceSet()


def _td_features(signals) -> np.ndarray:
    signals = np.asarray(signals, dtype=np.complex128)
    return np.concatenate([signals.real, signals.imag], axis=1)


def train_pipeline(
    train: Dataset,
    hp: Hyperparams = Hyperparams(),
    spectral_cfg: SpectralConfig = SpectralConfig(),
    latetime_offset: int | None = None,
    resonance_sets: list[ResonanceSet] | None = None,
) -> TrainedPipeline:
    """Estimate, cluster, featurize, rank and fit the SVM on a training set.

    ``resonance_sets`` may carry precomputed estimates for ``train`` (used by
    cross-validation to avoid re-estimating per grid point).
    """
    train.require_all_classes()
    if resonance_sets is None:
        resonance_sets = [robust_resonances(late_time(y, latetime_offset), spectral_cfg) for y in train.signals]
    empty = sum(rs.order == 0 for rs in resonance_sets)
    if empty:
        warnings.warn(f"{empty} training signal(s) yielded no resonances; using zero feature vectors",
                      stacklevel=2)
    pooled = np.concatenate([rs.freqs for rs in resonance_sets])
    if pooled.size == 0:
        raise ValueError("no resonances were estimated from the training set; cannot build a partition")
    partition = cluster_resonances(pooled, hp.d_th)
    feats = [featurize(rs, partition) for rs in resonance_sets]
    ranking = select_features(feats, train.labels, hp.c_percent)
    X = np.array([f.flat() for f in feats])[:, ranking.selected]
    scaler = Standardizer.fit(X, hp.standardize)
    svm = train_multiclass(scaler(X), train.labels, hp.C, hp.kernel)
    return TrainedPipeline(spectral_cfg, partition, ranking, svm, scaler, hp, latetime_offset)


def classify_signal(p: TrainedPipeline, y) -> int:
    y = as_series(y, "y")
    return int(p.predict(y[None])[0])


def train_td_baseline(train: Dataset, hp: Hyperparams = Hyperparams(), standardize: bool = False) -> TdBaseline:
    """Time-domain SVM on [Re y, Im y].

    Scaling is off by default and independent of ``hp.standardize``: with three
    signals per class, per-sample z-scores amplify noise and the baseline
    degenerates to chance even when residues barely vary.
    """
    train.require_all_classes()
    X = _td_features(train.signals)
    scaler = Standardizer.fit(X, standardize)
    svm = train_multiclass(scaler(X), train.labels, hp.C, hp.kernel)
    return TdBaseline(svm, scaler, train.T)


def confusion_report(true, predicted, num_classes: int) -> EvalReport:
    """Error rate and row-normalized confusion matrix in percent."""
    true = np.asarray(true, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if true.size == 0:
        raise ValueError("cannot evaluate on an empty test set")
    counts = np.zeros((num_classes, num_classes))
    np.add.at(counts, (true - 1, predicted - 1), 1)
    n_class = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        confusion = 100.0 * counts / n_class[:, None]
    return EvalReport(float(np.mean(true != predicted)), confusion, int(true.size), n_class.astype(int))


def evaluate(model, test: Dataset) -> EvalReport:
    """Evaluate a TrainedPipeline or TdBaseline (anything with ``predict(signals)``)."""
    if len(test) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    return confusion_report(test.labels, model.predict(test.signals), test.num_classes)


# ---------------------------------------------------------------------------
# Cross-validation


@dataclass(frozen=True)
class Grid:
    d_th: tuple[float, ...] = (0.03,)
    c_percent: tuple[float, ...] = (50.0,)
    C: tuple[float, ...] = (0.95,)
    kernel: tuple[KernelSpec, ...] = (KernelSpec("polynomial", degree=2),)

    def points(self, base: Hyperparams = Hyperparams()):
        for d, c, C, k in itertools.product(self.d_th, self.c_percent, self.C, self.kernel):
            yield replace(base, d_th=d, c_percent=c, C=C, kernel=k)


def stratified_folds(labels, folds: int, rng_seed=0) -> list[np.ndarray]:
    """Fold index arrays; each class is shuffled and dealt round-robin across folds."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(rng_seed)
    out = [[] for _ in range(folds)]
    offset = 0
    for c in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == c))
        for k, idx in enumerate(members):
            out[(k + offset) % folds].append(int(idx))
        offset += members.size
    return [np.sort(np.array(f, dtype=int)) for f in out]


@dataclass
class CvResult:
    best: Hyperparams
    table: list[tuple[Hyperparams, float, float]]  # (point, mean error, mean #features)


def cross_validate(
    train: Dataset,
    grid: Grid,
    folds: int = 3,
    spectral_cfg: SpectralConfig = SpectralConfig(),
    base: Hyperparams = Hyperparams(),
    rng_seed=0,
    latetime_offset: int | None = None,
) -> CvResult:
    """Stratified k-fold grid search minimizing mean validation error.

    Ties prefer fewer selected features, then smaller C, then grid order.
    """
    train.require_all_classes()
    if folds < 2 or folds > train.class_counts().min():
        raise ValueError(f"folds must lie in 2..{train.class_counts().min()} (smallest class size)")
    rsets = [robust_resonances(late_time(y, latetime_offset), spectral_cfg) for y in train.signals]
    fold_idx = stratified_folds(train.labels, folds, rng_seed)
    table = []
    for hp in grid.points(base):
        errors, nfeat = [], []
        for k in range(folds):
            val = fold_idx[k]
            fit = np.sort(np.concatenate([fold_idx[m] for m in range(folds) if m != k]))
            sub = train.subset(fit)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                p = train_pipeline(sub, hp, spectral_cfg, latetime_offset, [rsets[i] for i in fit])
            pred = p.svm.predict(p.features([rsets[i] for i in val]))
            errors.append(np.mean(pred != train.labels[val]))
            nfeat.append(p.ranking.selected.size)
        table.append((hp, float(np.mean(errors)), float(np.mean(nfeat))))
    best = min(range(len(table)), key=lambda i: (table[i][1], table[i][2], table[i][0].C, i))
    return CvResult(table[best][0], table)


# ---------------------------------------------------------------------------
# Scenario sweeps


@dataclass
class SweepCell:
    sweep_value: float
    seed: int
    nf_error: float
    td_error: float
    M: int = 0
    failed: str | None = None


def run_cell(
    scenario: int,
    sweep_value: float,
    seed: int,
    n_train_per_class: int = 3,
    n_test_per_class: int = 1000,
    hp: Hyperparams = Hyperparams(),
    spectral_cfg: SpectralConfig = SpectralConfig(),
) -> SweepCell:
    """Generate one scenario draw, fit NF and TD, and return both test errors."""
    try:
        train, test = generate_scenario(scenario, sweep_value, n_train_per_class, n_test_per_class, seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            nf = train_pipeline(train, hp, spectral_cfg)
        td = train_td_baseline(train, hp)
        return SweepCell(sweep_value, seed, evaluate(nf, test).error_rate, evaluate(td, test).error_rate,
                         nf.partition.M)
    except (ValueError, EstimationError, np.linalg.LinAlgError) as exc:
        log.error("sweep cell (value=%s, seed=%s) failed: %s", sweep_value, seed, exc)
        return SweepCell(sweep_value, seed, np.nan, np.nan, failed=str(exc))


@dataclass
class SweepRow:
    sweep_value: float
    method: str
    mean_error: float
    std_error: float
    n_seeds: int


def summarize(cells: list[SweepCell]) -> list[SweepRow]:
    rows = []
    for value in dict.fromkeys(c.sweep_value for c in cells):
        group = [c for c in cells if c.sweep_value == value and c.failed is None]
        for method, attr in (("NF", "nf_error"), ("TD", "td_error")):
            errs = np.array([getattr(c, attr) for c in group])
            mean = float(errs.mean()) if errs.size else float("nan")
            std = float(errs.std(ddof=1)) if errs.size > 1 else 0.0 if errs.size else float("nan")
            rows.append(SweepRow(value, method, mean, std, int(errs.size)))
    return rows


def run_scenario_sweep(
    scenario: int,
    sweep_values,
    seeds,
    n_train_per_class: int = 3,
    n_test_per_class: int = 1000,
    hp: Hyperparams = Hyperparams(),
    spectral_cfg: SpectralConfig = SpectralConfig(),
) -> tuple[list[SweepRow], list[SweepCell]]:
    """Mean NF/TD error per sweep value over the given seeds; failing cells are skipped."""
    cells = [
        run_cell(scenario, v, s, n_train_per_class, n_test_per_class, hp, spectral_cfg)
        for v in sweep_values
        for s in seeds
    ]
    return summarize(cells), cells


SWEEP_HEADER = ("sweep_value", "method", "mean_error", "std_error", "n_seeds")


def write_sweep_csv(rows: list[SweepRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([repr(float(r.sweep_value)), r.method, repr(r.mean_error), repr(r.std_error), r.n_seeds])
