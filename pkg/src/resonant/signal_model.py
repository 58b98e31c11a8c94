"""Sum-of-complex-exponentials signal model and synthetic scenario generator.

A noiseless signal is ``x(t) = sum_i alpha_i * z_i**t`` for ``t = 1..T``; an
observation adds circularly symmetric complex Gaussian noise.  Series are plain
1-D ``complex128`` numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

#: Default signal length of the synthetic scenarios.
SCENARIO_T = 180

#: Nominal natural frequencies of the two synthetic families.
FAMILY_1 = np.array(
    [0.1275 - 0.9075j, 0.44 - 0.16j, 0.97 + 0.02j, 0.57 + 0.79j, -0.19 + 0.94j]
)
FAMILY_2 = np.array(
    [0.13 - 0.92j, 0.44 - 0.88j, 0.95 - 0.17j, 0.93 + 0.02j, 0.53 + 0.78j, -0.19 + 0.91j]
)


def as_series(y, name: str = "series") -> np.ndarray:
    """Validate and coerce ``y`` to a finite 1-D complex128 array of length >= 1."""
    arr = np.asarray(y, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 1:
        raise ValueError(f"{name} must contain at least one sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite samples")
    return arr


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def complex_normal(rng: np.random.Generator, mean: complex, std: float, size) -> np.ndarray:
    """Draw complex Gaussians with ``E|z - mean|**2 = std**2``, split equally over re/im."""
    scale = std / np.sqrt(2.0)
    return mean + scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


@dataclass(frozen=True)
class FamilySpec:
    """A family of signals: nominal frequencies plus residue and frequency spread."""

    nominal_freqs: np.ndarray
    residue_mean: complex = 0.5
    residue_std: float = 1.0
    freq_perturb_std: float = 0.0

    def __post_init__(self):
        freqs = np.atleast_1d(np.asarray(self.nominal_freqs, dtype=np.complex128))
        if freqs.size == 0:
            raise ValueError("nominal_freqs must be nonempty")
        if not np.all(np.isfinite(freqs)):
            raise ValueError("nominal_freqs must be finite")
        gaps = np.abs(freqs[:, None] - freqs[None, :])[np.triu_indices(freqs.size, 1)]
        if np.any(gaps <= 0):
            raise ValueError("nominal_freqs must be pairwise distinct")
        if self.residue_std < 0 or self.freq_perturb_std < 0:
            raise ValueError("standard deviations must be nonnegative")
        object.__setattr__(self, "nominal_freqs", freqs)

    @property
    def order(self) -> int:
        return self.nominal_freqs.size


class LabeledObservation(NamedTuple):
    series: np.ndarray
    label: int


@dataclass
class Dataset:
    """Labeled observations sharing a common length ``T``; labels run 1..num_classes.

    ``clean`` optionally carries the noiseless signals (synthetic data only).
    """

    signals: np.ndarray
    labels: np.ndarray
    num_classes: int
    clean: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.signals = np.asarray(self.signals, dtype=np.complex128)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.signals.ndim != 2:
            raise ValueError("signals must be a 2-D array (L, T)")
        if self.labels.shape != (self.signals.shape[0],):
            raise ValueError("labels must have one entry per signal")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.labels.size and (self.labels.min() < 1 or self.labels.max() > self.num_classes):
            raise ValueError(f"labels must lie in 1..{self.num_classes}")
        if not np.all(np.isfinite(self.signals)):
            raise ValueError("signals contain non-finite samples")

    def __len__(self) -> int:
        return self.signals.shape[0]

    def __iter__(self) -> Iterator[LabeledObservation]:
        for y, lab in zip(self.signals, self.labels):
            yield LabeledObservation(y, int(lab))

    @property
    def T(self) -> int:
        return self.signals.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes + 1)[1:]

    def require_all_classes(self) -> None:
        missing = [p + 1 for p, n in enumerate(self.class_counts()) if n == 0]
        if missing:
            raise ValueError(f"training dataset has no members of class(es) {missing}")

    def subset(self, index) -> "Dataset":
        clean = None if self.clean is None else self.clean[index]
        return Dataset(self.signals[index], self.labels[index], self.num_classes, clean)


def synth_signal(freqs: Sequence[complex], residues: Sequence[complex], T: int) -> np.ndarray:
    """Evaluate ``x(t) = sum_i residues[i] * freqs[i]**t`` for ``t = 1..T``."""
    z = np.atleast_1d(np.asarray(freqs, dtype=np.complex128))
    a = np.atleast_1d(np.asarray(residues, dtype=np.complex128))
    if z.size == 0 or z.shape != a.shape:
        raise ValueError("freqs and residues must be nonempty and of equal length")
    if T < 1:
        raise ValueError("T must be >= 1")
    t = np.arange(1, T + 1)
    return np.power.outer(z, t).T @ a


def add_noise(x, snr_db: float, rng_seed=None) -> np.ndarray:
    """Add white circular complex Gaussian noise at ``snr_db`` relative to mean power of ``x``.

    ``snr_db = inf`` disables noise and returns a copy.
    """
    x = as_series(x, "x")
    power = np.mean(np.abs(x) ** 2)
    if power <= 0:
        raise ValueError("cannot set an SNR for a zero-energy signal")
    if np.isposinf(snr_db):
        return x.copy()
    noise_var = power / 10.0 ** (snr_db / 10.0)
    return x + complex_normal(_rng(rng_seed), 0.0, np.sqrt(noise_var), x.size)


def perturb_freqs(spec: FamilySpec, rng_seed=None) -> np.ndarray:
    """Draw one copy of the family's frequencies.

    Each frequency moves by independent N(0, sigma_z**2) steps along the real and
    imaginary axes, so ``E|dz|**2 = 2 sigma_z**2``.
    """
    rng = _rng(rng_seed)
    return spec.nominal_freqs + complex_normal(rng, 0.0, np.sqrt(2.0) * spec.freq_perturb_std, spec.order)


def sample_family(spec: FamilySpec, T: int, rng_seed=None) -> np.ndarray:
    """Draw one noiseless member of the family: random residues, perturbed frequencies."""
    rng = _rng(rng_seed)
    residues = complex_normal(rng, spec.residue_mean, spec.residue_std, spec.order)
    freqs = perturb_freqs(spec, rng)
    return synth_signal(freqs, residues, T)


@dataclass(frozen=True)
class ScenarioSettings:
    snr_db: float = 10.0
    residue_std: float = 1.0
    freq_perturb_std: float = 0.0


def scenario_settings(scenario: int, sweep_value: float) -> ScenarioSettings:
    """Map a scenario id and its sweep value to (SNR, sigma_alpha, sigma_z)."""
    if scenario == 1:
        return ScenarioSettings(snr_db=float(sweep_value))
    if scenario == 2:
        if sweep_value < 0:
            raise ValueError("residue std must be nonnegative")
        return ScenarioSettings(residue_std=float(sweep_value))
    if scenario == 3:
        if sweep_value < 0:
            raise ValueError("frequency perturbation std must be nonnegative")
        return ScenarioSettings(freq_perturb_std=float(sweep_value))
    raise ValueError(f"invalid scenario id {scenario!r}; expected 1, 2 or 3")


def scenario_families(settings: ScenarioSettings) -> list[FamilySpec]:
    return [
        FamilySpec(z, 0.5, settings.residue_std, settings.freq_perturb_std)
        for z in (FAMILY_1, FAMILY_2)
    ]


def make_dataset(
    families: Sequence[FamilySpec], n_per_class: int, T: int, snr_db: float, rng_seed=None
) -> Dataset:
    """Draw ``n_per_class`` noisy observations from each family, class ids 1..P."""
    if n_per_class < 1:
        raise ValueError("per-class counts must be positive")
    rng = _rng(rng_seed)
    clean, signals, labels = [], [], []
    for p, spec in enumerate(families, start=1):
        for _ in range(n_per_class):
            x = sample_family(spec, T, rng)
            clean.append(x)
            signals.append(add_noise(x, snr_db, rng))
            labels.append(p)
    return Dataset(np.array(signals), np.array(labels), len(families), np.array(clean))


def generate_scenario(
    scenario: int,
    sweep_value: float,
    n_train_per_class: int = 3,
    n_test_per_class: int = 1000,
    rng_seed=None,
    T: int = SCENARIO_T,
) -> tuple[Dataset, Dataset]:
    """Generate (train, test) datasets for synthetic scenario 1, 2 or 3.

    Scenario 1 sweeps SNR in dB, scenario 2 sweeps the residue std, scenario 3
    sweeps the frequency perturbation std.  Train and test use independent
    random streams spawned from ``rng_seed``.
    """
    settings = scenario_settings(scenario, sweep_value)
    if n_train_per_class < 1 or n_test_per_class < 1:
        raise ValueError("per-class counts must be positive")
    families = scenario_families(settings)
    train_seq, test_seq = np.random.SeedSequence(rng_seed).spawn(2)
    train = make_dataset(families, n_train_per_class, T, settings.snr_db, np.random.default_rng(train_seq))
    test = make_dataset(families, n_test_per_class, T, settings.snr_db, np.random.default_rng(test_seq))
    return train, test
