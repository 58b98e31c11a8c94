"""Classification of signals modeled as sums of complex exponentials.

Pipeline: order selection and ESPRIT on a denoised Hankel matrix, a learned
partition of the complex plane, Kruskal-Wallis feature ranking and a
one-vs-all kernel SVM. A raw time-domain SVM is provided as a baseline.
"""
from .classifier import BinarySvm, KernelSpec, MulticlassSvm, kernel_eval, train_binary_svm, train_multiclass
from .evaluation import (
    EvalReport,
    Grid,
    Hyperparams,
    TdBaseline,
    TrainedPipeline,
    classify_signal,
    cross_validate,
    evaluate,
    run_scenario_sweep,
    train_pipeline,
    train_td_baseline,
)
from .features import (
    FeatureRanking,
    FeatureVector,
    PlanePartition,
    assign_region,
    cluster_resonances,
    featurize,
    kruskal_wallis,
    select_features,
)
from .io import FormatError, load_dataset, load_model, save_dataset, save_model
from .signal_model import FAMILY_1, FAMILY_2, Dataset, FamilySpec, add_noise, generate_scenario, sample_family, synth_signal
from .spectral import (
    EstimationError,
    ResonanceSet,
    SpectralConfig,
    dehankelize,
    esprit,
    estimate_resonances,
    ester_order,
    hankel,
    hard_threshold_order,
    lowrank_denoise,
    samos_order,
    select_order,
)

__version__ = "0.1.0"
