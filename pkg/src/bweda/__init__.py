"""Joint bandwidth extension and domain adaptation for narrowband speech.

A small, fully deterministic numpy/scipy framework that trains adversarial
waveform mappings between three speech domains (narrowband telephone,
narrowband microphone, wideband microphone) on a synthetic corpus, then
measures the result with log-spectral distance and speaker-verification
style metrics.

The public surface re-exported here covers the usual workflow: build or load
a corpus (:func:`build_three_domain_corpus`, :func:`load_corpus`), pick a
training scheme (:class:`SchemeSpec`), train it (:func:`train_plan`), and
evaluate the resulting :class:`TrainedSystem`. Lower-level pieces (the
autodiff tape, individual loss terms, the container format) stay importable
from their submodules.
"""
from __future__ import annotations

from .config import ExperimentConfig, load_config, run_id_for
from .errors import (
    BatchError,
    BwedaError,
    CheckpointError,
    ConfigError,
    InputTooShortError,
    PairingError,
    RateError,
    SchemeError,
    TrainingDivergedError,
    ValidationError,
    WavFormatError,
)
from .evaluation import (
    EvalReport,
    Trial,
    TrialList,
    build_trial_list,
    compute_eer,
    compute_min_dcf,
    domain_discriminability,
    embed_corpus,
    embed_utterance,
    log_spectral_distance,
    mann_whitney_auc,
    score_trials,
)
from .losses import (
    LossBreakdown,
    LossWeights,
    cgan_objective,
    cyclegan_objective,
    joint_cgan_objective,
    joint_cyclegan_objective,
)
from .models import (
    DiscriminatorConfig,
    GeneratorConfig,
    MappingModel,
    ScoreModel,
    load_mapping_model,
    save_mapping_model,
)
from .schemes import (
    ObjectiveKind,
    PoolMember,
    SchemeKind,
    SchemeSpec,
    TrainedSystem,
    TrainingPlan,
    TrainingTask,
    assemble_training_plan,
    inference_map,
    load_system,
    map_corpus,
    save_system,
)
from .signals import (
    Domain,
    DomainCorpus,
    ThreeDomainCorpus,
    Utterance,
    Waveform,
    build_three_domain_corpus,
    load_corpus,
    lowpass_downsample,
    read_wav,
    save_corpus,
    split_for_eval,
    upsample,
    write_wav,
)
from .trainer import (
    OptimizerConfig,
    TrainState,
    checkpoint_load,
    checkpoint_save,
    default_optimizer_config,
    lr_schedule,
    train_plan,
    train_task,
)

__version__ = "0.1.0"

__all__ = [
    "BatchError",
    "BwedaError",
    "CheckpointError",
    "ConfigError",
    "DiscriminatorConfig",
    "Domain",
    "DomainCorpus",
    "EvalReport",
    "ExperimentConfig",
    "GeneratorConfig",
    "InputTooShortError",
    "LossBreakdown",
    "LossWeights",
    "MappingModel",
    "ObjectiveKind",
    "OptimizerConfig",
    "PairingError",
    "PoolMember",
    "RateError",
    "SchemeError",
    "SchemeKind",
    "SchemeSpec",
    "ScoreModel",
    "ThreeDomainCorpus",
    "TrainState",
    "TrainedSystem",
    "TrainingDivergedError",
    "TrainingPlan",
    "TrainingTask",
    "Trial",
    "TrialList",
    "Utterance",
    "ValidationError",
    "WavFormatError",
    "Waveform",
    "assemble_training_plan",
    "build_three_domain_corpus",
    "build_trial_list",
    "cgan_objective",
    "checkpoint_load",
    "checkpoint_save",
    "compute_eer",
    "compute_min_dcf",
    "cyclegan_objective",
    "default_optimizer_config",
    "domain_discriminability",
    "embed_corpus",
    "embed_utterance",
    "inference_map",
    "joint_cgan_objective",
    "joint_cyclegan_objective",
    "load_config",
    "load_corpus",
    "load_mapping_model",
    "load_system",
    "log_spectral_distance",
    "lowpass_downsample",
    "mann_whitney_auc",
    "map_corpus",
    "read_wav",
    "run_id_for",
    "save_corpus",
    "save_mapping_model",
    "save_system",
    "score_trials",
    "split_for_eval",
    "train_plan",
    "train_task",
    "upsample",
    "write_wav",
]
