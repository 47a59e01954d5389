"""Experiment configuration: one strict JSON file describes a full run.

A config names the synthetic corpus, the training scheme, the model
architectures, optional per-task optimizer overrides, and the evaluation
protocol. Parsing is strict: unknown keys anywhere are errors, so a typo
fails loudly instead of silently training with defaults. The resolved
config (every default filled in) plus the seed determines the run id, so
two runs share an id exactly when they are the same experiment.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ValidationError
from .models import DiscriminatorConfig, GeneratorConfig
from .schemes import SchemeSpec, scheme_task_objectives
from .trainer import OptimizerConfig, default_optimizer_config

_TOP_LEVEL_KEYS = {
    "corpus",
    "scheme",
    "generator",
    "discriminator",
    "optimizer",
    "eval",
    "output_dir",
}


def _check_keys(data: dict, allowed: set[str], where: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _merged_section(data: dict, defaults: dict, where: str) -> dict:
    """Overlay a partial section onto defaults, rejecting unknown keys."""
    _check_keys(data, set(defaults), where)
    merged = dict(defaults)
    merged.update(data)
    return merged


@dataclass(frozen=True)
class CorpusParams:
    """Size and seed of the synthetic three-domain corpus."""

    n_speakers: int
    utts_per_speaker: int
    duration_s: float = 1.0
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_speakers < 2:
            raise ConfigError(
                f"n_speakers must be >= 2 (verification trials need multiple"
                f" speakers), got {self.n_speakers}"
            )
        if self.utts_per_speaker < 2:
            raise ConfigError(
                f"utts_per_speaker must be >= 2 (the eval split holds out part"
                f" of each speaker), got {self.utts_per_speaker}"
            )
        if not self.duration_s > 0:
            raise ConfigError(f"duration_s must be positive, got {self.duration_s}")

    def to_dict(self) -> dict:
        return {
            "n_speakers": self.n_speakers,
            "utts_per_speaker": self.utts_per_speaker,
            "duration_s": self.duration_s,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusParams":
        _check_keys(data, set(cls.__dataclass_fields__), "corpus")
        for required in ("n_speakers", "utts_per_speaker"):
            if required not in data:
                raise ConfigError(f"corpus section is missing {required!r}")
        return cls(**data)


@dataclass(frozen=True)
class EvalParams:
    """Evaluation protocol: held-out split size and detection-cost prior."""

    holdout_fraction: float = 0.2
    p_target: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ConfigError(
                f"holdout_fraction must be in (0, 1), got {self.holdout_fraction}"
            )
        if not 0.0 < self.p_target < 1.0:
            raise ConfigError(f"p_target must be in (0, 1), got {self.p_target}")

    def to_dict(self) -> dict:
        return {"holdout_fraction": self.holdout_fraction, "p_target": self.p_target}

    @classmethod
    def from_dict(cls, data: dict) -> "EvalParams":
        _check_keys(data, set(cls.__dataclass_fields__), "eval")
        return cls(**data)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one experiment."""

    corpus: CorpusParams
    scheme: SchemeSpec
    output_dir: str
    generator: GeneratorConfig = GeneratorConfig()
    discriminator: DiscriminatorConfig = DiscriminatorConfig()
    optimizer: dict[str, OptimizerConfig] = field(default_factory=dict)
    eval: EvalParams = EvalParams()

    def __post_init__(self) -> None:
        if not self.output_dir:
            raise ConfigError("output_dir must be a non-empty path")
        tasks = scheme_task_objectives(self.scheme)
        unknown = set(self.optimizer) - set(tasks)
        if unknown:
            raise ConfigError(
                f"optimizer overrides for unknown tasks {sorted(unknown)};"
                f" this scheme trains {sorted(tasks)}"
            )
        # fill every task so the resolved config pins all hyperparameters
        resolved = {
            name: self.optimizer.get(name, default_optimizer_config(objective))
            for name, objective in tasks.items()
        }
        object.__setattr__(self, "optimizer", resolved)

    def to_dict(self) -> dict:
        return {
            "corpus": self.corpus.to_dict(),
            "scheme": self.scheme.to_dict(),
            "generator": self.generator.to_dict(),
            "discriminator": self.discriminator.to_dict(),
            "optimizer": {
                name: cfg.to_dict() for name, cfg in sorted(self.optimizer.items())
            },
            "eval": self.eval.to_dict(),
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
        _check_keys(data, _TOP_LEVEL_KEYS, "config")
        for required in ("corpus", "scheme", "output_dir"):
            if required not in data:
                raise ConfigError(f"config is missing the {required!r} section")
        try:
            corpus = CorpusParams.from_dict(data["corpus"])
            scheme = SchemeSpec.from_dict(data["scheme"])
            generator = GeneratorConfig.from_dict(
                _merged_section(
                    data.get("generator", {}), GeneratorConfig().to_dict(), "generator"
                )
            )
            discriminator = DiscriminatorConfig.from_dict(
                _merged_section(
                    data.get("discriminator", {}),
                    DiscriminatorConfig().to_dict(),
                    "discriminator",
                )
            )
            eval_params = EvalParams.from_dict(data.get("eval", {}))
            tasks = scheme_task_objectives(scheme)
            optimizer = {}
            for name, section in data.get("optimizer", {}).items():
                if name not in tasks:
                    raise ConfigError(
                        f"optimizer overrides for unknown tasks [{name!r}];"
                        f" this scheme trains {sorted(tasks)}"
                    )
                optimizer[name] = OptimizerConfig.from_dict(
                    _merged_section(
                        section,
                        default_optimizer_config(tasks[name]).to_dict(),
                        f"optimizer.{name}",
                    )
                )
        except ConfigError:
            raise
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"malformed config section: {exc}") from exc
        return cls(
            corpus=corpus,
            scheme=scheme,
            output_dir=data["output_dir"],
            generator=generator,
            discriminator=discriminator,
            optimizer=optimizer,
            eval=eval_params,
        )


def canonical_json(obj: object) -> str:
    """Key-sorted, whitespace-free JSON; one spelling per value."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def run_id_for(config: ExperimentConfig, seed: int) -> str:
    """Twelve hex digits identifying (resolved config, seed)."""
    digest = hashlib.sha256(
        (canonical_json(config.to_dict()) + f":{seed}").encode()
    ).hexdigest()
    return digest[:12]


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no config file at {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(data)
