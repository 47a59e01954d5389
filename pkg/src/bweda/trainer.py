"""Deterministic alternating-update training loop.

Each outer step performs two generator updates followed by one
discriminator update, every update on a freshly sampled batch of
fixed-length random crops. Learning rates decay linearly to ``final_lr``
over the configured step budget; parameters are updated with Adam. The
whole trajectory derives from a single seed: model initializations, batch
sampling, and crop positions are all drawn from named substreams, so
identical (task, config, seed) runs produce bit-identical parameters, and
a resumed checkpoint continues the exact trajectory of an uninterrupted
run.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import losses
from .container import read_container, write_container
from .errors import (
    BatchError,
    CheckpointError,
    InputTooShortError,
    PairingError,
    TrainingDivergedError,
    ValidationError,
)
from .models import MappingModel, ScoreModel
from .schemes import (
    CorpusExpr,
    CorpusRef,
    CorpusUnion,
    ObjectiveKind,
    Stage2Source,
    TrainedSystem,
    TrainingPlan,
    TrainingTask,
    stage2_build_source,
)
from .signals import ThreeDomainCorpus, Utterance, to_model_rate

DEFAULT_SEGMENT_LENGTH = 4096
FINAL_LR = 1e-8

# step budgets sized for desk-scale runs; see default_optimizer_config
# chosen so each objective's default run stays near 15 minutes on one CPU
# core at the default architectures (measured per-step costs ~2.1/4.4/5.8/13.4 s)
_DEFAULT_TOTAL_STEPS = {
    ObjectiveKind.CGAN: 400,
    ObjectiveKind.CYCLEGAN: 200,
    ObjectiveKind.CYCLEGAN_PLUS_CGAN: 150,
    ObjectiveKind.CYCLEGAN_PLUS_CYCLEGAN: 80,
}


@dataclass(frozen=True)
class OptimizerConfig:
    """Optimization hyperparameters for one training task."""

    lr_g_init: float
    lr_d_init: float
    batch_size: int
    total_steps: int
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    final_lr: float = FINAL_LR
    segment_length: int = DEFAULT_SEGMENT_LENGTH

    def __post_init__(self) -> None:
        if not 0.0 < self.final_lr <= min(self.lr_g_init, self.lr_d_init):
            raise ValidationError(
                f"need 0 < final_lr <= learning rates, got final_lr={self.final_lr},"
                f" lr_g={self.lr_g_init}, lr_d={self.lr_d_init}"
            )
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.total_steps < 1:
            raise ValidationError(f"total_steps must be >= 1, got {self.total_steps}")
        if self.segment_length < 1:
            raise ValidationError(f"segment_length must be >= 1, got {self.segment_length}")
        for name in ("adam_beta1", "adam_beta2"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValidationError(f"{name} must be in [0, 1), got {value}")

    def to_dict(self) -> dict:
        return {
            "lr_g_init": self.lr_g_init,
            "lr_d_init": self.lr_d_init,
            "batch_size": self.batch_size,
            "total_steps": self.total_steps,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_eps": self.adam_eps,
            "final_lr": self.final_lr,
            "segment_length": self.segment_length,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown optimizer fields: {sorted(unknown)}")
        return cls(**data)


def default_optimizer_config(
    objective: ObjectiveKind, total_steps: int | None = None
) -> OptimizerConfig:
    """Published defaults: supervised tasks train at twice the rates and
    batch size of the cycle-consistency tasks; joint tasks inherit the
    cycle-consistency scale."""
    if objective is ObjectiveKind.CGAN:
        lr_g, batch = 4e-4, 16
    else:
        lr_g, batch = 2e-4, 8
    return OptimizerConfig(
        lr_g_init=lr_g,
        lr_d_init=lr_g / 2.0,
        batch_size=batch,
        total_steps=total_steps if total_steps is not None else _DEFAULT_TOTAL_STEPS[objective],
    )


def lr_schedule(init: float, step: int, total_steps: int, final: float = FINAL_LR) -> float:
    """Linear decay from ``init`` at step 0 to ``final`` at ``total_steps``."""
    if total_steps < 1:
        raise ValidationError(f"total_steps must be >= 1, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise ValidationError(f"step {step} outside [0, {total_steps}]")
    # interpolating would land an ulp off `final` at the last step
    if step == total_steps:
        return final
    return init + (final - init) * (step / total_steps)


def _derive_seed(master: int, label: str) -> np.random.SeedSequence:
    return np.random.SeedSequence((master & 0xFFFF_FFFF_FFFF_FFFF, zlib.crc32(label.encode())))


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    """Per-model first/second moment accumulators."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def like(cls, params: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(params), v=np.zeros_like(params))

    def update(
        self,
        params: np.ndarray,
        grad: np.ndarray,
        lr: float,
        beta1: float,
        beta2: float,
        eps: float,
    ) -> np.ndarray:
        self.t += 1
        self.m = beta1 * self.m + (1.0 - beta1) * grad
        self.v = beta2 * self.v + (1.0 - beta2) * grad * grad
        m_hat = self.m / (1.0 - beta1**self.t)
        v_hat = self.v / (1.0 - beta2**self.t)
        return params - lr * m_hat / (np.sqrt(v_hat) + eps)


# ---------------------------------------------------------------------------
# training state and checkpoints
# ---------------------------------------------------------------------------

_STATE_KIND = "train_state"


@dataclass
class TrainState:
    """Everything needed to continue a task's trajectory bit-exactly."""

    task_name: str
    step: int
    seed: int
    params: dict[str, np.ndarray]
    adam_m: dict[str, np.ndarray]
    adam_v: dict[str, np.ndarray]
    adam_t: dict[str, int]
    rng_state: dict = field(repr=False)


def checkpoint_save(state: TrainState, path: str | Path) -> None:
    roles = sorted(state.params)
    arrays = {}
    for role in roles:
        arrays[f"params.{role}"] = state.params[role]
        arrays[f"adam_m.{role}"] = state.adam_m[role]
        arrays[f"adam_v.{role}"] = state.adam_v[role]
    meta = {
        "task_name": state.task_name,
        "step": state.step,
        "seed": state.seed,
        "roles": roles,
        "adam_t": {role: state.adam_t[role] for role in roles},
        "rng_state": state.rng_state,
    }
    write_container(path, _STATE_KIND, meta, arrays)


def checkpoint_load(path: str | Path) -> TrainState:
    _, meta, arrays = read_container(path, expected_kind=_STATE_KIND)
    try:
        roles = meta["roles"]
        return TrainState(
            task_name=meta["task_name"],
            step=int(meta["step"]),
            seed=int(meta["seed"]),
            params={r: arrays[f"params.{r}"] for r in roles},
            adam_m={r: arrays[f"adam_m.{r}"] for r in roles},
            adam_v={r: arrays[f"adam_v.{r}"] for r in roles},
            adam_t={r: int(meta["adam_t"][r]) for r in roles},
            rng_state=meta["rng_state"],
        )
    except KeyError as exc:
        raise CheckpointError(f"train state at {path} is missing {exc}") from exc


# ---------------------------------------------------------------------------
# batch preparation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Item:
    utterance_id: str
    samples: np.ndarray
    paired_samples: np.ndarray | None = None


def _prep_items(
    utterances: list[Utterance],
    segment_length: int,
    pair_index: dict[str, Utterance] | None = None,
) -> list[_Item]:
    """Model-rate views of the utterances, optionally joined to their pairs."""
    if not utterances:
        raise BatchError("cannot train on an empty utterance list")
    items = []
    for utt in utterances:
        samples = to_model_rate(utt.waveform).samples
        if samples.size < segment_length:
            raise InputTooShortError(
                f"utterance {utt.utterance_id} has {samples.size} samples at the model"
                f" rate, shorter than the {segment_length}-sample training segment"
            )
        paired = None
        if pair_index is not None:
            if utt.pairing_key is None or utt.pairing_key not in pair_index:
                raise PairingError(
                    f"utterance {utt.utterance_id} has no pairing into the target corpus"
                )
            paired = to_model_rate(pair_index[utt.pairing_key].waveform).samples
            if paired.size != samples.size:
                raise PairingError(
                    f"paired signals for {utt.pairing_key} differ in length at the model rate"
                )
        items.append(_Item(utt.utterance_id, samples, paired))
    return items


def _sample_batch(
    rng: np.random.Generator, items: list[_Item], batch_size: int, segment_length: int
) -> tuple[np.ndarray, np.ndarray | None]:
    """Uniform utterance draws with per-item crop positions.

    Paired items crop source and target at the identical position. Draw
    order (indices, then one position per element) is part of the
    reproducibility contract.
    """
    idx = rng.integers(0, len(items), size=batch_size)
    src = np.empty((batch_size, segment_length))
    tgt = np.empty((batch_size, segment_length)) if items[0].paired_samples is not None else None
    for j, i in enumerate(idx):
        item = items[int(i)]
        pos = int(rng.integers(0, item.samples.size - segment_length + 1))
        src[j] = item.samples[pos : pos + segment_length]
        if tgt is not None:
            assert item.paired_samples is not None
            tgt[j] = item.paired_samples[pos : pos + segment_length]
    return src, tgt


# ---------------------------------------------------------------------------
# per-objective wiring
# ---------------------------------------------------------------------------


def _build_models(task: TrainingTask, seed: int) -> dict[str, MappingModel | ScoreModel]:
    """Fresh models for every role, with seeds derived from (seed, task, role)."""
    models: dict[str, MappingModel | ScoreModel] = {}
    for role in task.roles:
        derived = int(_derive_seed(seed, f"init:{task.name}.{role}").generate_state(1)[0])
        domains = task.model_domains(role)
        if role.startswith("g"):
            cfg = replace(task.generator_config, parameter_seed=derived)
            models[role] = MappingModel(cfg, domains[0], domains[1])
        else:
            cfg = replace(task.discriminator_config, parameter_seed=derived)
            models[role] = ScoreModel(cfg, domains[0])
    return models


class _TaskRunner:
    """Samples batches and evaluates the task's objective."""

    def __init__(
        self,
        task: TrainingTask,
        sources: dict[str, list[Utterance]],
        cfg: OptimizerConfig,
        weights: losses.LossWeights,
    ) -> None:
        self.task = task
        self.cfg = cfg
        self.weights = weights
        seg = cfg.segment_length
        obj = task.objective

        def slot(name: str) -> list[Utterance]:
            if name not in sources or not sources[name]:
                raise BatchError(f"task {task.name!r} is missing corpus slot {name!r}")
            return sources[name]

        if obj is ObjectiveKind.CGAN:
            index = self._pair_index(slot("target"))
            self.items = {"pairs": _prep_items(slot("source"), seg, index)}
        elif obj is ObjectiveKind.CYCLEGAN:
            self.items = {
                "source": _prep_items(slot("source"), seg),
                "target": _prep_items(slot("target"), seg),
            }
        elif obj is ObjectiveKind.CYCLEGAN_PLUS_CGAN:
            index = self._pair_index(slot("target"))
            self.items = {
                "source": _prep_items(slot("source"), seg),
                "mid": _prep_items(slot("mid"), seg),
                "pairs": _prep_items(slot("mid"), seg, index),
            }
        else:
            self.items = {
                "source": _prep_items(slot("source"), seg),
                "mid": _prep_items(slot("mid"), seg),
                "target": _prep_items(slot("target"), seg),
            }

    @staticmethod
    def _pair_index(target: list[Utterance]) -> dict[str, Utterance]:
        index: dict[str, Utterance] = {}
        for utt in target:
            if utt.pairing_key is None:
                raise PairingError(f"target utterance {utt.utterance_id} has no pairing key")
            if utt.pairing_key in index:
                raise PairingError(f"duplicate pairing key {utt.pairing_key} in target corpus")
            index[utt.pairing_key] = utt
        return index

    def evaluate(
        self, models: dict[str, MappingModel | ScoreModel], rng: np.random.Generator
    ) -> losses.LossBreakdown:
        """Sample fresh batches and compute the full loss breakdown."""
        cfg, m = self.cfg, models
        obj = self.task.objective
        if obj is ObjectiveKind.CGAN:
            src, tgt = _sample_batch(rng, self.items["pairs"], cfg.batch_size, cfg.segment_length)
            return losses.cgan_objective(m["g"], m["d"], src, tgt, self.weights)
        if obj is ObjectiveKind.CYCLEGAN:
            src, _ = _sample_batch(rng, self.items["source"], cfg.batch_size, cfg.segment_length)
            tgt, _ = _sample_batch(rng, self.items["target"], cfg.batch_size, cfg.segment_length)
            return losses.cyclegan_objective(
                m["g_fwd"], m["g_bwd"], m["d_src"], m["d_tgt"], src, tgt, self.weights
            )
        if obj is ObjectiveKind.CYCLEGAN_PLUS_CGAN:
            a, _ = _sample_batch(rng, self.items["source"], cfg.batch_size, cfg.segment_length)
            b, _ = _sample_batch(rng, self.items["mid"], cfg.batch_size, cfg.segment_length)
            pb, pc = _sample_batch(rng, self.items["pairs"], cfg.batch_size, cfg.segment_length)
            return losses.joint_cgan_objective(
                m["g_ab"], m["g_ba"], m["g_bc"], m["d_a"], m["d_b"], m["d_c"],
                a, b, pb, pc, self.weights,
            )
        a, _ = _sample_batch(rng, self.items["source"], cfg.batch_size, cfg.segment_length)
        b, _ = _sample_batch(rng, self.items["mid"], cfg.batch_size, cfg.segment_length)
        c, _ = _sample_batch(rng, self.items["target"], cfg.batch_size, cfg.segment_length)
        return losses.joint_cyclegan_objective(
            m["g_ab"], m["g_ba"], m["g_bc"], m["g_cb"], m["d_a"], m["d_b"], m["d_c"],
            a, b, c, self.weights,
        )


def _check_finite(breakdown: losses.LossBreakdown, task_name: str, step: int) -> None:
    totals = breakdown.total_values()
    if all(np.isfinite(v) for v in totals.values()):
        return
    components = breakdown.component_values()
    raise TrainingDivergedError(
        f"non-finite loss in task {task_name!r} at step {step}:"
        f" totals={totals} components={components}"
    )


def _apply_party(
    breakdown: losses.LossBreakdown,
    party: str,
    models: dict[str, MappingModel | ScoreModel],
    adam: dict[str, AdamState],
    lr: float,
    cfg: OptimizerConfig,
) -> None:
    """Backpropagate one party's total and Adam-update its models."""
    ad.backward(breakdown.totals[party])
    for role, leaf in breakdown.parties[party].items():
        if leaf.grad is None:
            raise TrainingDivergedError(f"no gradient reached {role!r} in party {party!r}")
        models[role].parameters = adam[role].update(
            models[role].parameters,
            leaf.grad,
            lr,
            cfg.adam_beta1,
            cfg.adam_beta2,
            cfg.adam_eps,
        )


def train_task(
    task: TrainingTask,
    sources: dict[str, list[Utterance]],
    cfg: OptimizerConfig,
    seed: int = 0,
    *,
    weights: losses.LossWeights = losses.LossWeights(),
    state: TrainState | None = None,
    stop_at_step: int | None = None,
    log_path: str | Path | None = None,
) -> tuple[dict[str, MappingModel | ScoreModel], TrainState]:
    """Run one task's alternating-update loop.

    Per outer step: two generator updates, then one update per
    discriminator party, each on a freshly sampled batch; learning rates
    follow the linear schedule evaluated at the outer step index. Passing a
    previously returned ``state`` resumes the trajectory; ``stop_at_step``
    pauses early so the caller can checkpoint. Returns the trained models
    and the final state. ``log_path`` appends one JSON line per step with
    the post-update loss breakdown of the discriminator batch.
    """
    models = _build_models(task, seed)
    runner = _TaskRunner(task, sources, cfg, weights)
    rng = np.random.default_rng(_derive_seed(seed, f"batches:{task.name}"))
    adam = {role: AdamState.like(models[role].parameters) for role in task.roles}
    start = 0
    if state is not None:
        if state.task_name != task.name:
            raise ValidationError(
                f"state belongs to task {state.task_name!r}, not {task.name!r}"
            )
        if set(state.params) != set(task.roles):
            raise ValidationError("state roles do not match the task's models")
        for role in task.roles:
            if state.params[role].shape != models[role].parameters.shape:
                raise ValidationError(f"state parameter shape mismatch for role {role!r}")
            models[role].parameters = state.params[role].copy()
            adam[role] = AdamState(
                m=state.adam_m[role].copy(),
                v=state.adam_v[role].copy(),
                t=state.adam_t[role],
            )
        rng.bit_generator.state = state.rng_state
        start = state.step
    stop = cfg.total_steps if stop_at_step is None else min(stop_at_step, cfg.total_steps)
    if start > cfg.total_steps:
        raise ValidationError(
            f"state is at step {start}, beyond total_steps={cfg.total_steps}"
        )
    if stop < start:
        raise ValidationError(f"stop_at_step={stop_at_step} precedes resumed step {start}")

    disc_parties = ("disc", "disc_src", "disc_tgt", "disc_a", "disc_b", "disc_c")
    log_file = open(log_path, "a") if log_path is not None else None
    try:
        for step in range(start, stop):
            lr_g = lr_schedule(cfg.lr_g_init, step, cfg.total_steps, cfg.final_lr)
            lr_d = lr_schedule(cfg.lr_d_init, step, cfg.total_steps, cfg.final_lr)
            for _ in range(2):
                breakdown = runner.evaluate(models, rng)
                _check_finite(breakdown, task.name, step)
                _apply_party(breakdown, "generators", models, adam, lr_g, cfg)
            breakdown = runner.evaluate(models, rng)
            _check_finite(breakdown, task.name, step)
            for party in disc_parties:
                if party in breakdown.parties:
                    _apply_party(breakdown, party, models, adam, lr_d, cfg)
            if log_file is not None:
                record = {
                    "task": task.name,
                    "step": step,
                    "lr_g": lr_g,
                    "lr_d": lr_d,
                    "updates": ["g", "g", "d"],
                    "components": breakdown.component_values(),
                    "totals": breakdown.total_values(),
                }
                log_file.write(json.dumps(record, sort_keys=True) + "\n")
    finally:
        if log_file is not None:
            log_file.close()

    final_state = TrainState(
        task_name=task.name,
        step=stop,
        seed=seed,
        params={role: models[role].parameters.copy() for role in task.roles},
        adam_m={role: adam[role].m.copy() for role in task.roles},
        adam_v={role: adam[role].v.copy() for role in task.roles},
        adam_t={role: adam[role].t for role in task.roles},
        rng_state=rng.bit_generator.state,
    )
    return models, final_state


# ---------------------------------------------------------------------------
# plan orchestration
# ---------------------------------------------------------------------------


def _resolve_expr(
    expr: CorpusExpr,
    corpora: ThreeDomainCorpus,
    trained: dict[str, dict[str, MappingModel | ScoreModel]],
) -> list[Utterance]:
    if isinstance(expr, CorpusRef):
        return list(corpora.corpus(expr.domain).utterances)
    if isinstance(expr, CorpusUnion):
        pooled: list[Utterance] = []
        for part in expr.parts:
            pooled.extend(_resolve_expr(part, corpora, trained))
        return pooled
    if isinstance(expr, Stage2Source):
        stage1 = trained.get("stage1")
        if stage1 is None or "g_fwd" not in stage1:
            raise ValidationError("stage-2 source requires a trained stage1 task")
        mapping = stage1["g_fwd"]
        assert isinstance(mapping, MappingModel)
        return list(stage2_build_source(mapping, corpora, expr.pool).utterances)
    raise ValidationError(f"unknown corpus expression {expr!r}")


def train_plan(
    plan: TrainingPlan,
    corpora: ThreeDomainCorpus,
    seed: int = 0,
    *,
    optimizer_configs: dict[str, OptimizerConfig] | None = None,
    weights: losses.LossWeights = losses.LossWeights(),
    log_path: str | Path | None = None,
) -> tuple[TrainedSystem, dict[str, TrainState]]:
    """Train every task of a plan in order and assemble the system.

    ``optimizer_configs`` overrides per task name; unlisted tasks get
    :func:`default_optimizer_config` for their objective. All tasks share
    the master seed; their streams are separated by task name.
    """
    optimizer_configs = dict(optimizer_configs or {})
    trained: dict[str, dict[str, MappingModel | ScoreModel]] = {}
    states: dict[str, TrainState] = {}
    for task in plan.tasks:
        sources: dict[str, list[Utterance]] = {
            "source": _resolve_expr(task.source, corpora, trained),
            "target": _resolve_expr(task.target, corpora, trained),
        }
        if task.mid is not None:
            sources["mid"] = _resolve_expr(task.mid, corpora, trained)
        cfg = optimizer_configs.get(task.name, default_optimizer_config(task.objective))
        models, state = train_task(
            task, sources, cfg, seed=seed, weights=weights, log_path=log_path
        )
        trained[task.name] = models
        states[task.name] = state

    mappings: dict[str, MappingModel] = {}
    for task in plan.tasks:
        for name in task.mapping_names():
            role = name.split(".", 1)[1]
            model = trained[task.name][role]
            assert isinstance(model, MappingModel)
            mappings[name] = model
    system = TrainedSystem(
        mappings=mappings, inference_path=plan.inference_path, scheme=plan.scheme
    )
    return system, states
