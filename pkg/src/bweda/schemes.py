"""Assembling training schemes into task plans and inference pipelines.

A scheme describes one strategy for getting from narrowband telephone
speech to wideband microphone speech. Four direct schemes train mappings
end to end:

* implicit-unassisted: one unpaired task straight from telephone to
  wideband audio.
* implicit-assisted: the same, with narrowband microphone data pooled into
  the source side.
* explicit-disjoint: an unpaired adaptation task (telephone to narrowband
  microphone) and a separate bandwidth-extension task (narrowband to
  wideband microphone), composed at inference.
* explicit-joint: both mappings trained in a single objective that ties
  them together.

The indirect scheme instead trains a narrow-mic-to-telephone mapping first
(stage 1), applies it offline to build a telephone-like training source,
and then trains bandwidth extension on that derived corpus (stage 2). Only
the stage-2 generator runs at inference; the stage-1 mapping exists to make
the training data resemble the deployment input.

:func:`assemble_training_plan` turns a :class:`SchemeSpec` plus the three
corpora into an ordered list of :class:`TrainingTask`; the trainer module
executes plans. Mapping names are ``"<task>.<role>"`` (for example
``"da.g_fwd"``), and a :class:`TrainedSystem` stores the mappings together
with the ordered inference path.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import PairingError, SchemeError, ValidationError
from .models import (
    DiscriminatorConfig,
    GeneratorConfig,
    MappingModel,
    load_mapping_model,
    save_mapping_model,
)
from .signals import (
    Domain,
    DomainCorpus,
    ThreeDomainCorpus,
    Utterance,
    Waveform,
    lowpass_downsample,
    retag_utterance,
    to_model_rate,
    upsample,
)


class SchemeKind(str, Enum):
    IMPLICIT_UNASSISTED = "implicit_unassisted"
    IMPLICIT_ASSISTED = "implicit_assisted"
    EXPLICIT_DISJOINT = "explicit_disjoint"
    EXPLICIT_JOINT = "explicit_joint"
    INDIRECT = "indirect"


class ObjectiveKind(str, Enum):
    """The trainable objective families.

    The two joint kinds tie an unpaired adaptation problem to a
    bandwidth-extension problem inside one objective; see the losses module
    for their exact compositions.
    """

    CGAN = "cgan"
    CYCLEGAN = "cyclegan"
    CYCLEGAN_PLUS_CGAN = "cyclegan+cgan"
    CYCLEGAN_PLUS_CYCLEGAN = "cyclegan+cyclegan"


class PoolMember(str, Enum):
    """Selectable ingredients of the indirect scheme's stage-2 source."""

    MAPPED_NARROW_MIC = "mapped_narrow_mic"
    NARROW_MIC = "narrow_mic"
    NARROW_TEL = "narrow_tel"


_PLAIN_OBJECTIVES = (ObjectiveKind.CGAN, ObjectiveKind.CYCLEGAN)
_JOINT_OBJECTIVES = (ObjectiveKind.CYCLEGAN_PLUS_CGAN, ObjectiveKind.CYCLEGAN_PLUS_CYCLEGAN)

# model roles produced by each objective; "g*" roles are mappings
OBJECTIVE_ROLES: dict[ObjectiveKind, tuple[str, ...]] = {
    ObjectiveKind.CGAN: ("g", "d"),
    ObjectiveKind.CYCLEGAN: ("g_fwd", "g_bwd", "d_src", "d_tgt"),
    ObjectiveKind.CYCLEGAN_PLUS_CGAN: ("g_ab", "g_ba", "g_bc", "d_a", "d_b", "d_c"),
    ObjectiveKind.CYCLEGAN_PLUS_CYCLEGAN: (
        "g_ab",
        "g_ba",
        "g_bc",
        "g_cb",
        "d_a",
        "d_b",
        "d_c",
    ),
}


@dataclass(frozen=True)
class SchemeSpec:
    """One row of the scheme taxonomy, validated.

    ``bwe_model`` selects the bandwidth-extension objective of the
    explicit-disjoint scheme; ``joint_variant`` selects the tied objective
    of the explicit-joint scheme; ``stage2_pool``/``stage2_model`` configure
    the indirect scheme. Fields irrelevant to the chosen kind must stay
    unset.
    """

    kind: SchemeKind
    bwe_model: ObjectiveKind | None = None
    joint_variant: ObjectiveKind | None = None
    stage2_pool: frozenset[PoolMember] | None = None
    stage2_model: ObjectiveKind | None = None

    def __post_init__(self) -> None:
        set_fields = {
            "bwe_model": self.bwe_model,
            "joint_variant": self.joint_variant,
            "stage2_pool": self.stage2_pool,
            "stage2_model": self.stage2_model,
        }
        allowed = {
            SchemeKind.IMPLICIT_UNASSISTED: (),
            SchemeKind.IMPLICIT_ASSISTED: (),
            SchemeKind.EXPLICIT_DISJOINT: ("bwe_model",),
            SchemeKind.EXPLICIT_JOINT: ("joint_variant",),
            SchemeKind.INDIRECT: ("stage2_pool", "stage2_model"),
        }[self.kind]
        for name, value in set_fields.items():
            if value is not None and name not in allowed:
                raise SchemeError(f"{self.kind.value} scheme does not take {name}")
            if value is None and name in allowed:
                raise SchemeError(f"{self.kind.value} scheme requires {name}")

        if self.kind is SchemeKind.EXPLICIT_DISJOINT:
            if self.bwe_model not in _PLAIN_OBJECTIVES:
                raise SchemeError(
                    f"bwe_model must be one of {[o.value for o in _PLAIN_OBJECTIVES]},"
                    f" got {self.bwe_model.value}"
                )
        if self.kind is SchemeKind.EXPLICIT_JOINT:
            if self.joint_variant not in _JOINT_OBJECTIVES:
                raise SchemeError(
                    f"joint_variant must be one of {[o.value for o in _JOINT_OBJECTIVES]},"
                    f" got {self.joint_variant.value}"
                )
        if self.kind is SchemeKind.INDIRECT:
            object.__setattr__(self, "stage2_pool", frozenset(self.stage2_pool))
            if PoolMember.MAPPED_NARROW_MIC not in self.stage2_pool:
                raise SchemeError("stage2_pool must include mapped_narrow_mic")
            if self.stage2_model not in _PLAIN_OBJECTIVES:
                raise SchemeError(
                    f"stage2_model must be one of {[o.value for o in _PLAIN_OBJECTIVES]},"
                    f" got {self.stage2_model.value}"
                )
            if (
                PoolMember.NARROW_TEL in self.stage2_pool
                and self.stage2_model is not ObjectiveKind.CYCLEGAN
            ):
                raise SchemeError(
                    "a stage-2 pool containing telephone data is unpaired;"
                    " stage2_model must be cyclegan"
                )

    def to_dict(self) -> dict:
        data: dict = {"kind": self.kind.value}
        if self.bwe_model is not None:
            data["bwe_model"] = self.bwe_model.value
        if self.joint_variant is not None:
            data["joint_variant"] = self.joint_variant.value
        if self.stage2_pool is not None:
            data["stage2_pool"] = sorted(m.value for m in self.stage2_pool)
            data["stage2_model"] = self.stage2_model.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SchemeSpec":
        known = {"kind", "bwe_model", "joint_variant", "stage2_pool", "stage2_model"}
        unknown = set(data) - known
        if unknown:
            raise SchemeError(f"unknown scheme fields: {sorted(unknown)}")
        try:
            kind = SchemeKind(data["kind"])
        except (KeyError, ValueError) as exc:
            raise SchemeError(f"missing or invalid scheme kind: {exc}") from exc

        def objective(name: str) -> ObjectiveKind | None:
            if name not in data:
                return None
            try:
                return ObjectiveKind(data[name])
            except ValueError as exc:
                raise SchemeError(f"invalid {name}: {data[name]!r}") from exc

        pool = None
        if "stage2_pool" in data:
            try:
                pool = frozenset(PoolMember(m) for m in data["stage2_pool"])
            except ValueError as exc:
                raise SchemeError(f"invalid stage2_pool member: {exc}") from exc
        return cls(
            kind=kind,
            bwe_model=objective("bwe_model"),
            joint_variant=objective("joint_variant"),
            stage2_pool=pool,
            stage2_model=objective("stage2_model"),
        )


# ---------------------------------------------------------------------------
# corpus expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusRef:
    """One of the three base corpora."""

    domain: Domain


@dataclass(frozen=True)
class CorpusUnion:
    """Utterances pooled from several expressions; sampled uniformly."""

    parts: tuple["CorpusExpr", ...]

    def __post_init__(self) -> None:
        if len(self.parts) < 2:
            raise ValidationError("a corpus union needs at least two parts")


@dataclass(frozen=True)
class Stage2Source:
    """The indirect scheme's derived stage-2 source corpus.

    Resolved by the trainer after stage 1 completes, via
    :func:`stage2_build_source` with the stage-1 mapping.
    """

    pool: frozenset[PoolMember]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pool", frozenset(self.pool))
        if PoolMember.MAPPED_NARROW_MIC not in self.pool:
            raise SchemeError("stage-2 source pool must include mapped_narrow_mic")


CorpusExpr = CorpusRef | CorpusUnion | Stage2Source


# ---------------------------------------------------------------------------
# tasks and plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainingTask:
    """One model-training job inside a plan.

    ``paired`` marks that aligned source-target sampling is available (for
    joint objectives: mid-target). Objectives that train on pairs require
    it; cycle-consistency objectives ignore any pairing present. Joint
    objectives additionally take the middle-domain corpus via ``mid``.
    """

    name: str
    objective: ObjectiveKind
    source: CorpusExpr
    target: CorpusExpr
    source_domain: Domain
    target_domain: Domain
    generator_config: GeneratorConfig = GeneratorConfig()
    discriminator_config: DiscriminatorConfig = DiscriminatorConfig()
    mid: CorpusExpr | None = None
    mid_domain: Domain | None = None
    paired: bool = False
    depends_on: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.name or "." in self.name or "/" in self.name:
            raise ValidationError(f"task name must be non-empty without '.' or '/': {self.name!r}")
        joint = self.objective in _JOINT_OBJECTIVES
        if joint and (self.mid is None or self.mid_domain is None):
            raise ValidationError(f"{self.objective.value} task needs mid and mid_domain")
        if not joint and (self.mid is not None or self.mid_domain is not None):
            raise ValidationError(f"{self.objective.value} task takes no middle corpus")
        needs_pairs = self.objective in (ObjectiveKind.CGAN, ObjectiveKind.CYCLEGAN_PLUS_CGAN)
        if needs_pairs and not self.paired:
            raise SchemeError(
                f"{self.objective.value} trains on aligned pairs but task"
                f" {self.name!r} references unpaired corpora"
            )

    @property
    def roles(self) -> tuple[str, ...]:
        return OBJECTIVE_ROLES[self.objective]

    def mapping_names(self) -> tuple[str, ...]:
        return tuple(f"{self.name}.{r}" for r in self.roles if r.startswith("g"))

    def model_domains(self, role: str) -> tuple[Domain, ...]:
        """Domains a role's model spans: (source, target) for mappings, (domain,) for scorers."""
        a, b, c = self.source_domain, self.mid_domain, self.target_domain
        table: dict[str, tuple[Domain, ...]] = {
            "g": (a, c),
            "g_fwd": (a, c),
            "g_bwd": (c, a),
            "d": (c,),
            "d_src": (a,),
            "d_tgt": (c,),
        }
        if b is not None:
            table.update(
                {
                    "g_ab": (a, b),
                    "g_ba": (b, a),
                    "g_bc": (b, c),
                    "g_cb": (c, b),
                    "d_a": (a,),
                    "d_b": (b,),
                    "d_c": (c,),
                }
            )
        if role not in table:
            raise ValidationError(f"task {self.name!r} has no role {role!r}")
        return table[role]


@dataclass(frozen=True)
class TrainingPlan:
    """Ordered tasks plus the mapping names applied at inference."""

    scheme: SchemeSpec
    tasks: tuple[TrainingTask, ...]
    inference_path: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.tasks:
            raise ValidationError("a plan needs at least one task")
        names = [t.name for t in self.tasks]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate task names in plan: {names}")
        seen: set[str] = set()
        for task in self.tasks:
            for dep in task.depends_on:
                if dep not in seen:
                    raise ValidationError(
                        f"task {task.name!r} depends on {dep!r}, which does not precede it"
                    )
            seen.add(task.name)
        produced = {name for t in self.tasks for name in t.mapping_names()}
        for name in self.inference_path:
            if name not in produced:
                raise ValidationError(f"inference path references unknown mapping {name!r}")
        if not self.inference_path:
            raise ValidationError("inference path must not be empty")

    def task(self, name: str) -> TrainingTask:
        for t in self.tasks:
            if t.name == name:
                return t
        raise ValidationError(f"no task named {name!r}")


def _check_pairable(narrow: DomainCorpus, wide: DomainCorpus) -> None:
    wide_keys = set(wide.by_pairing_key())
    for utt in narrow.utterances:
        if utt.pairing_key is None or utt.pairing_key not in wide_keys:
            raise PairingError(
                f"utterance {utt.utterance_id} has no counterpart in the"
                f" {wide.domain.value} corpus"
            )


def scheme_task_objectives(scheme: SchemeSpec) -> dict[str, ObjectiveKind]:
    """Task names and objectives a scheme expands into, in training order.

    Derivable without corpora; :func:`assemble_training_plan` produces tasks
    with exactly these names.
    """
    if scheme.kind in (SchemeKind.IMPLICIT_UNASSISTED, SchemeKind.IMPLICIT_ASSISTED):
        return {"direct": ObjectiveKind.CYCLEGAN}
    if scheme.kind is SchemeKind.EXPLICIT_DISJOINT:
        assert scheme.bwe_model is not None
        return {"da": ObjectiveKind.CYCLEGAN, "bwe": scheme.bwe_model}
    if scheme.kind is SchemeKind.EXPLICIT_JOINT:
        assert scheme.joint_variant is not None
        return {"joint": scheme.joint_variant}
    assert scheme.stage2_model is not None
    return {"stage1": ObjectiveKind.CYCLEGAN, "stage2": scheme.stage2_model}


def assemble_training_plan(
    scheme: SchemeSpec,
    corpora: ThreeDomainCorpus,
    generator_config: GeneratorConfig = GeneratorConfig(),
    discriminator_config: DiscriminatorConfig = DiscriminatorConfig(),
) -> TrainingPlan:
    """Expand a scheme into concrete training tasks over the given corpora.

    Tasks are ordered so that dependencies precede dependents; the returned
    plan's ``inference_path`` lists the mapping names applied left to right
    after upsampling a telephone input.
    """
    a, b, c = Domain.NARROW_TEL, Domain.NARROW_MIC, Domain.WIDE_MIC
    common = {
        "generator_config": generator_config,
        "discriminator_config": discriminator_config,
    }
    kind = scheme.kind
    if kind in (SchemeKind.IMPLICIT_UNASSISTED, SchemeKind.IMPLICIT_ASSISTED):
        source: CorpusExpr = CorpusRef(a)
        if kind is SchemeKind.IMPLICIT_ASSISTED:
            source = CorpusUnion((CorpusRef(a), CorpusRef(b)))
        tasks = (
            TrainingTask(
                name="direct",
                objective=ObjectiveKind.CYCLEGAN,
                source=source,
                target=CorpusRef(c),
                source_domain=a,
                target_domain=c,
                **common,
            ),
        )
        return TrainingPlan(scheme=scheme, tasks=tasks, inference_path=("direct.g_fwd",))

    if kind is SchemeKind.EXPLICIT_DISJOINT:
        _check_pairable(corpora.narrow_mic, corpora.wide_mic)
        tasks = (
            TrainingTask(
                name="da",
                objective=ObjectiveKind.CYCLEGAN,
                source=CorpusRef(a),
                target=CorpusRef(b),
                source_domain=a,
                target_domain=b,
                **common,
            ),
            TrainingTask(
                name="bwe",
                objective=scheme.bwe_model,
                source=CorpusRef(b),
                target=CorpusRef(c),
                source_domain=b,
                target_domain=c,
                paired=True,
                **common,
            ),
        )
        bwe_gen = "bwe.g" if scheme.bwe_model is ObjectiveKind.CGAN else "bwe.g_fwd"
        return TrainingPlan(scheme=scheme, tasks=tasks, inference_path=("da.g_fwd", bwe_gen))

    if kind is SchemeKind.EXPLICIT_JOINT:
        _check_pairable(corpora.narrow_mic, corpora.wide_mic)
        tasks = (
            TrainingTask(
                name="joint",
                objective=scheme.joint_variant,
                source=CorpusRef(a),
                target=CorpusRef(c),
                mid=CorpusRef(b),
                source_domain=a,
                target_domain=c,
                mid_domain=b,
                paired=True,
                **common,
            ),
        )
        return TrainingPlan(
            scheme=scheme, tasks=tasks, inference_path=("joint.g_ab", "joint.g_bc")
        )

    # indirect: adaptation first, bandwidth extension on the derived source
    paired_stage2 = scheme.stage2_pool <= {
        PoolMember.MAPPED_NARROW_MIC,
        PoolMember.NARROW_MIC,
    }
    if scheme.stage2_model is ObjectiveKind.CGAN and not paired_stage2:
        raise SchemeError("cgan stage 2 requires a fully paired source pool")
    if paired_stage2:
        _check_pairable(corpora.narrow_mic, corpora.wide_mic)
    tasks = (
        TrainingTask(
            name="stage1",
            objective=ObjectiveKind.CYCLEGAN,
            source=CorpusRef(b),
            target=CorpusRef(a),
            source_domain=b,
            target_domain=a,
            **common,
        ),
        TrainingTask(
            name="stage2",
            objective=scheme.stage2_model,
            source=Stage2Source(scheme.stage2_pool),
            target=CorpusRef(c),
            source_domain=b,
            target_domain=c,
            paired=paired_stage2,
            depends_on=("stage1",),
            **common,
        ),
    )
    stage2_gen = "stage2.g" if scheme.stage2_model is ObjectiveKind.CGAN else "stage2.g_fwd"
    return TrainingPlan(scheme=scheme, tasks=tasks, inference_path=(stage2_gen,))


# ---------------------------------------------------------------------------
# corpus mapping and the stage-2 source
# ---------------------------------------------------------------------------


def map_corpus(
    model: MappingModel,
    corpus: DomainCorpus,
    *,
    retag_to: Domain | None = None,
    id_prefix: str = "mapped:",
) -> DomainCorpus:
    """Run every utterance through a mapping, keeping identity metadata.

    Waveforms are viewed at the model rate for the mapping itself, then
    materialized at the output domain's native rate: a mapping into a
    narrowband domain yields 8 kHz waveforms again. Without that final
    decimation the artifacts would keep the faint upper-band residue every
    16 kHz generator pass leaves behind, which no genuine narrowband signal
    can contain. Speaker ids and pairing keys pass through unchanged;
    utterance ids gain ``id_prefix``.
    """
    domain = retag_to if retag_to is not None else corpus.domain
    mapped = []
    for utt in corpus.utterances:
        wave = to_model_rate(utt.waveform)
        out = Waveform(model.map_signal(wave.samples), wave.sample_rate)
        if domain.native_rate != out.sample_rate:
            out = lowpass_downsample(out)
        mapped.append(
            Utterance(
                utterance_id=id_prefix + utt.utterance_id,
                speaker_id=utt.speaker_id,
                domain=domain,
                waveform=out,
                pairing_key=utt.pairing_key,
            )
        )
    return DomainCorpus(domain=domain, utterances=tuple(mapped))


def stage2_build_source(
    mapping: MappingModel,
    corpora: ThreeDomainCorpus,
    pool: frozenset[PoolMember] | set[PoolMember],
) -> DomainCorpus:
    """Build the indirect scheme's stage-2 training source, offline.

    The stage-1 mapping is applied once to the whole narrowband-microphone
    corpus; the selected pool members are concatenated (mapped entries
    first, then raw narrow-mic, then telephone). Mapped and raw narrow-mic
    entries retain their pairing keys to the wideband corpus -- note a pool
    containing both therefore pairs two source utterances to each wideband
    target. Telephone entries are unpaired and are retagged into the
    narrow-mic corpus domain, with provenance kept in their utterance ids.
    """
    pool = frozenset(pool)
    if not pool:
        raise ValidationError("stage-2 pool must not be empty")
    if PoolMember.MAPPED_NARROW_MIC not in pool:
        raise SchemeError("stage-2 source pool must include mapped_narrow_mic")
    parts: list[Utterance] = []
    parts.extend(
        map_corpus(mapping, corpora.narrow_mic, retag_to=Domain.NARROW_MIC).utterances
    )
    if PoolMember.NARROW_MIC in pool:
        parts.extend(corpora.narrow_mic.utterances)
    if PoolMember.NARROW_TEL in pool:
        parts.extend(
            retag_utterance(u, Domain.NARROW_MIC) for u in corpora.narrow_tel.utterances
        )
    return DomainCorpus(domain=Domain.NARROW_MIC, utterances=tuple(parts))


def stage1_train(
    narrow_mic: DomainCorpus,
    narrow_tel: DomainCorpus,
    optimizer_config=None,
    *,
    generator_config: GeneratorConfig = GeneratorConfig(),
    discriminator_config: DiscriminatorConfig = DiscriminatorConfig(),
    seed: int = 0,
    log_path: str | Path | None = None,
) -> MappingModel:
    """Train the indirect scheme's adaptation mapping on its own.

    Runs an unpaired cycle-consistency task from narrowband microphone to
    telephone speech and returns the forward generator. Apply it with
    :func:`map_corpus`, which passes speaker ids and pairing keys through
    unchanged.
    """
    from . import trainer  # deferred: trainer imports this module

    task = TrainingTask(
        name="stage1",
        objective=ObjectiveKind.CYCLEGAN,
        source=CorpusRef(Domain.NARROW_MIC),
        target=CorpusRef(Domain.NARROW_TEL),
        source_domain=Domain.NARROW_MIC,
        target_domain=Domain.NARROW_TEL,
        generator_config=generator_config,
        discriminator_config=discriminator_config,
    )
    if optimizer_config is None:
        optimizer_config = trainer.default_optimizer_config(task.objective)
    sources = {
        "source": list(narrow_mic.utterances),
        "target": list(narrow_tel.utterances),
    }
    models, _ = trainer.train_task(
        task, sources, optimizer_config, seed=seed, log_path=log_path
    )
    return models["g_fwd"]


# ---------------------------------------------------------------------------
# trained systems and inference
# ---------------------------------------------------------------------------

_SYSTEM_MANIFEST = "system.json"
_SYSTEM_FORMAT_VERSION = 1


@dataclass
class TrainedSystem:
    """Named mappings plus the ordered path applied at inference.

    The path must chain: each mapping's target domain is the next one's
    source domain, ending at the wideband microphone domain. The entry
    mapping consumes narrowband input; for the indirect scheme it was
    trained on microphone-like data yet is fed telephone recordings, which
    is exactly the gap its stage-1 preprocessing addressed.
    """

    mappings: dict[str, MappingModel]
    inference_path: tuple[str, ...]
    scheme: SchemeSpec | None = None

    def __post_init__(self) -> None:
        self.inference_path = tuple(self.inference_path)
        if not self.inference_path:
            raise ValidationError("inference path must not be empty")
        for name in self.inference_path:
            if name not in self.mappings:
                raise ValidationError(f"inference path references missing mapping {name!r}")
        chain = [self.mappings[name] for name in self.inference_path]
        if chain[0].source_domain.native_rate != 8000:
            raise ValidationError(
                f"entry mapping {self.inference_path[0]!r} must consume a narrowband domain"
            )
        if chain[-1].target_domain is not Domain.WIDE_MIC:
            raise ValidationError(
                f"final mapping {self.inference_path[-1]!r} must produce wide_mic"
            )
        for i in range(len(chain) - 1):
            if chain[i].target_domain is not chain[i + 1].source_domain:
                raise ValidationError(
                    f"inference path breaks between {self.inference_path[i]!r}"
                    f" ({chain[i].target_domain.value}) and {self.inference_path[i + 1]!r}"
                    f" ({chain[i + 1].source_domain.value})"
                )

    def apply_chain(self, samples: np.ndarray) -> np.ndarray:
        """Apply the inference path to 1-D model-rate samples, left to right."""
        for name in self.inference_path:
            samples = self.mappings[name].map_signal(samples)
        return samples


def inference_map(system: TrainedSystem, utterance: Utterance) -> Waveform:
    """Map one telephone utterance to a wideband waveform.

    Upsamples the 8 kHz input to the model rate, then applies the system's
    inference path left to right. Output length is twice the input length.
    """
    if utterance.domain is not Domain.NARROW_TEL:
        raise ValidationError(
            f"inference expects telephone-domain input, got {utterance.domain.value}"
        )
    wave = upsample(utterance.waveform)
    return Waveform(system.apply_chain(wave.samples), wave.sample_rate)


def save_system(system: TrainedSystem, directory: str | Path) -> None:
    """Persist a system as a manifest plus one checkpoint per mapping."""
    directory = Path(directory)
    (directory / "mappings").mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "format_version": _SYSTEM_FORMAT_VERSION,
        "inference_path": list(system.inference_path),
        "mappings": {},
    }
    if system.scheme is not None:
        manifest["scheme"] = system.scheme.to_dict()
    for name in sorted(system.mappings):
        rel = f"mappings/{name}.ckpt"
        save_mapping_model(system.mappings[name], directory / rel)
        manifest["mappings"][name] = rel
    (directory / _SYSTEM_MANIFEST).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )


def load_system(directory: str | Path) -> TrainedSystem:
    directory = Path(directory)
    manifest_path = directory / _SYSTEM_MANIFEST
    if not manifest_path.is_file():
        raise ValidationError(f"no system manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != _SYSTEM_FORMAT_VERSION:
        raise ValidationError(
            f"unsupported system manifest version {manifest.get('format_version')!r}"
        )
    mappings = {
        name: load_mapping_model(directory / rel)
        for name, rel in manifest["mappings"].items()
    }
    scheme = SchemeSpec.from_dict(manifest["scheme"]) if "scheme" in manifest else None
    return TrainedSystem(
        mappings=mappings,
        inference_path=tuple(manifest["inference_path"]),
        scheme=scheme,
    )
