"""Command-line front door tying the library into reproducible runs.

Five subcommands cover the experiment lifecycle::

    bweda synth-data --config exp.json          # corpus WAVs + manifest
    bweda train      --config exp.json --seed 7 # checkpoints + system
    bweda infer      --config exp.json --seed 7 input.wav ...
    bweda eval       --config exp.json --seed 7 # report.json
    bweda report     runs/*/report.json         # comparison table

Every run lives under ``output_dir/<run_id>`` where the run id hashes the
resolved config and the seed, so re-running a command with the same inputs
recreates the same bytes and differently configured runs never collide.
Training sees only the train portion of the corpus split; all reported
metrics come from the held-out portion.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config, run_id_for
from .errors import BwedaError, RateError, ValidationError
from .evaluation import (
    EvalReport,
    build_trial_list,
    compute_eer,
    compute_min_dcf,
    domain_discriminability,
    embed_utterance,
    log_spectral_distance,
    score_trials,
)
from .schemes import (
    SchemeKind,
    TrainedSystem,
    assemble_training_plan,
    inference_map,
    load_system,
    save_system,
    stage2_build_source,
)
from .signals import (
    Domain,
    DomainCorpus,
    ThreeDomainCorpus,
    Utterance,
    Waveform,
    build_three_domain_corpus,
    load_corpus,
    read_wav,
    save_corpus,
    split_for_eval,
    upsample,
    write_wav,
)
from .trainer import checkpoint_save, train_plan

_REPORT_VERSION = 1


def _corpus_dir(config: ExperimentConfig) -> Path:
    return Path(config.output_dir) / "corpus"


def _run_dir(config: ExperimentConfig, seed: int, run_id: str | None) -> Path:
    return Path(config.output_dir) / (run_id or run_id_for(config, seed))


def _load_run_corpus(config: ExperimentConfig) -> ThreeDomainCorpus:
    corpus_dir = _corpus_dir(config)
    if not (corpus_dir / "manifest.json").is_file():
        raise ValidationError(
            f"no corpus under {corpus_dir}; run the synth-data command first"
        )
    return load_corpus(corpus_dir)


def cmd_synth_data(config: ExperimentConfig) -> Path:
    """Generate the synthetic corpus and write it under output_dir/corpus."""
    corpus = build_three_domain_corpus(
        n_speakers=config.corpus.n_speakers,
        utts_per_speaker=config.corpus.utts_per_speaker,
        master_seed=config.corpus.master_seed,
        duration_s=config.corpus.duration_s,
    )
    return save_corpus(corpus, _corpus_dir(config))


def _write_derived_corpus(corpus: DomainCorpus, directory: Path) -> None:
    """WAVs plus manifest for a derived (non-native-rate) corpus artifact."""
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for utt in corpus.utterances:
        rel = utt.utterance_id.replace(":", "_") + ".wav"
        write_wav(directory / rel, utt.waveform)
        rows.append(
            {
                "utterance_id": utt.utterance_id,
                "speaker_id": utt.speaker_id,
                "pairing_key": utt.pairing_key,
                "sample_rate": utt.waveform.sample_rate,
                "path": rel,
            }
        )
    manifest = {
        "format_version": 1,
        "domain": corpus.domain.value,
        "utterances": rows,
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def cmd_train(
    config: ExperimentConfig, seed: int, run_id: str | None = None
) -> Path:
    """Train the configured scheme; returns the run directory.

    Artifacts: ``config.json`` (resolved config + seed), ``system.json`` with
    ``mappings/*.ckpt``, one final training state per task under
    ``checkpoints/``, a ``losses.jsonl`` step log, and for the indirect
    scheme the frozen mapped training source under ``stage2_source/``.
    """
    corpora = _load_run_corpus(config)
    train_corpora, _ = split_for_eval(corpora, config.eval.holdout_fraction)
    plan = assemble_training_plan(
        config.scheme, train_corpora, config.generator, config.discriminator
    )
    run_dir = _run_dir(config, seed, run_id)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(
        json.dumps(
            {"run_id": run_dir.name, "seed": seed, "config": config.to_dict()},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    log_path = run_dir / "losses.jsonl"
    log_path.unlink(missing_ok=True)

    system, states = train_plan(
        plan,
        train_corpora,
        seed=seed,
        optimizer_configs=config.optimizer,
        log_path=log_path,
    )
    save_system(system, run_dir)
    ckpt_dir = run_dir / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    for name, state in states.items():
        checkpoint_save(state, ckpt_dir / f"{name}.ckpt")

    if config.scheme.kind is SchemeKind.INDIRECT:
        assert config.scheme.stage2_pool is not None
        derived = stage2_build_source(
            system.mappings["stage1.g_fwd"], train_corpora, config.scheme.stage2_pool
        )
        _write_derived_corpus(derived, run_dir / "stage2_source")
    return run_dir


def cmd_infer(
    config: ExperimentConfig,
    inputs: list[str | Path],
    seed: int,
    run_id: str | None = None,
) -> list[Path]:
    """Map 8 kHz WAV files through a trained system to 16 kHz outputs."""
    if not inputs:
        raise ValidationError("no input WAV files given")
    run_dir = _run_dir(config, seed, run_id)
    system = load_system(run_dir)
    out_dir = run_dir / "infer"
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for path in inputs:
        path = Path(path)
        wav = read_wav(path)
        if wav.sample_rate != Domain.NARROW_TEL.native_rate:
            raise RateError(
                f"{path}: inference input must be {Domain.NARROW_TEL.native_rate} Hz,"
                f" got {wav.sample_rate}"
            )
        utt = Utterance(path.stem, path.stem, Domain.NARROW_TEL, wav)
        out_path = out_dir / f"{path.stem}.wav"
        write_wav(out_path, inference_map(system, utt))
        outputs.append(out_path)
    return outputs


def _chain_or_upsample(system: TrainedSystem | None, narrow: Waveform) -> np.ndarray:
    up = upsample(narrow).samples
    return system.apply_chain(up) if system is not None else up


def evaluate_system(
    system: TrainedSystem | None,
    held: ThreeDomainCorpus,
    p_target: float,
    seed: int,
) -> EvalReport:
    """Held-out metrics for a system, or for naive upsampling when None.

    Bandwidth-extension fidelity (``lsd_db``) compares the mapped held-out
    narrowband microphone signals against their paired wideband references.
    The remaining metrics run the full inference path on held-out telephone
    speech: ``domain_auc`` separates the outputs from real wideband
    microphone recordings (0.5 means indistinguishable), and the speaker
    verification numbers score all same/different-speaker trial pairs of
    the outputs.
    """
    wide_index = held.wide_mic.by_pairing_key()
    lsd_values = []
    for utt in held.narrow_mic.utterances:
        mapped = _chain_or_upsample(system, utt.waveform)
        reference = wide_index[utt.pairing_key].waveform.samples
        lsd_values.append(log_spectral_distance(mapped, reference))

    tel_outputs = {
        utt.utterance_id: Waveform(
            _chain_or_upsample(system, utt.waveform), held.wide_mic.domain.native_rate
        )
        for utt in held.narrow_tel.utterances
    }
    embeddings = {uid: embed_utterance(w) for uid, w in tel_outputs.items()}
    auc = domain_discriminability(
        np.vstack([embeddings[uid] for uid in sorted(embeddings)]),
        np.vstack([embed_utterance(u.waveform) for u in held.wide_mic.utterances]),
        seed=seed,
    )
    trials = build_trial_list(held.narrow_tel)
    scores = score_trials(embeddings, trials)
    labels = np.array([t.is_target for t in trials.trials])
    return EvalReport(
        lsd_db=float(np.mean(lsd_values)),
        domain_auc=auc,
        eer_percent=compute_eer(scores, labels),
        min_dcf=compute_min_dcf(scores, labels, p_target=p_target),
        metadata={
            "n_lsd_utterances": len(lsd_values),
            "n_trials": len(trials.trials),
            "n_target_trials": int(labels.sum()),
            "p_target": p_target,
        },
    )


def cmd_eval(
    config: ExperimentConfig, seed: int, run_id: str | None = None
) -> dict:
    """Evaluate a trained run against the naive-upsample baseline."""
    corpora = _load_run_corpus(config)
    _, held = split_for_eval(corpora, config.eval.holdout_fraction)
    run_dir = _run_dir(config, seed, run_id)
    system = load_system(run_dir)
    report = {
        "format_version": _REPORT_VERSION,
        "run_id": run_dir.name,
        "seed": seed,
        "scheme": config.scheme.to_dict(),
        "system": evaluate_system(system, held, config.eval.p_target, seed).to_json_dict(),
        "baseline": evaluate_system(None, held, config.eval.p_target, seed).to_json_dict(),
    }
    (run_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    return report


def _scheme_label(scheme: dict) -> str:
    kind = scheme.get("kind", "?")
    detail = (
        scheme.get("bwe_model")
        or scheme.get("joint_variant")
        or scheme.get("stage2_model")
    )
    label = kind if detail is None else f"{kind}/{detail}"
    pool = scheme.get("stage2_pool")
    if pool:
        label += " pool={" + ",".join(pool) + "}"
    return label


def cmd_report(report_paths: list[str | Path]) -> str:
    """Aggregate run reports into one markdown comparison table."""
    if not report_paths:
        raise ValidationError("no report files given")
    rows = []
    for path in report_paths:
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"no report file at {path}")
        data = json.loads(path.read_text())
        if data.get("format_version") != _REPORT_VERSION:
            raise ValidationError(
                f"{path}: unsupported report version {data.get('format_version')!r}"
            )
        rows.append(data)

    header = (
        "| run | scheme | LSD dB | base LSD | domain AUC | base AUC"
        " | EER % | base EER | minDCF | base minDCF |"
    )
    rule = "|---" * 10 + "|"
    lines = [header, rule]
    for data in rows:
        sys_report = EvalReport.from_json_dict(data["system"])
        base = EvalReport.from_json_dict(data["baseline"])
        lines.append(
            f"| {data['run_id']} | {_scheme_label(data['scheme'])}"
            f" | {sys_report.lsd_db:.3f} | {base.lsd_db:.3f}"
            f" | {sys_report.domain_auc:.3f} | {base.domain_auc:.3f}"
            f" | {sys_report.eer_percent:.2f} | {base.eer_percent:.2f}"
            f" | {sys_report.min_dcf:.3f} | {base.min_dcf:.3f} |"
        )
    return "\n".join(lines) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bweda",
        description="Joint domain adaptation and bandwidth extension experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, needs_config: bool = True) -> None:
        p.add_argument("--config", required=needs_config, help="experiment config JSON")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--output-dir", default=None, help="override config output_dir")
        p.add_argument("--run-id", default=None, help="override the derived run id")

    add_common(sub.add_parser("synth-data", help="generate the synthetic corpus"))
    add_common(sub.add_parser("train", help="train the configured scheme"))
    infer = sub.add_parser("infer", help="map 8 kHz WAVs to 16 kHz outputs")
    add_common(infer)
    infer.add_argument("inputs", nargs="+", help="8 kHz mono WAV files")
    add_common(sub.add_parser("eval", help="evaluate a trained run"))
    report = sub.add_parser("report", help="aggregate run reports into a table")
    add_common(report, needs_config=False)
    report.add_argument("reports", nargs="+", help="report.json files to aggregate")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "report":
            table = cmd_report(args.reports)
            sys.stdout.write(table)
            if args.output_dir:
                out = Path(args.output_dir) / "comparison.md"
                out.parent.mkdir(parents=True, exist_ok=True)
                out.write_text(table)
            return 0

        config = load_config(args.config)
        if args.output_dir:
            config = replace(config, output_dir=args.output_dir)
        if args.command == "synth-data":
            manifest = cmd_synth_data(config)
            print(f"corpus written under {manifest.parent}")
        elif args.command == "train":
            run_dir = cmd_train(config, args.seed, args.run_id)
            print(f"trained system written under {run_dir}")
        elif args.command == "infer":
            outputs = cmd_infer(config, args.inputs, args.seed, args.run_id)
            for path in outputs:
                print(path)
        elif args.command == "eval":
            report_data = cmd_eval(config, args.seed, args.run_id)
            run_dir = _run_dir(config, args.seed, args.run_id)
            print(f"report written to {run_dir / 'report.json'}")
            system = report_data["system"]
            base = report_data["baseline"]
            for key in ("lsd_db", "domain_auc", "eer_percent", "min_dcf"):
                print(f"  {key}: {system[key]:.4f} (baseline {base[key]:.4f})")
    except BwedaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc, ValueError) else 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
