"""Strict config parsing, resolution, and run-id derivation."""
import json

import pytest

from bweda.config import (
    CorpusParams,
    EvalParams,
    ExperimentConfig,
    canonical_json,
    load_config,
    run_id_for,
)
from bweda.errors import ConfigError
from bweda.schemes import ObjectiveKind, SchemeKind, SchemeSpec


def minimal_dict() -> dict:
    return {
        "corpus": {"n_speakers": 3, "utts_per_speaker": 5, "master_seed": 7},
        "scheme": {"kind": "explicit_disjoint", "bwe_model": "cgan"},
        "output_dir": "out",
    }


class TestSections:
    def test_single_speaker_rejected(self):
        with pytest.raises(ConfigError, match="n_speakers"):
            CorpusParams(n_speakers=1, utts_per_speaker=5)

    def test_single_utterance_rejected(self):
        with pytest.raises(ConfigError, match="utts_per_speaker"):
            CorpusParams(n_speakers=2, utts_per_speaker=1)

    def test_duration_positive(self):
        with pytest.raises(ConfigError, match="duration"):
            CorpusParams(n_speakers=2, utts_per_speaker=2, duration_s=0.0)

    def test_eval_params_ranges(self):
        with pytest.raises(ConfigError, match="holdout_fraction"):
            EvalParams(holdout_fraction=1.0)
        with pytest.raises(ConfigError, match="p_target"):
            EvalParams(p_target=0.0)


class TestExperimentConfig:
    def test_minimal_fills_defaults(self):
        config = ExperimentConfig.from_dict(minimal_dict())
        assert config.corpus.duration_s == 1.0
        assert config.generator.n_blocks == 5
        assert config.discriminator.periods == (2, 3, 5)
        assert config.eval.holdout_fraction == 0.2
        assert set(config.optimizer) == {"da", "bwe"}
        assert config.optimizer["bwe"].lr_g_init == 4e-4
        assert config.optimizer["da"].lr_g_init == 2e-4

    def test_unknown_top_level_key(self):
        data = minimal_dict()
        data["corpsu"] = {}
        with pytest.raises(ConfigError, match="corpsu"):
            ExperimentConfig.from_dict(data)

    def test_unknown_section_key(self):
        data = minimal_dict()
        data["corpus"]["n_speaker"] = 4
        with pytest.raises(ConfigError, match="n_speaker"):
            ExperimentConfig.from_dict(data)

    def test_unknown_generator_key(self):
        data = minimal_dict()
        data["generator"] = {"blocks": 2}
        with pytest.raises(ConfigError, match="blocks"):
            ExperimentConfig.from_dict(data)

    def test_partial_generator_override(self):
        data = minimal_dict()
        data["generator"] = {"n_blocks": 2, "channels": 4}
        config = ExperimentConfig.from_dict(data)
        assert config.generator.n_blocks == 2
        assert config.generator.channels == 4
        assert config.generator.kernel_size == 9

    def test_partial_optimizer_override(self):
        data = minimal_dict()
        data["optimizer"] = {"bwe": {"total_steps": 12}}
        config = ExperimentConfig.from_dict(data)
        assert config.optimizer["bwe"].total_steps == 12
        assert config.optimizer["bwe"].batch_size == 16

    def test_optimizer_unknown_task(self):
        data = minimal_dict()
        data["optimizer"] = {"stage1": {"total_steps": 5}}
        with pytest.raises(ConfigError, match="unknown tasks"):
            ExperimentConfig.from_dict(data)

    def test_missing_required_section(self):
        data = minimal_dict()
        del data["scheme"]
        with pytest.raises(ConfigError, match="scheme"):
            ExperimentConfig.from_dict(data)

    def test_bad_scheme_reported_as_config_error(self):
        data = minimal_dict()
        data["scheme"] = {"kind": "explicit_disjoint"}
        with pytest.raises(ConfigError, match="bwe_model"):
            ExperimentConfig.from_dict(data)

    def test_round_trip(self):
        config = ExperimentConfig.from_dict(minimal_dict())
        assert ExperimentConfig.from_dict(config.to_dict()) == config

    def test_resolved_dict_pins_all_tasks(self):
        config = ExperimentConfig.from_dict(minimal_dict())
        data = config.to_dict()
        assert set(data["optimizer"]) == {"da", "bwe"}
        assert data["optimizer"]["da"]["batch_size"] == 8


class TestRunId:
    def test_shape_and_determinism(self):
        config = ExperimentConfig.from_dict(minimal_dict())
        rid = run_id_for(config, 3)
        assert len(rid) == 12
        assert all(c in "0123456789abcdef" for c in rid)
        assert rid == run_id_for(config, 3)

    def test_seed_and_config_sensitivity(self):
        config = ExperimentConfig.from_dict(minimal_dict())
        data = minimal_dict()
        data["corpus"]["master_seed"] = 8
        other = ExperimentConfig.from_dict(data)
        assert run_id_for(config, 3) != run_id_for(config, 4)
        assert run_id_for(config, 3) != run_id_for(other, 3)

    def test_canonical_json_is_key_order_invariant(self):
        assert canonical_json({"b": 1, "a": [1, 2]}) == canonical_json({"a": [1, 2], "b": 1})


class TestLoadConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="no config file"):
            load_config(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(path)

    def test_loads_valid_file(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text(json.dumps(minimal_dict()))
        config = load_config(path)
        assert config.scheme == SchemeSpec(
            kind=SchemeKind.EXPLICIT_DISJOINT, bwe_model=ObjectiveKind.CGAN
        )
