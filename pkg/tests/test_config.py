from pathlib import Path

import pytest

from simdistill import errors
from simdistill.config import load_config, parse_config

REPO_ROOT = Path(__file__).resolve().parents[1]


class TestDefaults:
    def test_empty_document(self):
        cfg = parse_config({})
        assert cfg.synth.classes == 200
        assert cfg.synth.items_per_class == 12
        assert cfg.synth.noise_sigma == 0.4
        assert cfg.synth.expert_noise_sigma == 0.15
        assert cfg.synth.anisotropy_log_range == 5.0
        assert cfg.whitening.n_c is None
        assert cfg.whitening.enabled is True
        assert cfg.train.strategy.variant == "mean"
        assert cfg.train.tau_s == 0.05
        assert cfg.train.steps == 500
        assert cfg.train.loss_kind == "kl"
        assert cfg.eval.ks == (10,)
        assert cfg.eval.holdout_per_class == 2
        assert cfg.teacher_subset is None

    def test_n_c_falls_back_to_teacher_dim(self):
        cfg = parse_config({"synth": {"teacher_dim": 48}})
        assert cfg.n_c == 48

    def test_explicit_n_c_wins(self):
        cfg = parse_config({"whitening": {"n_c": 16}})
        assert cfg.n_c == 16


class TestOverrides:
    def test_partial_section(self):
        cfg = parse_config({"train": {"steps": 9, "lr0": 0.5}})
        assert cfg.train.steps == 9
        assert cfg.train.lr0 == 0.5
        assert cfg.train.tau_s == 0.05

    def test_teacher_subset(self):
        cfg = parse_config({"train": {"teachers": [2, 0]}})
        assert cfg.teacher_subset == (2, 0)

    def test_empty_teacher_subset_rejected(self):
        with pytest.raises(errors.BadConfig):
            parse_config({"train": {"teachers": []}})

    def test_loss_name_reaches_train_config(self):
        cfg = parse_config({"train": {"loss": "ed", "n_s": 64}})
        assert cfg.train.loss_kind == "ed"

    def test_reverse_kl_flag(self):
        cfg = parse_config({"train": {"reverse_kl": True}})
        assert cfg.train.reverse_kl is True

    def test_random_fusion_needs_seed(self):
        with pytest.raises(errors.BadConfig):
            parse_config({"fusion": {"strategy": "rand"}})
        cfg = parse_config({"fusion": {"strategy": "rand", "seed": 3}})
        assert cfg.train.strategy.variant == "rand"
        assert cfg.train.strategy.seed == 3

    def test_per_batch_rand(self):
        cfg = parse_config({"fusion": {"strategy": "max-rand", "seed": 1, "per_batch_rand": True}})
        assert cfg.train.strategy.per_batch is True

    def test_whitening_disabled(self):
        cfg = parse_config({"whitening": {"enabled": False}})
        assert cfg.whitening.enabled is False


class TestRejection:
    def test_unknown_section(self):
        with pytest.raises(errors.BadConfigKey) as exc:
            parse_config({"synht": {}})
        assert exc.value.key == "synht"

    def test_unknown_nested_key_names_section(self):
        with pytest.raises(errors.BadConfigKey) as exc:
            parse_config({"train": {"lr": 0.1}})
        assert exc.value.key == "train.lr"

    def test_non_object_root(self):
        with pytest.raises(errors.BadConfig):
            parse_config([1, 2])

    def test_non_object_section(self):
        with pytest.raises(errors.BadConfig):
            parse_config({"train": 5})

    def test_ks_must_be_positive(self):
        with pytest.raises(errors.BadConfig):
            parse_config({"eval": {"ks": [10, 0]}})

    def test_holdout_bounds(self):
        with pytest.raises(errors.BadConfig):
            parse_config({"eval": {"holdout_per_class": 12}})
        with pytest.raises(errors.BadConfig):
            parse_config({"eval": {"holdout_per_class": -1}})
        cfg = parse_config({"eval": {"holdout_per_class": 0}})
        assert cfg.eval.holdout_per_class == 0

    def test_synth_validation_propagates(self):
        with pytest.raises(errors.BadConfig):
            parse_config({"synth": {"expert_noise_sigma": 0.4}})


class TestLoadConfig:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"train": {"steps": 3}}')
        assert load_config(p).train.steps == 3

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{not json")
        with pytest.raises(errors.BadConfig, match="valid JSON"):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_config(tmp_path / "absent.json")

    def test_reference_config_parses(self):
        cfg = load_config(REPO_ROOT / "configs" / "reference.json")
        assert cfg.synth.classes == 200
        assert cfg.train.strategy.variant == "max-min"
        assert cfg.train.tau_s == 0.3
        assert cfg.n_c == 64
