"""End-to-end CLI runs: every subcommand, reproducibility, error paths."""

import json
import os

import pytest

from gatedfusion.cli import main


SPEC = {"n_samples": 18, "n_classes": 2, "d_a": 4, "d_t": 4,
        "len_range_a": [5, 9], "len_range_t": [4, 8], "sparsity": 0.3, "seed": 3}
CONFIG = {
    "model": {"d_model": 8, "n_heads": 2, "n_layers": 1, "ff_mult": 2,
              "dropout_rate": 0.0, "seed": 1},
    "train": {"learning_rate": 1e-3, "epochs": 2, "batch_size": 8, "seed": 2},
}


def write_json(path, payload):
    with open(path, "w") as f:
        json.dump(payload, f)
    return str(path)


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = write_json(root / "spec.json", SPEC)
    out = str(root / "corpus")
    assert main(["generate", "--spec", spec, "--out", out]) == 0
    return out


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, corpus_dir):
    root = tmp_path_factory.mktemp("train")
    cfg = write_json(root / "cfg.json", CONFIG)
    out = str(root / "run")
    assert main(["train", "--corpus", corpus_dir, "--config", cfg, "--out", out]) == 0
    return out


class TestGenerate:
    def test_outputs(self, corpus_dir):
        for name in ("manifest.json", "features.bin", "effective_config.json"):
            assert os.path.exists(os.path.join(corpus_dir, name))
        with open(os.path.join(corpus_dir, "effective_config.json")) as f:
            assert json.load(f)["synth"]["n_samples"] == 18

    def test_seed_flag_overrides_spec(self, tmp_path):
        spec = write_json(tmp_path / "spec.json", SPEC)
        main(["generate", "--spec", spec, "--out", str(tmp_path / "c"), "--seed", "99"])
        with open(tmp_path / "c" / "effective_config.json") as f:
            assert json.load(f)["synth"]["seed"] == 99

    def test_byte_identical_reruns(self, tmp_path):
        spec = write_json(tmp_path / "spec.json", SPEC)
        for name in ("c1", "c2"):
            main(["generate", "--spec", spec, "--out", str(tmp_path / name)])
        for fname in ("manifest.json", "features.bin", "effective_config.json"):
            assert (tmp_path / "c1" / fname).read_bytes() == (tmp_path / "c2" / fname).read_bytes()

    def test_unknown_spec_key_rejected(self, tmp_path, capsys):
        spec = write_json(tmp_path / "spec.json", {**SPEC, "bogus": 1})
        assert main(["generate", "--spec", spec, "--out", str(tmp_path / "c")]) == 1
        assert "bogus" in capsys.readouterr().err

    def test_oracle_flag_prints(self, tmp_path, capsys):
        spec = write_json(tmp_path / "spec.json", SPEC)
        main(["generate", "--spec", spec, "--out", str(tmp_path / "c"), "--oracle", "30"])
        assert "bayes oracle accuracy" in capsys.readouterr().out


class TestTrain:
    def test_outputs(self, trained_dir):
        for name in ("checkpoint.gfck", "history.csv", "effective_config.json"):
            assert os.path.exists(os.path.join(trained_dir, name))
        with open(os.path.join(trained_dir, "history.csv")) as f:
            lines = f.read().strip().splitlines()
        assert lines[0] == "epoch,train_loss" and len(lines) == 3

    def test_byte_identical_reruns(self, tmp_path, corpus_dir):
        cfg = write_json(tmp_path / "cfg.json", CONFIG)
        for name in ("r1", "r2"):
            assert main(["train", "--corpus", corpus_dir, "--config", cfg,
                         "--out", str(tmp_path / name)]) == 0
        for fname in ("checkpoint.gfck", "history.csv", "effective_config.json"):
            assert (tmp_path / "r1" / fname).read_bytes() == (tmp_path / "r2" / fname).read_bytes()

    def test_resume_matches_unbroken(self, tmp_path, corpus_dir):
        long_cfg = write_json(tmp_path / "long.json",
                              {**CONFIG, "train": {**CONFIG["train"], "epochs": 4}})
        short_cfg = write_json(tmp_path / "short.json", CONFIG)
        main(["train", "--corpus", corpus_dir, "--config", long_cfg,
              "--out", str(tmp_path / "full")])
        main(["train", "--corpus", corpus_dir, "--config", short_cfg,
              "--out", str(tmp_path / "half")])
        assert main(["train", "--corpus", corpus_dir, "--config", long_cfg,
                     "--resume", str(tmp_path / "half" / "checkpoint.gfck"),
                     "--out", str(tmp_path / "resumed")]) == 0
        full = (tmp_path / "full" / "checkpoint.gfck").read_bytes()
        resumed = (tmp_path / "resumed" / "checkpoint.gfck").read_bytes()
        assert full == resumed

    def test_resume_config_mismatch_rejected(self, tmp_path, corpus_dir, capsys):
        cfg = write_json(tmp_path / "cfg.json", CONFIG)
        main(["train", "--corpus", corpus_dir, "--config", cfg, "--out", str(tmp_path / "a")])
        other = write_json(tmp_path / "other.json",
                           {**CONFIG, "model": {**CONFIG["model"], "d_model": 16, "n_heads": 4}})
        assert main(["train", "--corpus", corpus_dir, "--config", other,
                     "--resume", str(tmp_path / "a" / "checkpoint.gfck"),
                     "--out", str(tmp_path / "b")]) == 1
        assert "does not match" in capsys.readouterr().err

    def test_gating_mode_flag(self, tmp_path, corpus_dir):
        cfg = write_json(tmp_path / "cfg.json", CONFIG)
        main(["train", "--corpus", corpus_dir, "--config", cfg,
              "--gating-mode", "none", "--out", str(tmp_path / "n")])
        with open(tmp_path / "n" / "effective_config.json") as f:
            assert json.load(f)["model"]["gating_mode"] == "none"

    def test_missing_corpus_is_typed_error(self, tmp_path, capsys):
        assert main(["train", "--corpus", str(tmp_path / "nope"),
                     "--out", str(tmp_path / "o")]) == 1
        assert capsys.readouterr().err.startswith("error:")


class TestEvaluate:
    def test_checkpoint_mode(self, tmp_path, corpus_dir, trained_dir, capsys):
        out = str(tmp_path / "eval")
        assert main(["evaluate", "--corpus", corpus_dir,
                     "--checkpoint", os.path.join(trained_dir, "checkpoint.gfck"),
                     "--out", out]) == 0
        assert "accuracy" in capsys.readouterr().out
        with open(os.path.join(out, "report.json")) as f:
            report = json.load(f)
        assert set(report) >= {"accuracy", "macro_f1", "confusion", "per_class"}
        assert os.path.exists(os.path.join(out, "report.csv"))

    def test_kfold_mode(self, tmp_path, corpus_dir, capsys):
        cfg = write_json(tmp_path / "cfg.json", CONFIG)
        out = str(tmp_path / "kf")
        assert main(["evaluate", "--corpus", corpus_dir, "--kfold", "2",
                     "--config", cfg, "--out", out]) == 0
        assert "2-fold accuracy" in capsys.readouterr().out
        with open(os.path.join(out, "report.json")) as f:
            assert len(json.load(f)["folds"]) == 2
        with open(os.path.join(out, "folds.csv")) as f:
            assert len(f.read().strip().splitlines()) == 3

    def test_kfold_byte_identical_reruns(self, tmp_path, corpus_dir):
        cfg = write_json(tmp_path / "cfg.json", CONFIG)
        for name in ("k1", "k2"):
            main(["evaluate", "--corpus", corpus_dir, "--kfold", "2",
                  "--config", cfg, "--out", str(tmp_path / name)])
        for fname in ("report.json", "folds.csv", "effective_config.json"):
            assert (tmp_path / "k1" / fname).read_bytes() == (tmp_path / "k2" / fname).read_bytes()

    def test_needs_checkpoint_or_kfold(self, tmp_path, corpus_dir, capsys):
        assert main(["evaluate", "--corpus", corpus_dir, "--out", str(tmp_path / "e")]) == 1
        assert "checkpoint" in capsys.readouterr().err


class TestAnalyzeGating:
    def test_outputs(self, tmp_path, corpus_dir, trained_dir, capsys):
        out = str(tmp_path / "gates")
        assert main(["analyze-gating", "--corpus", corpus_dir,
                     "--checkpoint", os.path.join(trained_dir, "checkpoint.gfck"),
                     "--out", out, "--samples", "2"]) == 0
        captured = capsys.readouterr().out
        assert "gate-energy r" in captured and "AUROC" in captured
        assert os.path.exists(os.path.join(out, "gate_energy_correlation.csv"))
        assert os.path.exists(os.path.join(out, "gate_alignment.json"))
        svgs = [f for f in os.listdir(out) if f.endswith(".svg")]
        assert len(svgs) == 2

    def test_byte_identical_reruns(self, tmp_path, corpus_dir, trained_dir):
        ckpt = os.path.join(trained_dir, "checkpoint.gfck")
        for name in ("g1", "g2"):
            main(["analyze-gating", "--corpus", corpus_dir, "--checkpoint", ckpt,
                  "--out", str(tmp_path / name), "--samples", "2"])
        for fname in sorted(os.listdir(tmp_path / "g1")):
            assert (tmp_path / "g1" / fname).read_bytes() == (tmp_path / "g2" / fname).read_bytes()


class TestGradcheck:
    def test_single_mode_passes(self, capsys):
        assert main(["gradcheck", "--mode", "none"]) == 0
        out = capsys.readouterr().out
        assert "gradcheck PASSED" in out and "worst relative error" in out

    def test_corrupted_gradient_fails(self, capsys):
        assert main(["gradcheck", "--mode", "none", "--corrupt-gradient", "proj_a.w"]) == 1
        assert "gradcheck FAILED" in capsys.readouterr().out

    def test_unknown_parameter_name(self, capsys):
        assert main(["gradcheck", "--mode", "none", "--corrupt-gradient", "nope"]) == 1
        assert "nope" in capsys.readouterr().err
