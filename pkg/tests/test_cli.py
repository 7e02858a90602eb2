import json
import subprocess
import sys

import numpy as np
import pytest

from layerkit import pngio
from layerkit.cli import main
from layerkit.datforge import build_corpus, load_corpus
from layerkit.diffusion import load_denoiser
from layerkit.hfa import load_aligner
from layerkit.pipeline import load_stack


@pytest.fixture(scope="module")
def cli_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-corpus")
    build_corpus(count=6, seed=77, root=root, resolution=32)
    return root


@pytest.fixture(scope="module")
def cli_models(tmp_path_factory, cli_corpus):
    """Checkpoints produced through the CLI itself (few steps, contract only)."""
    root = tmp_path_factory.mktemp("cli-models")
    paths = {
        "fg": root / "fg.ckpt", "bg": root / "bg.ckpt",
        "fan": root / "fan.ckpt", "ban": root / "ban.ckpt",
    }
    for branch in ("fg", "bg"):
        rc = main(["train", "fbdd", "--corpus", str(cli_corpus), "--branch", branch,
                   "--steps", "5", "--seed", "3", "--out", str(paths[branch])])
        assert rc == 0
    for role in ("fan", "ban"):
        rc = main(["train", "hfa", "--corpus", str(cli_corpus), "--role", role,
                   "--steps", "4", "--seed", "3", "--out", str(paths[role])])
        assert rc == 0
    return paths


def test_dataset_build_deterministic(tmp_path, capsys):
    args = ["dataset", "build", "--count", "3", "--resolution", "32", "--seed", "5"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    out = capsys.readouterr().out
    assert "3 samples" in out
    assert (tmp_path / "a" / "manifest.json").read_bytes() == \
        (tmp_path / "b" / "manifest.json").read_bytes()
    assert len(load_corpus(tmp_path / "a")) == 3


def test_train_checkpoints_load(cli_models):
    fg = load_denoiser(cli_models["fg"])
    assert fg.branch == "fg" and fg.trained
    assert fg.train_meta["steps"] == 5
    fan = load_aligner(cli_models["fan"])
    assert fan.role == "fan" and fan.trained
    ban = load_aligner(cli_models["ban"])
    assert ban.loss_variant == "ban"


def test_decompose_smooth(tmp_path, cli_corpus, capsys):
    sample = load_corpus(cli_corpus, limit=1)[0]
    comp_path = tmp_path / "comp.png"
    alpha_path = tmp_path / "alpha.png"
    pngio.save_image(comp_path, sample.composite)
    pngio.save_alpha(alpha_path, sample.alpha)
    rc = main(["decompose", "--composite", str(comp_path), "--alpha", str(alpha_path),
               "--method", "smooth", "--out", str(tmp_path / "stack")])
    assert rc == 0
    layers, comp, manifest = load_stack(tmp_path / "stack" / "manifest.json")
    assert manifest.provenance["method"] == "smooth"
    assert len(layers) == 2


def test_decompose_fbdd(tmp_path, cli_corpus, cli_models):
    sample = load_corpus(cli_corpus, limit=2)[1]
    comp_path = tmp_path / "comp.png"
    alpha_path = tmp_path / "alpha.png"
    pngio.save_image(comp_path, sample.composite)
    pngio.save_alpha(alpha_path, sample.alpha)
    rc = main(["decompose", "--composite", str(comp_path), "--alpha", str(alpha_path),
               "--fg-model", str(cli_models["fg"]), "--bg-model", str(cli_models["bg"]),
               "--fan", str(cli_models["fan"]), "--ban", str(cli_models["ban"]),
               "--steps", "4", "--seed", "2", "--out", str(tmp_path / "stack")])
    assert rc == 0
    layers, comp, manifest = load_stack(tmp_path / "stack" / "manifest.json")
    assert np.abs(comp - np.clip(comp, 0, 1)).max() == 0.0


def test_pipeline_run_with_oracle_adapters(tmp_path, cli_corpus, cli_models, capsys):
    wiring = tmp_path / "adapters.json"
    wiring.write_text(json.dumps(
        {"oracle_sample": {"corpus": str(cli_corpus), "id": "00002"}}))
    request = tmp_path / "request.json"
    request.write_text(json.dumps(
        {"prompt": "an object on a background", "foreground_indices": [1], "seed": 4}))
    rc = main(["pipeline", "run", "--request", str(request),
               "--adapters", str(wiring),
               "--fg-model", str(cli_models["fg"]), "--bg-model", str(cli_models["bg"]),
               "--steps", "4", "--out", str(tmp_path / "run")])
    assert rc == 0
    assert "1 foreground layer(s)" in capsys.readouterr().out
    load_stack(tmp_path / "run" / "manifest.json")


def test_evaluate_smooth(tmp_path, cli_corpus, capsys):
    report_path = tmp_path / "report.json"
    csv_path = tmp_path / "report.csv"
    rc = main(["evaluate", "--corpus", str(cli_corpus), "--method", "smooth",
               "--limit", "3", "--out", str(report_path), "--csv", str(csv_path)])
    assert rc == 0
    report = json.loads(report_path.read_text())
    assert set(report["raw"]) == {"fg", "bg"}
    assert len(report["raw"]["bg"]["per_sample"]) == 3
    assert "seam" in report["raw"]["bg"]["mean"]
    # display scaling applied: mad display = raw mad * 1e3
    raw_mad = report["raw"]["fg"]["mean"]["mad"]
    assert report["display"]["fg"]["mad"] == pytest.approx(raw_mad * 1e3)
    assert csv_path.exists() and csv_path.read_text().startswith("group,index")


def test_ablate_ban_loss_tiny(tmp_path, cli_corpus, capsys):
    report_path = tmp_path / "ablation.json"
    rc = main(["ablate", "ban-loss", "--corpus", str(cli_corpus),
               "--train-count", "3", "--eval-count", "3", "--steps", "2",
               "--out", str(report_path)])
    assert rc == 0
    report = json.loads(report_path.read_text())
    assert set(report["variants"]) == {"ban", "mse", "regionwise"}
    assert "ban_vs_mse" in report
    assert "sign test" in capsys.readouterr().out


def test_ablate_rejects_short_corpus(tmp_path, cli_corpus, capsys):
    rc = main(["ablate", "ban-loss", "--corpus", str(cli_corpus),
               "--train-count", "24", "--eval-count", "20",
               "--out", str(tmp_path / "r.json")])
    assert rc == 1
    assert "split needs" in capsys.readouterr().err


def test_cli_error_paths(tmp_path, capsys):
    assert main([]) == 2
    assert main(["dataset"]) == 2
    rc = main(["dataset", "build", "--count", "1"])   # --out missing
    assert rc == 1
    assert "--out is required" in capsys.readouterr().err


def test_config_file_feeds_commands(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"data": {"count": 2, "resolution": 16}}))
    rc = main(["dataset", "build", "--config", str(cfg_path),
               "--out", str(tmp_path / "c")])
    assert rc == 0
    assert len(load_corpus(tmp_path / "c")) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "layerkit.cli", "dataset", "build",
         "--out", str(tmp_path / "c"), "--count", "1", "--resolution", "16"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "c" / "manifest.json").exists()
