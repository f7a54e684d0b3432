from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from main import build_parser, main
from src.config.settings import DATA_ROOT_ENV, load_config
from src.parsers.image_loader import load_image, load_mask

TINY_FLAGS = [
    "--image-size", "32",
    "--k-fg", "2",
    "--widths", "4", "8", "16",
    "--max-iters", "2",
    "--val-interval", "1",
    "--checkpoint-interval", "1",
]


@pytest.fixture(autouse=True)
def isolated_env(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(DATA_ROOT_ENV, raising=False)
    monkeypatch.chdir(tmp_path)


def _synth(out: Path, seed: int = 7) -> int:
    return main(["synth", "--out", str(out), "--count", "6", "--size", "32", "--chambers", "2", "--seed", str(seed)])


def _tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _train(data: Path, out: Path, *extra: str) -> int:
    return main(["train", "--data", str(data), "--labeled-ratio", "0.5", "--out", str(out), *TINY_FLAGS, *extra])


def test_synth_is_reproducible(tmp_path: Path):
    assert _synth(tmp_path / "a") == 0
    assert _synth(tmp_path / "b") == 0
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")
    assert len(list((tmp_path / "a" / "images").iterdir())) == 6


def test_train_eval_predict(tmp_path: Path):
    data = tmp_path / "data"
    run = tmp_path / "run"
    assert _synth(data) == 0
    assert _train(data, run, "--seed", "5") == 0

    for name in ("config.yaml", "split.json", "train_log.csv", "metrics.csv", "metrics_cases.csv"):
        assert (run / name).is_file(), name
    assert (run / "checkpoints" / "latest.pt").is_file()
    assert load_config(run / "config.yaml").seed == 5

    with (run / "metrics.csv").open(newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["class", "dice", "jaccard", "hd95", "asd"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "mean"]

    checkpoint = run / "checkpoints" / "latest.pt"
    report_dir = tmp_path / "eval"
    assert main(["eval", "--checkpoint", str(checkpoint), "--split", "all", "--out", str(report_dir)]) == 0
    assert (report_dir / "metrics.csv").is_file()

    image = sorted((data / "images").iterdir())[0]
    out_mask = tmp_path / "pred" / "mask.png"
    overlay = tmp_path / "pred" / "overlay.png"
    code = main(["predict", "--checkpoint", str(checkpoint), str(image), str(out_mask), "--overlay", str(overlay)])
    assert code == 0
    mask = load_mask(out_mask, 32, 2)
    assert mask.shape == (32, 32)
    assert set(np.unique(mask).tolist()) <= {0, 1, 2}
    assert load_image(overlay, 32, channels=3).shape == (3, 32, 32)


def test_zero_weights_reduce_to_mixed_supervision(tmp_path: Path):
    data = tmp_path / "data"
    run = tmp_path / "run"
    assert _synth(data) == 0
    assert _train(data, run, "--alpha", "0", "--beta", "0") == 0

    with (run / "train_log.csv").open(newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2
    for row in rows:
        assert float(row["l_all"]) == (float(row["l_a"]) + float(row["l_b"])) / 2


def test_resume_appends_to_the_log(tmp_path: Path):
    data = tmp_path / "data"
    run = tmp_path / "run"
    assert _synth(data) == 0
    assert _train(data, run) == 0
    checkpoint = run / "checkpoints" / "latest.pt"
    assert main(["train", "--data", str(data), "--labeled-ratio", "0.5", "--out", str(run), "--resume", str(checkpoint)]) == 0
    assert len((run / "train_log.csv").read_text().splitlines()) == 3


def test_resume_keeps_the_stored_split(tmp_path: Path):
    data = tmp_path / "data"
    run = tmp_path / "run"
    assert _synth(data) == 0
    assert _train(data, run) == 0
    split = (run / "split.json").read_bytes()

    # No --data and the default labeled ratio: the split comes from the run directory
    checkpoint = run / "checkpoints" / "latest.pt"
    assert main(["train", "--out", str(run), "--resume", str(checkpoint)]) == 0
    assert (run / "split.json").read_bytes() == split


def test_negated_flags_override_the_config_file(tmp_path: Path):
    data = tmp_path / "data"
    run = tmp_path / "run"
    config = tmp_path / "config.yaml"
    _ = config.write_text("disable_ers: true\nfixed_n: 2\n", encoding="utf-8")
    assert _synth(data) == 0
    assert _train(data, run, "--config", str(config), "--no-disable-ers", "--fixed-n", "none") == 0

    cfg = load_config(run / "config.yaml")
    assert not cfg.disable_ers
    assert cfg.fixed_n is None


@pytest.mark.parametrize(
    "flags",
    [
        ["--disable-mms", "--fixed-n", "2"],
        ["--ema-lambda", "1.5"],
        ["--disable-ers", "--disable-s1"],
    ],
)
def test_invalid_configs_exit_with_usage_code(tmp_path: Path, flags: list[str]):
    data = tmp_path / "data"
    assert _synth(data) == 0
    assert _train(data, tmp_path / "run", *flags) == 1


def test_missing_data_root(tmp_path: Path):
    assert main(["train", "--out", str(tmp_path / "run"), *TINY_FLAGS]) == 1
    assert _train(tmp_path / "nowhere", tmp_path / "run") == 2


def test_data_root_from_environment(tmp_path: Path, monkeypatch: pytest.MonkeyPatch):
    data = tmp_path / "data"
    assert _synth(data) == 0
    monkeypatch.setenv(DATA_ROOT_ENV, str(data))
    assert main(["train", "--labeled-ratio", "0.5", "--out", str(tmp_path / "run"), *TINY_FLAGS]) == 0


def test_missing_checkpoint_exits_with_data_code(tmp_path: Path):
    assert main(["eval", "--checkpoint", str(tmp_path / "none.pt")]) == 2
    assert main(["predict", "--checkpoint", str(tmp_path / "none.pt"), "in.png", "out.png"]) == 2


def test_parser_errors_exit_with_usage_code():
    with pytest.raises(SystemExit) as info:
        _ = build_parser().parse_args(["train", "--no-such-flag"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        _ = main([])
    assert info.value.code == 1
