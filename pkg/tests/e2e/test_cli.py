"""
End-to-end test for the command line.

Covers the full flow on a small generated dataset:
1. Generate a synthetic dataset
2. Curate its annotations
3. Run the pipeline with a config file plus flag overrides
4. Re-score the detections CSV offline
5. Benchmarks and the replication sweep

Run:
    python -m pytest tests/e2e/test_cli.py -v -s
"""

import pytest
import subprocess
import sys
from pathlib import Path

import orjson
import pandas as pd

# Add project root to path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

from cli.main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, main
from src.dataio.annotations import parse_annotations
from tests.assets.detection_server import DetectionServer

QUIET = ["--log-level", "WARNING", "--log-format", "text"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli") / "data"
    code = main(QUIET + [
        "gen-synth", "--out", str(root), "--frames", "60", "--width", "320", "--height", "240",
        "--objects", "3", "--min-size", "20", "--max-size", "30", "--static", "1", "--seed", "7",
    ])
    assert code == EXIT_OK
    return root


@pytest.fixture
def config_file(tmp_path, dataset):
    path = tmp_path / "run.cfg"
    path.write_text(
        f"data_root = {dataset}\n"
        "dataset.min_frames = 1\n"
        "dataset.warmup = 0\n"
        "dataset.skip = 1\n"
        "extract.source = gt\n"
    )
    return path


class TestCli:
    """Subcommands against a generated dataset."""

    def test_gen_synth_layout(self, dataset):
        assert sorted(p.name for p in dataset.iterdir()) == ["synth"]
        assert len(list((dataset / "synth" / "frames").glob("*.png"))) == 60

    def test_curate(self, dataset, tmp_path, capsys):
        out = tmp_path / "curated.txt"
        code = main(QUIET + ["curate", str(dataset / "synth" / "annotations.txt"), "--out", str(out)])
        assert code == EXIT_OK
        assert "180/240 annotations kept" in capsys.readouterr().out
        assert {a.object_id for a in parse_annotations(out, stream_id="synth")} == {1, 2, 3}

    def test_run_then_eval(self, config_file, tmp_path, dataset, capsys):
        out = tmp_path / "run"
        code = main(QUIET + [
            "run", "--config", str(config_file), "--replicate", "4", "--policy", "elastic:4",
            "--output-dir", str(out),
        ])
        assert code == EXIT_OK
        table = capsys.readouterr().out
        assert "reduction 4.000" in table

        report = orjson.loads((out / "report.json").read_bytes())
        assert report["inference_count"] == 60
        assert report["mean_ap"] == pytest.approx(1.0)
        timings = pd.read_csv(out / "timings.csv")
        assert timings.columns.tolist() == ["stage", "stream_id", "frame_index", "composition_id", "ms"]

        offline = tmp_path / "offline.json"
        code = main(QUIET + [
            "eval", "--detections", str(out / "detections.csv"),
            "--annotations", str(dataset / "synth" / "annotations.txt"),
            "--replicate", "4", "--report", str(offline),
        ])
        assert code == EXIT_OK
        rescored = orjson.loads(offline.read_bytes())
        assert rescored["tp"] == report["tp"]
        assert rescored["mean_ap"] == pytest.approx(report["mean_ap"])

    def test_set_overrides_any_key(self, config_file, capsys):
        code = main(QUIET + [
            "run", "--config", str(config_file), "--baseline", "--set", "detector.oracle.drop_rate=1.0",
        ])
        assert code == EXIT_OK
        assert "inferences 60" in capsys.readouterr().out

    def test_remote_detector(self, config_file, capsys):
        with DetectionServer() as server:
            code = main(QUIET + [
                "run", "--config", str(config_file), "--detector", "remote", "--endpoint", server.endpoint,
                "--max-frames", "20",
            ])
        assert code == EXIT_OK
        assert len(server.request_ids) > 0

    def test_sweep(self, config_file, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(QUIET + ["sweep", "--config", str(config_file), "--counts", "1,2", "--out", str(out)])
        assert code == EXIT_OK
        table = pd.read_csv(out)
        assert table["reduction_factor"].tolist() == [1.0, 2.0]

    def test_bench_compose(self, tmp_path):
        out = tmp_path / "compose.csv"
        code = main(QUIET + ["bench-compose", "--counts", "1,8", "--repeats", "2", "--out", str(out)])
        assert code == EXIT_OK
        assert pd.read_csv(out)["objects"].tolist() == [1, 8]

    def test_bench_bgs(self, tmp_path):
        out = tmp_path / "bgs.csv"
        code = main(QUIET + [
            "bench-bgs", "--width", "160", "--height", "120", "--frames", "6", "--methods", "mog2", "hybrid",
            "--out", str(out),
        ])
        assert code == EXIT_OK
        assert pd.read_csv(out)["method"].tolist() == ["mog2", "hybrid"]


class TestCliErrors:
    """Exit codes."""

    def test_missing_data_root(self, capsys):
        assert main(QUIET + ["run"]) == EXIT_CONFIG
        assert "data_root is required" in capsys.readouterr().err

    def test_unknown_config_key(self, config_file):
        assert main(QUIET + ["run", "--config", str(config_file), "--set", "bgs.nope=1"]) == EXIT_CONFIG

    def test_malformed_set(self, config_file):
        assert main(QUIET + ["run", "--config", str(config_file), "--set", "replicate"]) == EXIT_CONFIG

    def test_invalid_policy(self, config_file):
        assert main(QUIET + ["run", "--config", str(config_file), "--policy", "grid:3"]) == EXIT_CONFIG

    def test_no_sequence_qualifies(self, config_file):
        assert main(QUIET + ["run", "--config", str(config_file), "--min-frames", "1000"]) == EXIT_FAILURE

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["frobnicate"])
        assert exc_info.value.code == 2

    def test_module_entry_point(self):
        completed = subprocess.run(
            [sys.executable, "-m", "cli", "--help"], cwd=project_root, capture_output=True, text=True,
        )
        assert completed.returncode == 0
        assert "bench-compose" in completed.stdout
