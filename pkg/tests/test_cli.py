import csv
import json
import subprocess
import sys

import pytest

TINY_CONFIG = {
    "space": {"genes": [
        {"name": "g0", "values": ["0", "1", "2"]},
        {"name": "g1", "values": ["0", "1", "2"]},
        {"name": "g2", "values": ["0", "1", "2"]},
    ]},
    "evaluator": {"kind": "hashed", "seed": 3},
    "run": {"max_generations": 3, "hc_budget": 6, "seed": 9},
}


def memetic(*args, timeout=120):
    return subprocess.run(
        [sys.executable, "-m", "memetic", *args],
        capture_output=True, text=True, timeout=timeout,
    )


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY_CONFIG))
    return str(path)


class TestSpaceShow:
    def test_default_space_table(self):
        proc = memetic("space", "show")
        assert proc.returncode == 0
        lines = proc.stdout.strip().splitlines()
        assert len(lines) == 11
        assert lines[-1] == "cardinality: 69,984"
        optimizer_rows = [line for line in lines if line.startswith("optimizer")]
        assert len(optimizer_rows) == 1
        assert "sgd, adam, rmsprop" in optimizer_rows[0]

    def test_space_from_config(self, config_file):
        proc = memetic("space", "show", "--config", config_file)
        assert proc.returncode == 0
        lines = proc.stdout.strip().splitlines()
        assert len(lines) == 4
        assert lines[-1] == "cardinality: 27"

    def test_missing_config_is_a_config_error(self, tmp_path):
        proc = memetic("space", "show", "--config", str(tmp_path / "ghost.json"))
        assert proc.returncode == 2
        assert "config file not found" in proc.stderr


class TestRun:
    def test_writes_log_and_result(self, tmp_path, config_file):
        out = tmp_path / "out"
        proc = memetic("run", "--config", config_file, "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert "best fitness" in proc.stdout
        result = json.loads((out / "result.json").read_text())
        assert result["algorithm"] == "hybrid"
        assert result["termination"] == "generations_exhausted"
        lines = (out / "run.jsonl").read_text().strip().splitlines()
        assert len(lines) == result["generations"]
        for line in lines:
            record = json.loads(line)
            assert set(record) == {"generation", "members", "best",
                                   "child_best", "evaluations"}

    @pytest.mark.parametrize("algo", ["ga", "hc"])
    def test_algorithm_selection(self, tmp_path, config_file, algo):
        out = tmp_path / algo
        proc = memetic("run", "--config", config_file, "--algo", algo, "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        result = json.loads((out / "result.json").read_text())
        assert result["algorithm"] == algo

    def test_same_seed_gives_byte_identical_logs(self, tmp_path, config_file):
        outs = [tmp_path / "a", tmp_path / "b"]
        for out in outs:
            proc = memetic("run", "--config", config_file, "--seed", "5",
                           "--out", str(out))
            assert proc.returncode == 0, proc.stderr
        logs = [(out / "run.jsonl").read_bytes() for out in outs]
        assert logs[0] == logs[1]

    def test_seed_override_changes_the_run(self, tmp_path, config_file):
        outs = [tmp_path / "a", tmp_path / "b"]
        for out, seed in zip(outs, ("5", "6")):
            proc = memetic("run", "--config", config_file, "--seed", seed,
                           "--out", str(out))
            assert proc.returncode == 0, proc.stderr
        logs = [(out / "run.jsonl").read_bytes() for out in outs]
        assert logs[0] != logs[1]

    def test_missing_config_exits_2(self, tmp_path):
        proc = memetic("run", "--config", str(tmp_path / "ghost.json"),
                       "--out", str(tmp_path))
        assert proc.returncode == 2
        assert "config error" in proc.stderr

    def test_broken_config_exits_2(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{oops")
        proc = memetic("run", "--config", str(path), "--out", str(tmp_path))
        assert proc.returncode == 2
        assert "config parse error" in proc.stderr

    def test_unknown_evaluator_kind_exits_2(self, tmp_path):
        doc = dict(TINY_CONFIG)
        doc["evaluator"] = {"kind": "banana"}
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        proc = memetic("run", "--config", str(path), "--out", str(tmp_path))
        assert proc.returncode == 2
        assert "evaluator.kind" in proc.stderr

    def test_dead_external_evaluator_exits_3(self, tmp_path):
        doc = dict(TINY_CONFIG)
        doc["evaluator"] = {
            "kind": "external",
            "command": f"{sys.executable} -c \"import sys; sys.exit(0)\"",
            "handshake_timeout": 20,
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        out = tmp_path / "out"
        proc = memetic("run", "--config", str(path), "--out", str(out))
        assert proc.returncode == 3
        assert "evaluator error" in proc.stderr
        result = json.loads((out / "result.json").read_text())
        assert result["termination"] == "evaluator_failure"
        assert result["best"] is None


class TestBench:
    def test_writes_summary_csv(self, tmp_path, config_file):
        out = tmp_path / "bench"
        proc = memetic("bench", "--config", config_file, "--reps", "2",
                       "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        with open(out / "summary.csv", newline="") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["algorithm", "checkpoint", "mean", "stddev",
                           "min", "max", "failures"]
        assert len(rows) == 1 + 3 * (3 + 2)
        for name in ("ga", "hc", "hybrid"):
            assert f"{name}: final mean" in proc.stdout

    def test_seed_base_pins_the_block(self, tmp_path, config_file):
        outs = [tmp_path / "a", tmp_path / "b", tmp_path / "c"]
        bases = ["100", "100", "200"]
        for out, base in zip(outs, bases):
            proc = memetic("bench", "--config", config_file, "--reps", "2",
                           "--seed-base", base, "--out", str(out))
            assert proc.returncode == 0, proc.stderr
        summaries = [(out / "summary.csv").read_bytes() for out in outs]
        assert summaries[0] == summaries[1]
        assert summaries[0] != summaries[2]

    def test_single_rep_exits_2(self, tmp_path, config_file):
        proc = memetic("bench", "--config", config_file, "--reps", "1",
                       "--out", str(tmp_path))
        assert proc.returncode == 2
        assert "repetitions" in proc.stderr


class TestProtoSelftest:
    def test_bundled_battery_passes(self):
        proc = memetic("proto", "selftest")
        assert proc.returncode == 0, proc.stdout + proc.stderr
        lines = proc.stdout.strip().splitlines()
        assert lines[-1] == "7 case(s) passed"
        assert sum(1 for line in lines if line.startswith("ok   ")) == 7

    def test_foreign_command_mode(self, tmp_path):
        space_doc = TINY_CONFIG["space"]
        space_path = tmp_path / "space.json"
        space_path.write_text(json.dumps(space_doc))
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"space": space_doc}))
        command = (f"{sys.executable} -m memetic.echo_evaluator "
                   f"--space {space_path} --seed 7")
        proc = memetic("proto", "selftest", "--cmd", command,
                       "--config", str(config_path))
        assert proc.returncode == 0, proc.stdout + proc.stderr
        assert proc.stdout.strip().splitlines()[-1] == "3 case(s) passed"

    def test_failing_command_exits_3(self):
        command = f"{sys.executable} -c \"import sys; sys.exit(1)\""
        proc = memetic("proto", "selftest", "--cmd", command)
        assert proc.returncode == 3
        assert "FAIL" in proc.stdout


class TestParser:
    def test_no_subcommand_shows_usage(self):
        proc = memetic()
        assert proc.returncode == 2
        assert "usage" in proc.stderr.lower()
