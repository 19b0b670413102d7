"""Tests for export.py and replay.py - output layout and dump replay."""

import json
from pathlib import Path

import pytest

from llnsim.config import config_from_dict
from llnsim.errors import ConfigError
from llnsim.export import (
    AGGREGATE_CSV,
    COMPARISON_CSV,
    MANIFEST,
    NODES_CSV,
    write_comparison,
    write_run,
    write_sweep,
)
from llnsim.mobility.trace_io import parse_traces
from llnsim.replay import replay_dir, split_sections
from llnsim.report import NODE_COLUMNS
from llnsim.scenario import run_arms, run_scenario, run_sweep

LINE_CONFIG = {
    "n_nodes": 3,
    "duration": 180.0,
    "repetitions": 2,
    "data_start": 30.0,
    "data_period": 20.0,
    "positions": [[0, 0], [80, 0], [160, 0]],
    "radio": {"udgm": {"tx_range": 100.0, "interference_range": 200.0}},
}

MOBILE_CONFIG = {
    "n_nodes": 3,
    "duration": 60.0,
    "repetitions": 2,
    "data_start": 10.0,
    "mobility": {"model": "rw", "params": {"v_min": 0.5, "v_max": 2.0}},
}


def _all_logs(data: dict) -> dict:
    return dict(data, logs={"events": True, "radio": True, "control": True})


class TestWriteRun:
    """Tests for the run directory layout."""

    def test_files_and_manifest(self, tmp_path: Path) -> None:
        """Test CSVs and the manifest are written."""
        cfg = config_from_dict(LINE_CONFIG)
        out = write_run(run_scenario(cfg, threads=0), tmp_path / "run")
        nodes = (out / NODES_CSV).read_text().splitlines()
        assert nodes[0] == ",".join(NODE_COLUMNS)
        assert len(nodes) == 1 + 2 * 3
        assert (out / AGGREGATE_CSV).read_text().startswith("density,scope,metric,mean,sd,reps\n")
        manifest = json.loads((out / MANIFEST).read_text())
        assert manifest["manifest_version"] == 1
        assert manifest["density"] == 3
        assert [r["rep"] for r in manifest["repetitions"]] == [0, 1]
        assert config_from_dict(manifest) == cfg

    def test_same_seed_same_nodes_csv(self, tmp_path: Path) -> None:
        """Test two exports of the same scenario are byte-identical."""
        cfg = config_from_dict(MOBILE_CONFIG)
        first = write_run(run_scenario(cfg, threads=0), tmp_path / "a")
        second = write_run(run_scenario(cfg, threads=0), tmp_path / "b")
        assert (first / NODES_CSV).read_bytes() == (second / NODES_CSV).read_bytes()

    def test_no_dumps_unless_asked(self, tmp_path: Path) -> None:
        """Test dumps only appear when their flag is set."""
        cfg = config_from_dict(dict(LINE_CONFIG, repetitions=1, logs={"control": True}))
        out = write_run(run_scenario(cfg, threads=0), tmp_path)
        assert (out / "control.log").is_file()
        assert not (out / "events.log").exists()
        assert not (out / "radio.log").exists()

    def test_mobile_traces_per_repetition(self, tmp_path: Path) -> None:
        """Test traces of rep 0 sit under traces/ and later reps in rep_<r>/."""
        cfg = config_from_dict(MOBILE_CONFIG)
        results = run_scenario(cfg, threads=0)
        out = write_run(results, tmp_path)
        assert (out / "traces" / "node_0.movements").is_file()
        assert (out / "traces" / "rep_1" / "all.movements").is_file()
        traces = parse_traces(out / "traces" / "all.movements")
        assert len(traces) == 3
        assert traces[1].waypoints == results.results[0].traces[1].waypoints

    def test_sweep_layout(self, tmp_path: Path) -> None:
        """Test a sweep writes one directory per density plus a combined aggregate."""
        cfg = config_from_dict({"duration": 30.0, "repetitions": 1, "data_start": 5.0})
        out = write_sweep(run_sweep(cfg, [3, 4], threads=0), tmp_path)
        assert (out / "n3" / NODES_CSV).is_file()
        assert (out / "n4" / MANIFEST).is_file()
        densities = {line.split(",")[0] for line in (out / AGGREGATE_CSV).read_text().splitlines()[1:]}
        assert densities == {"3", "4"}

    def test_comparison_layout(self, tmp_path: Path) -> None:
        """Test the comparison writes both arms and comparison.csv."""
        cfg = config_from_dict(dict(MOBILE_CONFIG, repetitions=1))
        arms = run_arms(cfg, [3], threads=0)
        out = write_comparison(arms.comparison, arms.static, arms.mobile, tmp_path)
        assert (out / "static" / "n3" / NODES_CSV).is_file()
        assert (out / "mobile" / "n3" / "traces" / "all.movements").is_file()
        assert not (out / "static" / "n3" / "traces").exists()
        header = (out / COMPARISON_CSV).read_text().splitlines()[0]
        assert header == "density,metric,static,mobile,delta,delta_pct"


class TestReplay:
    """Tests for rebuilding metrics from dumps."""

    def test_static_run_replays_exactly(self, tmp_path: Path) -> None:
        """Test nodes.csv is reproduced from the three dumps."""
        cfg = config_from_dict(_all_logs(LINE_CONFIG))
        write_run(run_scenario(cfg, threads=0), tmp_path)
        outcome = replay_dir(tmp_path)
        assert outcome.matches, list(outcome.differences())

    def test_lpl_mobile_run_replays_exactly(self, tmp_path: Path) -> None:
        """Test replay also holds with duty cycling and mobility."""
        cfg = config_from_dict(_all_logs(MOBILE_CONFIG))
        write_run(run_scenario(cfg, threads=0), tmp_path)
        assert replay_dir(tmp_path).matches

    def test_tampered_csv_detected(self, tmp_path: Path) -> None:
        """Test an edited nodes.csv no longer matches."""
        cfg = config_from_dict(_all_logs(dict(LINE_CONFIG, repetitions=1)))
        write_run(run_scenario(cfg, threads=0), tmp_path)
        path = tmp_path / NODES_CSV
        lines = path.read_text().splitlines()
        lines[1] = lines[1].replace("sink", "sender")
        path.write_text("\n".join(lines) + "\n")
        outcome = replay_dir(tmp_path)
        assert not outcome.matches
        assert len(list(outcome.differences())) == 1

    def test_missing_dump(self, tmp_path: Path) -> None:
        """Test replay needs every dump."""
        cfg = config_from_dict(dict(LINE_CONFIG, repetitions=1, logs={"control": True}))
        write_run(run_scenario(cfg, threads=0), tmp_path)
        with pytest.raises(ConfigError, match="events.log"):
            replay_dir(tmp_path)

    def test_missing_manifest(self, tmp_path: Path) -> None:
        """Test a directory without a manifest is rejected."""
        with pytest.raises(ConfigError, match=MANIFEST):
            replay_dir(tmp_path)

    def test_sections_need_header(self) -> None:
        """Test dump lines before a header are rejected."""
        with pytest.raises(ConfigError, match="line 1"):
            split_sections(["0\t0\t1\tDIO\tsent\t*"])

    def test_sections_split_by_rep(self) -> None:
        """Test lines are grouped under their repetition header."""
        sections = split_sections(
            [
                "# rep 0 nodes=3 sinks=0 elapsed=100",
                "1\t0\t0\ttimer-expiry:sink-init",
                "# rep 1 nodes=3 sinks=0,1 elapsed=100",
            ]
        )
        assert sections[0].lines == ["1\t0\t0\ttimer-expiry:sink-init"]
        assert sections[1].sinks == [0, 1]
        assert sections[1].lines == []
