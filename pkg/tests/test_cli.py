import json
import subprocess
import sys

import pytest

from mapfkit.cli import main
from mapfkit.grid import load_map
from mapfkit.render import decode_pnm

from cli_runs import run_all


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    return root, run_all(root)


def test_every_subcommand_writes(artifacts):
    root, hashes = artifacts
    assert {"room.map", "g_mat.json", "f_all.json", "attn.json", "map.pgm", "heat.ppm",
            "out/prio/aggregate.json", "out/prio/results.csv"} <= set(hashes)


def test_graph_schema(artifacts):
    root, _ = artifacts
    graph = json.loads((root / "g_mat.json").read_text())
    assert set(graph) == {"nodes", "edges"}
    assert all(set(n) == {"x", "y", "kind"} for n in graph["nodes"])
    assert all(set(e) == {"a", "b", "len"} for e in graph["edges"])
    grid = load_map(root / "room.map")
    assert all(grid.is_free((n["x"], n["y"])) for n in graph["nodes"])


def test_eval_aggregate(artifacts):
    root, _ = artifacts
    agg = json.loads((root / "out" / "prio" / "aggregate.json").read_text())
    assert {"MS", "SR", "AR", "EL"} <= set(agg)
    assert agg["SR"] <= agg["AR"]
    idle = json.loads((root / "out" / "idle" / "aggregate.json").read_text())
    assert idle["SR"] == 0.0 and idle["MS"] == 20


def test_render_headers(artifacts):
    root, _ = artifacts
    assert decode_pnm((root / "map.pgm").read_bytes())[0] == "P5"
    assert decode_pnm((root / "skel.ppm").read_bytes())[0] == "P6"


def test_features_all_schema(artifacts):
    root, _ = artifacts
    data = json.loads((root / "f_all.json").read_text())
    assert data["ego_id"] == 1
    assert set(data) == {"ego_id", "step", "local", "static", "intent"}


def test_same_argv_same_bytes(artifacts, tmp_path):
    _, first = artifacts
    assert run_all(tmp_path) == first


def test_usage_errors(tmp_path, capsys):
    assert main(["extract-graph", "--map", str(tmp_path / "missing.map")]) == 2
    assert main(["gen-map", "--kind", "room", "--size", "20", "20"]) == 2
    assert main(["gen-map", "--kind", "room", "--size", "20", "20", "--density", "0.1", "--seed", "1"]) == 2
    assert main(["features", "--scenario", "x.json", "--static", "--intent"]) == 2
    assert main(["no-such-command"]) == 2
    err = capsys.readouterr().err
    assert all(line.startswith("mapfkit: ") for line in err.strip().splitlines())


def test_runtime_error_exit_one(tmp_path):
    bad = tmp_path / "bad.map"
    bad.write_text("..\n...\n")
    assert main(["extract-graph", "--map", str(bad)]) == 1
    assert main(["gen-map", "--kind", "random", "--size", "5", "5", "--seed", "1"]) == 1


def test_replay_needs_plans(tmp_path):
    (tmp_path / "sc").mkdir()
    assert main(["gen-scenarios", "--count", "1", "--seed", "0", "-o", str(tmp_path / "sc")]) == 0
    assert main(["eval", "--scenarios", str(tmp_path / "sc"), "--policy", "replay", "-o", str(tmp_path / "o")]) == 1


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.map"
    proc = subprocess.run(
        [sys.executable, "-m", "mapfkit.cli", "gen-map", "--kind", "room", "--size", "12", "12",
         "--seed", "4", "-o", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert load_map(out).shape == (12, 12)
