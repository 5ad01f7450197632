from __future__ import annotations

import json

import pytest

from transferplan import dump_network, dump_request, read_plan, validate_request
from transferplan.cli import main
from transferplan.planner import check_plan

from conftest import d1_network, unit_request


@pytest.fixture
def files(tmp_path):
    net = tmp_path / "net.json"
    net.write_text(dump_network(d1_network()))
    req = tmp_path / "req.json"
    req.write_text(dump_request(unit_request(1)))
    return tmp_path, str(net), str(req)


def test_solve_writes_outputs(files, capsys):
    tmp, net, req = files
    out = tmp / "out"
    assert main(["solve", "--network", net, "--request", req, "--out", str(out)]) == 0
    assert "makespan 4" in capsys.readouterr().out
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "plan.json", "schedule.csv", "trace.csv"]
    plan = read_plan(out / "plan.json")
    assert check_plan(d1_network(), validate_request(d1_network(), unit_request(1)), plan) == []
    assert (out / "schedule.csv").read_text().splitlines()[-1] == "makespan,,,4"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "solve" and manifest["options"]["heuristic"] == "minpath"


def test_solve_outputs_are_reproducible(files):
    tmp, net, req = files
    for name in ("a", "b"):
        assert main(["solve", "--network", net, "--request", req, "--out", str(tmp / name)]) == 0
    for f in ("plan.json", "schedule.csv"):
        assert (tmp / "a" / f).read_bytes() == (tmp / "b" / f).read_bytes()


def test_missing_file(files, capsys):
    tmp, net, _ = files
    assert main(["solve", "--network", net, "--request", str(tmp / "nope.json")]) == 1
    assert "no such file" in capsys.readouterr().err


def test_malformed_document(files, capsys):
    tmp, net, _ = files
    bad = tmp / "bad.json"
    bad.write_text("{oops")
    assert main(["solve", "--network", net, "--request", str(bad)]) == 1
    assert "parse failure" in capsys.readouterr().err


def test_unroutable(files, capsys):
    tmp, net, _ = files
    req = tmp / "unroutable.json"
    req.write_text(json.dumps({"destination": "T", "demands": [{"id": "lost", "size": 1, "origins": ["X"]}]}))
    assert main(["solve", "--network", net, "--request", str(req)]) == 2
    assert "lost" in capsys.readouterr().err


def test_usage_error_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 1


def test_p2p(files, capsys):
    tmp, net, req = files
    assert main(["p2p", "--network", net, "--request", req, "--out", str(tmp / "p")]) == 0
    assert "makespan 5" in capsys.readouterr().out
    assert (tmp / "p" / "transfers.csv").exists()


def test_simulate(files, capsys):
    tmp, net, req = files
    main(["solve", "--network", net, "--request", req, "--out", str(tmp / "s")])
    capsys.readouterr()
    assert main(["simulate", "--network", net, "--request", req, "--plan", str(tmp / "s" / "plan.json"),
                 "--max-streams", "1"]) == 0
    out = capsys.readouterr().out
    assert "execution makespan 4" in out and "gap 0.00%" in out


def test_simulate_rejects_invalid_plan(files, capsys):
    tmp, net, req = files
    plan = tmp / "plan.json"
    plan.write_text(json.dumps({"routes": [{"demand": "f1", "origin": "S", "links": ["e1"]}]}))
    assert main(["simulate", "--network", net, "--request", req, "--plan", str(plan)]) == 1
    assert "invalid plan" in capsys.readouterr().err


def test_gen_then_solve(tmp_path, capsys):
    assert main(["gen", "--n", "4", "--seed", "3", "--out", str(tmp_path)]) == 0
    assert main(["solve", "--network", str(tmp_path / "network.json"), "--request",
                 str(tmp_path / "request.json"), "--time-limit", "5"]) == 0
    assert "makespan" in capsys.readouterr().out


def test_bench_empty_sizes(tmp_path):
    assert main(["bench", "--sizes", "", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "bench.csv").read_text().count("\n") == 1


def test_bench_small(tmp_path):
    assert main(["bench", "--sizes", "3,4", "--seeds", "1", "--time-limit", "5", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "bench.csv").read_text().splitlines()[1:]
    assert len(rows) == 4
    for row in rows:
        size, seed, heuristic, makespan, _, status, p2p, error = row.split(",")
        assert heuristic in ("minpath", "fastestlink") and not error
        assert int(makespan) <= int(p2p)
    runs = sorted(p.name for p in (tmp_path / "runs").iterdir())
    assert runs == ["3-1-fastestlink", "3-1-minpath", "4-1-fastestlink", "4-1-minpath"]
    assert (tmp_path / "runs" / "3-1-minpath" / "manifest.json").exists()
