"""CLI tests through main(argv) with captured output; no subprocesses.

The replay math is checked against a tiny synthetic trace whose trapezoid
integrals are done by hand.
"""

import json
import os

import pytest

from slotsim.cli import (EXIT_BAD_CONFIG, EXIT_BAD_TRACE, EXIT_NO_SCENARIO,
                         EXIT_OK, main, read_trace, trace_series)
from slotsim.errors import TraceFormatError

HEADER = "t,vehicle_id,intersection_id,r,v,a,slot,d_arrival,fuel_rate"


def write_trace(path, rows):
    path.write_text(HEADER + "\n" + "".join(r + "\n" for r in rows))


SYNTH = [
    "0.1000,1,i0,1.0,10.0,0.0,0,159.0,0.7",
    "0.2000,1,i0,2.0,12.0,0.0,2,158.0,0.7",
    "0.3000,1,,0.5,14.0,0.0,0,,0.7",       # link handoff: r restarts
    "0.1000,2,i0,0.0,0.0,0.0,1,160.0,0.4",
]


def test_read_trace_types(tmp_path):
    p = tmp_path / "t.csv"
    write_trace(p, SYNTH)
    rows = read_trace(str(p))
    assert len(rows) == 4
    assert rows[0]["vehicle_id"] == 1 and rows[0]["slot"] == 0
    assert rows[2]["intersection_id"] == ""
    assert rows[2]["d_arrival"] is None
    assert rows[3]["fuel_rate"] == pytest.approx(0.4)


def test_read_trace_rejects_bad_header(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("time,stuff\n")
    with pytest.raises(TraceFormatError):
        read_trace(str(p))


def test_read_trace_rejects_bad_rows(tmp_path):
    p = tmp_path / "t.csv"
    write_trace(p, ["0.1,1,i0,1.0"])
    with pytest.raises(TraceFormatError, match="fields"):
        read_trace(str(p))
    write_trace(p, ["0.1,one,i0,1.0,2.0,0.0,0,5.0,0.7"])
    with pytest.raises(TraceFormatError, match="line 2"):
        read_trace(str(p))


def test_read_trace_accepts_empty_file(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("")
    assert read_trace(str(p)) == []


def test_distance_series_uses_trapezoids(tmp_path):
    p = tmp_path / "t.csv"
    write_trace(p, SYNTH)
    series = trace_series(read_trace(str(p)), "distance")
    pts = dict(series[1])
    assert pts[0.1] == 0.0
    assert pts[0.2] == pytest.approx(0.5 * (10 + 12) * 0.1)   # 1.1
    # integration continues across the handoff despite the r reset
    assert pts[0.3] == pytest.approx(1.1 + 0.5 * (12 + 14) * 0.1)
    assert series[2] == [(0.1, 0.0)]


def test_slot_and_speed_series(tmp_path):
    p = tmp_path / "t.csv"
    write_trace(p, SYNTH)
    rows = read_trace(str(p))
    assert trace_series(rows, "slot")[1] == [(0.1, 0), (0.2, 2), (0.3, 0)]
    assert trace_series(rows, "speed")[2] == [(0.1, 0.0)]


def test_replay_command_json(tmp_path, capsys):
    p = tmp_path / "t.csv"
    write_trace(p, SYNTH)
    assert main(["replay", "--trace", str(p), "--series", "slot"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["series"] == "slot"
    assert out["vehicles"]["1"] == [[0.1, 0], [0.2, 2], [0.3, 0]]


def test_replay_missing_trace_exit_code(tmp_path, capsys):
    assert main(["replay", "--trace", str(tmp_path / "nope.csv")]) == EXIT_NO_SCENARIO
    assert "not found" in capsys.readouterr().err


def test_replay_malformed_trace_exit_code(tmp_path, capsys):
    p = tmp_path / "t.csv"
    p.write_text("garbage header\n")
    assert main(["replay", "--trace", str(p)]) == EXIT_BAD_TRACE
    assert "malformed trace" in capsys.readouterr().err


def test_run_writes_trace_and_summary(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["run", "--scenario", "platoon7", "--seed", "5",
               "--out", str(out)])
    assert rc == EXIT_OK
    assert "vehicles exited" in capsys.readouterr().out
    trace = out / "trace_unsignalized_5.csv"
    summary = out / "summary_unsignalized_5.json"
    assert trace.exists() and summary.exists()
    s = json.loads(summary.read_text())
    assert s["seed"] == 5 and s["mode"] == "unsignalized"
    assert s["spawned"] == 7
    assert read_trace(str(trace))  # parses cleanly end to end
    assert not (out / "aggregate.json").exists()  # single seed: no aggregate


def test_run_multi_seed_aggregates(tmp_path):
    out = tmp_path / "out"
    rc = main(["run", "--scenario", "platoon7", "--seed", "1,2", "--out", str(out)])
    assert rc == EXIT_OK
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["runs"] == 2
    assert agg["exited"]["mean"] == 7.0
    assert "mean_travel_time" in agg


def test_run_mode_override_names_the_outputs(tmp_path):
    out = tmp_path / "out"
    main(["run", "--scenario", "platoon7", "--seed", "0", "--mode", "baseline",
          "--out", str(out)])
    assert (out / "trace_baseline_0.csv").exists()


def test_run_accepts_scenario_file(tmp_path):
    src = os.path.join(os.path.dirname(__file__), "..", "scenarios", "platoon7.json")
    out = tmp_path / "out"
    rc = main(["run", "--scenario", src, "--seed", "0", "--out", str(out)])
    assert rc == EXIT_OK
    assert (out / "trace_unsignalized_0.csv").exists()


def test_run_missing_scenario_file(tmp_path, capsys):
    rc = main(["run", "--scenario", str(tmp_path / "ghost.json"),
               "--out", str(tmp_path)])
    assert rc == EXIT_NO_SCENARIO


def test_run_invalid_scenario_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 99}))
    rc = main(["run", "--scenario", str(bad), "--out", str(tmp_path / "o")])
    assert rc == EXIT_BAD_CONFIG
    assert "schema_version" in capsys.readouterr().err


def test_run_bad_seed_list(tmp_path, capsys):
    rc = main(["run", "--scenario", "platoon7", "--seed", "1,x",
               "--out", str(tmp_path)])
    assert rc == EXIT_BAD_CONFIG


def test_compare_smoke(tmp_path, capsys):
    rc = main(["compare", "--scenario", "platoon7", "--seeds", "2",
               "--out", str(tmp_path / "cmp")])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "mean travel-time reduction" in out
    assert "fuel lower in" in out
    report = json.loads((tmp_path / "cmp" / "compare.json").read_text())
    assert len(report["pairs"]) == 2
    assert report["travel_time_saved_s"]["ci95"][0] <= \
        report["travel_time_saved_s"]["mean"] <= \
        report["travel_time_saved_s"]["ci95"][1]
