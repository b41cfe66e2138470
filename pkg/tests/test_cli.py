import json
import os
import subprocess
import sys

import numpy as np
import pytest

from webest.cli import main
from webest.io import read_metrics, read_phases, read_summary, read_trace, write_phases
from webest.waveform import WaveformSet


def _design(tmp_path, *extra):
    out = tmp_path / "run"
    args = ["design", "-M", "2", "-N", "16", "--max-iters", "20", "--out", str(out), *extra]
    assert main(args) == 0
    return out


def test_design_writes_three_files(tmp_path):
    out = _design(tmp_path, "--p-schedule", "2,4")
    X = read_phases(out / "phases.csv")
    doc = read_metrics(out / "metrics.json")
    rows = read_trace(out / "trace.csv")
    assert X.shape == (2, 16)
    assert [s["p"] for s in doc["metrics"]["stages"]] == [2.0, 4.0]
    assert doc["config"]["p_schedule"] == [2.0, 4.0] and doc["config"]["M"] == 2
    assert rows[-1]["islr_db"] == pytest.approx(doc["metrics"]["islr_db"], rel=1e-12)


def test_metrics_command_reproduces_design_report(tmp_path, capsys):
    out = _design(tmp_path, "--weights", "band:5")
    capsys.readouterr()
    assert main(["metrics", "--input", str(out / "phases.csv"), "--weights", "band:5"]) == 0
    got = json.loads(capsys.readouterr().out)["metrics"]
    ref = read_metrics(out / "metrics.json")["metrics"]
    ref.pop("stages")
    assert got == ref


def test_metrics_all_ones_example(tmp_path):
    write_phases(tmp_path / "p.csv", WaveformSet(np.zeros((1, 4))))
    assert main(["metrics", "--input", str(tmp_path / "p.csv"), "--out", str(tmp_path / "m.json")]) == 0
    m = read_metrics(tmp_path / "m.json")["metrics"]
    assert m["psl"] == pytest.approx(3.0)
    assert m["islr_db"] == pytest.approx(10 * np.log10(28 / 16))
    assert m["sparsity"] == 0.0


def test_discrete_design_stays_on_alphabet(tmp_path):
    out = _design(tmp_path, "--alphabet", "8")
    X = read_phases(out / "phases.csv")
    k = X.phases * 8 / (2 * np.pi)
    assert X.constraint.L == 8 and np.allclose(k, np.round(k))


def test_weights_file(tmp_path):
    (tmp_path / "w.txt").write_text("# band\n" + "\n".join(["0"] * 10 + ["1"] * 11 + ["0"] * 10))
    _design(tmp_path, "--weights", f"file:{tmp_path / 'w.txt'}")
    (tmp_path / "w.txt").write_text("1, x")
    assert main(["design", "-M", "1", "-N", "4", "--weights", f"file:{tmp_path / 'w.txt'}", "--out", str(tmp_path)]) == 1


def test_error_exit_codes(tmp_path, capsys):
    base = ["design", "-M", "2", "-N", "8", "--out", str(tmp_path / "x")]
    assert main(base + ["--method", "vector", "--alphabet", "4"]) == 2
    assert "continuous" in capsys.readouterr().err
    assert main(base + ["--p-schedule", "1.5"]) == 1
    assert main(base + ["--p-schedule", "2,abc"]) == 1
    assert main(base + ["--weights", "band:99"]) == 1
    assert main(["metrics", "--input", str(tmp_path / "missing.csv")]) == 1
    (tmp_path / "bad.csv").write_text("# format=webest-phases/7\n0,1\n")
    assert main(["metrics", "--input", str(tmp_path / "bad.csv")]) == 1
    with pytest.raises(SystemExit):
        main(["design", "-M", "2"])


def test_sweep(tmp_path, monkeypatch):
    spec = {"M": [1, 2], "N": 8, "p_schedule": [[2.0], [2.0, 4.0]], "max_iters": 5, "seed": 10}
    (tmp_path / "s.json").write_text(json.dumps(spec))
    monkeypatch.setenv("WEBEST_THREADS", "1")
    assert main(["sweep", str(tmp_path / "s.json"), "--trials", "2", "--out", str(tmp_path / "o")]) == 0
    rows = read_summary(tmp_path / "o" / "summary.csv")
    assert len(rows) == 4 and all(r["trials"] == 2 for r in rows)
    assert [str(r["p_schedule"]) for r in rows[:2]] == ["2.0", "2 4"]
    monkeypatch.setenv("WEBEST_THREADS", "zero")
    assert main(["sweep", str(tmp_path / "s.json"), "--out", str(tmp_path / "o")]) == 1
    (tmp_path / "s.json").write_text(json.dumps({"M": 2, "N": 8, "colour": 1}))
    assert main(["sweep", str(tmp_path / "s.json"), "--out", str(tmp_path / "o")]) == 1


def test_sweep_parallel_matches_serial(tmp_path):
    spec = {"M": 2, "N": 8, "max_iters": 5}
    (tmp_path / "s.json").write_text(json.dumps(spec))
    outs = []
    for threads in ("1", "2"):
        env = {**os.environ, "WEBEST_THREADS": threads}
        out = tmp_path / threads
        subprocess.run(
            [sys.executable, "-m", "webest.cli", "sweep", str(tmp_path / "s.json"), "--trials", "2", "--out", str(out)],
            check=True, env=env, capture_output=True,
        )
        outs.append({k: v for k, v in read_summary(out / "summary.csv")[0].items() if not k.startswith("wall")})
    assert outs[0] == outs[1]
