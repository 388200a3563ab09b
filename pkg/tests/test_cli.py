import csv
import io
import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from catforge.cli import RunReport, parse_grid, pmap, run, thread_cap
from catforge.dispersive import optimize_gamma, p_plus

GOLDEN = Path(__file__).parent / "golden"

# golden file stem -> argv; regenerate with `catforge <argv> --out tests/golden/<stem>.csv`
GOLDEN_RUNS = {
    "fidelity_dispersive": "fidelity-curve --protocol dispersive --alpha-grid 0.5:3:6",
    "fidelity_ps": "fidelity-curve --protocol ps --n 1 --alpha-grid 0.5:1.5:3 --restarts 2",
    "gp_optimize_ps": "gp-optimize --alpha 1 --family ps --restarts 2",
    "wigner_dispersive": "wigner-cut --state dispersive:ideal --alpha 2 --ygrid -2:2:41",
    "wigner_lossy_cat": "wigner-cut --state target-cat --alpha 2 --tau 0.9 --x 0.2 --ygrid -2:2:21",
    "homodyne_cat": "homodyne --state target-cat --alpha 2 --ygrid -4:4:41",
    "distill_pd": "distill --state dispersive:pd --pd 0.2 --alpha-grid 1:4:4",
    "fisher_imp": "fisher --state dispersive:imp --coop 30 --eta 0.95 --alpha-grid 1:3:3 --qfi",
}


def invoke(capsys, argv: str) -> tuple[int, str, str]:
    rc = run(argv.split())
    out, err = capsys.readouterr()
    return rc, out, err


def read_csv(text: str) -> tuple[list[str], np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


@pytest.fixture(autouse=True)
def serial(monkeypatch):
    monkeypatch.setenv("CATFORGE_THREADS", "1")


@pytest.mark.parametrize("stem", sorted(GOLDEN_RUNS))
def test_golden_files(capsys, stem):
    rc, out, _ = invoke(capsys, GOLDEN_RUNS[stem])
    assert rc == 0
    head, vals = read_csv(out)
    ref_head, ref = read_csv((GOLDEN / f"{stem}.csv").read_text())
    assert head == ref_head
    assert vals.shape == ref.shape
    np.testing.assert_allclose(vals, ref, rtol=1e-9, atol=1e-9)


def test_json_and_csv_carry_the_same_numbers(capsys):
    argv = "fisher --state target-cat --alpha-grid 1:3:3 --qfi"
    _, text, _ = invoke(capsys, argv)
    _, js, _ = invoke(capsys, argv + " --json")
    head, vals = read_csv(text)
    report = RunReport.from_json(js)
    assert report.columns == ["alpha", "eps_min", "eps_tilde_min"]
    assert head == ["alpha (canonical)", "eps_min (canonical)", "eps_tilde_min (canonical)"]
    assert np.array_equal(np.array(report.rows), vals)
    assert report.to_csv() == text


def test_report_round_trip():
    rep = RunReport("distill", {"alpha_grid": [1.0, 2.0], "seed": 3}, ["alpha", "V"], [[1.0, 0.1 + 1e-17], [2.0, 1 / 3]])
    back = RunReport.from_json(rep.to_json())
    assert back == rep
    body = json.loads(rep.to_json())
    assert set(body) == {"meta", "params", "columns", "rows"}


def test_out_file(tmp_path, capsys):
    target = tmp_path / "h.csv"
    rc, out, _ = invoke(capsys, f"homodyne --state target-cat --alpha 1 --ygrid -1:1:3 --out {target}")
    assert rc == 0 and out == ""
    head, vals = read_csv(target.read_text())
    assert head == ["y (canonical)", "p (1/canonical)"] and vals.shape == (3, 2)


def test_grid_grammar():
    np.testing.assert_array_equal(parse_grid("-2:2:5"), [-2, -1, 0, 1, 2])
    np.testing.assert_array_equal(parse_grid("0.1:0.1:1"), [0.1])


@pytest.mark.parametrize(
    "argv",
    [
        "",
        "nonsense",
        "fidelity-curve --protocol dispersive",
        "fidelity-curve --protocol dispersive --alpha-grid 1:2",
        "fidelity-curve --protocol dispersive --alpha-grid 1:2:0",
        "fidelity-curve --protocol dispersive --alpha-grid 1:7:3",
        "fidelity-curve --protocol dispersive --alpha-grid 1:2:3 --tau 1.5",
        "fidelity-curve --protocol dispersive-prob --alpha-grid 1:2:3 --tau 0.9",
        "gp-optimize --alpha 1 --restarts 0",
        "wigner-cut --state dispersive:imp --alpha 2 --ygrid -1:1:3",
        "wigner-cut --state dispersive:imp --coop 10 --eta 0.3 --alpha 2 --ygrid -1:1:3",
        "distill --state dispersive:pd --alpha-grid 1:2:2",
        "homodyne --state dispersive:ad --ad 1.5 --alpha 1 --ygrid -1:1:3",
        "homodyne --state target-cat --alpha 1 --ygrid -1:1:3 --fock-dim 1",
    ],
)
def test_argument_errors_exit_2(capsys, argv):
    rc, out, _ = invoke(capsys, argv)
    assert rc == 2
    assert out == ""


def test_numerical_failure_exits_1(capsys):
    rc, out, err = invoke(capsys, "homodyne --state target-cat --alpha 3 --ygrid -1:1:3 --fock-dim 6")
    assert rc == 1
    assert out == ""
    assert err.startswith("catforge: numerical failure")


def test_fisher_curve_decreases(capsys):
    rc, out, _ = invoke(capsys, "fisher --state target-cat --alpha-grid 0.5:6:12")
    assert rc == 0
    _, vals = read_csv(out)
    assert np.all(np.diff(vals[:, 1]) < 0)


def test_dispersive_wigner_cut_minimum(capsys):
    rc, out, _ = invoke(capsys, "wigner-cut --state dispersive:ideal --alpha 4 --ygrid -2:2:801")
    assert rc == 0
    _, vals = read_csv(out)
    i = int(np.argmin(vals[:, 1]))
    assert vals[i, 1] < 0
    assert abs(vals[i, 0]) == pytest.approx(math.pi / 16, rel=0.05)


def test_dispersive_small_amplitude_fidelity(capsys):
    rc, out, _ = invoke(capsys, "fidelity-curve --protocol dispersive --n 1 --alpha-grid 0.1:0.1:1")
    assert rc == 0
    _, vals = read_csv(out)
    alpha, F, P = vals[0]
    assert alpha == 0.1 and P == 1.0
    assert F >= 0.5 and F >= p_plus(0.1)
    assert F == pytest.approx(optimize_gamma(0.1)[1], abs=1e-12)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("CATFORGE_THREADS", "1")
    assert thread_cap() == 1
    monkeypatch.setenv("CATFORGE_THREADS", "100000")
    assert thread_cap() == (os.cpu_count() or 1)
    monkeypatch.setenv("CATFORGE_THREADS", "junk")
    assert thread_cap() == 1
    monkeypatch.delenv("CATFORGE_THREADS")
    assert thread_cap() >= 1


def test_parallel_map_keeps_order(monkeypatch):
    monkeypatch.setenv("CATFORGE_THREADS", "2")
    assert pmap(math.sqrt, [9.0, 4.0, 1.0, 0.0]) == [3.0, 2.0, 1.0, 0.0]
