import json
import math

import numpy as np
import pytest

from abpoles.harness import cli
from abpoles.harness.experiments import (
    ExperimentConfig,
    crack_index,
    fit_slope,
    observed_order,
    richardson,
    sign_angles,
)
from abpoles.harness.report import (
    LONG_COLUMNS,
    TABLE_COLUMNS,
    Criterion,
    ReportError,
    emit_report,
    report_hash,
)

SMALL = {
    "poles": [{"r": 0.9, "alpha": -1.0, "rho": 0.2}, {"r": 0.9, "alpha": 1.0, "rho": 0.2}],
    "epsilon_list": [0.4, 0.3, 0.2, 0.15],
    "h_list": [0.3, 0.2, 0.15],
    "trunc_radii": [4, 8],
    "exterior_h": 0.3,
}


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.json"
    p.write_text(json.dumps(SMALL))
    return p


# -- config -------------------------------------------------------------------


@pytest.mark.parametrize("bad", [
    {"epsilon_list": [0.1, 0.2]},
    {"epsilon_list": [1.5, 0.5]},
    {"h_list": [0.1, 0.1]},
    {"n0": 0},
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(dict(SMALL, **bad))


def test_config_roundtrip():
    cfg = ExperimentConfig.from_dict(SMALL)
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()
    assert again.config_hash() == cfg.config_hash()
    assert ExperimentConfig.from_dict(SMALL, seed=3).config_hash() != cfg.config_hash()


def test_config_from_file(small_config):
    cfg = ExperimentConfig.from_file(small_config, tol_eigen=1e-9, seed=None)
    assert cfg.tol_eigen == 1e-9 and cfg.seed == 0
    assert cfg.eps_ladder == (0.4, 0.3, 0.2, 0.15)


# -- numerics helpers ---------------------------------------------------------


def test_richardson_exact():
    hs = [0.4, 0.2, 0.1]
    vals = [3.0 + 2.0 * h**1.7 for h in hs]
    assert observed_order(hs, vals) == pytest.approx(1.7, rel=1e-8)
    ex = richardson(hs, vals)
    assert ex.ok and ex.value == pytest.approx(3.0, abs=1e-10)


def test_richardson_fallbacks():
    ex = richardson([0.2, 0.1], [1.0, 1.1])
    assert not ex.ok and ex.value == 1.1
    ex = richardson([0.2, 0.1], [1.0, 1.1], order=1.0)
    assert ex.value == pytest.approx(1.2)
    assert math.isnan(observed_order([0.3, 0.2, 0.1], [1.0, 1.0, 1.0]))


def test_fit_slope():
    eps = np.array([0.2, 0.1, 0.05, 0.025])
    s, err, band = fit_slope(eps, 3 * eps**0.8)
    assert s == pytest.approx(0.8) and err < 1e-10
    assert band[0] <= s <= band[1]
    with pytest.raises(ValueError):
        fit_slope(eps[:3], eps[:3])


def test_crack_index():
    assert [crack_index(n) for n in (1, 2, 3)] == [0, 2, 4]


def test_sign_angles():
    a = sign_angles("i", 1, 0.0, 3)
    np.testing.assert_allclose(a, [math.pi / 3, math.pi, -math.pi / 3], atol=1e-14)
    b = sign_angles("ii", 0, 0.4, 1)
    assert b == [pytest.approx(-0.4)]
    with pytest.raises(ValueError):
        sign_angles("i", 0, 0.0, 2)
    with pytest.raises(ValueError):
        sign_angles("iii", 1, 0.0, 1)


# -- reports ------------------------------------------------------------------


def test_empty_report(tmp_path):
    paths = emit_report(tmp_path)
    assert paths["table"].read_text() == ",".join(TABLE_COLUMNS) + "\n"
    assert paths["long"].read_text() == ",".join(LONG_COLUMNS) + "\n"
    summary = json.loads(paths["summary"].read_text())
    assert summary["n_criteria"] == 0 and summary["criteria"] == []


def test_report_schema_and_determinism(tmp_path):
    rows = [dict(zip(TABLE_COLUMNS, [0.1, 9.5, 0.01, 1.0, 0.0, 0.011, 0.9])),
            dict(zip(TABLE_COLUMNS, [0.05, 9.49, 0.005, 1.0, 0.0, 0.0052, float("nan")]))]
    crit = [Criterion(3, "rate check", False, {"slope": 1.2, "seconds": 4.0}, "within 15%")]
    cfg = ExperimentConfig.from_dict(SMALL)
    a = emit_report(tmp_path / "a", rows, {"x": np.float64(1.5), "seconds": 3.0}, crit, cfg)
    b = emit_report(tmp_path / "b", rows, {"x": np.float64(1.5), "seconds": 9.0}, crit, cfg)
    assert report_hash(a) == report_hash(b)
    lines = a["table"].read_text().splitlines()
    assert lines[0].split(",") == list(TABLE_COLUMNS)
    assert lines[1].split(",")[0] == "0.1"
    summary = json.loads(a["summary"].read_text())
    assert summary["config_hash"] == cfg.config_hash()
    assert summary["n_passed"] == 0 and summary["n_criteria"] == 1
    assert "seconds" not in summary["results"]
    assert summary["criteria"][0]["measured"] == {"slope": 1.2}


def test_report_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ReportError, match="file"):
        emit_report(blocker / "sub")


def test_criterion_line():
    c = Criterion(1, "disk oracle", True, {"err": 0.001, "n": 3}, "below 1%")
    assert c.line() == "[PASS] criterion 1 disk oracle: err=0.001, n=3 (target: below 1%)"


# -- command line -------------------------------------------------------------


def test_cli_oracle(tmp_path, capsys):
    assert cli.main(["oracle", "--nu", "0.5", "--count", "2", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "zeros of J_0.5" in out
    assert (tmp_path / "oracle_summary.json").exists()


def test_cli_solve_deterministic(tmp_path, small_config, capsys):
    args = ["solve", "--config", str(small_config), "--count", "2", "--eps", "0.3"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    names = ("table", "long", "summary")
    ha = report_hash({k: tmp_path / "a" / f"solve_{k}.{'json' if k == 'summary' else 'csv'}" for k in names})
    hb = report_hash({k: tmp_path / "b" / f"solve_{k}.{'json' if k == 'summary' else 'csv'}" for k in names})
    assert ha == hb
    res = json.loads((tmp_path / "a" / "solve_summary.json").read_text())["results"]
    crack, mag = res["crack"], res["magnetic"]
    assert crack[0] == pytest.approx(crack[1], rel=1e-8)
    assert mag[0] == pytest.approx(crack[0], rel=0.05)


def test_cli_errors(tmp_path, capsys):
    assert cli.main(["solve", "--config", str(tmp_path / "missing.json")]) == 2
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(dict(SMALL, epsilon_list=[0.1, 0.2])))
    assert cli.main(["limit", "--config", str(bad)]) == 2
    with pytest.raises(SystemExit):
        cli.main(["nonsense"])
