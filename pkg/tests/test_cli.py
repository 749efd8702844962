"""Command-line interface tests, run in-process via cli.main."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fracorder.cli import main
from fracorder.experiments import reference_config_k2
from fracorder.forward import observe, solve_forward


def _write_config(path, **cfg):
    path.write_text(json.dumps(cfg))
    return str(path)


def _write_data_csv(path, series, time_nodes):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"g_{c}" for c in series.components])
        for i in range(series.values.shape[1]):
            writer.writerow([repr(float(time_nodes[i + 1]))]
                            + [repr(float(v)) for v in series.values[:, i]])
    return str(path)


@pytest.fixture(scope="module")
def data_csv_60(tmp_path_factory):
    """Noiseless two-component observations on a 60 x 60 grid."""
    config, _ = reference_config_k2(n=60, m=60)
    series = observe(solve_forward(config), (1, 2), 0.5)
    path = tmp_path_factory.mktemp("data") / "observations.csv"
    return _write_data_csv(path, series, config.time.nodes)


def test_validate_passes(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out
    assert "[FAIL]" not in out


def test_forward_writes_field_csvs(tmp_path, capsys):
    cfg = _write_config(tmp_path / "c.json", K=2, alpha_true=[0.9, 0.5],
                        N=50, M=50)
    out = tmp_path / "field"
    assert main(["forward", "--config", cfg, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "kernel:" in text
    assert "identifiability conditions pass: True" in text
    for k in (1, 2):
        rows = np.loadtxt(out / f"component_{k}.csv", delimiter=",")
        assert rows.shape == (51, 51)
        assert np.all(rows[:, 0] == 0.0) and np.all(rows[:, -1] == 0.0)


def test_forward_config_errors(tmp_path):
    cfg = _write_config(tmp_path / "noalpha.json", K=2, N=20, M=20)
    assert main(["forward", "--config", cfg, "--out", str(tmp_path)]) == 2
    cfg = _write_config(tmp_path / "unknown.json", K=2,
                        alpha_true=[0.9, 0.5], bogus=1)
    assert main(["forward", "--config", cfg, "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["forward", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["forward", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path)]) == 2


def test_invert_recovers_orders_from_csv(tmp_path, data_csv_60, capsys):
    cfg = _write_config(tmp_path / "inv.json", K=2, N=60, M=60,
                        alpha0=[0.5, 0.5], observed_components=[1, 2],
                        alpha_true=[0.9, 0.5])
    out = tmp_path / "result"
    assert main(["invert", "--config", cfg, "--data", data_csv_60,
                 "--out", str(out)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["status"] == "converged"
    assert abs(printed["alpha_star"][0] - 0.9) <= 1e-5
    assert abs(printed["alpha_star"][1] - 0.5) <= 1e-5
    assert max(printed["rel_err_pct"]) <= 0.01
    with open(out / "invert_result.json") as fh:
        saved = json.load(fh)
    assert saved == printed


def test_invert_rejects_malformed_data(tmp_path, data_csv_60):
    base = dict(K=2, alpha0=[0.5, 0.5], M=60)

    cfg = _write_config(tmp_path / "wrongN.json", N=61, **base)
    assert main(["invert", "--config", cfg, "--data", data_csv_60]) == 2

    cfg = _write_config(tmp_path / "inv.json", N=60, **base)
    noheader = tmp_path / "noheader.csv"
    noheader.write_text("time,g_1\n0.01,1.0\n")
    assert main(["invert", "--config", cfg, "--data", str(noheader)]) == 2

    badcol = tmp_path / "badcol.csv"
    badcol.write_text("t,g_x\n" + "\n".join(f"0.{i},1.0" for i in range(60)))
    assert main(["invert", "--config", cfg, "--data", str(badcol)]) == 2

    badval = tmp_path / "badval.csv"
    badval.write_text("t,g_1\n" + "\n".join(f"0.{i},oops" for i in range(60)))
    assert main(["invert", "--config", cfg, "--data", str(badval)]) == 2

    mismatch = _write_config(tmp_path / "mismatch.json", N=60,
                             observed_components=[1], **base)
    assert main(["invert", "--config", mismatch, "--data", data_csv_60]) == 2


def test_invert_observation_point_outside_domain_is_numerical(tmp_path,
                                                              data_csv_60):
    cfg = _write_config(tmp_path / "farx.json", K=2, N=60, M=60,
                        alpha0=[0.5, 0.5], x0=1.5)
    assert main(["invert", "--config", cfg, "--data", data_csv_60]) == 3


def test_reproduce_noiseless_battery_checks_out(tmp_path, capsys):
    out1, out2 = tmp_path / "one", tmp_path / "two"
    assert main(["reproduce", "table1", "--check", "--out", str(out1)]) == 0
    assert main(["reproduce", "table1", "--check", "--out", str(out2)]) == 0
    text = capsys.readouterr().out
    assert text.count("[PASS]") >= 6
    assert "[FAIL]" not in text
    for name in ("table1.csv", "table1_summary.json"):
        with open(out1 / name, "rb") as f1, open(out2 / name, "rb") as f2:
            assert f1.read() == f2.read()


def test_reproduce_noisy_battery_reports_check_failure(capsys):
    # the 5% median bound does not hold under this noise model for the
    # partially observed cases, and the CLI must say so honestly
    assert main(["reproduce", "table2", "--check", "--delta", "0.05"]) == 4
    text = capsys.readouterr().out
    assert "[FAIL]" in text


def test_reproduce_low_noise_battery_passes(capsys):
    assert main(["reproduce", "table2", "--check", "--delta", "0.01"]) == 0
    text = capsys.readouterr().out
    assert "iterations" in text
    assert "[FAIL]" not in text


def test_reproduce_sweep_battery_checks_out(capsys):
    assert main(["reproduce", "table4", "--check"]) == 0
    text = capsys.readouterr().out
    assert text.count("[PASS]") == 6
    assert "[FAIL]" not in text


def test_reproduce_fine_data_smoke():
    assert main(["reproduce", "table1", "--fine-data"]) == 0


def test_reproduce_threads_give_identical_reports(tmp_path):
    out1, out2 = tmp_path / "t1", tmp_path / "t2"
    assert main(["reproduce", "table1", "--out", str(out1)]) == 0
    assert main(["reproduce", "table1", "--threads", "2",
                 "--out", str(out2)]) == 0
    with open(out1 / "table1.csv", "rb") as f1, \
            open(out2 / "table1.csv", "rb") as f2:
        assert f1.read() == f2.read()


def test_sweep_command_writes_report(tmp_path, capsys):
    out = tmp_path / "sweep"
    assert main(["sweep", "--case", "A", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out.splitlines()[0])
    assert summary["rows"] == 45
    assert (out / "sweep_A.csv").exists()


def test_bad_delta_values_are_config_errors():
    assert main(["reproduce", "table2", "--delta", "abc"]) == 2
    assert main(["reproduce", "table2", "--delta", "1.5"]) == 2
    assert main(["sweep", "--case", "A", "--delta", "-0.1"]) == 2


def test_argparse_rejects_unknown_usage():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main(["invert", "--config", "x.json"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main(["reproduce", "table9"])
    assert err.value.code == 2


def test_module_and_console_entry_points():
    run = subprocess.run([sys.executable, "-m", "fracorder", "validate"],
                         capture_output=True, text=True)
    assert run.returncode == 0
    assert "[PASS]" in run.stdout
    run = subprocess.run(["fracorder", "--help"], capture_output=True,
                         text=True)
    assert run.returncode == 0
    assert "reproduce" in run.stdout
