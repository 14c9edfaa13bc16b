import json

import numpy as np
import pytest

from rvqr import cli


def _synth(tmp_path, n=120, seed=5):
    out = str(tmp_path / "data.csv")
    code = cli.main(["synth", "--out", out, "--n-samples", str(n),
                     "--seed", str(seed)])
    assert code == cli.EXIT_OK
    return out


def _fit(tmp_path, data, grid=5, eps=0.5, extra=()):
    model = str(tmp_path / "model.json")
    code = cli.main(["fit", "--data", data, "--x-cols", "x_1", "--y-cols", "y_1",
                     "--grid", str(grid), "--epsilon", str(eps),
                     "--out", model, *extra])
    return code, model


def test_fit_quantiles_pipeline(tmp_path, capsys):
    data = _synth(tmp_path)
    code, model = _fit(tmp_path, data)
    assert code == cli.EXIT_OK
    doc = json.loads(open(model).read())
    assert doc["report"]["converged"]

    table = str(tmp_path / "q.csv")
    code = cli.main(["quantiles", "--model", model, "--data", data,
                     "--probes", "q10,q30,q60,q90", "--out", table])
    assert code == cli.EXIT_OK
    rows = np.loadtxt(table, delimiter=",", skiprows=1)
    assert rows.shape == (4 * 5, 3)  # 4 probes x 5 rank nodes


def test_fit_nonconvergence_exit_code_still_writes_model(tmp_path, capsys):
    data = _synth(tmp_path)
    code, model = _fit(tmp_path, data, extra=("--max-iter", "2", "--tol", "1e-14"))
    assert code == cli.EXIT_NONCONV
    doc = json.loads(open(model).read())
    assert doc["report"]["converged"] is False


def test_missing_file_is_io_error(tmp_path, capsys):
    code, _ = _fit(tmp_path, str(tmp_path / "nope.csv"))
    assert code == cli.EXIT_IO


def test_bad_grid_is_config_error(tmp_path, capsys):
    data = _synth(tmp_path)
    code, _ = _fit(tmp_path, data, grid=1)
    assert code == cli.EXIT_CONFIG


def test_bad_flag_is_config_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["fit", "--no-such-flag"])
    assert exc.value.code == cli.EXIT_CONFIG


def test_missing_column_is_config_error(tmp_path, capsys):
    data = _synth(tmp_path)
    model = str(tmp_path / "m.json")
    code = cli.main(["fit", "--data", data, "--x-cols", "bogus",
                     "--y-cols", "y_1", "--out", model])
    assert code == cli.EXIT_CONFIG


def test_quantiles_probe_outside_range(tmp_path, capsys):
    data = _synth(tmp_path)
    code, model = _fit(tmp_path, data)
    assert code == cli.EXIT_OK
    table = str(tmp_path / "q.csv")
    # raw probe value far outside the covariate range with a tiny ball
    code = cli.main(["quantiles", "--model", model, "--data", data,
                     "--probes", "50", "--eta", "0.01", "--out", table])
    assert code == cli.EXIT_CONFIG


def test_synth_reproducible(tmp_path, capsys):
    a = _synth(tmp_path, seed=11)
    b_dir = tmp_path / "b"
    b_dir.mkdir()
    b = _synth(b_dir, seed=11)
    assert open(a).read() == open(b).read()


def test_compare_qr_table_shape(tmp_path, capsys):
    data = _synth(tmp_path, n=300)
    out = str(tmp_path / "cmp.csv")
    code = cli.main(["compare-qr", "--data", data, "--x-cols", "x_1",
                     "--y-cols", "y_1", "--grid", "5",
                     "--epsilons", "0.1,0.5", "--probes", "q30,q70",
                     "--tol", "1e-8", "--out", out])
    assert code == cli.EXIT_OK
    lines = open(out).read().strip().splitlines()
    assert lines[0] == "probe,eps_0.1,eps_0.5"
    assert len(lines) == 3
    vals = np.array([[float(v) for v in ln.split(",")[1:]] for ln in lines[1:]])
    assert np.isfinite(vals).all() and (vals >= 0).all()


def test_check_command(tmp_path, capsys):
    out = str(tmp_path / "report.json")
    code = cli.main(["check", "--seed", "0", "--out", out])
    assert code == cli.EXIT_OK
    printed = capsys.readouterr().out
    assert "pass" in printed and "FAIL" not in printed
    doc = json.loads(open(out).read())
    assert all(r["passed"] for r in doc.values())
