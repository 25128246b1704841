import json

import numpy as np
import pytest

import symplectomo as sy
import symplectomo.io as tio
from symplectomo import cli
from symplectomo import states as st
from symplectomo.marginals import QuadratureSetting, circle_settings, tabulate_tomogram
from symplectomo.measure_sim import sample_marginal
from symplectomo.twomode import TwoModeSetting, tabulate_tilde_tomogram


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def test_tomogram_roundtrip(tmp_path):
    tomo = tabulate_tomogram(st.Thermal(0.5), circle_settings(4), x_grid=np.linspace(-8, 8, 201))
    path = tmp_path / "t.csv"
    tio.save_tomogram(tomo, path)
    back = tio.load_tomogram(path)
    assert np.array_equal(back.values, tomo.values)
    assert np.array_equal(back.x, tomo.x)
    assert back.settings == tomo.settings
    header = path.read_text().splitlines()[0]
    assert header == "mu,nu,delta,x,w"


def test_two_mode_tomogram_roundtrip(tmp_path):
    state = st.GaussianTwoMode(np.eye(4) * 0.5)
    tomo = tabulate_tilde_tomogram(state, n_t=3, n_psi=4, num=101)
    path = tmp_path / "t2.csv"
    tio.save_two_mode_tomogram(tomo, path)
    back = tio.load_two_mode_tomogram(path)
    assert np.array_equal(back.values, tomo.values)
    assert np.allclose(back.direction_weights, tomo.direction_weights)
    assert back.kind == "tilde"


def test_samples_roundtrip(tmp_path):
    batch = sample_marginal(st.Vacuum(), QuadratureSetting(0.6, -0.8, 0.5), 50, seed=3)
    path = tmp_path / "s.csv"
    tio.save_samples([batch], path, state_label="vacuum")
    back = tio.load_samples(path)
    assert len(back) == 1
    assert np.array_equal(back[0].outcomes, batch.outcomes)
    assert back[0].setting == batch.setting
    meta = json.loads((tmp_path / "s.csv.meta.json").read_text())
    assert meta["generator"] == "numpy-PCG64"
    assert meta["seed"] == 3


def test_density_roundtrip(tmp_path):
    rho = st.density_matrix(st.EvenCat(1.0, 0.5), 12)
    path = tmp_path / "rho.json"
    tio.save_density(rho, path)
    back = tio.load_density(path)
    assert np.array_equal(back.entries, rho.entries)
    payload = json.loads(path.read_text())
    assert payload["dim"] == 12
    assert len(payload["re"]) == 12 and len(payload["re"][0]) == 12


def test_two_mode_density_dims(tmp_path):
    rho = st.FockDensityMatrix(np.eye(6) / 6, dims=(2, 3))
    path = tmp_path / "rho2.json"
    tio.save_density(rho, path)
    back = tio.load_density(path)
    assert back.dims == (2, 3)


def test_float_format_precision():
    v = 1 / 3
    assert float(tio.format_float(v)) == v


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def test_cli_tomogram_vacuum(tmp_path, capsys):
    out = tmp_path / "vac.csv"
    rc = cli.main(["tomogram", "--state", "vacuum", "--settings", "circle:8", "--x", "-6:6:601", "--out", str(out)])
    assert rc == 0
    tomo = tio.load_tomogram(out)
    assert tomo.values.shape == (8, 601)
    assert np.max(np.abs(tomo.row_integrals() - 1.0)) < 1e-6
    manifest = json.loads((tmp_path / "vac.csv.manifest.json").read_text())
    assert manifest["command"] == "tomogram"
    assert manifest["version"] == sy.__version__
    assert "normalization" in capsys.readouterr().out


def test_cli_tomogram_cat_matches_closed_form(tmp_path):
    out = tmp_path / "cat.csv"
    rc = cli.main(["tomogram", "--state", "cat:a=1,b=1", "--settings", "0,1", "--out", str(out)])
    assert rc == 0
    tomo = tio.load_tomogram(out)
    expected = sy.marginal_analytic(st.EvenCat(1, 1), tomo.x, QuadratureSetting(0, 1))
    assert np.max(np.abs(tomo.values[0] - expected)) < 1e-12


def test_cli_parse_error_exit_code(tmp_path):
    assert cli.main(["tomogram", "--state", "cat", "--settings", "0,1", "--out", str(tmp_path / "x.csv")]) == 2
    assert cli.main(["tomogram", "--state", "nosuch", "--settings", "0,1", "--out", str(tmp_path / "x.csv")]) == 2
    assert cli.main(["nosuchcommand"]) == 2


def test_cli_grid_too_narrow_exit_code(tmp_path):
    rc = cli.main(
        ["tomogram", "--state", "thermal:lambda=0.3", "--settings", "1,0", "--x", "-1:1:101", "--out", str(tmp_path / "x.csv")]
    )
    assert rc == 3


def test_cli_sample_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        rc = cli.main(
            ["sample", "--state", "vacuum", "--scheme", "direct:mu=1,nu=0", "--n", "5000", "--seed", "7", "--out", str(out)]
        )
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv.meta.json").read_bytes() == (tmp_path / "b.csv.meta.json").read_bytes()


def test_cli_sample_squeezer_setting(tmp_path):
    out = tmp_path / "sq.csv"
    rc = cli.main(
        ["sample", "--state", "vacuum", "--scheme", "squeezer:s=0.69,theta=0", "--n", "10", "--seed", "1", "--out", str(out)]
    )
    assert rc == 0
    batch = tio.load_samples(out)[0]
    assert batch.setting.mu == pytest.approx(np.exp(-0.69))
    assert batch.setting.nu == pytest.approx(0.0, abs=1e-12)


def test_cli_sample_heterodyne_two_mode(tmp_path):
    out = tmp_path / "het.csv"
    rc = cli.main(
        [
            "sample",
            "--state",
            "gauss2:M=diag:0.5,0.5,0.5,0.5",
            "--scheme",
            "heterodyne:E1=1,E2=1,phi=0,th1=0,th2=1.57",
            "--n",
            "200",
            "--seed",
            "4",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    batch = tio.load_samples(out)[0]
    assert isinstance(batch.setting, TwoModeSetting)
    assert batch.outcomes.size == 200


def test_cli_reconstruct_tomogram_and_compare(tmp_path):
    tomo_path = tmp_path / "vac.csv"
    cli.main(["tomogram", "--state", "vacuum", "--settings", "circle:16", "--x", "-6:6:601", "--out", str(tomo_path)])
    rho_a = tmp_path / "a.json"
    rc = cli.main(["reconstruct", "--input", str(tomo_path), "--z", "1.0", "--dim", "5", "--out", str(rho_a)])
    assert rc == 0
    rho = tio.load_density(rho_a)
    assert abs(rho.entries[0, 0] - 1.0) < 1e-3
    report = json.loads((tmp_path / "a.json.report.json").read_text())
    assert report["trace_error"] < 1e-3

    rho_b = tmp_path / "b.json"
    cli.main(["reconstruct", "--input", str(tomo_path), "--z", "0.5", "--grid", "16:64:64", "--dim", "5", "--out", str(rho_b)])
    rc = cli.main(["compare", "--a", str(rho_a), "--b", str(rho_b), "--out", str(tmp_path / "cmp.json")])
    assert rc == 0
    cmp_result = json.loads((tmp_path / "cmp.json").read_text())
    assert cmp_result["fidelity"] >= 0.999


def test_cli_reconstruct_homodyne_method(tmp_path):
    tomo_path = tmp_path / "t.csv"
    cli.main(["tomogram", "--state", "thermal:lambda=0.5", "--settings", "circle:16", "--out", str(tomo_path)])
    out = tmp_path / "h.json"
    rc = cli.main(["reconstruct", "--input", str(tomo_path), "--method", "homodyne", "--dim", "8", "--out", str(out)])
    assert rc == 0
    rho = tio.load_density(out)
    assert abs(rho.entries[0, 0].real - 2 / 3) < 1e-2


def test_cli_reconstruct_from_samples(tmp_path):
    samples = tmp_path / "s.csv"
    cli.main(
        ["sample", "--state", "vacuum", "--scheme", "importance:n=16", "--n", "20000", "--seed", "9", "--out", str(samples)]
    )
    out = tmp_path / "rho.json"
    rc = cli.main(["reconstruct", "--input", str(samples), "--dim", "4", "--out", str(out)])
    assert rc == 0
    rho = tio.load_density(out)
    assert rho.entries[0, 0].real > 0.9


def test_cli_reconstruct_two_mode_tomogram(tmp_path):
    tomo_path = tmp_path / "t2.csv"
    rc = cli.main(
        ["tomogram", "--state", "gauss2:M=diag:0.5,0.5,0.5,0.5", "--settings", "hopf:6:6", "--out", str(tomo_path)]
    )
    assert rc == 0
    out = tmp_path / "rho2.json"
    rc = cli.main(["reconstruct", "--input", str(tomo_path), "--dim", "3", "--out", str(out)])
    assert rc == 0
    rho = tio.load_density(out)
    assert rho.dims == (3, 3)
    assert abs(rho.entries[0, 0] - 1.0) < 5e-3


def test_cli_io_error_exit_code(tmp_path):
    assert cli.main(["reconstruct", "--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o.json")]) == 4
    assert cli.main(["compare", "--a", str(tmp_path / "no.json"), "--b", str(tmp_path / "no.json")]) == 4


def test_cli_rerun_reproduces_outputs(tmp_path):
    # manifests aside (wall clock), rerunning a command is bit-identical
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    tomo_path = tmp_path / "t.csv"
    cli.main(["tomogram", "--state", "vacuum", "--settings", "circle:8", "--x", "-6:6:301", "--out", str(tomo_path)])
    for out in (out1, out2):
        cli.main(["reconstruct", "--input", str(tomo_path), "--dim", "4", "--out", str(out)])
    assert out1.read_bytes() == out2.read_bytes()


def test_cli_threads_flag_and_env(tmp_path, monkeypatch):
    base = tmp_path / "base.csv"
    threaded = tmp_path / "thr.csv"
    enved = tmp_path / "env.csv"
    args = ["tomogram", "--state", "cat:a=1,b=0.5", "--settings", "circle:6", "--x", "-8:8:301"]
    assert cli.main(args + ["--out", str(base)]) == 0
    assert cli.main(["--threads", "2"] + args + ["--out", str(threaded)]) == 0
    monkeypatch.setenv("SYMPLECTOMO_THREADS", "3")
    assert cli.main(args + ["--out", str(enved)]) == 0
    assert base.read_bytes() == threaded.read_bytes() == enved.read_bytes()


def test_report_embeds_density_schema(tmp_path):
    tomo_path = tmp_path / "t.csv"
    cli.main(["tomogram", "--state", "vacuum", "--settings", "circle:8", "--x", "-6:6:301", "--out", str(tomo_path)])
    out = tmp_path / "rho.json"
    cli.main(["reconstruct", "--input", str(tomo_path), "--dim", "4", "--out", str(out)])
    report = json.loads((tmp_path / "rho.json.report.json").read_text())
    assert report["density"]["dim"] == 4
    assert len(report["density"]["re"]) == 4
    assert set(report) >= {"trace_error", "hermiticity_residual", "min_eigenvalue", "settings_used", "samples_used"}


def test_cli_tomogram_thermal_variance(tmp_path):
    out = tmp_path / "th.csv"
    rc = cli.main(["tomogram", "--state", "thermal:lambda=0.5", "--settings", "1,0", "--out", str(out)])
    assert rc == 0
    tomo = tio.load_tomogram(out)
    var = np.trapezoid(tomo.values[0] * tomo.x**2, tomo.x)
    assert abs(var - 1.0) < 1e-4


def test_cli_compare_trivial_cases(tmp_path, capsys):
    vac = tmp_path / "vac.json"
    one = tmp_path / "one.json"
    tio.save_density(st.density_matrix(st.Vacuum(), 5), vac)
    tio.save_density(st.density_matrix(st.NumberState(1), 5), one)
    assert cli.main(["compare", "--a", str(vac), "--b", str(vac)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["fidelity"] == pytest.approx(1.0)
    assert cli.main(["compare", "--a", str(vac), "--b", str(one)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["fidelity"] == pytest.approx(0.0, abs=1e-12)
    assert out["trace_distance"] == pytest.approx(1.0)


def test_vector_tomogram_roundtrip(tmp_path):
    from symplectomo.twomode import TwoModeTomogram

    sigma = np.zeros((4, 4))
    sigma[0, 2] = sigma[1, 3] = 1.0
    sigma[2, 0] = sigma[3, 1] = -1.0
    s = TwoModeSetting(mu=[1.0, 0.0], nu=[0.0, 0.0], mu_p=[0.0, 1.0], nu_p=[0.0, 0.0])
    x1 = np.linspace(-2, 2, 5)
    x2 = np.linspace(-3, 3, 7)
    values = np.abs(np.random.default_rng(0).normal(size=(1, 5, 7)))
    tomo = TwoModeTomogram((s,), x1, values, x2=x2)
    path = tmp_path / "vec.csv"
    tio.save_two_mode_tomogram(tomo, path)
    back = tio.load_two_mode_tomogram(path)
    assert back.kind == "vector"
    assert np.array_equal(back.values, tomo.values)
    assert np.array_equal(back.x1, x1) and np.array_equal(back.x2, x2)
    assert back.settings[0].is_vector
