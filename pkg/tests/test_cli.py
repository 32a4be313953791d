import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from supergain import cli, datasets, wkb
from supergain.wkb import gap_delta, tau

SCHEMAS = {
    "profile": ["theta", "dir_025", "dir_033", "dir_025_flag", "dir_033_flag"],
    "eigs": ["k_1", "eig_1", "k_2", "eig_2", "k_5", "eig_5",
             "eig_1_flag", "eig_2_flag", "eig_5_flag"],
    "bmap": ["d", "limit_B", "B_x_1", "B_x_2", "B_x_3", "B_x_4", "B_x_5"],
    "bounds-n": ["N", "D", "G_rho1", "G_rho2", "G_rho3"],
    "bounds-loss": ["N", "Delta_rho1", "Delta_rho2", "Delta_rho3",
                    "G_rho1", "G_rho2", "G_rho3"],
    "tau-sweep": ["d", "tau", "tau_rho1", "tau_rho2", "tau_rho3"],
}


def parse_csv(text):
    comments = [ln for ln in text.splitlines() if ln.startswith("#")]
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    return comments, rows[0], rows[1:]


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_csv(capsys):
    code, out, _ = run_cli(["solve", "--n", "6", "--d", "0.25", "--rho", "1e-8"], capsys)
    assert code == 0
    comments, header, rows = parse_csv(out)
    assert header == ["n", "current_re", "current_im", "coef_re", "coef_im"]
    assert len(rows) == 6
    g = float(next(c for c in comments if c.startswith("# supergain:")).split(":")[1])
    assert g == pytest.approx(4.7455938344832016, rel=1e-11)
    j = np.array([float(r[1]) + 1j * float(r[2]) for r in rows])
    assert np.linalg.norm(j) == pytest.approx(1.0, abs=1e-11)


def test_solve_json(capsys):
    code, out, _ = run_cli(["solve", "--n", "5", "--d", "0.5", "--rho", "0.5",
                            "--theta", "30", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["gain"] == pytest.approx(5 / 1.5, rel=1e-12)
    assert doc["f_prime"] == pytest.approx(0.25)


def test_solve_truncate_and_dps(capsys):
    code, out, _ = run_cli(["solve", "--n", "20", "--d", "0.1", "--truncate", "--format", "json"],
                           capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["floor_limited"] and doc["n_truncated"] > 0
    code, out, _ = run_cli(["solve", "--n", "5", "--d", "0.001", "--dps", "60",
                            "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["supergain"] == pytest.approx(5, rel=1e-2)


@pytest.mark.parametrize("argv", [
    ["solve", "--n", "5", "--d", "0.7"],
    ["solve", "--n", "0", "--d", "0.2"],
    ["solve", "--n", "5", "--d", "0.2", "--rho", "-1"],
    ["solve", "--n", "5", "--d", "0.2", "--theta", "120"],
    ["bmap", "--d", "0.5"],
    ["bounds-n", "--d", "0.6", "--n", "20"],
    ["tau-sweep", "--d", "0.0"],
])
def test_domain_errors_exit_2(argv, capsys):
    code, _, err = run_cli(argv, capsys)
    assert code == cli.EXIT_DOMAIN
    assert "domain error" in err


def test_ill_conditioned_exit_3(capsys):
    code, _, err = run_cli(["solve", "--n", "20", "--d", "0.1", "--rho", "0"], capsys)
    assert code == cli.EXIT_NUMERICAL
    assert "numerical failure" in err


def small_args(cmd):
    return {
        "profile": ["--theta-steps", "19"],
        "eigs": ["--n", "5", "9", "21", "--d", "0.25"],
        "bmap": ["--d", "0.05", "0.25", "0.45"],
        "bounds-n": ["--n", "20", "60", "100"],
        "bounds-loss": ["--n", "100", "150", "200"],
        "tau-sweep": ["--d", "0.1", "0.3", "0.49", "--n", "41"],
    }[cmd]


@pytest.mark.parametrize("cmd", sorted(SCHEMAS))
def test_schema_and_provenance(cmd, tmp_path):
    out = tmp_path / "data.csv"
    assert cli.main([cmd, *small_args(cmd), "--out", str(out)]) == 0
    text = out.read_bytes().decode()
    assert "\r" not in text
    comments, header, rows = parse_csv(text)
    assert header == SCHEMAS[cmd]
    assert comments[1] == "# supergain-lab 0.1.0"
    assert f"# command: {cmd}" in comments
    for r in rows:
        assert len(r) == len(header)
        for cell in r:
            assert cell == "" or math.isfinite(float(cell))


@pytest.mark.parametrize("cmd", sorted(SCHEMAS))
def test_json_matches_csv(cmd, capsys):
    assert cli.main([cmd, *small_args(cmd)]) == 0
    _, header, rows = parse_csv(capsys.readouterr().out)
    assert cli.main([cmd, *small_args(cmd), "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["columns"] == header
    assert len(doc["rows"]) == len(rows)
    for jr, cr in zip(doc["rows"], rows):
        for jv, cv in zip(jr, cr):
            if cv == "":
                assert jv is None
            else:
                assert jv == pytest.approx(float(cv), rel=1e-11)


def test_profile_rows_and_ordering():
    ds = datasets.profile_dataset()
    assert len(ds.rows) == 181
    th = np.array([r[0] for r in ds.rows])
    g025 = np.array([r[1] for r in ds.rows])
    assert th[0] == -90 and th[-1] == 90
    assert g025[th == 0][0] < g025[th == 90][0]
    # N = 6 stays well above the precision floor, so rho is used as given
    assert "substitution" not in ds.provenance
    assert ds.provenance["rho_used"] == "1e-16"


def test_profile_substitutes_floor_limited_rho():
    ds = datasets.profile_dataset(N=30, theta_steps=7)
    assert "substitution" in ds.provenance
    assert ds.provenance["rho_used"] == "1e-12"
    assert all(r[3] == 0 and r[4] == 0 for r in ds.rows)


def test_profile_half_wavelength_column_is_flat():
    ds = datasets.profile_dataset(ds=(0.5,), theta_steps=13, rho=0.0, substitute=False)
    np.testing.assert_allclose([r[1] for r in ds.rows], 1.0, rtol=1e-12)


def test_profile_exact_rho_flags_truncation():
    ds = datasets.profile_dataset(N=30, theta_steps=5, substitute=False)
    assert "substitution" not in ds.provenance
    flags = [r[3] for r in ds.rows] + [r[4] for r in ds.rows]
    assert max(flags) > 0


def test_eigs_dataset_shape():
    ds = datasets.eigs_dataset()
    cols = ds.columns
    assert cols[:2] == ["k_5", "eig_5"]
    assert cols[2:4] == ["k_10", "eig_10"]
    assert cols[4:6] == ["k_30", "eig_30"]
    assert len(ds.rows) == 241
    first = ds.rows[0]
    assert first[1] == pytest.approx(1.0, abs=1e-12)
    # the 2dN = 60.25 transition: eigenvalues near one half around k / N0 = 1
    k = np.array([r[4] for r in ds.rows])
    e = np.array([r[5] for r in ds.rows])
    near = e[np.argmin(np.abs(k - 1.0))]
    assert 0.2 < near < 0.8
    # shorter series are padded with empty cells
    assert ds.rows[100][0] is None
    assert "eig_5" in ds.to_csv().splitlines()[-242]


def test_bmap_limits():
    ds = datasets.bmap_dataset(ds=[0.05, 0.25, 0.45])
    for d, lim, b0, *mid, b1 in ds.rows:
        assert lim == pytest.approx(-math.cos(2 * math.pi * d))
        assert b0 == lim and b1 == 1.0
        assert np.all(np.diff([b0, *mid, b1]) > 0)


def test_bounds_datasets_structure():
    ds = datasets.bounds_n_dataset(Ns=[20, 40])
    D = [r[1] for r in ds.rows]
    assert D[0] == pytest.approx(20 * tau(0.45))
    assert D[1] == pytest.approx(2 * D[0])
    loss = datasets.bounds_loss_dataset(Ns=[100, 200])
    for i, rho in enumerate((1e-1, 1e-2, 1e-3)):
        assert loss.rows[0][1 + i] == loss.rows[1][1 + i] == gap_delta(0.45, rho)


def test_tau_dataset_small_near_half():
    ds = datasets.tau_dataset(ds=[0.49])
    assert ds.rows[0][1] < 0.05


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("SUPERGAIN_THREADS", "3")
    assert datasets.thread_count() == 3
    monkeypatch.setenv("SUPERGAIN_THREADS", "0")
    assert datasets.thread_count() == 1
    monkeypatch.setenv("SUPERGAIN_THREADS", "many")
    assert datasets.thread_count() >= 1
    monkeypatch.delenv("SUPERGAIN_THREADS")
    assert 1 <= datasets.thread_count() <= 8


def test_output_independent_of_thread_count(monkeypatch):
    texts = []
    for n in ("1", "4"):
        monkeypatch.setenv("SUPERGAIN_THREADS", n)
        wkb._wkb_table.cache_clear()
        texts.append(datasets.bounds_n_dataset(Ns=[20, 50, 80]).to_csv())
    assert texts[0] == texts[1]


@pytest.mark.parametrize("cmd", ["eigs", "bounds-loss"])
def test_fresh_processes_byte_identical(cmd, tmp_path):
    paths = []
    for i in range(2):
        p = tmp_path / f"{i}.csv"
        subprocess.run([sys.executable, "-m", "supergain.cli", cmd, *small_args(cmd),
                        "--out", str(p)], check=True)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out
