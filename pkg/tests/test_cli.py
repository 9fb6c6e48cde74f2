import json

import pytest

from ncpcg import load_matrix_market
from ncpcg.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_json(capsys):
    code, out, _ = run(capsys, "solve", "--gen", "lap2d:20", "--prec", "newton:nlev=2,scale=1.01")
    assert code == 0
    rep = json.loads(out)
    assert rep["schema"] == 1 and rep["report"]["converged"]


def test_solve_smoke_3d_unpreconditioned(capsys):
    code, out, _ = run(capsys, "solve", "--gen", "lap3d:12", "--prec", "none", "--tol", "1e-8")
    assert code == 0 and json.loads(out)["report"]["iters"] > 0


def test_solve_from_report(tmp_path, capsys):
    path = tmp_path / "r.json"
    assert main(["solve", "--gen", "lap3d:8", "--prec", "chebyshev:m=3", "--eigs", "power+dacg",
                 "--out", str(path)]) == 0
    first = json.loads(path.read_text())
    code, out, _ = run(capsys, "solve", "--from-report", str(path))
    assert code == 0 and json.loads(out)["report"]["iters"] == first["report"]["iters"]


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["solve", "--gen", "lap2d:10", "--prec", "bogus"],
        ["solve", "--gen", "lap9d:10"],
        ["solve"],
        ["solve", "--matrix", "/nonexistent.mtx"],
        ["--threads", "0", "solve", "--gen", "lap2d:4"],
        ["scaling", "16"],
        ["weak", "1:2"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(main(argv))
    assert exc.value.code == 1


def test_non_convergence_exit_2(capsys):
    code, out, _ = run(capsys, "solve", "--gen", "lap2d:30", "--maxit", "3")
    assert code == 2 and not json.loads(out)["report"]["converged"]


def test_indefinite_matrix_exit_2(tmp_path, capsys):
    p = tmp_path / "ind.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real symmetric\n3 3 5\n1 1 1\n2 1 3\n2 2 1\n3 2 0.5\n3 3 2\n")
    for prec in ("none", "newton:nlev=1"):
        code, _, err = run(capsys, "solve", "--matrix", str(p), "--prec", prec)
        assert code == 2 and "numerical failure" in err


def test_gen_writes_mtx(tmp_path, capsys):
    p = tmp_path / "g.mtx"
    assert main(["gen", "--gen", "lap3d:3", "--out", str(p)]) == 0
    assert load_matrix_market(p).n == 27


def test_sweep_csv(capsys):
    code, out, err = run(capsys, "--threads", "2", "sweep", "--gen", "identity:30", "--nlev", "0,1,2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "m,iter,ddot,matvec,true_rel_res,time"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["0", "1", "3"]
    assert all(int(ln.split(",")[1]) <= 1 for ln in lines[1:])
    assert "bounds" in err


def test_table1_small(tmp_path, capsys):
    csv_path = tmp_path / "t.csv"
    code, out, _ = run(capsys, "table1", "--nx", "10", "--out", str(csv_path))
    assert code == 0
    assert out.count("m,iter,mu_max,mu_min,l,kappa") == 2
    assert "# original" in out and "# scaled" in out
    rows = csv_path.read_text().splitlines()
    assert rows[0].startswith("block,tol,m,iters") and len(rows) == 13


def test_scaling_and_weak(capsys):
    code, out, _ = run(capsys, "scaling", "16:114.44", "512:6.15")
    assert code == 0
    assert out.splitlines()[-1].split(",")[-1].startswith("0.58")
    code, out, _ = run(capsys, "weak", "512:512:13.8", "2048:2048:710.5")
    assert code == 0 and ",51.48" in out


def test_spectrum_csv(tmp_path, capsys):
    p = tmp_path / "s.csv"
    code, _, err = run(capsys, "spectrum", "--nx", "10", "--m", "7", "--out", str(p))
    assert code == 0 and "kappa" in err
    lines = p.read_text().splitlines()
    assert lines[0] == "s,lambda,mu" and len(lines) == 101


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("NCPCG_THREADS", "3")
    code, out, _ = run(capsys, "solve", "--gen", "lap2d:10")
    assert code == 0 and json.loads(out)["config"]["threads"] == 3
