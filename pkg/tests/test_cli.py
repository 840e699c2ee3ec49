import csv
import io

import pytest

from softgrand.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_design_quantizer(capsys, tmp_path):
    code, out, _ = run(capsys, "design-quantizer", "--q", "2", "--esn0-db", "4", "--flavor", "nonuniform",
                       "--out", str(tmp_path / "q.txt"))
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("boundaries"))
    b = [float(x) for x in line.split()[1:]]
    assert b == pytest.approx([1.1352, 2.4582, 4.3560], abs=2e-2)
    assert "weights         1 3 6 11" in out
    assert len((tmp_path / "q.txt").read_text().splitlines()) == 4


def test_rates_capacity(capsys):
    code, out, _ = run(capsys, "rates", "--metric", "capacity", "--esn0-db", "4,7")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert float(rows[0]["capacity"]) == pytest.approx(0.7944, abs=5e-4)
    assert float(rows[1]["capacity"]) == pytest.approx(0.9507, abs=5e-4)


def test_rates_lm_with_code(capsys):
    code, out, _ = run(capsys, "rates", "--metric", "lm", "--q", "2", "--flavor", "heuristic",
                       "--ebn0-db", "4", "--code", "bch-31-16")
    assert code == 0
    assert 0.5 < float(out.splitlines()[1].split(",")[1]) < 1


def test_order_stats(capsys, tmp_path):
    code, out, _ = run(capsys, "order-stats", "--n", "16", "--esn0-db", "3", "--out", str(tmp_path / "o.csv"))
    assert code == 0
    assert out.splitlines()[0] == "r,e_l,var_l" and len(out.splitlines()) == 17
    assert (tmp_path / "o.csv").read_text().splitlines()[0] == "r,e_l,var_l"


def test_smax(capsys, tmp_path):
    code, out, _ = run(capsys, "smax", "--n", "128", "--k", "106", "--q", "3", "--flavor", "heuristic",
                       "--ebn0-db", "5.5", "--smax-tail", "1e-5", "--out", str(tmp_path / "s.csv"))
    assert code == 0
    assert "smax=38" in out
    assert (tmp_path / "s.csv").read_text().startswith("s,pmf,tail")


def test_simulate(capsys, tmp_path):
    path = tmp_path / "sim.csv"
    code, out, _ = run(capsys, "simulate", "--code", "bch-31-16", "--decoder", "orbgrand", "--ebn0-db", "2,3",
                       "--min-errors", "5", "--max-trials", "2000", "--seed", "3", "--out", str(path))
    assert code == 0
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 2 and float(rows[0]["bler"]) >= float(rows[1]["bler"])


def test_simulate_stdout(capsys):
    code, out, _ = run(capsys, "simulate", "--code", "hamming-7-4", "--decoder", "hard", "--esn0-db", "6",
                       "--min-errors", "3", "--max-trials", "1000")
    assert code == 0 and out.startswith("ebn0_db,trials,errors")


def test_code_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "code", "--list")
    assert code == 0 and "bch-31-16" in out.split()
    code, out, _ = run(capsys, "code", "--code", "bch-63-45", "--out", str(tmp_path / "c.txt"))
    assert code == 0 and "n=63 k=45" in out
    code, out, _ = run(capsys, "code", "--code-file", str(tmp_path / "c.txt"))
    assert code == 0 and "generator=yes" in out


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["rates", "--bogus"],
    ["rates", "--esn0-db", "four"],
    ["simulate", "--decoder", "magic", "--ebn0-db", "4"],
    ["simulate", "--decoder", "dsgrand", "--ebn0-db", "4"],
    ["code", "--code", "bch-2-1"],
    ["order-stats", "--n", "8", "--ebn0-db", "3"],
    ["design-quantizer", "--q", "2", "--esn0-db", "4", "--flavor", "optimal"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_numerical_failure_exit_3(capsys, monkeypatch):
    from softgrand import rates
    from softgrand.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("did not converge", best=0.5)

    monkeypatch.setattr(rates, "bpsk_capacity", boom)
    code, _, err = run(capsys, "rates", "--esn0-db", "4")
    assert code == 3 and "numerical" in err
