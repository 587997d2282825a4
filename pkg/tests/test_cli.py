"""Command-line interface tests: schemas, determinism, exit codes."""

import io
import json

import pytest

from harqlab.cli import (EXIT_BUDGET, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE,
                         main)

G1_R5_L50 = 31.16781499459332


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


class TestGlNodes:
    def test_order_one_table(self):
        code, text = run(["gl-nodes", "--n", "1"])
        assert code == EXIT_OK
        assert text.splitlines() == ["i,node,weight", "1,1.0,1.0"]

    def test_header_and_rows(self):
        code, text = run(["gl-nodes", "--n", "5"])
        lines = text.splitlines()
        assert lines[0] == "i,node,weight"
        assert len(lines) == 6


class TestComplexity:
    def test_reference_counts(self):
        code, text = run(["complexity", "--m", "5", "--n", "20"])
        assert code == EXIT_OK
        row = text.splitlines()[1].split(",")
        assert row[:4] == ["5", "20", "16000000", "53129"]

    def test_multiple_orders(self):
        code, text = run(["complexity", "--m", "3", "--n", "10,100"])
        assert len(text.splitlines()) == 3


class TestBler:
    def test_asy_reference_value(self):
        code, text = run(["bler", "--method", "asy", "--snr-db", "40",
                          "--m", "1"])
        assert code == EXIT_OK
        row = text.splitlines()[1].split(",")
        assert float(row[3]) == pytest.approx(G1_R5_L50 / 1e4, rel=1e-12)

    def test_schema(self):
        code, text = run(["bler", "--method", "gl-dp", "--snr-db", "10,15",
                          "--m", "2", "--n", "8"])
        lines = text.splitlines()
        assert lines[0] == "snr_db,m,method,bler,stderr,q_evals,wall_ms"
        assert len(lines) == 5  # 2 SNRs x 2 horizons

    def test_mc_seed_determinism(self):
        # byte-identical up to the wall-clock diagnostic column
        args = ["bler", "--method", "mc", "--snr-db", "12", "--m", "2",
                "--samples", "20000", "--seed", "7"]
        _, a = run(args)
        _, b = run(args)
        strip = lambda text: [line.rsplit(",", 1)[0]
                              for line in text.splitlines()]
        assert strip(a) == strip(b)

    def test_flag_validation(self):
        code, _ = run(["bler", "--method", "trap", "--snr-db", "10",
                       "--m", "2", "--n", "20"])
        assert code == EXIT_USAGE
        code, _ = run(["bler", "--method", "gl-dp", "--snr-db", "10",
                       "--m", "2", "--k", "100"])
        assert code == EXIT_USAGE
        code, _ = run(["bler", "--method", "gl-dp", "--snr-db", "10",
                       "--m", "2", "--samples", "10"])
        assert code == EXIT_USAGE

    def test_unknown_flag_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            run(["bler", "--method", "gl-dp", "--warp", "9"])
        assert exc.value.code == 2

    def test_budget_exit(self):
        code, _ = run(["bler", "--method", "gl", "--snr-db", "10",
                       "--m", "8", "--n", "14"])
        assert code == EXIT_BUDGET


class TestSweep:
    def test_small_sweep_schema(self):
        code, text = run(["sweep", "--figure", "bler-vs-m", "--m", "2",
                          "--snr-db", "15", "--samples", "2000",
                          "--k", "200", "--n", "8"])
        lines = text.splitlines()
        assert code == EXIT_OK
        assert lines[0] == "figure,snr_db,m,l,r,method,bler,stderr"
        # 4 methods x 2 horizons
        assert len(lines) == 9

    def test_blocklength_sweep_keeps_info_bits(self):
        code, text = run(["sweep", "--figure", "bler-vs-l", "--m", "2",
                          "--snr-db", "20", "--samples", "2000",
                          "--k", "200", "--n", "8"])
        assert code == EXIT_OK
        for line in text.splitlines()[1:]:
            parts = line.split(",")
            assert float(parts[3]) * float(parts[4]) == pytest.approx(1000.0)


class TestOptimize:
    def test_feasible_allocation(self):
        code, text = run(["optimize", "gp", "--pbar-db", "10,20",
                          "--bler-max", "0.01", "--m", "2", "--r", "1"])
        assert code == EXIT_OK
        lines = text.splitlines()
        assert lines[0].startswith("pbar_db,feasible,p1,p2,ltat_asy")
        assert len(lines) == 3
        assert all(line.split(",")[1] == "true" for line in lines[1:])

    def test_infeasible_exit(self):
        code, text = run(["optimize", "gp", "--pbar-db", "20",
                          "--bler-max", "0.01", "--m", "2", "--r", "5"])
        assert code == EXIT_INFEASIBLE
        assert text.splitlines()[1].split(",")[1] == "false"


class TestSimulate:
    def test_json_report_identity(self):
        code, text = run(["simulate", "--policy", "200,200", "--slots",
                          "5000", "--seed", "3"])
        assert code == EXIT_OK
        rep = json.loads(text)
        assert rep["ltat"] == rep["delivered"] * 5.0 / rep["slot_count"]
        assert rep["slot_count"] == 5000

    def test_seed_determinism(self):
        args = ["simulate", "--policy", "50,60", "--slots", "4000",
                "--seed", "11"]
        assert run(args)[1] == run(args)[1]
