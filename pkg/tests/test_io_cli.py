import csv
import io
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from conftest import FIXTURES, random_mask
from pcrank.cli import (
    DISTRIBUTION_AGG_COLUMNS,
    SENSITIVITY_AGG_COLUMNS,
    build_parser,
    main,
    ranking_string,
    read_config,
    resolve,
    CliError,
)
from pcrank.core import validate
from pcrank.errors import (
    CalibrationFailedError,
    DiagonalNotOneError,
    NonSquareError,
    ParseError,
    ReciprocityViolationError,
    TooSmallError,
)
from pcrank.indices import report
from pcrank.io import (
    INDEX_CSV_COLUMNS,
    fmt_number,
    format_matrix,
    index_csv,
    parse_cell,
    parse_matrix_file,
    parse_matrix_text,
    write_matrix_file,
)
from pcrank.montecarlo import ExperimentRecord

GOLDEN = Path(__file__).parent / "golden"


def run(argv):
    out = io.StringIO()
    status = main([str(a) for a in argv], out=out)
    return status, out.getvalue()


class TestParse:
    def test_example2_file(self, example2):
        assert parse_matrix_file(FIXTURES / "example2.csv") == example2

    def test_compact_spacing(self, example2):
        assert parse_matrix_text("1,3,?\n1/3,1,3\n?,1/3,1\n") == example2

    def test_rationals_exact(self):
        C = parse_matrix_text("1, 1/3\n3, 1\n")
        assert C.value(0, 1) == 1 / 3

    def test_blank_lines_skipped(self, example2):
        assert parse_matrix_text("\n1,3,?\n\n1/3,1,3\n?,1/3,1\n\n") == example2

    @pytest.mark.parametrize("token, value", [("2", 2.0), (" 0.5 ", 0.5), ("1/8", 0.125), ("?", None), ("1e2", 100.0)])
    def test_cells(self, token, value):
        assert parse_cell(token) == value

    @pytest.mark.parametrize("token", ["abc", "1/0", "", "1//2"])
    def test_bad_cells(self, token):
        with pytest.raises(ParseError):
            parse_cell(token)

    def test_location_reported(self):
        with pytest.raises(ParseError, match="line 2, column 3"):
            parse_matrix_text("1,2,3\n1/2,1,x\n1/3,?,1\n")

    def test_single_cell(self):
        with pytest.raises((TooSmallError, NonSquareError)):
            parse_matrix_text("1\n")

    def test_diagonal_missing(self):
        with pytest.raises(DiagonalNotOneError, match="line 2, column 2"):
            parse_matrix_text("1,2\n1/2,?\n")

    def test_ragged(self):
        with pytest.raises(NonSquareError):
            parse_matrix_text("1,2,3\n1/2,1\n1/3,1,1\n")

    def test_reciprocity_located(self):
        with pytest.raises(ReciprocityViolationError, match="line"):
            parse_matrix_text("1,3\n3,1\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            parse_matrix_file(tmp_path / "nope.csv")

    def test_round_trip(self, tmp_path, rng):
        for _ in range(20):
            C = random_mask(int(rng.integers(2, 9)), rng, 0.4)
            path = tmp_path / "m.csv"
            write_matrix_file(C, path)
            assert parse_matrix_file(path) == C

    def test_format_example2(self, example2):
        assert format_matrix(example2).splitlines()[0] == "1.0, 3.0, ?"


class TestFormatting:
    @pytest.mark.parametrize("x, s", [(0.15, "0.15"), (0.225, "0.225"), (16, "16"), (None, ""),
                                      (1 / 3, "0.333333"), (0.4960317, "0.496032"), (2.0, "2")])
    def test_fmt_number(self, x, s):
        assert fmt_number(x) == s

    def test_index_csv_header(self, c1):
        text = index_csv(report(c1, 2, 1))
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == INDEX_CSV_COLUMNS
        assert rows[0] == "n,missing,ci,alpha,beta,iid_alpha,ii_beta,spanning_trees,tree_index,compound".split(",")
        assert rows[1] == ["5", "3", "", "2", "1", "0.15", "0.225", "16", "0.496032", "0.03375"]

    @pytest.mark.parametrize("w, s", [([0.3, 0.5, 0.2], "a2 > a1 > a3"), ([0.4, 0.4, 0.2], "a1 = a2 > a3"),
                                      ([0.25] * 4, "a1 = a2 = a3 = a4")])
    def test_ranking_string(self, w, s):
        assert ranking_string(w) == s


@pytest.mark.parametrize(
    "golden, argv",
    [
        ("rank_example1_evm.txt", ["rank", FIXTURES / "example1.csv"]),
        ("rank_example1_gmm.txt", ["rank", FIXTURES / "example1.csv", "--method", "gmm"]),
        ("rank_example2_harker.txt", ["rank", FIXTURES / "example2.csv", "--method", "harker"]),
        ("indices_c1.txt", ["indices", FIXTURES / "c1.csv", "--alpha", "2", "--beta", "1"]),
        ("indices_c2.txt", ["indices", FIXTURES / "c2.csv", "--alpha", "2", "--beta", "1"]),
        ("indices_example2.txt", ["indices", FIXTURES / "example2.csv"]),
    ],
)
def test_golden(golden, argv):
    status, text = run(argv)
    assert status == 0
    assert text == (GOLDEN / golden).read_text()


class TestRank:
    def test_example1_content(self):
        _, text = run(["rank", FIXTURES / "example1.csv"])
        assert "ranking: a2 > a3 > a1 > a4" in text
        assert "lambda_max: 5.887513" in text

    def test_example2_harker(self):
        _, text = run(["rank", FIXTURES / "example2.csv", "--method", "harker"])
        assert "a1: 0.692308" in text and "a3: 0.076923" in text

    def test_gmm_incomplete_exit_2(self, capsys):
        status, _ = run(["rank", FIXTURES / "example2.csv", "--method", "gmm"])
        assert status == 2
        assert capsys.readouterr().err.startswith("error[incomplete-matrix]:")

    def test_harker_disconnected_exit_2(self, capsys):
        status, _ = run(["rank", FIXTURES / "empty3.csv", "--method", "harker"])
        assert status == 2
        err = capsys.readouterr().err
        assert err.startswith("error[not-irreducible]:") and "{a2}" in err

    def test_parse_error_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,x\n?,1\n")
        assert run(["rank", bad])[0] == 1
        err = capsys.readouterr().err
        assert err.startswith("error[parse-error]: line 1, column 2")
        assert err.count("\n") == 1

    def test_validation_error_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,3\n3,1\n")
        assert run(["rank", bad])[0] == 1
        assert capsys.readouterr().err.startswith("error[reciprocity-violation]:")

    def test_unknown_flag_exit_1(self, capsys):
        assert run(["rank", FIXTURES / "example1.csv", "--bogus"])[0] == 1
        assert capsys.readouterr().err.startswith("error[usage]:")

    def test_unknown_method_exit_1(self):
        assert run(["rank", FIXTURES / "example1.csv", "--method", "lsm"])[0] == 1

    def test_method_from_config(self, tmp_path):
        cfg = tmp_path / "pc.conf"
        cfg.write_text("method = gmm\n")
        _, text = run(["rank", FIXTURES / "example1.csv", "--config", cfg])
        assert "method: gmm" in text


class TestIndicesCommand:
    def test_complete_k4(self):
        _, text = run(["indices", FIXTURES / "consistent4.csv"])
        assert "spanning_trees: 16" in text
        for key in ("iid_alpha", "ii_beta", "tree_index", "compound"):
            assert f"{key}: 0\n" in text

    def test_csv_file(self, tmp_path):
        path = tmp_path / "out.csv"
        assert run(["indices", FIXTURES / "c1.csv", "--alpha", "2", "--csv", path])[0] == 0
        assert path.read_text().splitlines()[0] == ",".join(INDEX_CSV_COLUMNS)

    def test_order_two(self, tmp_path, capsys):
        path = tmp_path / "two.csv"
        path.write_text("1, 2\n1/2, 1\n")
        status, text = run(["indices", path])
        assert status == 0
        assert "iid_alpha: 0" in text and "spanning_trees: 1" in text
        assert "error[undefined-for-order-two]" in capsys.readouterr().err


class TestCheck:
    def test_example2(self):
        status, text = run(["check", FIXTURES / "example2.csv"])
        assert status == 0 and text.endswith("rankable\n")

    def test_empty(self):
        status, text = run(["check", FIXTURES / "empty3.csv"])
        assert status == 3
        assert "not rankable: components {a1} {a2} {a3}" in text
        assert "tree index is 1" in text

    def test_star(self):
        status, text = run(["check", FIXTURES / "star5.csv", "--alpha", "2"])
        assert status == 0
        assert "attains the rankability bound 0.45" in text

    def test_complete_no_warning(self):
        status, text = run(["check", FIXTURES / "consistent4.csv"])
        assert (status, text) == (0, "rankable\n")

    def test_missing_file_exit_1(self, tmp_path):
        assert run(["check", tmp_path / "none.csv"])[0] == 1


class TestConfig:
    def test_read(self, tmp_path):
        path = tmp_path / "c.conf"
        path.write_text("# comment\nalpha = 2\nmatrix-count=5\n\nseed = 9  # trailing\n")
        assert read_config(path) == {"alpha": 2.0, "matrix_count": 5, "seed": 9}

    @pytest.mark.parametrize("text", ["alpha 2\n", "colour = red\n", "seed = x\n"])
    def test_bad(self, tmp_path, text):
        path = tmp_path / "c.conf"
        path.write_text(text)
        with pytest.raises(CliError) as info:
            read_config(path)
        assert info.value.status == 1

    def test_precedence(self, tmp_path):
        path = tmp_path / "c.conf"
        path.write_text("alpha = 3\nbeta = 2\n")
        args = build_parser().parse_args(["indices", "x.csv", "--config", str(path), "--alpha", "1.25"])
        s = resolve(args)
        assert (s["alpha"], s["beta"], s["tol"]) == (1.25, 2.0, 1e-12)

    def test_defaults(self):
        s = resolve(build_parser().parse_args(["indices", "x.csv"]))
        assert (s["alpha"], s["beta"], s["tol"]) == (1.5, 1.0, 1e-12)

    def test_config_drives_indices(self, tmp_path):
        path = tmp_path / "c.conf"
        path.write_text("alpha = 2\n")
        _, text = run(["indices", FIXTURES / "c1.csv", "--config", path])
        assert "iid_alpha: 0.15" in text


SMALL = ["--n", "5", "--matrix-count", "3", "--seed", "4", "--calibration-samples", "60"]


class TestExperiment:
    def test_sensitivity_null(self, tmp_path):
        status, text = run(["experiment-sensitivity", *SMALL, "--ci-targets", "0", "-o", tmp_path])
        assert status == 0
        rows = list(csv.DictReader(open(tmp_path / "aggregate.csv")))
        assert rows and list(rows[0]) == SENSITIVITY_AGG_COLUMNS
        assert all(float(r["mean_manhattan"]) < 1e-8 and float(r["mean_kendall"]) < 1e-8 for r in rows)
        header = (tmp_path / "records.csv").read_text().splitlines()[0]
        assert header == ",".join(ExperimentRecord.columns())
        assert header == "seed,base_id,ci_group,ci_actual,k,scheme,iid_alpha,ii_beta,tree_index,compound,manhattan,kendall_rescaled,converged"
        assert "records: 21 (0 excluded" in text

    def test_distribution_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert run(["experiment-distribution", *SMALL, "--ci", "0.1", "-o", d])[0] == 0
        for name in ("records.csv", "aggregate.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
        assert (a / "aggregate.csv").read_text().splitlines()[0] == ",".join(DISTRIBUTION_AGG_COLUMNS)

    def test_workers_do_not_change_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["experiment-sensitivity", *SMALL, "--ci-targets", "0.01,0.1", "--workers", "1", "-o", a])
        run(["experiment-sensitivity", *SMALL, "--ci-targets", "0.01,0.1", "--workers", "3", "-o", b])
        assert (a / "records.csv").read_bytes() == (b / "records.csv").read_bytes()
        assert (a / "aggregate.csv").read_bytes() == (b / "aggregate.csv").read_bytes()

    def test_env_thread_cap(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PCRANK_THREADS", "2")
        a = tmp_path / "a"
        assert run(["experiment-sensitivity", *SMALL, "--ci-targets", "0.05", "-o", a])[0] == 0

    @pytest.mark.parametrize(
        "extra",
        [["--n", "2"], ["--matrix-count", "0"], ["--ci-targets", "0.2,0.1"], ["--ci-targets", "a,b"],
         ["--alpha", "0.5"], ["--bins", "0"]],
    )
    def test_config_errors_exit_1(self, tmp_path, extra):
        assert run(["experiment-sensitivity", *SMALL, *extra, "-o", tmp_path])[0] == 1

    def test_calibration_failure_exit_4(self, tmp_path, capsys, monkeypatch):
        import pcrank.cli

        def fail(cfg):
            raise CalibrationFailedError("mean CI 0.1 not reachable")

        monkeypatch.setattr(pcrank.cli, "calibrate_ladder", fail)
        status, _ = run(["experiment-distribution", *SMALL, "-o", tmp_path])
        assert status == 4
        assert capsys.readouterr().err.startswith("error[calibration-failed]:")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pcrank", "check", str(FIXTURES / "example2.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().endswith("rankable")


def test_cli_output_stable_across_runs():
    assert run(["rank", FIXTURES / "example1.csv"]) == run(["rank", FIXTURES / "example1.csv"])


def test_parse_matches_validate():
    C = validate([[1, 2, None], [0.5, 1, 4], [None, 0.25, 1]])
    assert parse_matrix_text(format_matrix(C)) == C
    assert np.isnan(C.values[0, 2])
