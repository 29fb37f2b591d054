"""Tests for the command-line driver: routing, report content, exit codes,
and determinism of the structured output."""

import io
import json
import sys

import pytest

from cataleq import cli, corpus


def run_cli(argv):
    """Invoke main() with captured stdout/stderr."""
    out, err = io.StringIO(), io.StringIO()
    old = sys.stdout, sys.stderr
    sys.stdout, sys.stderr = out, err
    try:
        code = cli.main(argv)
    finally:
        sys.stdout, sys.stderr = old
    return code, out.getvalue(), err.getvalue()


# ---------------------------------------------------------------------------
# basic plumbing
# ---------------------------------------------------------------------------

def test_list_builtins():
    code, out, _ = run_cli(["--list", "ignored"])
    assert code == 0
    assert "dyck" in out and "planar_maps" in out


def test_unknown_input_is_parse_error():
    code, _, err = run_cli(["definitely_not_a_model"])
    assert code == cli.EXIT_PARSE
    assert "no builtin or file" in err


def test_bad_target_is_parse_error():
    code, _, err = run_cli(["dyck", "--target", "F9"])
    assert code == cli.EXIT_PARSE


def test_non_iterable_equation_is_parse_error():
    code, _, err = run_cli(["triangulations"])
    assert code == cli.EXIT_PARSE


def test_dsl_file_input(tmp_path):
    path = tmp_path / "walks.eq"
    path.write_text(corpus.builtin_source("dyck"))
    code, out, _ = run_cli([str(path), "--order", "10"])
    assert code == 0
    assert "t^2*x1^2 - x1 + 1" in out


# ---------------------------------------------------------------------------
# routing and certificates
# ---------------------------------------------------------------------------

def test_dyck_auto_routes_to_kernel():
    code, out, _ = run_cli(["dyck", "--order", "12"])
    assert code == 0
    assert "strategy: kernel" in out
    assert "t^2*x1^2 - x1 + 1 = 0" in out
    assert "agree" in out


def test_planar_maps_auto_routes_to_quadratic():
    code, out, _ = run_cli(["planar_maps", "--order", "16"])
    assert code == 0
    assert "strategy: quadratic" in out
    assert "27*t^2*x1^2 - 18*t*x1 + 16*t + x1 - 1 = 0" in out


def test_explicit_strategy_quadratic():
    code, out, _ = run_cli(["planar_maps", "--strategy", "quadratic",
                            "--order", "16"])
    assert code == 0
    assert "27*t^2*x1^2" in out


def test_wrong_strategy_fails_cleanly():
    code, _, err = run_cli(["dyck", "--strategy", "quadratic",
                            "--order", "12"])
    assert code == cli.EXIT_NONGENERIC
    assert "strategy failed" in err


def test_order_escalation_for_large_certificates():
    # the degree-10 relation needs residuals past t^48; order 12 must
    # escalate instead of failing
    code, out, _ = run_cli(["walk_3_2", "--order", "12"])
    assert code == 0
    assert "t^10*x1^10" in out


def test_double_root_auto_routes_to_multiplicity():
    code, out, _ = run_cli(["double_root", "--order", "12"])
    assert code == 0
    assert "strategy: multiplicity" in out
    assert "verification: PASSED" in out
    assert "x1 = -t" in out and "x2 = 1" in out


def test_trace_flag_adds_steps():
    code, plain, _ = run_cli(["dyck", "--order", "10"])
    code2, traced, _ = run_cli(["dyck", "--order", "10", "--trace"])
    assert code == code2 == 0
    assert "trace:" not in plain
    assert "trace:" in traced


# ---------------------------------------------------------------------------
# structured output
# ---------------------------------------------------------------------------

def test_structured_output_is_json_and_deterministic():
    argv = ["dyck", "--order", "12", "--emit", "structured"]
    code1, out1, _ = run_cli(argv)
    code2, out2, _ = run_cli(argv)
    assert code1 == code2 == 0
    assert out1 == out2
    report = json.loads(out1)
    assert report["schema_version"] == 1
    assert report["strategy"] == "kernel"
    assert report["certificates"][0]["relation"] == "t^2*x1^2 - x1 + 1"
    assert report["oracle_checks"][0]["result"] == "agree"


def test_structured_series_table_content():
    code, out, _ = run_cli(["planar_maps", "--order", "10", "--emit",
                            "structured"])
    assert code == 0
    report = json.loads(out)
    rows = {r["t_power"]: r["coefficient"] for r in report["series"]}
    assert rows[0] == "1"
    assert report["unknown_series"][0]["label"] == "F(1)"


def test_builtin_and_file_reports_match(tmp_path):
    path = tmp_path / "copy.eq"
    path.write_text(corpus.builtin_source("planar_maps"))
    argv = ["--order", "10", "--emit", "structured"]
    _, a, _ = run_cli(["planar_maps"] + argv)
    _, b, _ = run_cli([str(path)] + argv)
    ra, rb = json.loads(a), json.loads(b)
    for key in ("series", "unknown_series", "certificates", "roots"):
        assert ra[key] == rb[key]
