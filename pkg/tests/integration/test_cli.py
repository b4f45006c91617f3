import io

import orjson
import pandas as pd
import pytest

from app.cli.commands import (
    EXIT_CHECK_FAILED,
    EXIT_HYPOTHESIS_VIOLATED,
    EXIT_INVALID_INPUT,
    EXIT_OK,
    exit_code_for,
    main,
)
from app.schemas.schemas import OrderCheck, VerificationReport


def _stdout_json(capsys):
    return orjson.loads(capsys.readouterr().out)


def _error(capsys):
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith('{"error"')]
    assert lines, "no structured error on stderr"
    return orjson.loads(lines[-1])["error"]


def test_verify_gf_against_closed_form(capsys):
    code = main(["verify", "--family", "f", "--function", "exp(x)", "--order", "4", "--grid", "x=0:1:9"])
    report = _stdout_json(capsys)
    assert code == EXIT_OK
    assert report["passed"] is True
    assert [c["order"] for c in report["checks"]] == [0, 1, 2, 3, 4]
    assert {c["reference"] for c in report["checks"]} == {"oracle"}
    assert all(c["compared_points"] == 9 for c in report["checks"])
    assert {i["name"] for i in report["identities"]} >= {"first_bianchi", "second_bianchi", "metric_compatibility"}
    assert report["config"]["family"] == "f"
    assert "tool_version" in report


@pytest.mark.parametrize("f", ["x", "x^2", "exp(x)", "x^3 - x"])
def test_verify_gf_to_fifth_order(f, capsys):
    code = main(["verify", "--family", "f", "--function", f, "--order", "5", "--grid", "x=0.1:1:9"])
    report = _stdout_json(capsys)
    assert code == EXIT_OK
    assert report["passed"] is True
    assert [c["compared_points"] for c in report["checks"]] == [9] * 6


def test_verify_gh_against_closed_form(capsys):
    code = main(["verify", "--family", "h", "--function", "t^3", "--order", "2", "--grid", "t=1:2:9"])
    report = _stdout_json(capsys)
    assert code == EXIT_OK
    assert report["passed"] is True


def test_verify_beyond_known_closed_form_uses_identities(capsys):
    code = main(["verify", "--family", "h", "--function", "exp(t)", "--order", "3", "--grid", "t=0:1:3"])
    report = _stdout_json(capsys)
    assert code == EXIT_OK
    assert [c["reference"] for c in report["checks"]] == ["oracle", "oracle", "oracle", "identities"]
    assert report["checks"][3]["note"]


def test_verify_custom_metric(capsys):
    code = main([
        "verify", "--family", "custom", "--component", "tt=exp(2*x)", "--component", "xy=1",
        "--order", "1", "--grid", "x=0:1:3",
    ])
    report = _stdout_json(capsys)
    assert code == EXIT_OK
    assert {c["reference"] for c in report["checks"]} == {"identities"}


def test_malformed_function_is_a_parse_error(capsys):
    code = main(["verify", "--family", "f", "--function", "exp(x", "--grid", "x=0:1:3"])
    error = _error(capsys)
    assert code == EXIT_INVALID_INPUT
    assert error["code"] == "PARSE_ERROR"
    assert error["field"] == "expression"


def test_classify_cubic_h(capsys):
    code = main(["classify", "--family", "h", "--function", "t^3", "--order", "2", "--grid", "t=1:2:9"])
    report = _stdout_json(capsys)
    assert code == EXIT_OK
    verdicts = {v["property"]: v["status"] for v in report["verdicts"]}
    assert verdicts == {
        "CH_0": "pass",
        "CH_1(1,3)": "pass",
        "CH_2(1,3)": "pass",
        "SCH_1(1,3)": "pass",
        "SCH_2(1,3)": "fail",
    }
    assert report["epsilon"] == 1
    assert report["not_locally_homogeneous"] is True


def test_classify_output_is_reproducible(capsys):
    argv = ["classify", "--family", "f", "--function", "exp(x)", "--order", "2", "--grid", "x=0:1:5",
            "--workers", "3"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    second = capsys.readouterr().out
    assert first == second


def test_invariants_table(capsys):
    code = main(["invariants", "--family", "f", "--function", "exp(x)", "--grid", "x=0:0:1"])
    table = _stdout_json(capsys)
    assert code == EXIT_OK
    assert len(table["rows"]) == 1
    row = table["rows"][0]
    assert row["invariants"]["Xi_f"] == pytest.approx(9.0)
    assert row["quantities"]["epsilon"] == -1.0


def test_invariants_csv(capsys):
    code = main(["invariants", "--family", "h", "--function", "t^3", "--grid", "t=1:2:3", "--format", "csv"])
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert code == EXIT_OK
    assert list(frame.columns[:5]) == ["t", "x", "y", "excluded", "reason"]
    assert "Xi_h" in frame.columns
    assert frame["xi_X"].tolist() == pytest.approx([-0.5, -0.5, -0.5])


def test_empty_grid_is_rejected(capsys):
    code = main(["classify", "--family", "f", "--function", "x^2", "--grid", "x=0:1:0"])
    error = _error(capsys)
    assert code == EXIT_INVALID_INPUT
    assert error["field"] == "grid"


def test_unknown_grid_coordinate_is_a_validation_error(capsys):
    code = main(["classify", "--family", "f", "--function", "x^2", "--grid", "z=0:1:3"])
    assert code == EXIT_INVALID_INPUT
    assert _error(capsys)["code"] == "VALIDATION_ERROR"


def test_hypothesis_violated_everywhere(capsys):
    code = main(["classify", "--family", "f", "--function", "log(x)", "--grid", "x=-2:-1:3"])
    error = _error(capsys)
    assert code == EXIT_HYPOTHESIS_VIOLATED
    assert error["code"] == "HYPOTHESIS_VIOLATED"


def test_flat_custom_metric_is_degenerate(capsys):
    code = main(["classify", "--family", "custom", "--component", "tt=1", "--component", "xy=1",
                 "--grid", "x=0:1:3"])
    report = _stdout_json(capsys)
    assert code == EXIT_OK
    assert report["degenerate"] is True
    assert {v["status"] for v in report["verdicts"]} == {"vacuous-pass"}


def test_run_file_and_output_path(tmp_path, capsys):
    run_file = tmp_path / "cubic.conf"
    run_file.write_text("family = h\nfunction = t^3\norder = 1\ngrid = t=1:2:5\n", encoding="utf-8")
    out = tmp_path / "report.json"
    code = main(["classify", "--config", str(run_file), "--output", str(out)])
    assert code == EXIT_OK
    assert capsys.readouterr().out == ""
    report = orjson.loads(out.read_bytes())
    assert report["order"] == 1
    assert report["sample_count"] == 5


def test_failed_verification_maps_to_exit_one():
    check = OrderCheck(order=0, reference="oracle", compared_points=1,
                       max_abs_deviation=1.0, max_rel_deviation=1.0, passed=False)
    report = VerificationReport(family="f", function="x", order=0, checks=[check], passed=False)
    assert exit_code_for(report) == EXIT_CHECK_FAILED


def test_run_file_output_key(tmp_path, capsys):
    out = tmp_path / "verify.json"
    run_file = tmp_path / "verify.conf"
    run_file.write_text(
        f"family = f\nfunction = exp(x)\norder = 1\ngrid = x=0:1:3\noutput = {out}\n", encoding="utf-8"
    )
    code = main(["verify", "--config", str(run_file)])
    assert code == EXIT_OK
    assert capsys.readouterr().out == ""
    assert orjson.loads(out.read_bytes())["passed"] is True
