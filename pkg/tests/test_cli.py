import json
from pathlib import Path

import pytest

from semifield_forge import __version__
from semifield_forge.cli import (
    EXIT_INVALID_PARAMS,
    EXIT_OK,
    EXIT_SIZE_BOUND,
    main,
)
from semifield_forge.config import BOUND_ENV_VAR, get_settings
from semifield_forge.reports import RunReport, report_schema

SCHEMA_PATH = Path(__file__).resolve().parent.parent / "report_schema.json"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def test_construct_lmptb(capsys):
    code, report = run(capsys, "construct", "--family", "LMPTB", "--q", "3", "--ell", "3", "--nuclei")
    assert code == EXIT_OK
    assert report["version"] == __version__
    assert report["command"] == "construct"
    assert (report["field"]["p"], report["field"]["h"], report["field"]["ell"]) == (3, 1, 3)
    (summary,) = report["presemifields"]
    assert summary["label"] == "LMPTB(3,3)"
    assert summary["is_presemifield"] and summary["commutative"]
    assert summary["nuclei"]["middle"] >= 9
    assert report["g_bounds"]["chosen"] == "both-from-zero"
    assert report["timing"] is None


def test_construct_bhb(capsys):
    argv = ("construct", "--family", "BHB", "--q", "3", "--ell", "3", "--beta-index", "3")
    code, report = run(capsys, *argv)
    assert code == EXIT_OK
    (family,) = report["families"]
    assert family["family"] == "BHB" and family["d"] == 2 and family["beta_index"] == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["construct", "--family", "BHB", "--q", "3", "--ell", "3", "--d", "1"],
        ["construct", "--family", "BHB", "--q", "3", "--ell", "3", "--beta-index", "2"],
        ["isotopy", "--q", "4", "--ell", "3"],
        ["isotopy", "--q", "3", "--ell", "4"],
        ["strong", "--q", "3", "--ell", "3", "--modulus", "2,0,0,0,0,0,1"],
    ],
)
def test_invalid_params(capsys, argv):
    code, report = run(capsys, *argv)
    assert code == EXIT_INVALID_PARAMS
    assert report is None


def test_size_bound(capsys, monkeypatch):
    argv = ("isotopy", "--q", "5", "--ell", "3", "--max-field-bits", "8")
    assert run(capsys, *argv)[0] == EXIT_SIZE_BOUND
    monkeypatch.setenv(BOUND_ENV_VAR, "3**5")
    get_settings.cache_clear()
    assert run(capsys, "strong", "--q", "3", "--ell", "3")[0] == EXIT_SIZE_BOUND


def test_isotopy(capsys):
    code, report = run(capsys, "isotopy", "--q", "3", "--ell", "3", "--jobs", "2")
    assert code == EXIT_OK
    symplectic, commutative = report["triples"]
    assert symplectic["status"] == commutative["status"] == "verified"
    assert commutative["strong"] is False
    assert commutative["semilinearity"]["degree"] == 1
    assert len(commutative["M"]) == 6
    assert all(check["status"] == "passed" for check in report["checks"])


def test_strong(capsys):
    code, report = run(capsys, "strong", "--q", "3", "--ell", "3")
    assert code == EXIT_OK
    assert report["certificate"]["verdict"] == "not-exists"
    code, report = run(capsys, "strong", "--q", "5", "--ell", "3")
    assert code == EXIT_OK
    assert report["certificate"]["verdict"] == "exists"


def test_summary_goes_to_stderr(capsys):
    assert main(["strong", "--q", "3", "--ell", "3"]) == EXIT_OK
    captured = capsys.readouterr()
    assert "strong isotopism: not-exists" in captured.err
    assert json.loads(captured.out)["command"] == "strong"


def test_output_is_deterministic(capsys):
    argv = ("isotopy", "--q", "3", "--ell", "3", "--seed", "5")
    _, first = run(capsys, *argv)
    _, second = run(capsys, *argv, "--jobs", "3")
    assert first == second
    assert "jobs" not in first["args"]
    assert first["args"]["seed"] == 5


def test_timing(capsys):
    _, report = run(capsys, "construct", "--family", "LMPTB", "--q", "3", "--ell", "3", "--timing")
    assert set(report["timing"]) >= {"field", "construct", "validity"}


def test_orbit(capsys):
    _, report = run(capsys, "construct", "--family", "LMPTB", "--q", "3", "--ell", "3", "--orbit")
    names = [entry["name"] for entry in report["knuth_orbit"]]
    assert names == ["S", "S*", "S^t", "S^t*", "S^*t", "S^t*t"]


def test_dump_table(capsys, tmp_path):
    path = tmp_path / "table.csv"
    code, report = run(
        capsys, "construct", "--family", "BHB", "--q", "3", "--ell", "3", "--dump-table", str(path)
    )
    assert code == EXIT_OK
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,product"
    assert len(lines) == 1 + 729 * 729
    assert lines[1] == "0,0,0"
    assert "dump_table" not in report["args"]


def test_selftest_command(capsys):
    code, report = run(capsys, "selftest", "--max-field-bits", "10")
    assert code == EXIT_OK
    statuses = {check["status"] for check in report["checks"]}
    assert "failed" not in statuses
    assert "skipped" in statuses
    assert report["timing"] is None


def test_schema(capsys):
    code, schema = run(capsys, "schema")
    assert code == EXIT_OK
    assert schema["title"] == "RunReport"
    assert "certificate" in schema["properties"]
    assert schema == json.loads(SCHEMA_PATH.read_text())


def test_committed_schema_is_current():
    assert json.loads(SCHEMA_PATH.read_text()) == report_schema()


@pytest.mark.parametrize(
    "argv",
    [
        ["construct", "--family", "LMPTB", "--q", "3", "--ell", "3", "--nuclei", "--orbit", "--timing"],
        ["construct", "--family", "BHB", "--q", "3", "--ell", "3", "--d", "2"],
        ["isotopy", "--q", "3", "--ell", "3"],
        ["strong", "--q", "3", "--ell", "3"],
        ["strong", "--q", "5", "--ell", "3"],
        ["selftest", "--max-field-bits", "10", "--timing"],
    ],
)
def test_reports_validate_against_schema(capsys, argv):
    assert main(argv) == EXIT_OK
    out = capsys.readouterr().out
    report = RunReport.model_validate_json(out)
    assert report.command == argv[0]
    assert json.loads(report.model_dump_json()) == json.loads(out)


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
