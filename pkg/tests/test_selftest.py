import pytest

from semifield_forge.config import Settings
from semifield_forge.selftest import SLOW_FIELDS, SUITES, run_selftest, run_suite


def test_selftest_passes_over_3_3():
    result = run_selftest(fields=((3, 3),))
    failed = [c for c in result.checks if c.status == "failed"]
    assert failed == []
    assert all(c.name.startswith("3,3/") for c in result.checks)
    assert set(result.timing) == {f"3,3/{name}" for name in SUITES}


def test_selftest_is_deterministic_and_ordered():
    serial = run_selftest(seed=7, fields=((3, 3),))
    threaded = run_selftest(seed=7, jobs=4, fields=((3, 3),))
    assert serial.checks == threaded.checks


def test_size_bound_skips_large_fields():
    result = run_selftest(settings=Settings(size_bound=1000), fields=((5, 3),))
    assert result.checks
    assert all(c.status == "skipped" for c in result.checks)
    assert len(result.checks) == len(SUITES)


def test_run_suite_names_checks():
    checks, elapsed = run_suite("families", SUITES["families"], 3, 3, 0, Settings())
    assert [c.name for c in checks][0] == "3,3/families/family_validity"
    assert all(c.ok for c in checks)
    assert elapsed >= 0


def test_bad_field_fails_setup():
    checks, _ = run_suite("linpoly", SUITES["linpoly"], 4, 3, 0, Settings())
    assert [c.status for c in checks] == ["failed"]
    assert "NotPrime" in checks[0].detail


@pytest.mark.slow
def test_selftest_with_slow_oracles():
    result = run_selftest(jobs=4, slow_oracles=True, fields=((3, 3), (5, 3)), slow_fields=())
    assert [c for c in result.checks if c.status == "failed"] == []
    assert any("/slow_oracles/semilinear_search" in c.name for c in result.checks)


@pytest.mark.slow
def test_slow_oracles_cover_9_3():
    result = run_selftest(jobs=4, slow_oracles=True, fields=())
    assert SLOW_FIELDS == ((9, 3),)
    assert [c for c in result.checks if c.status == "failed"] == []
    assert set(result.timing) == {f"9,3/{name}" for name in SUITES}
    passed = {c.name for c in result.checks if c.status == "passed"}
    assert "9,3/isotopy/twisted_semilinearity" in passed
    assert "9,3/isotopy/strong_map_semilinearity" in passed
    assert "9,3/isotopy/strong_isotopy" in passed


@pytest.mark.slow
def test_full_selftest():
    result = run_selftest(jobs=4)
    assert [c for c in result.checks if c.status == "failed"] == []
