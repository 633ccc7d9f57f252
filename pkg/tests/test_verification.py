"""Tests for the built-in self checks."""
import pytest

from src.services import verification


def test_capacity_check():
    assert verification.check_capacity().passed


def test_solver_check():
    result = verification.check_solver()
    assert result.passed, result.detail


def test_timing_check_on_a_few_draws():
    result = verification.check_timing(count=5)
    assert result.passed, result.detail


def test_scaling_check_on_a_few_draws():
    result = verification.check_scaling(count=3)
    assert result.passed, result.detail


def test_convergence_check_on_a_few_draws():
    result = verification.check_convergence(count=3)
    assert result.passed, result.detail


def test_statistics_check():
    result = verification.check_statistics()
    assert result.passed, result.detail


def test_run_selected_checks():
    results = verification.run_checks(["capacity", "solver"])
    assert [r.name for r in results] == ["capacity", "solver"]
    assert all(r.passed for r in results)


def test_run_rejects_unknown_names():
    with pytest.raises(ValueError):
        verification.run_checks(["capacity", "nope"])


@pytest.mark.slow
def test_full_suite():
    assert all(r.passed for r in verification.run_checks())
