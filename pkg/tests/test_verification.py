"""Tests for the named verification suites."""

import pytest

from analysis.verification import COLUMNS, SUITES, run_suite
from numerics import PreconditionError, RngStream


class TestRunSuite:

    def test_unknown_suite_lists_available(self):
        with pytest.raises(PreconditionError) as info:
            run_suite("everything")
        for name in SUITES:
            assert name in str(info.value)

    @pytest.mark.parametrize("name", ["appendix-a", "batch-force"])
    def test_stochastic_suites_need_seed(self, name):
        with pytest.raises(PreconditionError, match="seed"):
            run_suite(name)

    def test_critical_suite_passes(self):
        report = run_suite("critical")
        assert list(report.columns) == COLUMNS
        assert report.passed.all(), report.loc[~report.passed, "check"].tolist()

    def test_critical_suite_takes_tolerance(self):
        report = run_suite("critical", tol=1e-12)
        assert report.check.str.contains("tol=1e-12").sum() == 4
        assert report.passed.all()

    def test_option_not_taken_by_suite(self):
        with pytest.raises(PreconditionError, match="does not take tol"):
            run_suite("scaling", tol=1e-12)

    def test_scaling_suite_passes(self):
        report = run_suite("scaling")
        assert report.passed.all(), report.loc[~report.passed, "check"].tolist()

    def test_appendix_suite_passes(self):
        report = run_suite("appendix-a", RngStream(3), clt_samples=200_000)
        assert report.passed.all(), report.loc[~report.passed, "check"].tolist()

    @pytest.mark.slow
    def test_curie_weiss_suite_passes(self):
        report = run_suite("curie-weiss")
        assert report.passed.all(), report.loc[~report.passed, "check"].tolist()

    @pytest.mark.slow
    def test_batch_force_suite_passes(self):
        report = run_suite("batch-force", RngStream(5))
        assert report.passed.all(), report.loc[~report.passed, "check"].tolist()
