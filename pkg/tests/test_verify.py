import pytest
from hypothesis import given, settings, strategies as st

from pseudoproc.verify import (fit_envelope, envelope_shape, FixtureSet,
                               run_suite, MissingFixtureError, REGISTRY,
                               ACCEPTANCE_CHECKS, SuiteReport, CheckResult)

PARAMS = dict(alpha=1.5, beta=0.5, gamma=0.5, dim=1)


def _bound_samples(form, constant=1.0):
    gaps = (0.05, 0.2, 0.8)
    offs = (0.5, 2.0, 5.0)
    return [(dt, r, constant * envelope_shape(form, dt, r, **PARAMS))
            for dt in gaps for r in offs]


def test_fit_recovers_unit_constant_exactly():
    fit = fit_envelope(_bound_samples("base_kernel"), "base_kernel", **PARAMS)
    assert fit.constant == pytest.approx(1.0, abs=1e-6)
    assert fit.violation == pytest.approx(1.0, abs=1e-12)
    assert fit.passed


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(min_value=1e-6, max_value=1e6,
                       allow_nan=False, allow_infinity=False))
def test_fit_equivariance_under_scaling(scale):
    base = fit_envelope(_bound_samples("perturbed_kernel"),
                        "perturbed_kernel", **PARAMS)
    scaled = fit_envelope(_bound_samples("perturbed_kernel", constant=scale),
                          "perturbed_kernel", **PARAMS)
    assert scaled.constant == pytest.approx(scale * base.constant, rel=1e-9)
    assert scaled.violation == pytest.approx(base.violation, rel=1e-9)
    assert scaled.passed == base.passed


def test_fit_rejects_degenerate_probes():
    samples = [(0.1, r, 1.0) for r in (0.5, 1.0, 2.0, 4.0)]
    with pytest.raises(ValueError, match="degenerate"):
        fit_envelope(samples, "base_kernel", **PARAMS)


def test_unknown_envelope_form():
    with pytest.raises(ValueError):
        envelope_shape("mystery", 0.1, 1.0, **PARAMS)


def test_registry_covers_acceptance():
    for name in ACCEPTANCE_CHECKS:
        assert name in REGISTRY
        assert REGISTRY[name].claim


def test_empty_selection_reports_success():
    report = run_suite(FixtureSet(), selection="")
    assert report.results == []
    assert report.passed
    assert report.exit_code == 0


def test_suite_is_deterministic():
    fx = FixtureSet()
    r1 = run_suite(fx, selection="normalizer")
    r2 = run_suite(fx, selection="normalizer")
    assert [a.row() for a in r1.results] == [b.row() for b in r2.results]


def test_missing_fixture_is_named():
    fx = FixtureSet()
    del fx.goldens["normalizer_halforder_1d"]
    with pytest.raises(MissingFixtureError, match="normalizer_halforder_1d"):
        run_suite(fx, selection="normalizer")


def test_corrupted_golden_fails_exactly_one_check():
    fx = FixtureSet()
    fx.goldens["resolution_tail"]["value"] *= 1.5  # sabotage
    report = run_suite(fx, selection="golden")
    bad = [r for r in report.failures()]
    assert len(bad) == 1
    assert bad[0].check == "resolution-golden/tail"
    assert report.exit_code == 5
    # pristine fixtures pass the same selection
    clean = run_suite(FixtureSet(), selection="golden")
    assert clean.passed


def test_report_serialization(tmp_path):
    report = run_suite(FixtureSet(), selection="normalizer")
    csv_path = tmp_path / "report.csv"
    report.to_csv(csv_path)
    text = csv_path.read_text()
    assert text.splitlines()[0] == \
        "check,parameters,value,threshold,mode,status,provenance"
    assert "normalizer-golden" in text
    summary = report.summary()
    assert "suite.passed = true" in summary
    assert "normalizer-golden.status = pass" in summary
    assert "normalizer-golden" in report.table()


def test_fixture_grid_and_defaults():
    fx = FixtureSet()
    g = fx.grid()
    assert (g.dim, g.points_per_dim, g.half_extent) == (1, 256, 40.0)
    assert (g.time_horizon, g.time_steps) == (1.0, 16)
    assert fx.alpha == 1.5 and fx.beta == 0.5 and fx.gamma == 0.5


def test_fixture_directory_round_trip(tmp_path):
    from pseudoproc.fields import read_snapshot
    fx = FixtureSet(points=128, half_extent=20.0, steps=8)
    d = fx.save(tmp_path / "fx")
    again = FixtureSet.load(d)
    assert again.points == 128 and again.half_extent == 20.0
    assert again.goldens.keys() == fx.goldens.keys()
    for name in fx.goldens:
        assert again.goldens[name]["value"] == fx.goldens[name]["value"]
    dim, N, L, dt, meaning, vals = read_snapshot(tmp_path / "fx" /
                                                 "drift_kernel.snap")
    assert (dim, N, meaning, dt) == (1, 128, "G", 1.0)
    assert vals.min() < -1e-6  # the recorded signed-kernel witness
    report = run_suite(again, selection="normalizer")
    assert report.passed
