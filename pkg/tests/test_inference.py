import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from construct_forge.errors import ConfigError, DataError, NumericalError
from construct_forge.inference import (
    bootstrap,
    compare_groups,
    describe_group,
    p_value,
    summary_row,
    t_statistic,
    two_sample_test,
    welch_compare,
)
from construct_forge.panel_data import Panel, RespondentRow, dedupe
from construct_forge.panel_gen import builtin_planted, generate_synthetic
from construct_forge.reference_data import STUDY1_GROUPS
from oracles import simple_model

PAIR = simple_model([("A", ["a"]), ("B", ["b"])], [("A", "B")])


@pytest.mark.parametrize("t, expected, tol", [(3.275, 0.0011, 5e-4), (1.86, 0.063, 5e-4), (0.0, 1.0, 0.0)])
def test_p_value(t, expected, tol):
    assert p_value(t, 5000) == pytest.approx(expected, abs=tol)


def test_t_statistic_from_published_row():
    assert t_statistic(0.839, 0.02356) == pytest.approx(35.6, abs=0.05)
    assert t_statistic(0.839, 0.024) == pytest.approx(34.96, abs=0.01)
    assert math.isinf(t_statistic(0.5, 0.0)) and p_value(math.inf, 100) == 0.0


@pytest.fixture(scope="module")
def panel295(study1):
    panel, report = dedupe(generate_synthetic(builtin_planted("study1", study1), study1, 400, 7))
    assert report.unique == 295
    return panel


def test_bootstrap_identity_and_determinism(panel295):
    a = bootstrap(panel295, resamples=300, seed=11)
    b = bootstrap(panel295, resamples=300, seed=11, workers=3)
    assert a == b
    for ps in a.paths:
        assert ps.t == abs(ps.original) / ps.stdev
        assert ps.ci_low <= ps.mean <= ps.ci_high
    assert a.used == 300 and a.failed == 0
    c = bootstrap(panel295, resamples=300, seed=12)
    assert c.paths != a.paths


def test_bootstrap_backend_parity(panel295):
    from construct_forge import _kernels

    if "cython" not in _kernels.available_backends():
        pytest.skip("compiled kernels not built")
    a = bootstrap(panel295, resamples=100, seed=3, backend="python")
    b = bootstrap(panel295, resamples=100, seed=3, backend="cython")
    for x, y in zip(a.paths, b.paths):
        assert x.stdev == pytest.approx(y.stdev, abs=1e-12)


def pair_panel(a, b):
    return Panel(tuple(RespondentRow({}, {"a": int(x), "b": int(y)}) for x, y in zip(a, b)), PAIR, ())


def test_zero_variance_path():
    a = np.random.default_rng(0).integers(1, 8, 200)
    result = bootstrap(pair_panel(a, a), resamples=200, seed=1)
    ps = result.paths[0]
    assert ps.stdev == 0.0 and math.isinf(ps.t) and ps.p == 0.0


def test_too_many_failed_resamples():
    # one rare category per column: about a third of resamples are constant
    a = [1] * 19 + [2]
    b = [3] + [4] * 19
    with pytest.raises(NumericalError, match="of 200 bootstrap resamples"):
        bootstrap(pair_panel(a, b), resamples=200, seed=0)


def test_resample_count_validation(panel295):
    with pytest.raises(ConfigError):
        bootstrap(panel295, resamples=1)


def test_ci_from_published_summary():
    n, mean, sd, lo, hi = STUDY1_GROUPS["chatgpt_exp"][0]
    row = summary_row("Male", n, mean, sd)
    assert row.ci_low == pytest.approx(lo, abs=0.01) and row.ci_high == pytest.approx(hi, abs=0.01)


def test_published_experience_p_from_rounded_inputs():
    male, female, published = STUDY1_GROUPS["chatgpt_exp"]
    a, b = summary_row("M", *male[:3]), summary_row("F", *female[:3])
    _, _, p_welch = two_sample_test(a, b, "welch")
    _, _, p_pooled = two_sample_test(a, b, "pooled")
    assert p_welch == pytest.approx(0.05, abs=0.01)
    assert p_pooled == pytest.approx(published, abs=0.01)


def test_identical_groups():
    row = describe_group("x", [1.0, 2.0, 3.0, 4.0])
    for method in ("pooled", "welch"):
        t, _, p = two_sample_test(row, row, method)
        assert t == 0.0 and p == 1.0
    with pytest.raises(ConfigError):
        two_sample_test(row, row, "mann-whitney")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=2, max_size=20), st.lists(st.floats(0, 10), min_size=2, max_size=20))
def test_group_label_swap_symmetry(a, b):
    ra, rb = describe_group("a", a), describe_group("b", b)
    for method in ("pooled", "welch"):
        t1, _, p1 = two_sample_test(ra, rb, method)
        t2, _, p2 = two_sample_test(rb, ra, method)
        assert p1 == pytest.approx(p2, abs=1e-12)


def test_ci_width_scales_with_duplication():
    base = np.random.default_rng(5).normal(size=50)
    w1 = describe_group("x", base)
    w4 = describe_group("x", np.tile(base, 4))
    ratio = (w1.ci_high - w1.ci_low) / (w4.ci_high - w4.ci_low)
    assert ratio == pytest.approx(2.0, rel=0.05)


def test_compare_groups_on_panel(panel295):
    rows, comp = compare_groups(panel295, "gender", "PU", (1, 2))
    assert [r.label for r in rows] == ["Male", "Female"]
    assert rows[0].n + rows[1].n + comp.excluded == len(panel295)
    _, wcomp = welch_compare(panel295, "gender", "PU", (1, 2))
    assert wcomp.method == "welch" and 0 <= wcomp.p <= 1
    _, exp = compare_groups(panel295, "gender", "chatgpt_exp")
    assert exp.groups == (1, 2)


def test_compare_groups_errors(panel295):
    with pytest.raises(DataError):
        compare_groups(panel295, "height", "PU")
    with pytest.raises(DataError):
        describe_group("tiny", [1.0])
