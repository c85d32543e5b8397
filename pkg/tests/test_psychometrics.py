import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from construct_forge.errors import ModelSpecError
from construct_forge.model_spec import builtin_model
from construct_forge.panel_data import dedupe
from construct_forge.panel_gen import builtin_planted, generate_synthetic
from construct_forge.pls_engine import fit_matrix, fit_pls
from construct_forge.psychometrics import (
    ave,
    compute_metrics,
    cronbach_alpha,
    fornell_larcker,
    fornell_larcker_check,
    htmt,
    htmt_flags,
    inner_vif,
    low_loading_screen,
    rho_a,
    rho_c,
    vif_from_corr,
)
from construct_forge.reference_data import STUDY1_LOADINGS, STUDY2_REMOVED_LOADINGS, block_loadings
from oracles import exact_corr_data, simple_model, two_item_corr


def block(r, k=2):
    S = np.full((k, k), r)
    np.fill_diagonal(S, 1.0)
    return S


@pytest.mark.parametrize("r, expected", [(0.923, 0.96), (0.0, 0.0), (1.0, 1.0)])
def test_alpha(r, expected):
    assert cronbach_alpha(block(r)) == pytest.approx(expected, abs=5e-5)


def test_alpha_single_item_not_applicable():
    assert np.isnan(cronbach_alpha(np.ones((1, 1))))


@pytest.mark.parametrize("r", [0.0, 0.3, 0.923, 1.0])
def test_rho_a_equal_weights(r):
    expected = 2 * r / (1 + r)
    assert rho_a(block(r), [1.0, 1.0]) == pytest.approx(expected, abs=1e-12)
    assert rho_a(block(r), [0.3, 0.3]) == pytest.approx(expected, abs=1e-12)


def test_rho_a_edge_cases():
    assert np.isnan(rho_a(np.ones((1, 1)), [1.0]))
    with pytest.raises(ValueError):
        rho_a(block(0.5), [0.0, 0.0])


@pytest.mark.parametrize(
    "construct, published_ave, published_rc",
    [("BI", 0.961, 0.980), ("CPLAY", 0.891, 0.970)],
)
def test_ave_rho_c_from_published_loadings(construct, published_ave, published_rc):
    lam = block_loadings(STUDY1_LOADINGS, construct)
    assert ave(lam) == pytest.approx(published_ave, abs=1e-3)
    assert rho_c(lam) == pytest.approx(published_rc, abs=1e-3)


def test_perfect_indicators():
    assert ave([1, 1, 1]) == 1.0 and rho_c([1, 1, 1]) == 1.0


def test_htmt_definition():
    spec = simple_model([("A", ["a1", "a2"]), ("B", ["b1", "b2"])], [("A", "B")])
    C = np.full((4, 4), 0.6)
    C[:2, :2] = block(0.8)
    C[2:, 2:] = block(0.8)
    H = htmt(C, spec)
    assert H[0, 1] == pytest.approx(0.75) and H[1, 0] == pytest.approx(0.75)
    assert np.isnan(H[0, 0])


def test_htmt_parallel_block_is_one():
    # a second block of parallel indicators of the same trait
    spec = simple_model([("A", ["a1", "a2"]), ("B", ["b1", "b2"])], [("A", "B")])
    C = block(0.7, 4)
    assert htmt(C, spec)[0, 1] == pytest.approx(1.0)


def test_htmt_exact_item_copies_exceed_one():
    spec = simple_model([("A", ["a1", "a2"]), ("B", ["b1", "b2"])], [("A", "B")])
    S = block(0.7)
    C = np.block([[S, S], [S, S]])
    assert htmt(C, spec)[0, 1] == pytest.approx(0.85 / 0.7)


def test_htmt_single_item_not_applicable():
    spec = simple_model([("A", ["a1", "a2"]), ("B", ["b"])], [("A", "B")])
    assert np.isnan(htmt(two_item_corr(0.5), spec)[0, 1])


def test_htmt_flags_threshold():
    H = np.array([[np.nan, 1.2, 0.5], [1.2, np.nan, 1.0], [0.5, 1.0, np.nan]])
    assert htmt_flags(H, ["A", "B", "C"]) == [("A", "B", 1.2)]


def test_fornell_larcker_identity_and_counterexample():
    assert fornell_larcker_check(np.diag([0.5, 0.6, 0.7])).all()
    M = np.array([[0.90, np.nan], [0.95, 0.90]])
    assert not fornell_larcker_check(M).any()
    # ties fail: sqrt(AVE) must strictly exceed
    assert not fornell_larcker_check(np.array([[0.8, 0.8], [0.8, 0.9]]))[0]


def test_fornell_larcker_equal_loading_composites_always_pass():
    # with equal loadings, composite correlation 3r/(1+2r) stays below sqrt(AVE)
    # even for perfectly correlated traits, so a fitted counterexample needs
    # a constructed matrix
    spec = simple_model([("A", ["a1", "a2", "a3"]), ("B", ["b1", "b2", "b3"])], [("A", "B")])
    fit = fit_matrix(exact_corr_data(block(0.6, 6)), spec)
    M, ok = fornell_larcker(fit)
    assert M[1, 0] == pytest.approx(1.8 / 2.2) and ok.all()


def test_vif_closed_forms():
    np.testing.assert_allclose(vif_from_corr(np.eye(3)), 1.0)
    np.testing.assert_allclose(vif_from_corr(block(0.9)), 1 / (1 - 0.81))
    assert np.isinf(vif_from_corr(block(1.0))).all()
    assert vif_from_corr(np.ones((1, 1)))[0] == 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_vif_at_least_one(k, seed):
    A = np.random.default_rng(seed).normal(size=(k + 5, k))
    assert (vif_from_corr(np.corrcoef(A.T)) >= 1 - 1e-9).all()


def test_inner_vif_study1_like(study1):
    panel, _ = dedupe(generate_synthetic(builtin_planted("study1", study1), study1, 400, 7))
    fit = fit_pls(panel)
    values = inner_vif(fit)
    assert set(values) == {("CPLAY", "BI"), ("PEOU", "BI"), ("PU", "BI"), ("PEOU", "PU")}
    assert all(1.0 <= v <= 5.0 for v in values.values())
    metrics = compute_metrics(fit)
    assert all(metrics.fornell_larcker_pass.values())
    assert htmt_flags(metrics.htmt, study1.construct_names) == []


@pytest.fixture(scope="module")
def study2_full_fit():
    spec = builtin_model("study2", full_items=True)
    panel, _ = dedupe(generate_synthetic(builtin_planted("study2", spec, True), spec, 400, 0))
    fit = fit_pls(panel)
    loadings = dict(fit.loadings, **STUDY2_REMOVED_LOADINGS)
    return dataclasses.replace(fit, loadings=loadings)


def test_screen_flags_published_weak_items(study2_full_fit):
    screen = low_loading_screen(study2_full_fit)
    severities = {f.item: f.severity for f in screen.flags}
    assert severities["PU3"] == "drop" and severities["PEU4"] == "flag"
    assert screen.to_drop == ["PU3"]
    assert "PU3" not in screen.reduced.item_names


def test_auto_drop_threshold_reproduces_reduction(study2_full_fit):
    screen = low_loading_screen(study2_full_fit, drop_below=0.60)
    assert sorted(screen.to_drop) == ["PEU4", "PU3"]
    assert sorted(screen.reduced.item_names) == sorted(builtin_model("study2").item_names)


def test_clean_model_has_no_flags():
    fit = fit_matrix(exact_corr_data(two_item_corr(0.9)), simple_model([("A", ["a1", "a2"]), ("B", ["b1"])], [("A", "B")]))
    assert low_loading_screen(fit).flags == []


def test_dropping_only_item_errors():
    spec = simple_model([("A", ["a1", "a2"]), ("B", ["b1"])], [("A", "B")])
    fit = fit_matrix(exact_corr_data(two_item_corr(0.5, 0.05)), spec)
    with pytest.raises(ModelSpecError):
        low_loading_screen(fit, drop_below=0.99)
