import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairpriv.core import GroupClassCounter, LabeledExample
from fairpriv.fairness import (
    DEFAULT_VARIANT,
    DisparityVariant,
    GateDecision,
    GateParams,
    disparity_from_counts,
    disparity_matrix,
    fairness_gate,
    gate_condition,
    group_privacy_transform,
    k_gamma,
    max_disparity,
    ordered_offline_preprocess,
    postprocess_stream,
    preprocess_stream,
)
from tests.conftest import make_examples

ALL_VARIANTS = list(DisparityVariant)


def counter_from(table):
    """Build a counter whose cells match a dense count table."""
    arr = np.asarray(table, dtype=np.int64)
    c = GroupClassCounter(num_groups=arr.shape[0], num_classes=arr.shape[1])
    for z in range(arr.shape[0]):
        for k in range(arr.shape[1]):
            for _ in range(int(arr[z, k])):
                c.increment(z, k)
    return c


# ---------------------------------------------------------------------------
# Disparity estimation


@pytest.mark.parametrize("variant", ALL_VARIANTS)
def test_identical_rates_give_zero_matrix(variant):
    counts = np.array([[30, 10], [30, 10], [30, 10]])
    g = disparity_from_counts(counts, variant)
    np.testing.assert_allclose(g, 0.0, atol=0)


def test_two_group_hand_values():
    # Group 0 predicts class 0 at rate 0.75, group 1 at rate 0.25.
    counts = np.array([[30, 10], [10, 30]])
    g_ndc = disparity_from_counts(counts, DisparityVariant.TO_OVERALL_NO_DOUBLE_COUNT)
    assert g_ndc[0, 0] == pytest.approx(0.75 - 0.25)
    assert g_ndc[1, 0] == pytest.approx(0.25 - 0.75)

    g_ov = disparity_from_counts(counts, DisparityVariant.TO_OVERALL)
    assert g_ov[0, 0] == pytest.approx(0.75 - 0.5)
    assert g_ov[0, 1] == pytest.approx(0.25 - 0.5)

    g_bg = disparity_from_counts(counts, DisparityVariant.BETWEEN_GROUPS)
    assert g_bg[0, 0] == pytest.approx(0.5)
    assert g_bg[1, 0] == pytest.approx(0.5)
    assert np.all(g_bg >= 0)


def test_unpopulated_group_is_nan():
    counts = np.array([[5, 5], [0, 0]])
    # Complement-referencing variant: group 1 has no data and group 0 has no
    # reference population, so nothing is defined.
    g = disparity_from_counts(counts, DisparityVariant.TO_OVERALL_NO_DOUBLE_COUNT)
    assert np.isnan(g).all()
    # Overall-rate variant: group 0 compares against itself and is defined.
    g = disparity_from_counts(counts, DisparityVariant.TO_OVERALL)
    assert np.isnan(g[1]).all()
    np.testing.assert_allclose(g[0], 0.0, atol=0)


def test_disparity_matrix_matches_counts_path():
    groups = [0, 0, 0, 1, 1, 1, 1]
    preds = [0, 0, 1, 1, 1, 0, 1]
    for variant in ALL_VARIANTS:
        direct = disparity_matrix(groups, preds, 2, 2, variant)
        counts = np.zeros((2, 2), dtype=np.int64)
        for z, k in zip(groups, preds):
            counts[z, k] += 1
        np.testing.assert_allclose(direct, disparity_from_counts(counts, variant))


def test_max_disparity_signed_and_absolute():
    g = np.array([[0.1, -0.4], [np.nan, 0.2]])
    assert max_disparity(g) == pytest.approx(0.2)
    assert max_disparity(g, absolute=True) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        max_disparity(np.full((2, 2), np.nan))


@settings(max_examples=60)
@given(
    st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=100)
)
def test_between_groups_bounded_by_one(events):
    counts = np.zeros((3, 3), dtype=np.int64)
    for z, k in events:
        counts[z, k] += 1
    g = disparity_from_counts(counts, DisparityVariant.BETWEEN_GROUPS)
    vals = g[~np.isnan(g)]
    assert np.all(vals >= 0) and np.all(vals <= 1)


# ---------------------------------------------------------------------------
# Fairness gate


def test_gate_answers_when_margin_not_exceeded():
    # Hand trace: (1+1)/(10+1) - 5/10 = -0.3181... which is below rho 0.1.
    m = counter_from([[5, 5], [9, 1]])
    cond = gate_condition(m, 1, 1)
    assert cond == pytest.approx(2 / 11 - 5 / 10)
    params = GateParams(rho_fair=0.1, min_count=10)
    assert fairness_gate(m, 1, 1, params) is GateDecision.ANSWER


def test_gate_rejects_when_margin_exceeded():
    # Hand trace: 10/11 - 1/10 = 0.809... which is at or above rho 0.2.
    m = counter_from([[1, 9], [9, 1]])
    cond = gate_condition(m, 0, 1)
    assert cond == pytest.approx(10 / 11 - 1 / 10)
    params = GateParams(rho_fair=0.2, min_count=10)
    assert fairness_gate(m, 0, 1, params) is GateDecision.REJECT


def test_gate_cold_start():
    m = counter_from([[1, 9], [9, 1]])
    params = GateParams(rho_fair=0.2, min_count=11)
    assert fairness_gate(m, 0, 1, params) is GateDecision.ANSWER_COLD_START


def test_gate_vacuous_at_rho_one():
    m = counter_from([[1, 9], [9, 1]])
    params = GateParams(rho_fair=1.0, min_count=10)
    assert fairness_gate(m, 0, 1, params) is GateDecision.ANSWER


def test_gate_empty_complement_answers_with_warning():
    m = counter_from([[0, 6], [0, 0]])
    params = GateParams(rho_fair=0.1, min_count=4)
    with pytest.warns(RuntimeWarning):
        assert fairness_gate(m, 0, 1, params) is GateDecision.ANSWER


def test_gate_params_validation():
    GateParams(rho_fair=0.0, min_count=0)
    GateParams(rho_fair=1.0, min_count=5)
    with pytest.raises(ValueError):
        GateParams(rho_fair=-0.1, min_count=5)
    with pytest.raises(ValueError):
        GateParams(rho_fair=1.1, min_count=5)
    with pytest.raises(ValueError):
        GateParams(rho_fair=0.5, min_count=-1)


@settings(max_examples=80)
@given(
    st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=0, max_size=60),
    st.integers(0, 1),
    st.integers(0, 1),
)
def test_gate_never_mutates_counter(events, z, k):
    m = GroupClassCounter(num_groups=2, num_classes=2)
    for ez, ek in events:
        m.increment(ez, ek)
    before = m.as_array().copy()
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fairness_gate(m, z, k, GateParams(rho_fair=0.05, min_count=3))
    np.testing.assert_array_equal(m.as_array(), before)


def test_single_group_stream_all_pass():
    # With no complement population the rule is degenerate and everything
    # is answered (flagged), including after the cold start window.
    data = [
        LabeledExample(features=np.array([float(i)]), group=0, label=1)
        for i in range(12)
    ]
    params = GateParams(rho_fair=0.1, min_count=4)
    with pytest.warns(RuntimeWarning):
        kept = preprocess_stream(data, params)
    assert len(kept) == 12


def test_alternating_stream_rho_zero_rejects_every_tipping_example():
    # Groups predict opposite classes, so once the gate engages any further
    # accept would widen the gap. With rho = 0 and strict comparison, only
    # the cold-start window survives.
    data = []
    for i in range(40):
        z = i % 2
        data.append(LabeledExample(features=np.array([float(i)]), group=z, label=1 - z))
    params = GateParams(rho_fair=0.0, min_count=2)
    kept = preprocess_stream(data, params)
    assert len(kept) == 2 * params.min_count
    assert all(pos < 2 * params.min_count for pos, ex in enumerate(data) if ex in kept)


def test_postprocess_stream_masks_rejections():
    groups = [0] * 10 + [1] * 10
    preds = [1] * 10 + [0] * 10
    params = GateParams(rho_fair=0.05, min_count=2)
    out = postprocess_stream(groups, preds, params)
    assert len(out) == 20
    answered = [p for p in out if p is not None]
    assert 0 < len(answered) < 20


def test_postprocess_accept_matches_gate_replay():
    """Replaying accepted answers through a fresh counter reproduces decisions."""
    rng = np.random.default_rng(5)
    groups = rng.integers(0, 2, size=300).tolist()
    preds = rng.integers(0, 3, size=300).tolist()
    params = GateParams(rho_fair=0.08, min_count=10)
    out = postprocess_stream(groups, preds, params, num_groups=2, num_classes=3)

    m = GroupClassCounter(num_groups=2, num_classes=3)
    for z, k, got in zip(groups, preds, out):
        decision = fairness_gate(m, z, k, params)
        if decision is GateDecision.REJECT:
            assert got is None
        else:
            assert got == k
            m.increment(z, k)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.01, 0.3), st.integers(1, 15))
def test_gate_soundness_property(seed, rho, min_count):
    """After cold start, every accept satisfied the margin at accept time."""
    rng = np.random.default_rng(seed)
    groups = rng.integers(0, 2, size=150).tolist()
    preds = rng.integers(0, 2, size=150).tolist()
    params = GateParams(rho_fair=rho, min_count=min_count)
    out = postprocess_stream(groups, preds, params, num_groups=2, num_classes=2)

    m = GroupClassCounter(num_groups=2, num_classes=2)
    for z, k, got in zip(groups, preds, out):
        if got is None:
            continue
        if m.group_total(z) >= min_count:
            cond = gate_condition(m, z, k, params.variant)
            if cond is not None:
                assert cond < rho
        m.increment(z, k)


# ---------------------------------------------------------------------------
# Offline pre-processing and the group-privacy transform


def test_k_gamma_values():
    assert k_gamma(0.0) == 2
    assert k_gamma(0.25) == 3
    assert k_gamma(0.5) == 4
    assert k_gamma(0.9) == 20


def test_group_privacy_transform_values():
    from fairpriv.core import PrivacyBudget

    out = group_privacy_transform(PrivacyBudget(epsilon=1.0, delta=1e-5), 0.5)
    assert out.epsilon == pytest.approx(4.0)
    assert out.delta == pytest.approx(min(1.0, 4 * math.exp(4.0) * 1e-5))
    # Large budgets clamp delta at 1.
    big = group_privacy_transform(PrivacyBudget(epsilon=10.0, delta=1e-2), 0.5)
    assert big.delta == 1.0


def _dataset(sizes_by_cell, d=2, seed=0):
    rng = np.random.default_rng(seed)
    data = []
    for (z, y), n in sizes_by_cell.items():
        for _ in range(n):
            data.append(
                LabeledExample(features=rng.standard_normal(d), group=z, label=y)
            )
    rng.shuffle(data)
    return data


def test_offline_preprocess_caps_majority():
    # gamma=0.5 with minority size 4 allows the majority to keep
    # 4 + floor(2 * 0.5 * 4 / 0.5) = 12 points.
    data = _dataset({(0, 0): 4, (1, 0): 30})
    kept = ordered_offline_preprocess(data, 0.5)
    sizes = {(0, 0): 0, (1, 0): 0}
    for ex in kept:
        sizes[(ex.group, ex.label)] += 1
    assert sizes[(0, 0)] == 4
    assert sizes[(1, 0)] == 12


def test_offline_preprocess_gamma_zero_balances_exactly():
    data = _dataset({(0, 0): 7, (1, 0): 19, (0, 1): 11, (1, 1): 3})
    kept = ordered_offline_preprocess(data, 0.0)
    counts = np.zeros((2, 2), dtype=np.int64)
    for ex in kept:
        counts[ex.group, ex.label] += 1
    assert counts[0, 0] == counts[1, 0] == 7
    assert counts[0, 1] == counts[1, 1] == 3


def test_offline_preprocess_is_deterministic_and_order_preserving():
    data = _dataset({(0, 0): 5, (1, 0): 9, (0, 1): 6, (1, 1): 2}, seed=4)
    kept1 = ordered_offline_preprocess(data, 0.25)
    kept2 = ordered_offline_preprocess(data, 0.25)
    assert kept1 == kept2
    pos = {id(ex): i for i, ex in enumerate(data)}
    assert [pos[id(ex)] for ex in kept1] == sorted(pos[id(ex)] for ex in kept1)


def test_offline_preprocess_idempotent():
    data = _dataset({(0, 0): 5, (1, 0): 9, (0, 1): 6, (1, 1): 2}, seed=9)
    once = ordered_offline_preprocess(data, 0.25)
    twice = ordered_offline_preprocess(once, 0.25)
    assert once == twice


def test_offline_preprocess_rejects_more_than_two_groups():
    data = _dataset({(0, 0): 2, (1, 0): 2}) + [
        LabeledExample(features=np.zeros(2), group=2, label=0)
    ]
    with pytest.raises(ValueError):
        ordered_offline_preprocess(data, 0.1)


def test_offline_preprocess_output_meets_disparity_bound():
    data = _dataset({(0, 0): 25, (1, 0): 6, (0, 1): 9, (1, 1): 21}, seed=2)
    for gamma in (0.0, 0.1, 0.3):
        kept = ordered_offline_preprocess(data, gamma)
        counts = np.zeros((2, 2), dtype=np.int64)
        for ex in kept:
            counts[ex.group, ex.label] += 1
        # Per-label balance: the kept majority is within the allowed excess.
        for y in range(2):
            lo, hi = sorted([counts[0, y], counts[1, y]])
            assert hi <= lo + math.floor(2 * gamma * lo / (1 - gamma)) if lo else True


def test_offline_preprocess_single_point_sensitivity_quick():
    """Adding one point changes the kept set by at most K_gamma elements."""
    rng = np.random.default_rng(17)
    for trial in range(20):
        gamma = float(rng.choice([0.0, 0.25, 0.5]))
        n = int(rng.integers(2, 15))
        data = make_examples(n, num_groups=2, num_classes=2, d=2, seed=trial)
        base = ordered_offline_preprocess(data, gamma)
        base_keys = {(ex.features.tobytes(), ex.group, ex.label) for ex in base}
        bound = k_gamma(gamma)
        for z in (0, 1):
            for y in (0, 1):
                extra = LabeledExample(
                    features=rng.standard_normal(2), group=z, label=y
                )
                out = ordered_offline_preprocess(list(data) + [extra], gamma)
                keys = {(ex.features.tobytes(), ex.group, ex.label) for ex in out}
                assert len(keys ^ base_keys) <= bound
