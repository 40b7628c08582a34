import json
import warnings

import numpy as np
import pytest

from fairpriv.core import ExperimentRecord
from fairpriv.fairness import DisparityVariant, GateParams
from fairpriv.harness import (
    VARIANT_DEMO_COUNTS,
    GridSpec,
    HarnessConfig,
    SyntheticSpec,
    generate,
    load,
    partition_teachers,
    persist,
    persist_csv,
    prepare_context,
    replay_gate_soundness,
    run_cell,
    run_fairpate,
    run_grid,
    variant_comparison,
)

from fairpriv.aggregation import AggregatorParams

SMALL = SyntheticSpec(n=1200, d=6)
FAST = HarnessConfig(
    num_teachers=10,
    num_queries=60,
    min_count=5,
    aggregator=AggregatorParams(threshold=5.0, sigma1=12.0, sigma2=2.0),
)


def small_ctx(replicate=0, **kw):
    return prepare_context(SMALL, FAST, master_seed=17, replicate=replicate, **kw)


# ---------------------------------------------------------------------------
# Synthetic data


def test_generate_is_deterministic():
    a = generate(SMALL, seed=5)
    b = generate(SMALL, seed=5)
    np.testing.assert_array_equal(a.train.X, b.train.X)
    np.testing.assert_array_equal(a.test.labels, b.test.labels)


def test_generate_split_sizes_and_ranges():
    splits = generate(SMALL, seed=1)
    n = len(splits.train.X) + len(splits.public.X) + len(splits.test.X)
    assert n == SMALL.n
    assert len(splits.train.X) == int(0.8 * SMALL.n)
    for part in (splits.train, splits.public, splits.test):
        assert part.groups.min() >= 0 and part.groups.max() < SMALL.num_groups
        assert part.labels.min() >= 0 and part.labels.max() < SMALL.num_classes
        assert part.X.shape[1] == SMALL.d


def test_generate_exact_counts():
    spec = SyntheticSpec.from_counts(VARIANT_DEMO_COUNTS, d=4, splits=(1.0, 0.0, 0.0))
    splits = generate(spec, seed=3)
    counts = np.zeros((3, 2), dtype=np.int64)
    for z, y in zip(splits.train.groups, splits.train.labels):
        counts[z, y] += 1
    np.testing.assert_array_equal(counts, VARIANT_DEMO_COUNTS)


def test_class_mix_tracks_conditionals():
    spec = SyntheticSpec(n=20000, class_given_group=((0.8, 0.2), (0.2, 0.8)))
    splits = generate(spec, seed=7)
    z = splits.train.groups
    y = splits.train.labels
    rate0 = (y[z == 0] == 0).mean()
    rate1 = (y[z == 1] == 0).mean()
    assert rate0 == pytest.approx(0.8, abs=0.02)
    assert rate1 == pytest.approx(0.2, abs=0.02)


def test_partition_teachers_disjoint_and_complete():
    splits = generate(SMALL, seed=2)
    shards = partition_teachers(splits.train, 7)
    assert len(shards) == 7
    assert sum(len(s.X) for s in shards) == len(splits.train.X)
    with pytest.raises(ValueError):
        partition_teachers(splits.train, 0)
    with pytest.raises(ValueError):
        partition_teachers(splits.train, len(splits.train.X) + 1)


# ---------------------------------------------------------------------------
# Context and seeding discipline


def test_context_is_bit_reproducible():
    a = small_ctx()
    b = small_ctx()
    np.testing.assert_array_equal(a.votes, b.votes)
    np.testing.assert_array_equal(a.splits.train.X, b.splits.train.X)


def test_replicate_changes_data_but_not_structure():
    a = small_ctx(replicate=0)
    b = small_ctx(replicate=1)
    assert a.votes.shape == b.votes.shape
    assert np.any(a.splits.train.X != b.splits.train.X)


def test_context_shared_across_constraint_settings():
    # The constraint values (eps, gamma) are not part of the phase seeds, so
    # two runs at different constraints see identical data and votes.
    ctx = small_ctx()
    r1 = run_fairpate(ctx, 2.0, 0.05)
    ctx2 = small_ctx()
    r2 = run_fairpate(ctx2, 3.0, 0.10)
    np.testing.assert_array_equal(ctx.votes, ctx2.votes)
    assert r1.record.eps_spec != r2.record.eps_spec


# ---------------------------------------------------------------------------
# FairPATE run invariants


def test_fairpate_respects_budget_and_replays_soundly():
    ctx = small_ctx()
    res = run_fairpate(ctx, 1.5, 0.1)
    rec = res.record
    assert rec.framework == "fairpate"
    assert rec.eps_achieved <= rec.eps_spec + 1e-9
    assert 0.0 <= rec.coverage <= 1.0
    gate = GateParams(rho_fair=0.1, min_count=FAST.min_count, variant=FAST.variant)
    assert replay_gate_soundness(
        res.entries, gate, ctx.splits.num_groups, ctx.splits.num_classes
    )


def test_fairpate_ledger_matches_record():
    ctx = small_ctx()
    res = run_fairpate(ctx, 1.5, 0.1)
    answered = sum(1 for e in res.entries if e.answered)
    processed = FAST.num_queries
    assert res.record.coverage == pytest.approx(answered / processed, abs=1e-6)
    assert res.record.eps_achieved == pytest.approx(
        res.tracker.current_epsilon(), abs=1e-6
    )


def test_run_cell_dispatches_every_framework():
    for fw in ("fairpate", "pate_pre", "pate_in", "fairdpsgd"):
        res = run_cell(SMALL, FAST, 17, fw, 2.0, 0.1, 0)
        assert res.record.framework == fw
        assert res.record.eps_achieved <= 2.0 + 1e-9
    with pytest.raises(ValueError):
        run_cell(SMALL, FAST, 17, "nope", 2.0, 0.1, 0)


# ---------------------------------------------------------------------------
# Grid and persistence


def test_run_grid_covers_axes_in_order():
    grid = GridSpec(eps_values=(1.0, 2.0), fairness_values=(0.05, 0.1), replicates=(0,))
    results = run_grid(SMALL, grid, FAST, master_seed=17)
    assert len(results) == 4
    keys = [(r.record.eps_spec, r.record.fairness_spec) for r in results]
    assert keys == [(1.0, 0.05), (1.0, 0.1), (2.0, 0.05), (2.0, 0.1)]


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(framework="mystery")
    with pytest.raises(ValueError):
        GridSpec(eps_values=())
    with pytest.raises(ValueError):
        GridSpec(eps_values=(0.0,))


def test_persist_load_roundtrip(tmp_path):
    grid = GridSpec(eps_values=(2.0,), fairness_values=(0.1,), replicates=(0,))
    results = run_grid(SMALL, grid, FAST, master_seed=17)
    records = [r.record for r in results]
    path = tmp_path / "frontier.json"
    persist(records, path, dataset=SMALL.name, master_seed=17)
    loaded, meta = load(path)
    assert loaded == records
    assert meta["schema_version"] == "1"
    assert meta["dataset"] == SMALL.name
    assert meta["master_seed"] == 17
    assert "generated_at" in meta


def test_persist_output_is_stable_json(tmp_path):
    rec = ExperimentRecord(
        framework="fairpate", eps_spec=2.0, fairness_spec=0.1, eps_achieved=1.5,
        max_disparity=0.05, accuracy=0.9, coverage=0.4, seed=0,
    )
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    persist([rec], p1, dataset="x", master_seed=1, generated_at="2026-01-01T00:00:00Z")
    persist([rec], p2, dataset="x", master_seed=1, generated_at="2026-01-01T00:00:00Z")
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_text().endswith("\n")
    doc = json.loads(p1.read_text())
    assert set(doc) == {"meta", "records"}


def test_load_rejects_wrong_schema_version(tmp_path):
    path = tmp_path / "bad.json"
    doc = {
        "meta": {"schema_version": "2", "dataset": "x", "master_seed": 0,
                 "generated_at": "now"},
        "records": [],
    }
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        load(path)


def test_load_rejects_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"meta": ')
    with pytest.raises(ValueError) as err:
        load(path)
    assert "line" in str(err.value)


def test_persist_csv_shape(tmp_path):
    rec = ExperimentRecord(
        framework="fairpate", eps_spec=2.0, fairness_spec=0.1, eps_achieved=1.5,
        max_disparity=0.05, accuracy=0.9, coverage=0.4, seed=3,
    )
    path = tmp_path / "records.csv"
    persist_csv([rec], path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].split(",") == list(ExperimentRecord.FIELD_NAMES)
    assert lines[1].split(",")[0] == "fairpate"
    assert len(lines) == 2


# ---------------------------------------------------------------------------
# Disparity-variant comparison


def test_variant_comparison_frozen_totals():
    got = variant_comparison()
    assert got == {
        DisparityVariant.BETWEEN_GROUPS: 90,
        DisparityVariant.TO_OVERALL: 1871,
        DisparityVariant.TO_OVERALL_NO_DOUBLE_COUNT: 1837,
    }


def test_variant_comparison_ordering_holds():
    got = variant_comparison()
    assert (
        got[DisparityVariant.TO_OVERALL]
        >= got[DisparityVariant.TO_OVERALL_NO_DOUBLE_COUNT]
        >= got[DisparityVariant.BETWEEN_GROUPS]
    )
