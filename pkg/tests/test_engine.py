"""Engine: worker-count independence, metrics and error reporting."""

import json

import numpy as np
import pytest

from parbucket.core import BucketHeap
from parbucket.engine import Engine, EngineConfig, Metrics, run_trace
from parbucket.errors import EmptyHeapError, PreconditionError
from parbucket.oracle import replay
from parbucket.traces import Trace
from parbucket.workload import random_trace


def _direct(trace, d):
    # the same trace through the plain heap API, one call per operation
    h = BucketHeap(d)
    vals, pris = [], []
    for op in trace.ops():
        if op[0] == "U":
            h.update(op[1], op[2])
        elif op[0] == "D":
            h.delete(op[1])
        elif op[0] == "B":
            h.bulk_update(op[1])
        else:
            e = h.extract_min()
            vals.append(e.value)
            pris.append(e.priority)
    return np.array(vals, np.int64), np.array(pris, np.int64)


@pytest.mark.parametrize("d", [1, 4, 16])
def test_single_worker_equals_direct_heap(d):
    tr = random_trace(3000, d, seed=d)
    (v, p), _ = run_trace(EngineConfig(d), tr)
    dv, dp = _direct(tr, d)
    assert np.array_equal(v, dv) and np.array_equal(p, dp)


@pytest.mark.parametrize("d", [1, 4, 64])
def test_worker_counts_agree_with_oracle(d):
    tr = random_trace(20000, d, seed=7)
    ov, op = replay(tr)
    results = []
    for w in (1, 2, 4, 8):
        (v, p), m = run_trace(EngineConfig(d, workers=w, debug_assertions=True), tr)
        assert np.array_equal(v, ov) and np.array_equal(p, op)
        assert m.precondition_failures == 0
        results.append((m.resolves_per_level, m.touches_per_level, m.live_size))
    assert all(r == results[0] for r in results)


def test_unit_batch_resolve_counts():
    # with d = 1 level i is resolved about once per 4^i operations
    n = 4096
    tr = Trace.from_ops([("U", v, (v * 7919) % 10007) for v in range(n)])
    with Engine(EngineConfig(1)) as eng:
        eng.run_trace(tr, drain=False)
        res = eng.snapshot_metrics().resolves_per_level
    for i, c in enumerate(res[:5]):
        assert abs(c - n // 4 ** i) <= 1


def test_fresh_metrics_are_zero():
    with Engine(EngineConfig(4)) as eng:
        m = eng.snapshot_metrics()
    assert m.ops == 0 and m.live_size == 0 and m.total_touches == 0
    assert sum(m.resolves_per_level) == 0


def test_metrics_json_keys():
    m = Metrics(ops=3, resolves_per_level=[3], touches_per_level=[12])
    doc = json.loads(m.to_json())
    assert doc["schema"] == "parbucket.metrics/1"
    assert set(doc) == {"schema", "ops", "resolves_per_level", "touches_per_level", "wall_ms",
                        "precondition_failures", "live_size"}


def test_drain_then_extract_in_order():
    with Engine(EngineConfig(2, workers=3)) as eng:
        for v, p in [(1, 30), (2, 10), (3, 20)]:
            eng.update(v, p)
        eng.delete(3)
        eng.drain()
        assert eng.snapshot_metrics().live_size == 2
        assert [tuple(eng.extract_min()) for _ in range(2)] == [(2, 10), (1, 30)]
        with pytest.raises(EmptyHeapError):
            eng.extract_min()


def test_drain_on_empty_engine():
    with Engine(EngineConfig(8, workers=4)) as eng:
        eng.drain()
        assert eng.snapshot_metrics().live_size == 0


def test_interactive_bulk_update():
    with Engine(EngineConfig(4, workers=2)) as eng:
        eng.bulk_update([5, 6, 7], [3, 1, 2])
        eng.bulk_update([], [])
        assert tuple(eng.extract_min()) == (6, 1)


def test_bulk_larger_than_d_rejected_with_index():
    tr = Trace.from_ops([("U", 1, 1), ("B", [(2, 1), (3, 1), (4, 1)])])
    with pytest.raises(PreconditionError) as exc:
        run_trace(EngineConfig(2, debug_assertions=True), tr)
    assert exc.value.index == 1


def test_update_after_extract_reported_in_debug_mode():
    tr = Trace.from_ops([("U", 1, 5), ("E",), ("U", 1, 2), ("E",)])
    with pytest.raises(PreconditionError) as exc:
        run_trace(EngineConfig(1, debug_assertions=True), tr)
    assert exc.value.index == 2


def test_update_rejects_del_priority():
    with Engine(EngineConfig(1)) as eng, pytest.raises(PreconditionError):
        eng.update(1, -1)


@pytest.mark.parametrize("kw", [{"d": 0}, {"d": 1, "workers": 0}, {"d": 1, "front_levels": 1}])
def test_config_validation(kw):
    with pytest.raises(PreconditionError):
        EngineConfig(**kw)


def test_instrumented_run_has_no_adjacent_overlap():
    tr = random_trace(20000, 4, seed=3)
    with Engine(EngineConfig(4, workers=8, instrument=True)) as eng:
        eng.run_trace(tr)
        assert eng.intervals
        assert eng.overlap_report() == []
