import random
import time
from collections import Counter

import numpy as np
import pytest

from tensordd.circuit import allocate_indices, functionality_dense, parse_qasm, parse_qasm_file
from tensordd.diagram import NodeStore, audit, to_dense
from tensordd.numerics import weights_equal
from tensordd.planner import (
    PartitionConfig,
    PlanError,
    PlanTimeout,
    execute_plan,
    partition,
    plan_circuit,
    plan_stats,
    plan_to_json,
)

from util import random_circuit

DEMO = "circuits/partition_demo.qasm"


def build(circ, scheme="seq", store=None, **kw):
    net = allocate_indices(circ)
    plan = plan_circuit(net, PartitionConfig(scheme, **kw))
    if store is None:
        store = NodeStore(net.order)
    return net, store, execute_plan(plan, store)


# --- configuration ---


def test_resolve_defaults():
    cfg = PartitionConfig("p1").resolve(8)
    assert (cfg.k, cfg.k1, cfg.k2, cfg.horizontal_cut) == (4, 4, 5, 4)
    cfg = PartitionConfig("p2").resolve(3)
    assert (cfg.k1, cfg.k2, cfg.horizontal_cut) == (1, 2, 1)


@pytest.mark.parametrize("cfg", [
    PartitionConfig("frobnicate"),
    PartitionConfig("p1", k=0),
    PartitionConfig("p2", k1=0),
    PartitionConfig("p2", k2=1),
    PartitionConfig("p1", horizontal_cut=0),
    PartitionConfig("p1", horizontal_cut=4),
])
def test_resolve_rejects(cfg):
    with pytest.raises(PlanError):
        cfg.resolve(4)


# --- partitioning ---


def parts_cover_each_gate_once(parts, circ):
    roles = Counter()
    for p in parts:
        for pos, role in p.items:
            roles[pos, role] += 1
    for i, g in enumerate(circ.gates):
        if (i, "copy") in roles:
            assert roles[i, "copy"] == 1 and roles[i, "xor"] == 1
            assert (i, "whole") not in roles
        else:
            assert roles[i, "whole"] == 1


def test_partition_demo_part_counts():
    circ = parse_qasm_file(DEMO)
    assert len(partition(circ, PartitionConfig("seq"))) == 1
    p1a = partition(circ, PartitionConfig("p1", k=1))
    p1b = partition(circ, PartitionConfig("p1", k=2))
    p2 = partition(circ, PartitionConfig("p2", k1=1, k2=2))
    assert len(p1a) == 4 and len(p1b) == 2 and len(p2) == 5
    for parts in (p1a, p1b, p2):
        parts_cover_each_gate_once(parts, circ)
    # both crossing CXs are split; control side takes the copy half
    a0 = next(p for p in p1a if (p.region, p.segment) == ("A", 0))
    b1 = next(p for p in p1a if (p.region, p.segment) == ("B", 1))
    assert (7, "copy") in a0.items and (8, "copy") in b1.items
    # scheme 2 keeps its second crossing CX whole inside the middle block
    c0 = next(p for p in p2 if p.region == "C")
    assert c0.items == [(8, "whole")]


def test_partition_non_cx_crossing_goes_with_last_wire():
    circ = parse_qasm("OPENQASM 2.0;\nqreg q[4];\nswap q[2],q[1];\ncz q[1],q[2];")
    parts = partition(circ, PartitionConfig("p1", k=1))
    sides = {pos: p.region for p in parts for pos, _ in p.items}
    assert sides[0] == "A"   # swap's last wire is q[1], above the cut
    assert sides[1] == "B"   # cz's last wire is q[2], below the cut


@pytest.mark.parametrize("seed", range(6))
def test_partition_random_covers(seed):
    rng = random.Random(seed)
    circ = random_circuit(rng, rng.randint(2, 7), rng.randint(0, 25))
    for cfg in (PartitionConfig("p1"), PartitionConfig("p2")):
        parts_cover_each_gate_once(partition(circ, cfg), circ)


# --- plan shape ---


def test_plan_stats_demo():
    net = allocate_indices(parse_qasm_file(DEMO))

    def hist(scheme, **kw):
        h = plan_stats(plan_circuit(net, PartitionConfig(scheme, **kw)))
        small = sum(c for (m, n, r), c in h.items() if m <= 4 and n <= 4)
        big = {k: v for k, v in h.items() if not (k[0] <= 4 and k[1] <= 4)}
        return big, small

    assert hist("seq") == ({(8, 2, 1): 8, (8, 4, 2): 5, (6, 2, 0): 1}, 2)
    assert hist("p1", k=1) == ({(8, 8, 4): 1, (5, 5, 1): 2, (5, 2, 1): 5}, 10)
    assert hist("p2", k1=1, k2=2) == ({(8, 8, 4): 1, (8, 4, 2): 1, (5, 5, 1): 1}, 14)


def test_plan_step_count_is_leaves_minus_one():
    circ = parse_qasm_file(DEMO)
    net = allocate_indices(circ)
    for cfg, cuts in [(PartitionConfig("seq"), 0),
                      (PartitionConfig("p1", k=1), 2),
                      (PartitionConfig("p2", k1=1, k2=2), 1)]:
        plan = plan_circuit(net, cfg)
        assert len(plan.steps) == len(circ.gates) + cuts - 1


def test_plan_to_json_shape():
    net = allocate_indices(parse_qasm_file(DEMO))
    pj = plan_to_json(plan_circuit(net, PartitionConfig("p1", k=1)))
    assert pj["scheme"] == "p1"
    assert len(pj["parts"]) == 4
    assert all(set(s) == {"tag", "m", "n", "r", "var"} for s in pj["steps"])


# --- execution ---


def test_execute_empty_circuit():
    net, store, (tdd, stats) = build(parse_qasm("OPENQASM 2.0;\nqreg q[2];"))
    assert tdd.root.weight == 1 and tdd.root.target == 0
    assert stats["final_nodes"] == 0


@pytest.mark.parametrize("scheme", ["seq", "p1", "p2"])
def test_execute_matches_oracle(scheme):
    rng = random.Random(31)
    for _ in range(8):
        circ = random_circuit(rng, rng.randint(2, 5), rng.randint(1, 20))
        net, store, (tdd, stats) = build(circ, scheme)
        labels = tuple(net.order.sort(net.open_labels()))
        ref = functionality_dense(net)
        got = to_dense(tdd, labels)
        assert np.max(np.abs(got.values - ref.values)) < 1e-9
        assert not audit(store)
        assert stats["final_nodes"] >= 0 and stats["peak_nodes"] >= stats["final_nodes"]


def test_schemes_share_canonical_root():
    rng = random.Random(77)
    for _ in range(5):
        circ = random_circuit(rng, rng.randint(4, 6), rng.randint(5, 30))
        net = allocate_indices(circ)
        store = NodeStore(net.order)
        roots = []
        for scheme in ("seq", "p1", "p2"):
            tdd, _ = execute_plan(plan_circuit(net, PartitionConfig(scheme)), store)
            roots.append(tdd.root)
        assert len({r.target for r in roots}) == 1
        assert all(weights_equal(r.weight, roots[0].weight) for r in roots)
        assert not audit(store)


def test_execute_deadline():
    circ = random_circuit(random.Random(3), 5, 30)
    net = allocate_indices(circ)
    plan = plan_circuit(net, PartitionConfig("seq"))
    with pytest.raises(PlanTimeout):
        execute_plan(plan, NodeStore(net.order), deadline=time.monotonic() - 1.0)


def test_execute_gc_between_steps():
    circ = random_circuit(random.Random(41), 6, 60)
    net = allocate_indices(circ)
    plan = plan_circuit(net, PartitionConfig("p1"))
    store = NodeStore(net.order, gc_limit=200)
    tdd, stats = execute_plan(plan, store)
    assert store.gc_runs > 0
    assert not audit(store)
    ref = functionality_dense(net)
    got = to_dense(tdd, tuple(net.order.sort(net.open_labels())))
    assert np.max(np.abs(got.values - ref.values)) < 1e-9


def test_gc_protects_results_already_in_the_store():
    circ = random_circuit(random.Random(8), 5, 25)
    net = allocate_indices(circ)
    store = NodeStore(net.order, gc_limit=200)
    first, _ = execute_plan(plan_circuit(net, PartitionConfig("seq")), store)
    dense_before = to_dense(first).values
    execute_plan(plan_circuit(net, PartitionConfig("p1")), store)
    assert store.gc_runs > 0
    assert np.array_equal(to_dense(first).values, dense_before)
    assert not audit(store)
