"""Circuit partitioning, contraction planning and plan execution."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, replace

from .diagram import Tdd, contract, generate, reachable, size, tensor_product

SEQUENTIAL = "seq"
SCHEME1 = "p1"
SCHEME2 = "p2"


class PlanError(ValueError):
    pass


class PlanTimeout(RuntimeError):
    pass


@dataclass(frozen=True)
class PartitionConfig:
    scheme: str = SEQUENTIAL
    k: int = None
    k1: int = None
    k2: int = None
    horizontal_cut: int = None

    def resolve(self, n_qubits):
        """Fill in the qubit-count-dependent defaults and validate."""
        if self.scheme not in (SEQUENTIAL, SCHEME1, SCHEME2):
            raise PlanError("unknown scheme %r" % (self.scheme,))
        cut = self.horizontal_cut if self.horizontal_cut is not None else n_qubits // 2
        k = self.k if self.k is not None else max(1, n_qubits // 2)
        k1 = self.k1 if self.k1 is not None else max(1, n_qubits // 2)
        k2 = self.k2 if self.k2 is not None else max(2, n_qubits // 2 + 1)
        if k < 1 or k1 < 1:
            raise PlanError("k and k1 must be at least 1")
        if k2 < 2:
            raise PlanError("k2 must be at least 2")
        if self.scheme != SEQUENTIAL and not 0 < cut < n_qubits:
            raise PlanError("horizontal cut %d leaves an empty half" % cut)
        return replace(self, k=k, k1=k1, k2=k2, horizontal_cut=cut)


@dataclass
class Part:
    """Gate slots assigned to one region of one vertical segment."""

    region: str   # 'A' top, 'B' bottom, 'C' middle block
    segment: int
    items: list   # (gate position, role) with role in {'whole', 'copy', 'xor'}

    @property
    def gate_indices(self):
        return tuple(p for p, _ in self.items)


def _crossing(gate, cut):
    tops = [q < cut for q in gate.qubits]
    return any(tops) and not all(tops)


def partition_sequential(circ):
    return [Part("A", 0, [(i, "whole") for i in range(len(circ.gates))])]


def partition_scheme1(circ, cfg):
    """Horizontal middle cut plus a vertical cut before every (k+1)-th crossing CX."""
    cfg = cfg.resolve(circ.n_qubits)
    cut = cfg.horizontal_cut
    segments = [{"A": [], "B": []}]
    count = 0
    for i, g in enumerate(circ.gates):
        if g.kind == "cx" and _crossing(g, cut):
            if count == cfg.k:
                segments.append({"A": [], "B": []})
                count = 0
            count += 1
            cside = "A" if g.qubits[0] < cut else "B"
            tside = "B" if cside == "A" else "A"
            segments[-1][cside].append((i, "copy"))
            segments[-1][tside].append((i, "xor"))
        elif _crossing(g, cut):
            # non-CX crossing gates are kept whole on the side of their last wire
            side = "A" if g.qubits[-1] < cut else "B"
            segments[-1][side].append((i, "whole"))
        else:
            side = "A" if g.qubits[0] < cut else "B"
            segments[-1][side].append((i, "whole"))
    return [Part(r, s, seg[r]) for s, seg in enumerate(segments) for r in ("A", "B")]


def partition_scheme2(circ, cfg):
    """Split the first k1 crossing CXs, then grow a middle block C; cut
    vertically once C's qubit set reaches k2 qubits."""
    cfg = cfg.resolve(circ.n_qubits)
    cut = cfg.horizontal_cut
    parts = []
    seg = {"A": [], "B": [], "C": []}
    state = {"seg": 0, "cuts": 0, "c_qubits": set()}

    def close():
        nonlocal seg
        for r in ("A", "B"):
            parts.append(Part(r, state["seg"], seg[r]))
        if seg["C"]:
            parts.append(Part("C", state["seg"], seg["C"]))
        seg = {"A": [], "B": [], "C": []}
        state["seg"] += 1
        state["cuts"] = 0
        state["c_qubits"] = set()

    for i, g in enumerate(circ.gates):
        if state["c_qubits"] and set(g.qubits) <= state["c_qubits"]:
            seg["C"].append((i, "whole"))
            continue
        if g.kind == "cx" and _crossing(g, cut):
            if state["cuts"] < cfg.k1:
                state["cuts"] += 1
                cside = "A" if g.qubits[0] < cut else "B"
                tside = "B" if cside == "A" else "A"
                seg[cside].append((i, "copy"))
                seg[tside].append((i, "xor"))
            else:
                seg["C"].append((i, "whole"))
                state["c_qubits"] |= set(g.qubits)
                if len(state["c_qubits"]) >= cfg.k2:
                    close()
            continue
        if _crossing(g, cut):
            side = "A" if g.qubits[-1] < cut else "B"
        else:
            side = "A" if g.qubits[0] < cut else "B"
        seg[side].append((i, "whole"))
    if seg["A"] or seg["B"] or seg["C"] or state["seg"] == 0:
        close()
    return parts


def partition(circ, cfg):
    cfg = cfg.resolve(circ.n_qubits)
    if cfg.scheme == SEQUENTIAL:
        return partition_sequential(circ)
    if cfg.scheme == SCHEME1:
        return partition_scheme1(circ, cfg)
    return partition_scheme2(circ, cfg)


@dataclass
class PlanLeaf:
    pos: int
    tag: str
    dense: object    # DenseTensor, or None for the degenerate copy half
    exec_mult: dict
    plain: tuple


@dataclass
class PlanNode:
    left: object
    right: object
    var: tuple   # labels summed out at this step
    mnr: tuple   # plain ranks (left, right, common)
    tag: str


@dataclass
class Plan:
    net: object
    config: object
    parts: list
    root: object   # PlanLeaf, PlanNode, or None for an empty circuit
    steps: list    # PlanNodes in execution (postorder) order
    open_exec: tuple


def _plain_walk(circ):
    """Wire segments of the plain network, where every gate advances each
    wire it touches (no diagonal-gate label sharing)."""
    pos = {q: 0 for q in range(circ.n_qubits)}
    per_gate = []
    for g in circ.gates:
        wires = {}
        for q in g.qubits:
            wires[q] = (("w", q, pos[q]), ("w", q, pos[q] + 1))
            pos[q] += 1
        per_gate.append(wires)
    boundary = {("w", q, 0) for q in pos} | {("w", q, p) for q, p in pos.items()}
    return per_gate, boundary


def _leaf(net, per_gate, pos, role):
    gt = net.tensors[pos]
    g = gt.gate
    if role == "whole":
        plain = tuple(l for q in g.qubits for l in per_gate[pos][q])
        return PlanLeaf(pos, "%s@%d" % (g.kind, pos), gt.dense, dict(gt.mult), plain)
    # split CX: the copy half keeps the control wire and carries no tensor
    # (the control label just extends across the cut); the xor half carries
    # the whole gate tensor on the target side
    bond = ("bond", pos)
    if role == "copy":
        plain = per_gate[pos][g.qubits[0]] + (bond,)
        return PlanLeaf(pos, "copy@%d" % pos, None, {}, plain)
    plain = per_gate[pos][g.qubits[1]] + (bond,)
    return PlanLeaf(pos, "xor@%d" % pos, gt.dense, dict(gt.mult), plain)


def plan_from_parts(net, parts, config=None):
    """Build the contraction tree: per-part left fold in circuit order, then
    A*B(*C) per segment, then a left fold over segments."""
    circ = net.circuit
    per_gate, plain_boundary = _plain_walk(circ)
    exec_boundary = net.open_labels()

    part_leaves = [[_leaf(net, per_gate, p, role) for p, role in sorted(part.items)]
                   for part in parts]
    exec_total = Counter()
    plain_total = Counter()
    for leaves in part_leaves:
        for leaf in leaves:
            exec_total.update(leaf.exec_mult)
            plain_total.update(leaf.plain)

    steps = []

    def open_set(counts, total, boundary):
        return {l for l, c in counts.items() if c < total[l] or l in boundary}

    def merge(left, right, tag):
        ln, lc, lp = left
        rn, rc, rp = right
        var = sorted((l for l in lc.keys() & rc.keys()
                      if lc[l] + rc[l] == exec_total[l] and l not in exec_boundary),
                     key=net.order.key)
        lo = open_set(lp, plain_total, plain_boundary)
        ro = open_set(rp, plain_total, plain_boundary)
        node = PlanNode(ln, rn, tuple(var), (len(lo), len(ro), len(lo & ro)), tag)
        steps.append(node)
        return node, lc + rc, lp + rp

    def fold(entries, tag):
        acc = None
        for e in entries:
            acc = e if acc is None else merge(acc, e, tag)
        return acc

    by_segment = {}
    for part, leaves in zip(parts, part_leaves):
        if not leaves:
            continue
        tag = "%s%d" % (part.region, part.segment)
        acc = fold([(lf, Counter(lf.exec_mult), Counter(lf.plain)) for lf in leaves], tag)
        by_segment.setdefault(part.segment, []).append(acc)
    seg_accs = [fold(by_segment[s], "S%d" % s) for s in sorted(by_segment)]
    total = fold(seg_accs, "join")

    if total is None:
        root, open_exec = None, ()
    else:
        root, counts, _ = total
        open_exec = tuple(net.order.sort(open_set(counts, exec_total, exec_boundary)))
    summed = Counter(l for node in steps for l in node.var)
    expected = set(exec_total) - exec_boundary
    if set(summed) != expected or any(c != 1 for c in summed.values()):
        raise PlanError("label accounting mismatch between plan steps and circuit")
    return Plan(net, config, parts, root, steps, open_exec)


def plan_circuit(net, cfg=None):
    cfg = (cfg if cfg is not None else PartitionConfig()).resolve(net.circuit.n_qubits)
    return plan_from_parts(net, partition(net.circuit, cfg), cfg)


def plan_stats(plan):
    """Histogram of (m, n, r) step triples, without executing anything."""
    return Counter(node.mnr for node in plan.steps)


def plan_to_json(plan):
    cfg = plan.config
    return {
        "scheme": cfg.scheme if cfg is not None else None,
        "parts": [{"region": p.region, "segment": p.segment,
                   "gates": list(p.gate_indices)} for p in plan.parts],
        "steps": [{"tag": n.tag, "m": n.mnr[0], "n": n.mnr[1], "r": n.mnr[2],
                   "var": len(n.var)} for n in plan.steps],
    }


def execute_plan(plan, store, deadline=None):
    """Run the plan bottom-up in the given store; returns (Tdd, stats).

    deadline is an absolute time.monotonic() value; exceeding it raises
    PlanTimeout between steps.
    """
    t0 = time.perf_counter()
    values = {}
    peak = 0
    base = store._next

    def leaf_value(leaf):
        if leaf.dense is None:
            return None
        return generate(store, leaf.dense, dict(leaf.exec_mult))

    def sample():
        nonlocal peak
        roots = [v.root.target for v in values.values() if v is not None]
        if roots:
            peak = max(peak, len(reachable(store, roots)))

    step_log = []
    if plan.root is None:
        result = Tdd(store, store.terminal_edge(1.0), {})
    elif isinstance(plan.root, PlanLeaf):
        result = leaf_value(plan.root)
        peak = size(result)
    else:
        for node in plan.steps:
            if deadline is not None and time.monotonic() > deadline:
                raise PlanTimeout("plan execution exceeded its deadline")
            for side in (node.left, node.right):
                if isinstance(side, PlanLeaf):
                    values[id(side)] = leaf_value(side)
            sample()
            lv = values.pop(id(node.left))
            rv = values.pop(id(node.right))
            if lv is None:
                res = rv
            elif rv is None:
                res = lv
            elif node.var:
                res = contract(lv, rv, node.var)
            else:
                res = tensor_product(lv, rv)
            values[id(node)] = res
            sample()
            step_log.append({"tag": node.tag, "m": node.mnr[0], "n": node.mnr[1],
                             "r": node.mnr[2], "var": len(node.var),
                             "nodes": 0 if res is None else size(res)})
            # the store only grows during contraction; sweep dead nodes
            # between steps so long runs stay within memory (anything that
            # existed before this plan started is left alone)
            if len(store.nodes) > store.gc_limit:
                store.collect([v.root.target for v in values.values() if v is not None],
                              keep_below=base)
        result = values.pop(id(plan.root))
    if result is None:
        result = Tdd(store, store.terminal_edge(1.0), {})
    final = size(result)
    stats = {
        "final_nodes": final,
        "peak_nodes": max(peak, final),
        "steps": step_log,
        "elapsed_s": time.perf_counter() - t0,
        "store": store.stats(),
    }
    return result, stats
