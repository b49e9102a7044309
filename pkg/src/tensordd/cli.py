"""Command line tools: simulate, amplitude, equivalence, DOT export, bench."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .circuit import QasmError, allocate_indices, parse_qasm_file
from .dense import DenseTensor, IndexLabel, IndexOrder, network_to_dense
from .diagram import (NodeStore, contract, evaluate, export_dot, generate,
                      relabel, to_dense)
from .numerics import ToleranceConfig, format_weight, weights_equal
from .planner import PartitionConfig, PlanError, PlanTimeout, execute_plan, plan_circuit

# comparison-grid position for output labels; far above any real wire segment
SPLIT_POS = 1_000_000


class CliError(ValueError):
    pass


def _order(args):
    return IndexOrder(getattr(args, "inverse_order", False))


def _tolerance(args):
    return ToleranceConfig(eps=args.eps, norm_eps=args.norm_eps)


def _partition_config(args, scheme=None):
    return PartitionConfig(scheme if scheme is not None else args.scheme,
                           k=args.k, k1=args.k1, k2=args.k2)


def _build(path, args, scheme=None, timeout_s=None):
    circ = parse_qasm_file(path)
    order = _order(args)
    net = allocate_indices(circ, order)
    cfg = _partition_config(args, scheme).resolve(circ.n_qubits)
    plan = plan_circuit(net, cfg)
    store = NodeStore(order, _tolerance(args))
    deadline = None if timeout_s is None else time.monotonic() + timeout_s
    tdd, stats = execute_plan(plan, store, deadline)
    return circ, net, cfg, plan, store, tdd, stats


def _verify_deviation(net, tdd, args):
    n = net.circuit.n_qubits
    if n > 10:
        raise CliError("--verify supports at most 10 qubits, got %d" % n)
    labels = tuple(net.order.sort(net.open_labels()))
    ref = network_to_dense([t.dense for t in net.tensors], labels, net.order)
    got = to_dense(tdd, labels)
    return float(np.max(np.abs(got.values - ref.values)))


def _report(name, circ, cfg, plan, stats, timeout_s=None, timed_out=False,
            verified=None, max_deviation=None, error=None):
    report = {
        "circuit": name,
        "n_qubits": circ.n_qubits if circ is not None else None,
        "gates": len(circ.gates) if circ is not None else None,
        "scheme": cfg.scheme,
        "params": {"k": cfg.k, "k1": cfg.k1, "k2": cfg.k2,
                   "horizontal_cut": cfg.horizontal_cut},
        "parts": len(plan.parts) if plan is not None else None,
        "elapsed_ms": None if stats is None else stats["elapsed_s"] * 1000.0,
        "time_s": (">%.2f" % timeout_s) if timed_out
                  else (None if stats is None else "%.2f" % stats["elapsed_s"]),
        "final_nodes": None if stats is None else stats["final_nodes"],
        "peak_nodes": None if stats is None else stats["peak_nodes"],
        "cache": None if stats is None else stats["store"],
        "timed_out": timed_out,
        "verified": verified,
        "max_deviation": max_deviation,
    }
    if error is not None:
        report["error"] = error
    return report


def _emit_json(obj, dest):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if dest == "-":
        print(text)
    else:
        Path(dest).write_text(text + "\n")


def cmd_sim(args):
    name = Path(args.file).stem
    try:
        circ, net, cfg, plan, store, tdd, stats = _build(
            args.file, args, timeout_s=args.timeout_s)
    except PlanTimeout:
        cfg = _partition_config(args)
        report = _report(name, None, cfg, None, None,
                         timeout_s=args.timeout_s, timed_out=True)
        if args.json:
            _emit_json(report, args.json)
        print("timed out after %.2f s" % args.timeout_s, file=sys.stderr)
        return 1
    verified = None
    max_dev = None
    if args.verify:
        max_dev = _verify_deviation(net, tdd, args)
        verified = max_dev <= args.norm_eps
    report = _report(name, circ, cfg, plan, stats,
                     verified=verified, max_deviation=max_dev)
    if args.json:
        _emit_json(report, args.json)
    else:
        print("circuit: %s (%d qubits, %d gates)" % (name, circ.n_qubits, len(circ.gates)))
        print("scheme: %s  parts: %d" % (cfg.scheme, len(plan.parts)))
        print("final nodes: %d  peak nodes: %d" % (stats["final_nodes"], stats["peak_nodes"]))
        print("time: %.1f ms" % (stats["elapsed_s"] * 1000.0))
        if verified is not None:
            print("verify: max deviation %.3g (%s %g)"
                  % (max_dev, "<=" if verified else ">", args.norm_eps))
    return 0 if verified in (None, True) else 1


def _parse_bits(text, n, what):
    if len(text) != n or set(text) - {"0", "1"}:
        raise CliError("%s must be %d bits of 0/1, got %r" % (what, n, text))
    return tuple(int(c) for c in text)


def amplitude(net, tdd, in_bits, out_bits):
    """<out|U|in> for one basis pair, bit 0 belonging to qubit 0."""
    assignment = net.boundary_assignment(in_bits, out_bits)
    if assignment is None:
        return 0j
    return evaluate(tdd, assignment)


def cmd_amp(args):
    circ, net, cfg, plan, store, tdd, stats = _build(args.file, args)
    in_bits = _parse_bits(args.in_bits, circ.n_qubits, "input bitstring")
    out_bits = _parse_bits(args.out_bits, circ.n_qubits, "output bitstring")
    a = amplitude(net, tdd, in_bits, out_bits)
    print(format_weight(a))
    return 0


def boundary_normalized(tdd, net):
    """Rewrite a circuit TDD onto the comparison grid: inputs at (q, 0),
    outputs at (q, SPLIT_POS), diagonal wires embedded via an identity factor."""
    store = tdd.store
    out = tdd
    mapping = {}
    for q in range(net.circuit.n_qubits):
        lin, lout = net.in_label[q], net.out_label[q]
        if lin == lout:
            ident = DenseTensor.from_flat((lin, IndexLabel(q, SPLIT_POS)), [1, 0, 0, 1])
            out = contract(out, generate(store, ident), ())
        else:
            mapping[lout] = IndexLabel(q, SPLIT_POS)
    if mapping:
        out = relabel(out, mapping)
    return out


def equivalent(path_a, path_b, args, up_to_phase=False):
    circ_a = parse_qasm_file(path_a)
    circ_b = parse_qasm_file(path_b)
    if circ_a.n_qubits != circ_b.n_qubits:
        raise CliError("qubit counts differ: %d vs %d"
                       % (circ_a.n_qubits, circ_b.n_qubits))
    order = _order(args)
    tol = _tolerance(args)
    store = NodeStore(order, tol)
    roots = []
    for circ in (circ_a, circ_b):
        net = allocate_indices(circ, order)
        cfg = _partition_config(args).resolve(circ.n_qubits)
        tdd, _ = execute_plan(plan_circuit(net, cfg), store)
        roots.append(boundary_normalized(tdd, net).root)
    ra, rb = roots
    if ra.target != rb.target:
        return False
    if up_to_phase:
        return abs(abs(ra.weight) - abs(rb.weight)) <= tol.eps
    return weights_equal(ra.weight, rb.weight, tol)


def cmd_equiv(args):
    same = equivalent(args.file_a, args.file_b, args, up_to_phase=args.up_to_phase)
    mode = "up to global phase" if args.up_to_phase else "exactly"
    print("equivalent (%s)" % mode if same else "not equivalent (%s)" % mode)
    return 0 if same else 1


def cmd_dot(args):
    circ, net, cfg, plan, store, tdd, stats = _build(args.file, args, scheme="seq")
    Path(args.out).write_text(export_dot(tdd))
    return 0


def cmd_bench(args):
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    for s in schemes:
        if s not in ("seq", "p1", "p2"):
            raise CliError("unknown scheme %r in --schemes" % s)
    files = sorted(Path(args.directory).glob("*.qasm"))
    reports = []
    for path in files:
        for scheme in schemes:
            name = path.stem
            try:
                circ, net, cfg, plan, store, tdd, stats = _build(
                    str(path), args, scheme=scheme, timeout_s=args.timeout_s)
            except PlanTimeout:
                cfg = _partition_config(args, scheme)
                reports.append(_report(name, None, cfg, None, None,
                                       timeout_s=args.timeout_s, timed_out=True))
                continue
            except (QasmError, OSError) as exc:
                reports.append(_report(name, None, _partition_config(args, scheme),
                                       None, None, error=str(exc)))
                continue
            verified = None
            max_dev = None
            if args.verify and circ.n_qubits <= 10:
                max_dev = _verify_deviation(net, tdd, args)
                verified = max_dev <= args.norm_eps
            reports.append(_report(name, circ, cfg, plan, stats,
                                   verified=verified, max_deviation=max_dev))
    _emit_json(reports, args.json)
    return 0


def _add_common(sp, scheme=True):
    sp.add_argument("--inverse-order", action="store_true",
                    help="reverse the qubit-major index order")
    sp.add_argument("--eps", type=float, default=1e-10,
                    help="weight canonicalization grid (default 1e-10)")
    sp.add_argument("--norm-eps", type=float, default=1e-9,
                    help="comparison tolerance (default 1e-9)")
    if scheme:
        sp.add_argument("--scheme", choices=["seq", "p1", "p2"], default="seq",
                        help="contraction strategy (default seq)")
    sp.add_argument("--k", type=int, default=None, help="scheme p1 crossing-CX budget")
    sp.add_argument("--k1", type=int, default=None, help="scheme p2 CX-cut budget")
    sp.add_argument("--k2", type=int, default=None, help="scheme p2 C-block qubit cap")


def build_parser():
    p = argparse.ArgumentParser(
        prog="tdd",
        description="Decision-diagram toolkit for quantum circuit tensors.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sim", help="build a circuit's diagram and report sizes")
    sp.add_argument("file")
    _add_common(sp)
    sp.add_argument("--verify", action="store_true",
                    help="compare against dense contraction (<= 10 qubits)")
    sp.add_argument("--json", metavar="PATH", default=None,
                    help="write the run report as JSON ('-' for stdout)")
    sp.add_argument("--timeout-s", type=float, default=None)
    sp.set_defaults(func=cmd_sim)

    sp = sub.add_parser("amp", help="print one transition amplitude")
    sp.add_argument("file")
    sp.add_argument("in_bits", help="input basis bitstring, qubit 0 first")
    sp.add_argument("out_bits", help="output basis bitstring, qubit 0 first")
    _add_common(sp)
    sp.set_defaults(func=cmd_amp)

    sp = sub.add_parser("equiv", help="check two circuits for equivalence")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    sp.add_argument("--up-to-phase", action="store_true",
                    help="ignore a global phase difference")
    _add_common(sp)
    sp.set_defaults(func=cmd_equiv)

    sp = sub.add_parser("dot", help="export a circuit's diagram as Graphviz DOT")
    sp.add_argument("file")
    sp.add_argument("out")
    _add_common(sp, scheme=False)
    sp.set_defaults(func=cmd_dot)

    sp = sub.add_parser("bench", help="run every .qasm in a directory, JSON report")
    sp.add_argument("directory")
    sp.add_argument("--schemes", default="seq,p1,p2",
                    help="comma separated subset of seq,p1,p2")
    sp.add_argument("--timeout-s", type=float, default=3600.0)
    sp.add_argument("--json", metavar="PATH", default="-")
    sp.add_argument("--verify", action="store_true")
    _add_common(sp, scheme=False)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, QasmError, PlanError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
