"""OpenQASM 2 front end: parsing, gate tensors and wire-label allocation."""

from __future__ import annotations

import cmath
import itertools
import math
import re
import warnings
from dataclasses import dataclass

import numpy as np

from .dense import DenseTensor, IndexLabel, IndexOrder, network_to_dense

GATE_QUBITS = {
    "x": 1, "y": 1, "z": 1, "h": 1, "s": 1, "sdg": 1, "t": 1, "tdg": 1,
    "rx": 1, "ry": 1, "rz": 1, "u1": 1, "u2": 1, "u3": 1,
    "cx": 2, "cz": 2, "swap": 2, "ccx": 3,
}
GATE_PARAMS = {"rx": 1, "ry": 1, "rz": 1, "u1": 1, "u2": 2, "u3": 3}

# gates acting diagonally on every wire they touch
DIAGONAL = {"z", "s", "sdg", "t", "tdg", "rz", "u1", "cz"}


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple
    params: tuple = ()


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple


class QasmError(ValueError):
    pass


_PARAM_CHARS = re.compile(r"^[0-9eE.+\-*/() pi]*$")
_QREG_RE = re.compile(r"^qreg\s+([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$")
_GATE_RE = re.compile(r"^([A-Za-z_]\w*)\s*(?:\(([^()]*(?:\([^()]*\)[^()]*)*)\))?\s*(.*)$")
_ARG_RE = re.compile(r"^([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$")


def _eval_param(text, line):
    expr = text.strip()
    if not expr or not _PARAM_CHARS.match(expr):
        raise QasmError("line %d: bad parameter %r" % (line, text))
    try:
        return float(eval(expr, {"__builtins__": {}}, {"pi": math.pi}))
    except Exception:
        raise QasmError("line %d: bad parameter %r" % (line, text)) from None


def _statements(text):
    """Split into ';'-terminated statements, remembering the starting line."""
    out = []
    buf = []
    start = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        for ch in raw.split("//")[0]:
            if ch == ";":
                stmt = "".join(buf).strip()
                if stmt:
                    out.append((stmt, start))
                buf = []
                start = None
            else:
                if start is None and not ch.isspace():
                    start = lineno
                buf.append(ch)
        buf.append(" ")
    tail = "".join(buf).strip()
    if tail:
        raise QasmError("line %d: statement missing ';': %r" % (start, tail[:40]))
    return out


def parse_qasm(text):
    """Parse an OpenQASM 2.0 string with a single qreg and a fixed gate set."""
    n_qubits = None
    reg = None
    gates = []
    warned = set()
    for stmt, line in _statements(text):
        head = stmt.split(None, 1)[0]
        if head == "OPENQASM":
            parts = stmt.split(None, 1)
            if len(parts) != 2 or parts[1].strip() != "2.0":
                raise QasmError("line %d: only OPENQASM 2.0 is supported" % line)
            continue
        if head == "include":
            continue
        if head == "qreg":
            m = _QREG_RE.match(stmt)
            if not m:
                raise QasmError("line %d: bad qreg statement" % line)
            if reg is not None:
                raise QasmError("line %d: multiple qregs are not supported" % line)
            reg, n_qubits = m.group(1), int(m.group(2))
            if n_qubits < 1:
                raise QasmError("line %d: empty qreg" % line)
            continue
        if head in ("creg", "measure", "barrier"):
            if head not in warned:
                warnings.warn("ignoring %s statements" % head, stacklevel=2)
                warned.add(head)
            continue
        if head in ("gate", "opaque", "if"):
            raise QasmError("line %d: %r statements are not supported" % (line, head))
        m = _GATE_RE.match(stmt)
        if not m:
            raise QasmError("line %d: cannot parse statement %r" % (line, stmt[:40]))
        name, params_text, args_text = m.group(1), m.group(2), m.group(3)
        kind = name.lower()
        if kind not in GATE_QUBITS:
            raise QasmError("line %d: unsupported gate %r" % (line, name))
        if reg is None:
            raise QasmError("line %d: gate before qreg" % line)
        want_params = GATE_PARAMS.get(kind, 0)
        params = tuple(_eval_param(p, line) for p in params_text.split(",")) if params_text else ()
        if len(params) != want_params:
            raise QasmError("line %d: %s takes %d parameter(s), got %d"
                            % (line, kind, want_params, len(params)))
        qubits = []
        for arg in args_text.split(","):
            am = _ARG_RE.match(arg.strip())
            if not am:
                raise QasmError("line %d: bad qubit argument %r" % (line, arg.strip()))
            if am.group(1) != reg:
                raise QasmError("line %d: unknown register %r" % (line, am.group(1)))
            q = int(am.group(2))
            if q >= n_qubits:
                raise QasmError("line %d: qubit %d out of range" % (line, q))
            qubits.append(q)
        if len(qubits) != GATE_QUBITS[kind]:
            raise QasmError("line %d: %s takes %d qubit(s), got %d"
                            % (line, kind, GATE_QUBITS[kind], len(qubits)))
        if len(set(qubits)) != len(qubits):
            raise QasmError("line %d: repeated qubit in %s" % (line, kind))
        gates.append(Gate(kind, tuple(qubits), params))
    if n_qubits is None:
        raise QasmError("no qreg declared")
    return Circuit(n_qubits, tuple(gates))


def parse_qasm_file(path):
    with open(path) as fh:
        return parse_qasm(fh.read())


_SQ2 = 1.0 / math.sqrt(2.0)


def gate_matrix(kind, params=()):
    """Unitary matrix of a gate, first listed qubit most significant."""
    if kind == "x":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if kind == "y":
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    if kind == "z":
        return np.diag([1, -1]).astype(complex)
    if kind == "h":
        return np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
    if kind == "s":
        return np.diag([1, 1j]).astype(complex)
    if kind == "sdg":
        return np.diag([1, -1j]).astype(complex)
    if kind == "t":
        return np.diag([1, cmath.exp(0.25j * math.pi)]).astype(complex)
    if kind == "tdg":
        return np.diag([1, cmath.exp(-0.25j * math.pi)]).astype(complex)
    if kind == "rx":
        th = params[0] / 2
        return np.array([[math.cos(th), -1j * math.sin(th)],
                         [-1j * math.sin(th), math.cos(th)]], dtype=complex)
    if kind == "ry":
        th = params[0] / 2
        return np.array([[math.cos(th), -math.sin(th)],
                         [math.sin(th), math.cos(th)]], dtype=complex)
    if kind == "rz":
        th = params[0] / 2
        return np.diag([cmath.exp(-1j * th), cmath.exp(1j * th)]).astype(complex)
    if kind == "u1":
        return np.diag([1, cmath.exp(1j * params[0])]).astype(complex)
    if kind == "u2":
        ph, lam = params
        return _SQ2 * np.array([[1, -cmath.exp(1j * lam)],
                                [cmath.exp(1j * ph), cmath.exp(1j * (ph + lam))]], dtype=complex)
    if kind == "u3":
        th, ph, lam = params
        c, s = math.cos(th / 2), math.sin(th / 2)
        return np.array([[c, -cmath.exp(1j * lam) * s],
                         [cmath.exp(1j * ph) * s, cmath.exp(1j * (ph + lam)) * c]], dtype=complex)
    if kind == "cx":
        m = np.eye(4, dtype=complex)
        m[[2, 3]] = m[[3, 2]]
        return m
    if kind == "cz":
        return np.diag([1, 1, 1, -1]).astype(complex)
    if kind == "swap":
        m = np.eye(4, dtype=complex)
        m[[1, 2]] = m[[2, 1]]
        return m
    if kind == "ccx":
        m = np.eye(8, dtype=complex)
        m[[6, 7]] = m[[7, 6]]
        return m
    raise ValueError("unknown gate kind %r" % (kind,))


def diagonal_wires(gate):
    """Per listed qubit, True when the gate acts diagonally on that wire."""
    if gate.kind in DIAGONAL:
        return (True,) * len(gate.qubits)
    if gate.kind == "cx":
        return (True, False)
    if gate.kind == "ccx":
        return (True, True, False)
    return (False,) * len(gate.qubits)


@dataclass
class GateTensor:
    """One gate as a labeled tensor over distinct, order-sorted labels."""

    gate: Gate
    pos: int
    dense: DenseTensor
    mult: dict
    wires: tuple  # per listed qubit: (in_label, out_label); equal on a hyper wire


@dataclass
class CircuitNet:
    """A circuit's gate tensors plus the wire-boundary bookkeeping."""

    circuit: Circuit
    order: IndexOrder
    tensors: list
    in_label: dict
    out_label: dict

    def open_labels(self):
        return set(self.in_label.values()) | set(self.out_label.values())

    def boundary_assignment(self, in_bits, out_bits):
        """Label assignment for an amplitude query, or None when a shared
        in/out label is asked to take two different bits (the wire is
        diagonal, so such an amplitude is 0)."""
        a = {}
        for q in range(self.circuit.n_qubits):
            lin, lout = self.in_label[q], self.out_label[q]
            if lin == lout and in_bits[q] != out_bits[q]:
                return None
            a[lin] = in_bits[q]
            a[lout] = out_bits[q]
        return a


def _gate_dense(gate, wires, order):
    U = gate_matrix(gate.kind, gate.params)
    distinct = order.sort({lab for w in wires for lab in w})
    slot = {lab: i for i, lab in enumerate(distinct)}
    vals = np.empty((2,) * len(distinct), dtype=complex)
    for bits in itertools.product((0, 1), repeat=len(distinct)):
        iin = iout = 0
        for lin, lout in wires:
            iin = (iin << 1) | bits[slot[lin]]
            iout = (iout << 1) | bits[slot[lout]]
        vals[bits] = U[iout, iin]
    return DenseTensor(tuple(distinct), vals)


def allocate_indices(circ, order=None):
    """Scan the circuit qubit-wise, labeling wire segments left to right.

    A wire the gate acts on diagonally keeps its current label (the input
    and output share it, forming a hyper edge); only non-diagonal touches
    advance the position counter.
    """
    order = order if order is not None else IndexOrder()
    pos = {q: 0 for q in range(circ.n_qubits)}
    tensors = []
    for i, gate in enumerate(circ.gates):
        wires = []
        for q, diag in zip(gate.qubits, diagonal_wires(gate)):
            lin = IndexLabel(q, pos[q])
            if diag:
                wires.append((lin, lin))
            else:
                pos[q] += 1
                wires.append((lin, IndexLabel(q, pos[q])))
        mult = {}
        for lin, lout in wires:
            mult[lin] = mult.get(lin, 0) + 1
            mult[lout] = mult.get(lout, 0) + 1
        tensors.append(GateTensor(gate, i, _gate_dense(gate, wires, order), mult, tuple(wires)))
    in_label = {q: IndexLabel(q, 0) for q in range(circ.n_qubits)}
    out_label = {q: IndexLabel(q, pos[q]) for q in range(circ.n_qubits)}
    return CircuitNet(circ, order, tensors, in_label, out_label)


def cut_cnot(gate, control_labels, target_labels, bond):
    """Split a CX into COPY (control side) and XOR (target side) sharing bond.

    COPY is 1 on equal triples; XOR is 1 on even-parity triples. Contracting
    them over the bond label restores the plain rank-4 CX tensor.
    """
    if gate.kind != "cx":
        raise ValueError("cut_cnot needs a cx gate, got %s" % gate.kind)
    copy_idx = tuple(control_labels) + (bond,)
    copy_vals = np.zeros((2, 2, 2), dtype=complex)
    copy_vals[0, 0, 0] = copy_vals[1, 1, 1] = 1
    xor_idx = tuple(target_labels) + (bond,)
    xor_vals = np.zeros((2, 2, 2), dtype=complex)
    for a, b, c in itertools.product((0, 1), repeat=3):
        if a ^ b ^ c == 0:
            xor_vals[a, b, c] = 1
    return DenseTensor(copy_idx, copy_vals), DenseTensor(xor_idx, xor_vals), bond


def circuit_unitary(circ):
    """Brute-force 2^n x 2^n matrix, qubit 0 most significant, gates left to right."""
    n = circ.n_qubits
    if n > 12:
        raise ValueError("unitary oracle capped at 12 qubits")
    U = np.eye(2 ** n, dtype=complex).reshape((2,) * (2 * n))
    for gate in circ.gates:
        a = len(gate.qubits)
        G = gate_matrix(gate.kind, gate.params).reshape((2,) * (2 * a))
        U = np.tensordot(G, U, axes=(tuple(range(a, 2 * a)), tuple(gate.qubits)))
        U = np.moveaxis(U, tuple(range(a)), tuple(gate.qubits))
    return U.reshape(2 ** n, 2 ** n)


def functionality_dense(net):
    """Oracle functionality tensor over the net's open labels."""
    return network_to_dense([t.dense for t in net.tensors], net.open_labels(), net.order)


def unitary_as_dense(circ, net):
    """The unitary oracle reshaped onto the net's (possibly shared) open labels."""
    U = circuit_unitary(circ)
    n = circ.n_qubits
    labels = tuple(net.order.sort(net.open_labels()))
    slot = {lab: i for i, lab in enumerate(labels)}
    vals = np.empty((2,) * len(labels), dtype=complex)
    for bits in itertools.product((0, 1), repeat=len(labels)):
        iin = iout = 0
        for q in range(n):
            iin = (iin << 1) | bits[slot[net.in_label[q]]]
            iout = (iout << 1) | bits[slot[net.out_label[q]]]
        vals[bits] = U[iout, iin]
    return DenseTensor(labels, vals)
