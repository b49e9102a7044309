"""Shared helpers for the test suite."""

import math

from tensordd.circuit import GATE_PARAMS, parse_qasm

KINDS1 = ["x", "y", "z", "h", "s", "sdg", "t", "tdg", "rx", "ry", "rz", "u1", "u2", "u3"]


def random_circuit_text(rng, n, m):
    """A random n-qubit, m-gate OpenQASM program drawn from the full gate set."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', "qreg q[%d];" % n]
    for _ in range(m):
        r = rng.random()
        if r < 0.55 or n == 1:
            g = rng.choice(KINDS1)
            np_ = GATE_PARAMS.get(g, 0)
            if np_:
                ps = ",".join("%.6f" % rng.uniform(0, 2 * math.pi) for _ in range(np_))
                lines.append("%s(%s) q[%d];" % (g, ps, rng.randrange(n)))
            else:
                lines.append("%s q[%d];" % (g, rng.randrange(n)))
        elif r < 0.9 or n == 2:
            g = rng.choice(["cx", "cz", "swap"])
            a, b = rng.sample(range(n), 2)
            lines.append("%s q[%d],q[%d];" % (g, a, b))
        else:
            a, b, c = rng.sample(range(n), 3)
            lines.append("ccx q[%d],q[%d],q[%d];" % (a, b, c))
    return "\n".join(lines)


def random_circuit(rng, n, m):
    return parse_qasm(random_circuit_text(rng, n, m))
