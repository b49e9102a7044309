"""Dense tensors over Boolean indices: the brute-force oracle behind the diagrams."""

from __future__ import annotations

import itertools
import string
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .numerics import DEFAULT_TOLERANCE

MAX_RANK = 26

_LETTERS = string.ascii_letters


class IndexLabel(NamedTuple):
    """A wire segment: (qubit, left-to-right occurrence on that wire)."""

    qubit: int
    position: int

    def __str__(self):
        if self.position == 0:
            return "x%d" % self.qubit
        return "x%d.%d" % (self.qubit, self.position)


class IndexOrder:
    """Total order on labels: by qubit then position; inverse flips the qubit scan."""

    def __init__(self, inverse=False):
        self.inverse = inverse
        self._keys = {}

    def key(self, label):
        # memoized: key() sits on the contraction hot path
        k = self._keys.get(label)
        if k is None:
            q = -label.qubit if self.inverse else label.qubit
            k = (q, label.position)
            self._keys[label] = k
        return k

    def precedes(self, a, b):
        return self.key(a) < self.key(b)

    def sort(self, labels):
        return sorted(labels, key=self.key)


NATURAL_ORDER = IndexOrder()


@dataclass(frozen=True)
class DenseTensor:
    """Distinct labels plus a (2,)*rank complex value array in label-list order."""

    indices: tuple
    values: np.ndarray

    def __post_init__(self):
        if len(self.indices) > MAX_RANK:
            raise ValueError("rank %d exceeds the dense cap %d" % (len(self.indices), MAX_RANK))
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("repeated index label")
        if self.values.shape != (2,) * len(self.indices):
            raise ValueError("value shape %r does not match rank %d" % (self.values.shape, len(self.indices)))

    @staticmethod
    def from_flat(indices, flat):
        idx = tuple(indices)
        vals = np.asarray(flat, dtype=complex).reshape((2,) * len(idx))
        return DenseTensor(idx, vals)

    @staticmethod
    def constant(c):
        return DenseTensor((), np.asarray(complex(c)))

    @property
    def rank(self):
        return len(self.indices)


def slice_dense(phi, x, c):
    """Cofactor: fix index x of phi to the bit c."""
    if x not in phi.indices:
        raise KeyError("index %s not in tensor" % (x,))
    ax = phi.indices.index(x)
    vals = np.take(phi.values, c, axis=ax)
    return DenseTensor(phi.indices[:ax] + phi.indices[ax + 1:], vals)


def contract_dense(gamma, xi, var, order=NATURAL_ORDER):
    """Sum the elementwise product over var.

    Shared labels outside var stay as one axis (the diagonal product); var
    labels absent from both operands each multiply the result by 2.
    """
    var = set(var)
    letters = {}
    for lab in itertools.chain(gamma.indices, xi.indices):
        if lab not in letters:
            letters[lab] = _LETTERS[len(letters)]
    out_labels = tuple(order.sort([l for l in letters if l not in var]))
    if len(out_labels) > MAX_RANK:
        raise ValueError("contraction result rank %d exceeds the dense cap" % len(out_labels))
    spec = "%s,%s->%s" % (
        "".join(letters[l] for l in gamma.indices),
        "".join(letters[l] for l in xi.indices),
        "".join(letters[l] for l in out_labels),
    )
    vals = np.einsum(spec, gamma.values, xi.values)
    absent = sum(1 for l in var if l not in letters)
    if absent:
        vals = vals * (1 << absent)
    return DenseTensor(out_labels, np.asarray(vals, dtype=complex))


def max_norm(phi):
    """Largest entry magnitude."""
    return float(np.max(np.abs(phi.values)))


def pivot(phi, cfg=DEFAULT_TOLERANCE):
    """First assignment in index-list lexicographic order whose magnitude is maximal.

    An entry counts as maximal when within cfg.eps of the true maximum, which
    keeps the choice stable under rounding noise.
    """
    m = max_norm(phi)
    if m == 0:
        raise ValueError("pivot of the zero tensor")
    flat = np.abs(phi.values.reshape(-1))
    pos = int(np.argmax(flat >= m - cfg.eps))
    n = phi.rank
    return {lab: (pos >> (n - 1 - i)) & 1 for i, lab in enumerate(phi.indices)}


def normalize_tensor(phi, cfg=DEFAULT_TOLERANCE):
    """Split phi into (pivot value p, phi/p); the zero tensor stays (0, phi)."""
    if max_norm(phi) == 0:
        return 0j, phi
    a = pivot(phi, cfg)
    sel = tuple(a[lab] for lab in phi.indices)
    p = complex(phi.values[sel])
    return p, DenseTensor(phi.indices, phi.values / p)


def _canon_values(vals, eps):
    return np.round(vals.real / eps) * eps + 1j * (np.round(vals.imag / eps) * eps)


def is_essential(phi, x, cfg=DEFAULT_TOLERANCE):
    """True iff the two cofactors of x differ on the canonical grid."""
    a = _canon_values(slice_dense(phi, x, 0).values, cfg.eps)
    b = _canon_values(slice_dense(phi, x, 1).values, cfg.eps)
    return not np.array_equal(a, b)


def network_to_dense(net, open_labels, order=NATURAL_ORDER, summed=()):
    """Left-fold contraction of a tensor list.

    Each label outside open_labels is summed at the step where its last
    holder joins the accumulator. Open labels never touched by any tensor
    come out as all-ones axes (an untouched wire is the constant-1 tensor).
    """
    open_set = set(open_labels)
    summed = set(summed)
    remaining = Counter()
    for t in net:
        remaining.update(t.indices)
    for lab, cnt in remaining.items():
        if lab in open_set and lab in summed:
            raise ValueError("label %s both open and summed" % (lab,))
        if cnt == 1 and lab not in open_set and lab not in summed:
            raise ValueError("dangling label %s (single holder, not open)" % (lab,))
    acc = DenseTensor.constant(1)
    for t in net:
        for lab in t.indices:
            remaining[lab] -= 1
        var = {lab for lab in set(acc.indices) | set(t.indices)
               if lab not in open_set and remaining[lab] == 0}
        acc = contract_dense(acc, t, var, order)
    for lab in order.sort([l for l in open_set if l not in acc.indices]):
        acc = contract_dense(acc, DenseTensor.from_flat((lab,), [1, 1]), (), order)
    if set(acc.indices) != open_set:
        raise ValueError("network left labels %s open, expected %s" % (sorted(acc.indices), sorted(open_set)))
    return acc
