import numpy as np
import pytest
from hypothesis import given, strategies as st

from tensordd.dense import (
    DenseTensor,
    IndexLabel,
    IndexOrder,
    contract_dense,
    is_essential,
    max_norm,
    network_to_dense,
    normalize_tensor,
    pivot,
    slice_dense,
)

A = IndexLabel(0, 0)
B = IndexLabel(1, 0)
C = IndexLabel(2, 0)


def rand_tensor(rng, labels):
    n = 2 ** len(labels)
    flat = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(n)]
    return DenseTensor.from_flat(labels, flat)


def test_label_str():
    assert str(IndexLabel(3, 0)) == "x3"
    assert str(IndexLabel(0, 2)) == "x0.2"


def test_order_natural_and_inverse():
    labs = [IndexLabel(1, 0), IndexLabel(0, 1), IndexLabel(0, 0)]
    assert IndexOrder().sort(labs) == [IndexLabel(0, 0), IndexLabel(0, 1), IndexLabel(1, 0)]
    assert IndexOrder(inverse=True).sort(labs) == [IndexLabel(1, 0), IndexLabel(0, 0), IndexLabel(0, 1)]
    assert IndexOrder().precedes(A, B)


def test_tensor_validation():
    with pytest.raises(ValueError):
        DenseTensor((A, A), np.zeros((2, 2), dtype=complex))
    with pytest.raises(ValueError):
        DenseTensor((A,), np.zeros((2, 2), dtype=complex))
    with pytest.raises(ValueError):
        DenseTensor.from_flat([IndexLabel(q, 0) for q in range(27)], np.zeros(2 ** 27))


def test_constant_and_rank():
    t = DenseTensor.constant(2j)
    assert t.rank == 0
    assert t.values == 2j
    assert DenseTensor.from_flat((A, B), [1, 2, 3, 4]).rank == 2


def test_slice_dense():
    t = DenseTensor.from_flat((A, B), [1, 2, 3, 4])
    assert list(slice_dense(t, A, 0).values) == [1, 2]
    assert list(slice_dense(t, A, 1).values) == [3, 4]
    assert list(slice_dense(t, B, 1).values) == [2, 4]
    with pytest.raises(KeyError):
        slice_dense(t, C, 0)


def test_contract_dense_is_matrix_product():
    m1 = np.arange(4).reshape(2, 2) + 0j
    m2 = (np.arange(4) + 1).reshape(2, 2) * 1j
    f = DenseTensor((A, B), m1)
    g = DenseTensor((B, C), m2)
    out = contract_dense(f, g, {B})
    assert out.indices == (A, C)
    assert np.allclose(out.values, m1 @ m2)


def test_contract_dense_shared_label_outside_var_is_diagonal():
    f = DenseTensor.from_flat((A,), [2, 3])
    g = DenseTensor.from_flat((A,), [5, 7])
    out = contract_dense(f, g, set())
    assert out.indices == (A,)
    assert list(out.values) == [10, 21]


def test_contract_dense_absent_var_doubles():
    f = DenseTensor.constant(1)
    g = DenseTensor.constant(3)
    out = contract_dense(f, g, {A, B})
    assert out.values == 12  # 3 * 2 * 2


def test_max_norm_and_pivot():
    t = DenseTensor.from_flat((A, B), [1, -2j, 2, 1])
    assert max_norm(t) == 2.0
    assert pivot(t) == {A: 0, B: 1}  # first maximal entry in lex order
    with pytest.raises(ValueError):
        pivot(DenseTensor.constant(0))


def test_normalize_tensor():
    t = DenseTensor.from_flat((A,), [1j, 0.5])
    p, n = normalize_tensor(t)
    assert p == 1j
    assert np.allclose(n.values * p, t.values)
    assert n.values[0] == 1
    z = DenseTensor.from_flat((A,), [0, 0])
    p, n = normalize_tensor(z)
    assert p == 0
    assert n is z


def test_is_essential():
    same = DenseTensor.from_flat((A, B), [1, 2, 1, 2])
    assert not is_essential(same, A)
    assert is_essential(same, B)
    h = DenseTensor.from_flat((A, B), np.array([1, 1, 1, -1]) / np.sqrt(2))
    assert is_essential(h, A) and is_essential(h, B)


def test_is_essential_ignores_sub_grid_noise():
    t = DenseTensor.from_flat((A,), [0.5, 0.5 + 1e-14])
    assert not is_essential(t, A)


def test_network_to_dense_matches_einsum():
    rng = np.random.default_rng(5)
    m1 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    m2 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    net = [DenseTensor((A, B), m1), DenseTensor((B, C), m2)]
    out = network_to_dense(net, [A, C])
    assert out.indices == (A, C)
    assert np.allclose(out.values, m1 @ m2)


def test_network_to_dense_untouched_open_label():
    net = [DenseTensor.from_flat((A,), [2, 3])]
    out = network_to_dense(net, [A, B])
    assert out.indices == (A, B)
    assert np.allclose(out.values, [[2, 2], [3, 3]])


def test_network_to_dense_rejects_dangling_and_conflicts():
    net = [DenseTensor.from_flat((A,), [1, 1])]
    with pytest.raises(ValueError):
        network_to_dense(net, [])
    with pytest.raises(ValueError):
        network_to_dense(net, [A], summed=[A])


@given(st.integers(0, 2 ** 16 - 1))
def test_slices_reassemble(bits):
    flat = [(bits >> i) & 1 for i in range(16)]
    t = DenseTensor.from_flat((A, B, C, IndexLabel(3, 0)), flat)
    s0 = slice_dense(t, B, 0)
    s1 = slice_dense(t, B, 1)
    re = np.stack([s0.values, s1.values], axis=1)
    assert np.array_equal(re, t.values)


@given(st.integers(0, 10 ** 9))
def test_normalize_bounds(seed):
    import random

    rng = random.Random(seed)
    t = rand_tensor(rng, (A, B))
    p, n = normalize_tensor(t)
    if p != 0:
        assert max_norm(n) <= 1 + 1e-6
        sel = tuple(pivot(t)[lab] for lab in t.indices)
        assert abs(n.values[sel] - 1) < 1e-12
