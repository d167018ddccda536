"""Candidate set construction, layer ordering, pruning and real pairing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import random_channel, random_complex
from mimodet import (
    build_sets,
    enumerate_and_reduce,
    order_layers,
    real_decompose,
)
from mimodet import mmse_spic
from mimodet.candidates import CandidateSet


def _make_set(m_vector, alphabet_size=16):
    rng = np.random.default_rng(0)
    indices = tuple(
        np.asarray(rng.permutation(alphabet_size)[:m], dtype=np.intp) for m in m_vector
    )
    values = tuple(np.arange(alphabet_size, dtype=complex)[ix] for ix in indices)
    return CandidateSet(
        indices=indices,
        values=values,
        m_vector=tuple(m_vector),
        layer_order=np.arange(len(m_vector)),
        alphabet_size=alphabet_size,
    )


def _survivors_closed_form(m_vector):
    """Inclusion count: vectors with at most one worst-ranked pick."""
    flaggable = [m > 1 for m in m_vector]
    none = int(np.prod([m - 1 if f else m for m, f in zip(m_vector, flaggable)]))
    one = 0
    for j, fj in enumerate(flaggable):
        if not fj:
            continue
        one += int(
            np.prod(
                [
                    (m - 1 if f else m)
                    for i, (m, f) in enumerate(zip(m_vector, flaggable))
                    if i != j
                ]
            )
        )
    return none + one


def test_order_layers_reverse():
    assert list(order_layers([4.0, 3.0, 2.0, 1.0], [4, 3, 2, 1])) == [3, 2, 1, 0]


def test_order_layers_tie_break():
    assert list(order_layers([1.0, 1.0, 1.0], [3, 2, 2])) == [0, 1, 2]


def test_order_layers_documented_example():
    # SINRs (2, 9, 1, 5) with budgets [14, 9, 5, 4]: weakest layer (3rd)
    # gets the 14 candidates, order (3, 1, 4, 2) in 1-based indexing.
    order = order_layers([2.0, 9.0, 1.0, 5.0], [14, 9, 5, 4])
    assert [int(i) + 1 for i in order] == [3, 1, 4, 2]


def test_order_layers_requires_sorted_budgets():
    with pytest.raises(ValueError):
        order_layers([1.0, 2.0], [2, 3])


def test_build_sets_full_alphabet(qam16):
    rng = np.random.default_rng(1)
    h = random_channel(rng, 4, 4)
    y = random_complex(rng, 4)
    spic = mmse_spic.run(y, h, 0.2, qam16, 2)
    cs = build_sets(spic, qam16, (16, 16, 16, 16))
    for k in range(4):
        assert sorted(cs.indices[k]) == list(range(16))
        phys = int(cs.layer_order[k])
        best = np.argmin(np.abs(spic.x_hat[phys] - spic.gain[phys] * qam16.points) ** 2)
        assert cs.indices[k][0] == best


def test_build_sets_on_symbol(qam16):
    rng = np.random.default_rng(2)
    h = random_channel(rng, 2, 2)
    spic = mmse_spic.run(h @ qam16.points[[3, 9]], h, 1e-6, qam16, 1)
    cs = build_sets(spic, qam16, (4, 4))
    phys_of = {int(cs.layer_order[k]): k for k in range(2)}
    assert cs.indices[phys_of[0]][0] == 3
    assert cs.indices[phys_of[1]][0] == 9


def test_build_sets_matches_full_sort(qam16):
    rng = np.random.default_rng(3)
    h = random_channel(rng, 4, 4)
    y = random_complex(rng, 4)
    spic = mmse_spic.run(y, h, 0.3, qam16, 2)
    cs = build_sets(spic, qam16, (5, 5, 5, 5))
    for k in range(4):
        phys = int(cs.layer_order[k])
        dist = np.abs(spic.x_hat[phys] - spic.gain[phys] * qam16.points) ** 2
        ref = np.argsort(dist, kind="stable")[:5]
        assert np.array_equal(cs.indices[k], ref)


def test_build_sets_rejects_oversized(qam16):
    rng = np.random.default_rng(4)
    h = random_channel(rng, 2, 2)
    spic = mmse_spic.run(random_complex(rng, 2), h, 0.3, qam16, 1)
    with pytest.raises(ValueError):
        build_sets(spic, qam16, (17, 4))


@pytest.mark.parametrize(
    "m_vector,total,survivors",
    [((3, 2, 2), 12, 7), ((5, 5, 3, 3), 225, 160), ((7, 7, 4, 4), 784, 648)],
)
def test_reduction_published_counts(m_vector, total, survivors):
    cl = enumerate_and_reduce(_make_set(m_vector), True)
    assert cl.indices.shape[0] == total
    assert cl.n_survivors == survivors


def test_reduction_disabled_keeps_all():
    cl = enumerate_and_reduce(_make_set((3, 2, 2)), False)
    assert cl.n_survivors == 12


def test_reduction_all_best_survives():
    for m_vector in ((3, 2, 2), (2, 2, 2, 2), (5, 4, 1, 1)):
        cl = enumerate_and_reduce(_make_set(m_vector), True)
        assert cl.survivors[0]  # lexicographically first row = all rank 0


def test_reduction_singleton_layers_unflagged():
    # M_k = 1 layers contribute no worst flag: [2, 1, 1] loses nothing.
    cl = enumerate_and_reduce(_make_set((2, 1, 1)), True)
    assert cl.n_survivors == 2


def test_enumeration_is_lexicographic():
    cl = enumerate_and_reduce(_make_set((2, 3)), False)
    expected = [(a, b) for a in range(2) for b in range(3)]
    assert [tuple(r) for r in cl.ranks] == expected


@settings(max_examples=80, deadline=None)
@given(
    m_vector=st.lists(st.integers(min_value=1, max_value=9), min_size=1, max_size=4)
)
def test_reduction_count_matches_closed_form(m_vector):
    m_vector = tuple(sorted(m_vector, reverse=True))
    if np.prod(m_vector) > 10_000:
        m_vector = m_vector[:3]
    cl = enumerate_and_reduce(_make_set(m_vector), True)
    assert cl.n_survivors == _survivors_closed_form(m_vector)


def test_real_decompose_shapes_and_identity():
    rng = np.random.default_rng(5)
    h = random_channel(rng, 4, 4)
    y = random_complex(rng, 4)
    model = real_decompose(h, y, "same-layer")
    assert model.h_real.shape == (8, 8)
    assert model.y_real.shape == (8,)
    # The stacked model reproduces every complex metric exactly.
    for _ in range(20):
        x = random_complex(rng, 4)
        x_real = np.concatenate([x.real, x.imag])
        assert np.linalg.norm(model.y_real - model.h_real @ x_real) ** 2 == pytest.approx(
            np.linalg.norm(y - h @ x) ** 2, rel=1e-12
        )


@pytest.mark.parametrize("mode", ["same-layer", "cross-layer"])
def test_real_decompose_pairing_is_permutation(mode):
    rng = np.random.default_rng(6)
    model = real_decompose(random_channel(rng, 4, 3), random_complex(rng, 4), mode)
    flat = sorted(model.pairs.reshape(-1).tolist())
    assert flat == list(range(6))
    assert model.pairs.shape == (3, 2)


def test_real_decompose_same_layer_pairs():
    rng = np.random.default_rng(7)
    model = real_decompose(random_channel(rng, 2, 2), random_complex(rng, 2), "same-layer")
    assert model.pairs.tolist() == [[0, 2], [1, 3]]


def test_real_decompose_cross_layer_pairs():
    rng = np.random.default_rng(8)
    model = real_decompose(random_channel(rng, 2, 2), random_complex(rng, 2), "cross-layer")
    assert model.pairs.tolist() == [[0, 3], [1, 2]]


def test_real_decompose_unknown_mode():
    with pytest.raises(ValueError):
        real_decompose(np.eye(2), np.zeros(2), "diagonal")
