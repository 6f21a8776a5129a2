import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dgmeanfield.core import DomainError
from dgmeanfield.multilinear import (
    MultilinearOracle,
    flid_grad_refined,
    flid_grad_refined_all,
    gibbs_grad_analytic,
    multilinear_grad,
    multilinear_sample,
    multilinear_value,
)
from dgmeanfield.set_functions import (
    ConcaveOverModular,
    FlidModel,
    GibbsPolynomial,
    ModularFunction,
    SetCoverInstance,
)
from dgmeanfield.synth import FAMILIES, random_instance


def naive_extension(F, x):
    """Direct sum over subsets, independent of the package's enumeration path."""
    total = 0.0
    for bits in itertools.product([0, 1], repeat=F.n):
        p = np.prod([xi if b else 1.0 - xi for xi, b in zip(x, bits)])
        total += p * F(np.flatnonzero(bits))
    return total


def test_flid_worked_value(flid2):
    assert multilinear_value(MultilinearOracle(flid2), [0.5, 0.5]) == pytest.approx(1.25, abs=1e-12)


def test_setcover_worked_value():
    F = SetCoverInstance(2, [(1.0, [0, 1])])
    assert MultilinearOracle(F).value([0.5, 0.5]) == pytest.approx(0.75, abs=1e-12)


def test_edge_worked_value_and_grad(edge):
    oracle = MultilinearOracle(edge)
    assert oracle.value([0.5, 0.5]) == pytest.approx(0.25, abs=1e-12)
    np.testing.assert_allclose(multilinear_grad(oracle, [0.5, 0.5]), [0.5, -0.5], atol=1e-12)


def test_gibbs_worked_grad():
    F = GibbsPolynomial(2, [((0,), 1.0), ((0, 1), -2.0)])
    x = [0.5, 0.5]
    np.testing.assert_allclose(MultilinearOracle(F).grad(x), [0.0, -1.0], atol=1e-12)
    np.testing.assert_allclose(gibbs_grad_analytic(F, x), [0.0, -1.0], atol=1e-12)


def test_modular_grad_is_constant():
    c = np.array([1.5, -0.3, 2.0])
    oracle = MultilinearOracle(ModularFunction(c))
    for x in np.random.default_rng(0).random((5, 3)):
        np.testing.assert_allclose(oracle.grad(x), c, atol=1e-12)


@pytest.mark.parametrize("family", FAMILIES)
def test_vertices_interpolate(family):
    rng = np.random.default_rng(3)
    F = random_instance(family, 4, rng)
    oracle = MultilinearOracle(F)
    for S in range(16):
        v = np.array([S >> i & 1 for i in range(4)], dtype=float)
        assert oracle.value(v) == pytest.approx(F(np.flatnonzero(v)), abs=1e-12)


@pytest.mark.parametrize("family", FAMILIES)
def test_closed_form_matches_naive_sum(family):
    rng = np.random.default_rng(11)
    for _ in range(5):
        F = random_instance(family, int(rng.integers(1, 6)), rng)
        closed = MultilinearOracle(F, "closed_form")
        enum = MultilinearOracle(F, "enumeration")
        for x in rng.random((4, F.n)):
            ref = naive_extension(F, x)
            assert closed.value(x) == pytest.approx(ref, abs=1e-9)
            assert enum.value(x) == pytest.approx(ref, abs=1e-9)


def test_value_batch_matches_value():
    rng = np.random.default_rng(2)
    F = random_instance("flid", 6, rng)
    X = rng.random((7, 6))
    for mode in ("closed_form", "enumeration"):
        o = MultilinearOracle(F, mode)
        np.testing.assert_allclose(o.value_batch(X), [o.value(x) for x in X], atol=1e-12)


def test_flid_refined_worked_values(flid2):
    oracle = MultilinearOracle(flid2)
    x = [0.5, 0.5]
    assert flid_grad_refined(oracle, 1, x) == pytest.approx(1.5, abs=1e-12)
    assert flid_grad_refined(oracle, 0, x) == pytest.approx(0.5, abs=1e-12)
    np.testing.assert_allclose(flid_grad_refined_all(oracle, x), [0.5, 1.5], atol=1e-12)


def test_flid_refined_shift_by_u_prime(flid2):
    c = np.array([0.7, -1.2])
    shifted = FlidModel(flid2.W, flid2.u + c)
    x = [0.3, 0.8]
    base = flid_grad_refined_all(MultilinearOracle(flid2), x)
    np.testing.assert_allclose(flid_grad_refined_all(MultilinearOracle(shifted), x), base + c, atol=1e-12)


def test_flid_refined_with_ties():
    W = np.array([[1.0, 0.5], [1.0, 0.5], [0.2, 0.5]])
    oracle = MultilinearOracle(FlidModel(W, [0.1, 0.2, 0.3]))
    x = np.array([0.3, 0.6, 0.9])
    ident = oracle.grad(x)
    np.testing.assert_allclose(flid_grad_refined_all(oracle, x), ident, atol=1e-12)
    for i in range(3):
        assert flid_grad_refined(oracle, i, x) == pytest.approx(ident[i], abs=1e-12)


def test_flid_refined_rejects_other_oracles(edge):
    with pytest.raises(TypeError):
        flid_grad_refined(MultilinearOracle(edge), 0, [0.5, 0.5])


@settings(max_examples=30, deadline=None)
@given(
    arrays(float, (5, 3), elements=st.floats(0, 1, allow_nan=False)),
    arrays(float, 5, elements=st.floats(-2, 2, allow_nan=False)),
    arrays(float, 5, elements=st.floats(0, 1, allow_nan=False)),
)
def test_flid_refined_matches_identity_property(W, u, x):
    oracle = MultilinearOracle(FlidModel(W, u))
    np.testing.assert_allclose(flid_grad_refined_all(oracle, x), oracle.grad(x), atol=1e-9)


def test_sampling_vertex_is_exact(edge):
    est, err = multilinear_sample(edge, [1.0, 0.0], 50, seed=1)
    assert est == 1.0 and err == 0.0


def test_sampling_single_draw_support(edge):
    est, _ = multilinear_sample(edge, [0.5, 0.5], 1, seed=5)
    assert est in set(edge.table().tolist())


def test_sampling_concentration(edge):
    est, err = multilinear_sample(edge, [0.5, 0.5], 200_000, seed=0)
    assert abs(est - 0.25) <= 0.01
    assert err < 0.002


def test_sampling_is_seeded(edge):
    a = multilinear_sample(edge, [0.3, 0.6], 1000, seed=9)
    b = multilinear_sample(edge, [0.3, 0.6], 1000, seed=9)
    assert a == b


def test_sampling_oracle_partial_uses_common_numbers():
    F = ModularFunction([2.0, -1.0])
    oracle = MultilinearOracle(F, "sampling", samples=100, seed=3)
    # with shared draws the modular partial has zero variance
    assert oracle.partial(0, [0.4, 0.7]) == pytest.approx(2.0, abs=1e-12)


def test_domain_errors(edge):
    oracle = MultilinearOracle(edge)
    with pytest.raises(DomainError):
        oracle.value([1.2, 0.0])
    with pytest.raises(DomainError):
        oracle.value([0.5])
    with pytest.raises(DomainError):
        MultilinearOracle(ModularFunction(np.zeros(21)), "enumeration")
    with pytest.raises(ValueError):
        MultilinearOracle(ConcaveOverModular([1.0], [[1.0, 2.0]], 0.5), "closed_form")


def test_auto_mode_falls_back_to_enumeration():
    F = ConcaveOverModular([1.0], [[4.0, 9.0]], 0.5)
    oracle = MultilinearOracle(F)
    assert oracle.mode == "enumeration"
    assert oracle.value([1.0, 1.0]) == pytest.approx(np.sqrt(13.0))
