"""Unit tests for states, subalgebras, independence, and the weak law."""

import itertools
import json
import math

import numpy as np
import pytest

from cstar_info.algebra import AlgebraMismatch, AtomicAlgebra, Element, embed_at, tensor_product
from cstar_info.probability import (
    Distribution,
    ProductState,
    State,
    annihilator_projection,
    chebyshev_tail,
    distribution_of,
    evaluate,
    generated_subalgebra,
    independence_test,
    lln_moment,
    lln_moment_sweep,
    prob_interval,
    pure_check,
    sum_pushforward,
)

RNG = np.random.default_rng(7321)


def random_state(algebra, rng=RNG):
    w = rng.uniform(0.0, 1.0, algebra.dim)
    return State(algebra, w / w.sum())


# states ----------------------------------------------------------------------


def test_state_validation():
    alg = AtomicAlgebra(3)
    with pytest.raises(ValueError):
        State(alg, [0.5, 0.5, 0.5])
    with pytest.raises(ValueError):
        State(alg, [1.2, -0.2, 0.0])
    with pytest.raises(ValueError):
        State(alg, [0.5, 0.5])
    s = State(alg, [0.2, 0.3, 0.5])
    assert s(alg.identity()) == pytest.approx(1.0)


def test_state_evaluation_linear():
    alg = AtomicAlgebra(4)
    omega = random_state(alg)
    x = Element(alg, RNG.uniform(-2, 2, 4) + 1j * RNG.uniform(-2, 2, 4))
    y = Element(alg, RNG.uniform(-2, 2, 4))
    assert evaluate(omega, x + y) == pytest.approx(omega(x) + omega(y))
    assert omega(2.5 * x) == pytest.approx(2.5 * omega(x))
    # positivity: omega(x* x) >= 0
    assert (omega(x.star() * x)).real >= 0.0
    assert abs(omega(x.star() * x).imag) <= 1e-12


def test_pure_iff_multiplicative():
    alg = AtomicAlgebra(3)
    pure = State.point_mass(alg, 1)
    assert pure_check(pure)
    mixed = State(alg, [0.4, 0.6, 0.0])
    assert not pure_check(mixed)
    # multiplicativity holds exactly for the point mass and fails for mixed
    for _ in range(50):
        x = Element(alg, RNG.uniform(-2, 2, 3))
        y = Element(alg, RNG.uniform(-2, 2, 3))
        assert pure(x * y) == pytest.approx(pure(x) * pure(y))
    x = alg.atom(0)
    assert mixed(x * x) != pytest.approx(mixed(x) * mixed(x))


def test_state_serialization():
    alg = AtomicAlgebra(2)
    s = State(alg, [0.25, 0.75])
    data = json.loads(json.dumps(s.to_dict()))
    assert data == {"dim": 2, "weights": [0.25, 0.75]}
    assert State.from_dict(data) == s


def test_product_state_evaluation():
    alg = AtomicAlgebra(2)
    w1 = State(alg, [0.3, 0.7])
    w2 = State(alg, [0.9, 0.1])
    ps = ProductState((w1, w2), tail=State.uniform(alg))
    t = tensor_product(alg.atom(0), alg.atom(1))
    assert ps(t) == pytest.approx(0.3 * 0.1)
    # implicit identity tail contributes factor 1
    assert ps(embed_at(alg.atom(0), 1)) == pytest.approx(0.3)
    # beyond the explicit factors the tail state applies
    assert ps(embed_at(alg.atom(0), 5)) == pytest.approx(0.5)
    iid = ProductState.iid(w1)
    assert iid(embed_at(alg.atom(1), 9)) == pytest.approx(0.7)


def test_evaluate_dispatch_strict():
    alg = AtomicAlgebra(2)
    s = State.uniform(alg)
    with pytest.raises(TypeError):
        s(embed_at(alg.atom(0), 1))
    with pytest.raises(TypeError):
        ProductState.iid(s)(alg.atom(0))
    with pytest.raises(AlgebraMismatch):
        s(AtomicAlgebra(3).identity())


# generated subalgebras -------------------------------------------------------


def test_generated_subalgebra_blocks():
    alg = AtomicAlgebra(3)
    x = Element(alg, [2.0, 3.0, 3.0])
    sub = generated_subalgebra([x])
    assert sub.blocks == ((0,), (1, 2))
    assert sub.dim == 2
    projs = sub.block_projections()
    assert projs[0].equals(alg.atom(0))
    assert projs[1].equals(alg.atom(1) + alg.atom(2))
    assert sub.contains(x)
    assert not sub.contains(alg.atom(1))


def test_generated_subalgebra_empty_and_full():
    alg = AtomicAlgebra(4)
    scalars = generated_subalgebra([], algebra=alg)
    assert scalars.blocks == ((0, 1, 2, 3),)
    with pytest.raises(ValueError):
        generated_subalgebra([])
    injective = Element(alg, [0.0, 1.0, 2.0, 3.0])
    assert generated_subalgebra([injective]).dim == 4
    # two generators refine each other's partitions
    a = Element(alg, [0.0, 0.0, 1.0, 1.0])
    b = Element(alg, [0.0, 1.0, 0.0, 1.0])
    assert generated_subalgebra([a, b]).dim == 4


def test_generated_subalgebra_tolerance_merge():
    alg = AtomicAlgebra(2)
    x = Element(alg, [1.0, 1.0 + 1e-12])
    assert generated_subalgebra([x]).dim == 1
    y = Element(alg, [1.0, 1.0 + 1e-6])
    assert generated_subalgebra([y]).dim == 2
    with pytest.raises(ValueError):
        generated_subalgebra([Element(alg, [1j, 0.0])])


# independence ----------------------------------------------------------------


def _pair_marginals(weights, rows, cols):
    w = np.asarray(weights).reshape(rows, cols)
    return w.sum(axis=1), w.sum(axis=0)


def _factor_generators(alg, rows, cols):
    row_gen = Element(alg, np.repeat(np.arange(rows, dtype=float), cols))
    col_gen = Element(alg, np.tile(np.arange(cols, dtype=float), rows))
    return row_gen, col_gen


def test_independence_product_state():
    rows, cols = 2, 3
    alg = AtomicAlgebra(rows * cols)
    row_gen, col_gen = _factor_generators(alg, rows, cols)
    pr = RNG.uniform(0.1, 1.0, rows)
    pc = RNG.uniform(0.1, 1.0, cols)
    pr, pc = pr / pr.sum(), pc / pc.sum()
    omega = State(alg, np.outer(pr, pc).ravel())
    flag, witness = independence_test([row_gen], [col_gen], omega)
    assert flag and witness is None


def test_independence_correlated_state():
    alg = AtomicAlgebra(4)
    row_gen, col_gen = _factor_generators(alg, 2, 2)
    omega = State(alg, [0.5, 0.0, 0.0, 0.5])  # perfectly correlated bits
    flag, witness = independence_test([row_gen], [col_gen], omega)
    assert not flag
    p, q = witness
    assert abs(omega(p * q) - omega(p) * omega(q)) > 1e-9


def test_independence_matches_factorization_oracle():
    rows, cols = 2, 3
    alg = AtomicAlgebra(rows * cols)
    row_gen, col_gen = _factor_generators(alg, rows, cols)
    for _ in range(200):
        w = RNG.uniform(0.0, 1.0, rows * cols)
        w = w / w.sum()
        omega = State(alg, w)
        got, _ = independence_test([row_gen], [col_gen], omega)
        mr, mc = _pair_marginals(w, rows, cols)
        expected = bool(np.max(np.abs(np.outer(mr, mc).ravel() - w)) <= 1e-9)
        assert got == expected


def test_independence_against_scalars():
    # the scalar subalgebra is independent of everything
    alg = AtomicAlgebra(4)
    omega = random_state(alg)
    gen = Element(alg, [0.0, 1.0, 2.0, 3.0])
    flag, _ = independence_test([], [gen], omega)
    assert flag


# distributions ---------------------------------------------------------------


def test_distribution_of_single_observable():
    alg = AtomicAlgebra(3)
    x = Element(alg, [2.0, 3.0, 3.0])
    omega = State(alg, [0.2, 0.3, 0.5])
    dist = distribution_of([x], omega)
    assert dist.atoms == ((2.0, pytest.approx(0.2)), (3.0, pytest.approx(0.8)))
    assert dist.total() == pytest.approx(1.0)
    assert dist.cdf(2.0) == pytest.approx(0.2)
    assert dist.cdf(2.5) == pytest.approx(0.2)
    assert dist.cdf(3.0) == pytest.approx(1.0)
    assert dist.cdf(-1.0) == 0.0


def test_distribution_joint():
    alg = AtomicAlgebra(4)
    a = Element(alg, [0.0, 0.0, 1.0, 1.0])
    b = Element(alg, [0.0, 1.0, 0.0, 1.0])
    omega = State(alg, [0.1, 0.2, 0.3, 0.4])
    dist = distribution_of([a, b], omega)
    assert dist.masses() == {
        (0.0, 0.0): pytest.approx(0.1),
        (0.0, 1.0): pytest.approx(0.2),
        (1.0, 0.0): pytest.approx(0.3),
        (1.0, 1.0): pytest.approx(0.4),
    }
    assert dist.cdf((0.0, 1.0)) == pytest.approx(0.3)
    assert dist.cdf((1.0, 1.0)) == pytest.approx(1.0)


def test_distribution_serialization_roundtrip():
    alg = AtomicAlgebra(3)
    x = Element(alg, [1.0, 2.0, 2.0])
    dist = distribution_of([x], State(alg, [0.5, 0.25, 0.25]))
    data = json.loads(json.dumps(dist.to_dict()))
    assert data == {"atoms": [{"t": 1.0, "p": 0.5}, {"t": 2.0, "p": 0.5}]}
    assert Distribution.from_dict(data).atoms == dist.atoms


def test_annihilator_projection():
    alg = AtomicAlgebra(4)
    a = Element(alg, [0.0, 0.0, 1.0, 1.0])
    b = Element(alg, [5.0, 7.0, 5.0, 7.0])
    j = annihilator_projection([a, b], [1.0, 7.0])
    assert j.equals(alg.atom(3))
    assert j.is_projection()
    # the defining annihilation property: j * (t - g) = 0 for each generator
    for g, t in ((a, 1.0), (b, 7.0)):
        assert (j * (t * alg.identity() - g)).norm() <= 1e-12
    omega = State(alg, [0.1, 0.2, 0.3, 0.4])
    assert omega(j).real == pytest.approx(0.4)
    # matches the joint distribution mass at the target point
    dist = distribution_of([a, b], omega)
    assert dist.masses()[(1.0, 7.0)] == pytest.approx(0.4)


def test_prob_interval():
    alg = AtomicAlgebra(4)
    x = Element(alg, [0.0, 1.0, 2.0, 3.0])
    omega = State(alg, [0.1, 0.2, 0.3, 0.4])
    assert prob_interval(x, omega, 1.0, 2.0) == pytest.approx(0.5)
    assert prob_interval(x, omega, -10.0, 10.0) == pytest.approx(1.0)
    assert prob_interval(x, omega, 2.5, 2.6) == 0.0
    with pytest.raises(ValueError):
        prob_interval(Element(alg, [1j, 0, 0, 0]), omega, 0, 1)


# weak law of large numbers ----------------------------------------------------


def brute_average_moment(weights, values, n, k):
    """Dense oracle: enumerate all d**n outcome strings."""
    mean = float(np.dot(weights, values))
    total = 0.0
    for string in itertools.product(range(len(values)), repeat=n):
        p = math.prod(weights[i] for i in string)
        avg = sum(values[i] for i in string) / n
        total += p * abs(avg - mean) ** k
    return total


def test_sum_pushforward_against_enumeration():
    values = np.array([0.0, 1.0, 3.0])
    masses = np.array([0.5, 0.2, 0.3])
    v, m = sum_pushforward(values, masses, 4)
    assert m.sum() == pytest.approx(1.0)
    acc = {}
    for string in itertools.product(range(3), repeat=4):
        total = sum(values[i] for i in string)
        acc[total] = acc.get(total, 0.0) + math.prod(masses[i] for i in string)
    assert len(acc) == len(v)
    for vi, mi in zip(v, m):
        assert mi == pytest.approx(acc[round(float(vi), 9)], abs=1e-12)


def test_lln_moment_matches_dense_oracle():
    alg = AtomicAlgebra(2)
    for p in (0.1, 0.5):
        omega = State(alg, [1.0 - p, p])
        for n in (1, 3, 6):
            for k in (2, 4):
                got = lln_moment(omega, n, k)
                want = brute_average_moment(omega.weights, [0.0, 1.0], n, k)
                assert got == pytest.approx(want, abs=1e-12)


def test_lln_variance_analytic():
    alg = AtomicAlgebra(2)
    p = 0.3
    omega = State(alg, [1.0 - p, p])
    for n in (1, 10, 100, 1000):
        assert lln_moment(omega, n, 2) == pytest.approx(p * (1 - p) / n, abs=1e-12)


def test_lln_moment_sweep_consistent():
    alg = AtomicAlgebra(3)
    omega = State(alg, [0.2, 0.5, 0.3])
    x = Element(alg, [-1.0, 0.0, 2.0])
    ns = [1, 2, 5, 9]
    swept = lln_moment_sweep(omega, ns, 2, observable=x)
    for n in ns:
        assert swept[n] == pytest.approx(lln_moment(omega, n, 2, observable=x), abs=1e-14)


def test_lln_moment_validation():
    alg = AtomicAlgebra(2)
    omega = State(alg, [0.5, 0.5])
    with pytest.raises(ValueError):
        lln_moment(omega, 0, 2)
    with pytest.raises(ValueError):
        lln_moment(omega, 5, 0)
    with pytest.warns(UserWarning):
        lln_moment(omega, 5, 3)


def test_chebyshev_tail_bounded():
    alg = AtomicAlgebra(2)
    p = 0.3
    omega = State(alg, [1.0 - p, p])
    eps = 0.1
    for n in (10, 50, 200):
        tail = chebyshev_tail(omega, n, eps)
        bound = p * (1 - p) / (n * eps * eps)
        assert 0.0 <= tail <= min(1.0, bound) + 1e-12
    with pytest.raises(ValueError):
        chebyshev_tail(omega, 10, 0.0)


def test_chebyshev_tail_exact_small_case():
    # n=2 fair coin, eps=0.4: average in {0, .5, 1}, mean .5; tail mass = P(0)+P(1)
    alg = AtomicAlgebra(2)
    omega = State(alg, [0.5, 0.5])
    assert chebyshev_tail(omega, 2, 0.4) == pytest.approx(0.5)
    # eps above the max deviation leaves no tail
    assert chebyshev_tail(omega, 2, 0.6) == 0.0
