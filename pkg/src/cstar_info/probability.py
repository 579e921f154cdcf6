"""States, generated subalgebras, independence, and the weak law of large numbers.

A state on an atomic algebra is a probability weight vector: the positive
unital functionals are exactly ``x -> sum_i w_i a_i`` with ``w_i >= 0``
summing to 1.  Pure states are the point masses, and a state is pure exactly
when it is multiplicative.  On tensor powers, product states evaluate basis
strings factor by factor, with a designated tail state for positions beyond
the explicit factors.

Distributions of self-adjoint elements are pushforwards of the weights onto
the coefficient values.  Averages of independent copies of an observable are
handled by exact convolution of that pushforward, which keeps moment and
tail computations for the weak law exact up to float rounding.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .algebra import (
    EQ_TOL,
    AlgebraMismatch,
    AtomicAlgebra,
    Element,
    TensorElement,
    _tol,
)


class State:
    """Probability weights over the atoms: a positive unital functional."""

    __slots__ = ("algebra", "weights")

    def __init__(self, algebra, weights, tol=None):
        if not isinstance(algebra, AtomicAlgebra):
            raise TypeError("algebra must be an AtomicAlgebra")
        t = _tol(tol)
        w = np.array(weights, dtype=float)
        if w.shape != (algebra.dim,):
            raise ValueError("expected %d weights, got shape %r" % (algebra.dim, w.shape))
        if float(np.min(w)) < -t:
            raise ValueError("state weights must be nonnegative")
        if abs(float(np.sum(w)) - 1.0) > t:
            raise ValueError("state weights must sum to 1 (got %.17g)" % float(np.sum(w)))
        w.setflags(write=False)
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "weights", w)

    def __setattr__(self, name, value):
        raise AttributeError("State is immutable")

    @classmethod
    def uniform(cls, algebra):
        return cls(algebra, np.full(algebra.dim, 1.0 / algebra.dim))

    @classmethod
    def point_mass(cls, algebra, index):
        w = np.zeros(algebra.dim)
        w[int(index)] = 1.0
        return cls(algebra, w)

    def __call__(self, x):
        if not isinstance(x, Element):
            raise TypeError("State evaluates single-factor Elements; see ProductState")
        if x.algebra != self.algebra:
            raise AlgebraMismatch("element lives on %r, state on %r" % (x.algebra, self.algebra))
        return complex(np.dot(self.weights, x.coeffs))

    def is_pure(self, tol=None):
        """Pure iff multiplicative iff a point mass."""
        t = _tol(tol)
        return bool(np.max(self.weights) >= 1.0 - t)

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return self.algebra == other.algebra and bool(
            np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.algebra, self.weights.tobytes()))

    def __repr__(self):
        return "State(%r, %s)" % (self.algebra, np.array2string(self.weights, separator=", "))

    def to_dict(self):
        return {"dim": self.algebra.dim, "weights": [float(w) for w in self.weights]}

    @classmethod
    def from_dict(cls, data, algebra=None):
        dim = int(data["dim"])
        if algebra is None:
            algebra = AtomicAlgebra(dim)
        elif algebra.dim != dim:
            raise AlgebraMismatch("serialized dim %d != algebra dim %d" % (dim, algebra.dim))
        return cls(algebra, data["weights"])


class ProductState:
    """Product state on a tensor power: explicit factors, then an iid tail.

    ``state_at(p)`` is ``factors[p-1]`` while it exists and ``tail`` beyond;
    a basis string evaluates to the product of its per-position weights, and
    implicit identity positions contribute a factor 1.
    """

    __slots__ = ("factors", "tail")

    def __init__(self, factors=(), tail=None):
        factors = tuple(factors)
        if tail is None:
            if not factors:
                raise ValueError("need a tail state or at least one factor")
            tail = factors[-1]
        if not isinstance(tail, State):
            raise TypeError("tail must be a State")
        for f in factors:
            if not isinstance(f, State):
                raise TypeError("factors must be States")
            if f.algebra != tail.algebra:
                raise AlgebraMismatch("all factors must share one algebra")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "tail", tail)

    def __setattr__(self, name, value):
        raise AttributeError("ProductState is immutable")

    @classmethod
    def iid(cls, state):
        return cls((), state)

    @property
    def algebra(self):
        return self.tail.algebra

    def state_at(self, position):
        position = int(position)
        if position < 1:
            raise ValueError("tensor positions are 1-based")
        if position <= len(self.factors):
            return self.factors[position - 1]
        return self.tail

    def __call__(self, x):
        if not isinstance(x, TensorElement):
            raise TypeError("ProductState evaluates TensorElements; see State")
        if x.factor_algebra != self.algebra:
            raise AlgebraMismatch(
                "element factor algebra %r, state algebra %r" % (x.factor_algebra, self.algebra)
            )
        total = 0j
        for idx, c in x.terms.items():
            prob = 1.0
            for pos, atom in idx.pairs:
                prob *= self.state_at(pos).weights[atom]
                if prob == 0.0:
                    break
            total += c * prob
        return complex(total)

    def __repr__(self):
        return "ProductState(%d explicit factors, tail %r)" % (len(self.factors), self.tail)


def evaluate(state, x):
    """Pair a State with an Element or a ProductState with a TensorElement."""
    return state(x)


def pure_check(state, tol=None):
    return state.is_pure(tol)


# generated subalgebras ------------------------------------------------------


def _cluster_ids(values, tol):
    # Label atoms by which coefficient cluster they fall in; clusters are
    # grown greedily along the sorted axis with gap > tol as the separator.
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ids = np.zeros(len(values), dtype=int)
    current = 0
    last = None
    for k in order:
        if last is not None and values[k] - last > tol:
            current += 1
        ids[k] = current
        last = values[k]
    return ids


@dataclass(frozen=True)
class Subalgebra:
    """Unital subalgebra of an atomic algebra, stored as its atom partition.

    ``blocks`` are the minimal projections: an element belongs to the
    subalgebra exactly when its coefficients are constant on every block.
    """

    parent: AtomicAlgebra
    blocks: tuple

    def __post_init__(self):
        seen = sorted(i for block in self.blocks for i in block)
        if seen != list(range(self.parent.dim)):
            raise ValueError("blocks must partition the atom set")

    @property
    def dim(self):
        return len(self.blocks)

    def block_projections(self):
        out = []
        for block in self.blocks:
            coeffs = np.zeros(self.parent.dim, dtype=complex)
            coeffs[list(block)] = 1.0
            out.append(Element(self.parent, coeffs))
        return out

    def contains(self, x, tol=None):
        t = _tol(tol)
        for block in self.blocks:
            vals = x.coeffs[list(block)]
            if np.max(np.abs(vals - vals[0])) > t:
                return False
        return True


def generated_subalgebra(generators, algebra=None, tol=None):
    """Smallest unital subalgebra containing the given self-adjoint elements.

    Atoms are merged when every generator takes the same coefficient (within
    tol) on them.  With no generators the result is the scalars, a single
    block, so ``algebra`` must then be supplied.
    """
    generators = tuple(generators)
    t = _tol(tol)
    if algebra is None:
        if not generators:
            raise ValueError("need an algebra when the generator set is empty")
        algebra = generators[0].algebra
    keys = [()] * algebra.dim
    for g in generators:
        if g.algebra != algebra:
            raise AlgebraMismatch("generators live on different algebras")
        if not g.is_self_adjoint(t):
            raise ValueError("generators must be self-adjoint")
        ids = _cluster_ids(g.coeffs.real, t)
        keys = [key + (int(ids[i]),) for i, key in enumerate(keys)]
    groups = {}
    for i, key in enumerate(keys):
        groups.setdefault(key, []).append(i)
    blocks = sorted((tuple(v) for v in groups.values()), key=lambda b: b[0])
    return Subalgebra(algebra, tuple(blocks))


def independence_test(gens_a, gens_b, omega, tol=None):
    """Check whether two generated subalgebras are independent under omega.

    Independence means the state factors over products of block projections:
    ``omega(P Q) = omega(P) omega(Q)`` for every pair.  Returns ``(flag,
    witness)`` where the witness is an offending ``(P, Q)`` pair, if any.
    """
    t = _tol(tol)
    sub_a = generated_subalgebra(gens_a, algebra=omega.algebra, tol=t)
    sub_b = generated_subalgebra(gens_b, algebra=omega.algebra, tol=t)
    for p in sub_a.block_projections():
        wp = omega(p).real
        for q in sub_b.block_projections():
            lhs = omega(p * q).real
            rhs = wp * omega(q).real
            if abs(lhs - rhs) > t:
                return False, (p, q)
    return True, None


# distributions --------------------------------------------------------------


@dataclass(frozen=True)
class Distribution:
    """Finite real (or vector) pushforward distribution.

    ``atoms`` is a sorted tuple of ``(value, mass)`` pairs; values are floats
    for a single observable and tuples of floats for joint distributions.
    """

    atoms: tuple
    description: str = ""

    def __post_init__(self):
        masses = np.array([m for _, m in self.atoms], dtype=float)
        if masses.size and float(np.min(masses)) < -EQ_TOL:
            raise ValueError("distribution masses must be nonnegative")

    def total(self):
        return float(sum(m for _, m in self.atoms))

    def masses(self):
        return {v: m for v, m in self.atoms}

    def cdf(self, t, tol=None):
        """Mass of values <= t, componentwise for joint values."""
        eps = _tol(tol)
        total = 0.0
        for value, mass in self.atoms:
            if isinstance(value, tuple):
                point = tuple(t) if isinstance(t, (tuple, list)) else (t,) * len(value)
                ok = all(v <= u + eps for v, u in zip(value, point))
            else:
                ok = value <= t + eps
            if ok:
                total += mass
        return total

    def to_dict(self):
        atoms = []
        for value, mass in self.atoms:
            t = list(value) if isinstance(value, tuple) else value
            atoms.append({"t": t, "p": float(mass)})
        return {"atoms": atoms}

    @classmethod
    def from_dict(cls, data, description=""):
        atoms = []
        for entry in data["atoms"]:
            t = entry["t"]
            value = tuple(float(v) for v in t) if isinstance(t, list) else float(t)
            atoms.append((value, float(entry["p"])))
        return cls(tuple(sorted(atoms, key=lambda a: a[0])), description)


def _generator_clusters(gens, tol):
    reps = []
    ids = []
    for g in gens:
        if not g.is_self_adjoint(tol):
            raise ValueError("observables must be self-adjoint")
        labels = _cluster_ids(g.coeffs.real, tol)
        rep = {}
        for i, lab in enumerate(labels):
            rep.setdefault(int(lab), float(g.coeffs.real[i]))
        reps.append(rep)
        ids.append(labels)
    return reps, ids


def distribution_of(gens, omega, tol=None):
    """Joint pushforward distribution of self-adjoint elements under omega.

    Atom ``i`` contributes its weight to the value vector ``(g(i) for g in
    gens)``; coefficients equal within tol are identified (the cluster takes
    the value of its lowest atom).
    """
    gens = tuple(gens)
    if not gens:
        raise ValueError("need at least one observable")
    t = _tol(tol)
    for g in gens:
        if g.algebra != omega.algebra:
            raise AlgebraMismatch("observable and state algebras differ")
    reps, ids = _generator_clusters(gens, t)
    acc = {}
    for i in range(omega.algebra.dim):
        key = tuple(int(labels[i]) for labels in ids)
        acc[key] = acc.get(key, 0.0) + float(omega.weights[i])
    atoms = []
    for key, mass in acc.items():
        values = tuple(reps[k][lab] for k, lab in enumerate(key))
        atoms.append((values[0] if len(gens) == 1 else values, mass))
    atoms.sort(key=lambda a: a[0])
    names = "joint of %d observables" % len(gens) if len(gens) > 1 else "observable"
    return Distribution(tuple(atoms), names)


def annihilator_projection(gens, targets, tol=None):
    """Indicator projection of the event ``g_k = t_k for every k``.

    The complement annihilates every ``(t_k 1 - g_k)``, which is what makes
    conditional reasoning on the event algebraic.
    """
    gens = tuple(gens)
    targets = tuple(float(t) for t in targets)
    if len(gens) != len(targets):
        raise ValueError("need one target per observable")
    if not gens:
        raise ValueError("need at least one observable")
    t = _tol(tol)
    algebra = gens[0].algebra
    mask = np.ones(algebra.dim, dtype=bool)
    for g, target in zip(gens, targets):
        if g.algebra != algebra:
            raise AlgebraMismatch("observables live on different algebras")
        if not g.is_self_adjoint(t):
            raise ValueError("observables must be self-adjoint")
        mask &= np.abs(g.coeffs.real - target) <= t
    return Element(algebra, mask.astype(complex))


def prob_interval(x, omega, lo, hi, tol=None):
    """omega-mass of the spectral interval [lo, hi] of a self-adjoint x."""
    t = _tol(tol)
    if not x.is_self_adjoint(t):
        raise ValueError("interval probabilities need a self-adjoint element")
    if x.algebra != omega.algebra:
        raise AlgebraMismatch("element and state algebras differ")
    vals = x.coeffs.real
    mask = (vals >= lo - t) & (vals <= hi + t)
    return float(np.sum(omega.weights[mask]))


# weak law of large numbers ---------------------------------------------------


def _merge_close(values, masses, tol):
    order = np.argsort(values, kind="stable")
    v = values[order]
    m = masses[order]
    if v.size == 0:
        return v, m
    starts = np.empty(v.size, dtype=bool)
    starts[0] = True
    np.greater(np.diff(v), tol, out=starts[1:])
    idx = np.flatnonzero(starts)
    return v[idx], np.add.reduceat(m, idx)


def sum_pushforward(values, masses, n, merge_tol=None):
    """Exact distribution of the sum of n iid copies of a finite variable.

    Returns ``(values, masses)`` arrays; support points closer than
    ``merge_tol`` are merged to keep the support size O(n * dim).
    """
    n = int(n)
    if n < 1:
        raise ValueError("need n >= 1 summands")
    tol = _tol(merge_tol)
    base_v = np.asarray(values, dtype=float)
    base_m = np.asarray(masses, dtype=float)
    v = np.zeros(1)
    m = np.ones(1)
    for _ in range(n):
        v = (v[:, None] + base_v[None, :]).ravel()
        m = (m[:, None] * base_m[None, :]).ravel()
        v, m = _merge_close(v, m, tol)
    return v, m


def _observable_values(omega, observable):
    if observable is None:
        return np.arange(omega.algebra.dim, dtype=float)
    if observable.algebra != omega.algebra:
        raise AlgebraMismatch("observable and state algebras differ")
    if not observable.is_self_adjoint():
        raise ValueError("observable must be self-adjoint")
    return observable.coeffs.real.copy()


class _AverageSweep:
    """Iterates the exact distribution of the n-fold average incrementally."""

    def __init__(self, omega, observable=None, merge_tol=None):
        self.values = _observable_values(omega, observable)
        self.masses = np.asarray(omega.weights, dtype=float)
        self.mean = float(np.dot(self.values, self.masses))
        self.tol = _tol(merge_tol)
        self._v = np.zeros(1)
        self._m = np.ones(1)
        self.n = 0

    def step(self):
        self._v = (self._v[:, None] + self.values[None, :]).ravel()
        self._m = (self._m[:, None] * self.masses[None, :]).ravel()
        self._v, self._m = _merge_close(self._v, self._m, self.tol)
        self.n += 1

    def advance_to(self, n):
        while self.n < n:
            self.step()

    def moment(self, k):
        dev = np.abs(self._v / self.n - self.mean)
        return float(np.dot(self._m, dev ** k))

    def tail(self, eps):
        dev = np.abs(self._v / self.n - self.mean)
        return float(np.sum(self._m[dev > eps]))


def lln_moment(omega, n, k, observable=None, merge_tol=None):
    """k-th absolute moment of the deviation of the n-fold average.

    ``E |s_n - omega(x)|^k`` where ``s_n`` is the average of n independent
    copies of the observable (default: the coordinate observable with
    coefficients 0..d-1).  Odd k is accepted with a warning since the
    absolute moment no longer matches the signed one.
    """
    n = int(n)
    k = int(k)
    if n < 1:
        raise ValueError("need n >= 1 summands")
    if k < 1:
        raise ValueError("moment order must be >= 1")
    if k % 2 == 1:
        warnings.warn("odd moment order %d: computing the absolute moment" % k)
    sweep = _AverageSweep(omega, observable, merge_tol)
    sweep.advance_to(n)
    return sweep.moment(k)


def lln_moment_sweep(omega, ns, k, observable=None, merge_tol=None):
    """lln_moment over a grid of n values, sharing one convolution pass."""
    k = int(k)
    if k < 1:
        raise ValueError("moment order must be >= 1")
    ns = sorted(set(int(n) for n in ns))
    if ns and ns[0] < 1:
        raise ValueError("need n >= 1 summands")
    sweep = _AverageSweep(omega, observable, merge_tol)
    out = {}
    for n in ns:
        sweep.advance_to(n)
        out[n] = sweep.moment(k)
    return out


def chebyshev_tail(omega, n, eps, observable=None, merge_tol=None):
    """Exact P(|s_n - omega(x)| > eps) for the n-fold average."""
    n = int(n)
    eps = float(eps)
    if n < 1:
        raise ValueError("need n >= 1 summands")
    if eps <= 0:
        raise ValueError("eps must be positive")
    sweep = _AverageSweep(omega, observable, merge_tol)
    sweep.advance_to(n)
    return sweep.tail(eps)
