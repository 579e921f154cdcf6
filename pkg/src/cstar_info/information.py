"""Sources, entropy, typical sets, and prefix coding.

A memoryless source is an atomic algebra with a state; its canonical output
observable carries coefficient i on atom i so that reading the observable n
times is the n-fold tensor block.  Entropy is the Shannon entropy of the
weight vector in bits, with the 0 log 0 = 0 convention.

The typical-set report enumerates every length-n string, compares its
per-symbol information rate against the entropy (closed interval of radius
eps), and records the count and probability mass of the typical strings
together with the standard count bounds.  Strings of probability zero carry
infinite information rate and are never typical.

Prefix codes are tied back to the algebra through word embeddings: two
distinct embedded codewords multiply to zero exactly when neither word is a
prefix of the other, so prefix-freedom is an orthogonality statement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    AlgebraMismatch,
    AtomicAlgebra,
    Element,
    GuardExceeded,
    MultiIndex,
    TensorElement,
    check_guard,
)
from .probability import State

# Hard ceiling on explicit typical-set projections, independent of the
# dense-expansion guard: the projection stores one term per typical string.
MAX_PROJECTION_TERMS = 1 << 20


class Source:
    """A memoryless source: an atomic algebra carrying a state."""

    __slots__ = ("algebra", "state")

    def __init__(self, algebra, state):
        if not isinstance(state, State):
            raise TypeError("state must be a State")
        if state.algebra != algebra:
            raise AlgebraMismatch("state lives on %r, not %r" % (state.algebra, algebra))
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "state", state)

    def __setattr__(self, name, value):
        raise AttributeError("Source is immutable")

    @classmethod
    def from_weights(cls, weights, labels=None):
        algebra = AtomicAlgebra(len(tuple(weights)), labels=labels)
        return cls(algebra, State(algebra, weights))

    def output(self):
        """Canonical output observable: coefficient i on atom i."""
        return Element(self.algebra, np.arange(self.algebra.dim, dtype=float))

    def __repr__(self):
        return "Source(%r)" % (self.state,)


def source_output(source):
    return source.output()


def entropy(state):
    """Shannon entropy of the weight vector, in bits (0 log 0 = 0)."""
    w = np.clip(np.asarray(state.weights, dtype=float), 0.0, None)
    nz = w[w > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


# typical sets -----------------------------------------------------------------


@dataclass(frozen=True)
class TypicalSetReport:
    """Exact enumeration summary of the eps-typical set at block length n."""

    n: int
    eps: float
    entropy: float
    count: int
    prob_mass: float
    lower_bound: float
    upper_bound: float
    mass_ok: bool
    count_ok: bool

    def to_dict(self):
        return {
            "n": self.n,
            "eps": self.eps,
            "entropy": self.entropy,
            "count": self.count,
            "prob_mass": self.prob_mass,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "mass_ok": self.mass_ok,
            "count_ok": self.count_ok,
        }


def _string_log_probs(weights, n):
    # log2-probability of every length-n string, strings packed big-endian;
    # impossible strings carry -inf.
    with np.errstate(divide="ignore"):
        logp = np.log2(np.clip(np.asarray(weights, dtype=float), 0.0, None))
    out = np.zeros(1)
    for _ in range(n):
        out = (out[:, None] + logp[None, :]).ravel()
    return out


def _typical_mask(source, n, eps, guard_bits):
    n = int(n)
    eps = float(eps)
    if n < 1:
        raise ValueError("block length must be >= 1")
    if eps <= 0:
        raise ValueError("eps must be positive")
    check_guard(source.algebra.dim, n, guard_bits)
    lp = _string_log_probs(source.state.weights, n)
    h = entropy(source.state)
    # closed interval; the 1e-12 slack only absorbs float rounding on the edge
    with np.errstate(invalid="ignore"):
        mask = np.abs(-lp / n - h) <= eps + 1e-12
    return mask, lp, h


def aep_typical_set(source, n, eps, guard_bits=None):
    """Enumerate the eps-typical strings of length n and report the counts.

    ``mass_ok`` records whether the typical mass exceeds 1 - eps;
    ``count_ok`` checks the count against 2**(n (H + eps)) from above always,
    and against (1 - eps) 2**(n (H - eps)) from below once mass_ok holds.
    """
    mask, lp, h = _typical_mask(source, n, eps, guard_bits)
    count = int(np.count_nonzero(mask))
    mass = float(np.sum(np.exp2(lp[mask]))) if count else 0.0
    upper = 2.0 ** (n * (h + eps))
    lower = (1.0 - eps) * 2.0 ** (n * (h - eps))
    mass_ok = mass > 1.0 - eps
    count_ok = count <= upper * (1.0 + 1e-12)
    if mass_ok:
        count_ok = count_ok and count >= lower * (1.0 - 1e-12)
    return TypicalSetReport(
        n=int(n),
        eps=float(eps),
        entropy=h,
        count=count,
        prob_mass=mass,
        lower_bound=lower,
        upper_bound=upper,
        mass_ok=mass_ok,
        count_ok=count_ok,
    )


def aep_projection(source, n, eps, guard_bits=None, max_terms=MAX_PROJECTION_TERMS):
    """Projection onto the eps-typical strings, one explicit term each."""
    mask, _, _ = _typical_mask(source, n, eps, guard_bits)
    hits = np.flatnonzero(mask)
    if hits.size > max_terms:
        raise GuardExceeded(
            "typical set has %d strings; explicit projection capped at %d"
            % (hits.size, max_terms)
        )
    d = source.algebra.dim
    terms = {}
    for flat in hits:
        digits = []
        rest = int(flat)
        for pos in range(int(n), 0, -1):
            rest, atom = divmod(rest, d)
            digits.append((pos, atom))
        terms[MultiIndex(digits)] = 1.0
    return TensorElement(source.algebra, terms)


# prefix codes -----------------------------------------------------------------


class Code:
    """A variable-length code: one digit string per source atom.

    Words are strings over the digits 0..alphabet_size-1 (alphabet sizes up
    to 10 keep single-character digits; larger alphabets are not needed
    here and are rejected).
    """

    __slots__ = ("words", "alphabet_size")

    def __init__(self, words, alphabet_size=2):
        alphabet_size = int(alphabet_size)
        if not 2 <= alphabet_size <= 10:
            raise ValueError("alphabet size must be between 2 and 10")
        words = tuple(str(w) for w in words)
        if not words:
            raise ValueError("a code needs at least one word")
        for w in words:
            if not w:
                raise ValueError("codewords must be nonempty")
            for ch in w:
                if not ch.isdigit() or int(ch) >= alphabet_size:
                    raise ValueError(
                        "codeword %r uses digits outside 0..%d" % (w, alphabet_size - 1)
                    )
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "alphabet_size", alphabet_size)

    def __setattr__(self, name, value):
        raise AttributeError("Code is immutable")

    @property
    def source_dim(self):
        return len(self.words)

    @property
    def lengths(self):
        return tuple(len(w) for w in self.words)

    def is_prefix_free(self):
        return is_prefix_free(self)

    def __eq__(self, other):
        if not isinstance(other, Code):
            return NotImplemented
        return self.words == other.words and self.alphabet_size == other.alphabet_size

    def __hash__(self):
        return hash((self.words, self.alphabet_size))

    def __repr__(self):
        return "Code(%r, alphabet_size=%d)" % (self.words, self.alphabet_size)

    def to_dict(self):
        return {"n": self.alphabet_size, "words": list(self.words)}

    @classmethod
    def from_dict(cls, data):
        return cls(data["words"], data["n"])


def embed_word(word, algebra):
    """Embed a digit string as the matching atomic tensor word."""
    word = str(word)
    if not word:
        raise ValueError("cannot embed the empty word")
    terms = {MultiIndex({t + 1: int(ch) for t, ch in enumerate(word)}): 1.0}
    return TensorElement(algebra, terms)


def is_prefix_free(code):
    """No codeword is a prefix of another (and words are distinct)."""
    words = sorted(code.words)
    for a, b in zip(words, words[1:]):
        if b.startswith(a):
            return False
    return True


def kraft_check(lengths, alphabet_size):
    """Kraft inequality sum_i n**(k_max - k_i) <= n**k_max, exactly."""
    n = int(alphabet_size)
    if n < 2:
        raise ValueError("alphabet size must be >= 2")
    ks = [int(k) for k in lengths]
    if not ks:
        raise ValueError("need at least one length")
    if min(ks) < 1:
        raise ValueError("codeword lengths must be >= 1")
    k_max = max(ks)
    return sum(n ** (k_max - k) for k in ks) <= n ** k_max


def _digits(value, base, width):
    out = []
    for _ in range(width):
        value, digit = divmod(value, base)
        out.append(str(digit))
    return "".join(reversed(out))


def kraft_construct(lengths, alphabet_size):
    """Build a prefix-free code with exactly the given lengths.

    Words are handed out in order of increasing length as consecutive
    lexicographic intervals, so the construction is deterministic.  Raises
    ValueError when the lengths fail the Kraft inequality.
    """
    n = int(alphabet_size)
    if not kraft_check(lengths, n):
        raise ValueError("lengths %r violate the Kraft inequality for base %d" % (tuple(lengths), n))
    ks = [int(k) for k in lengths]
    order = sorted(range(len(ks)), key=lambda i: ks[i])
    words = [None] * len(ks)
    value = 0
    prev = None
    for i in order:
        k = ks[i]
        if prev is not None:
            value = (value + 1) * (n ** (k - prev))
        if value >= n ** k:
            raise ValueError("lengths %r exhaust the base-%d tree" % (tuple(lengths), n))
        words[i] = _digits(value, n, k)
        prev = k
    return Code(tuple(words), n)


@dataclass(frozen=True)
class CodeMetrics:
    """Expected length and its excess over the base-n entropy."""

    expected_length: float
    bound_value: float


def code_metrics(code, state):
    """Expected codeword length and E[k] - H_n(state) for a prefix-free code.

    The bound value is nonnegative for every prefix-free code (noiseless
    coding); entropies here use log base alphabet_size.
    """
    if code.source_dim != state.algebra.dim:
        raise AlgebraMismatch(
            "code has %d words, state has %d atoms" % (code.source_dim, state.algebra.dim)
        )
    if not is_prefix_free(code):
        raise ValueError("expected-length bounds require a prefix-free code")
    w = np.clip(np.asarray(state.weights, dtype=float), 0.0, None)
    ks = np.array(code.lengths, dtype=float)
    expected = float(np.dot(w, ks))
    nz = w > 0.0
    h_base_n = float(-np.sum(w[nz] * np.log(w[nz]) / np.log(code.alphabet_size)))
    return CodeMetrics(expected_length=expected, bound_value=expected - h_base_n)


def huffman_code(state, alphabet_size=2):
    """Optimal prefix-free code for the state's weights, base ``alphabet_size``.

    Deterministic tie-breaking: the queue orders nodes by (weight, creation
    index), and digits are assigned in pop order, so equal weights merge
    lowest-index first.
    """
    import heapq

    n = int(alphabet_size)
    if not 2 <= n <= 10:
        raise ValueError("alphabet size must be between 2 and 10")
    d = state.algebra.dim
    if d == 1:
        return Code(("0",), n)
    weights = np.clip(np.asarray(state.weights, dtype=float), 0.0, None)
    # pad with zero-weight dummies so every merge takes exactly n nodes
    pad = (1 - d) % (n - 1)
    heap = [(float(weights[i]), i) for i in range(d)]
    heap.extend((0.0, d + j) for j in range(pad))
    heapq.heapify(heap)
    children = {}
    next_id = d + pad
    while len(heap) > 1:
        group = [heapq.heappop(heap) for _ in range(n)]
        children[next_id] = tuple(idx for _, idx in group)
        heapq.heappush(heap, (sum(wt for wt, _ in group), next_id))
        next_id += 1
    root = heap[0][1]
    words = [None] * d
    stack = [(root, "")]
    while stack:
        node, prefix = stack.pop()
        if node < d:
            words[node] = prefix
        elif node in children:
            for digit, child in enumerate(children[node]):
                stack.append((child, prefix + str(digit)))
    return Code(tuple(words), n)
