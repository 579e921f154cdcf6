"""Discrete memoryless channels: joint states, classification, capacity, coding.

A channel from an m-symbol input to an n-symbol output is a row-stochastic
m x n matrix ``matrix[i][j] = C(y_j | x_i)``, read as the unital positive
map that pulls output observables back to input observables.  Together with
an input state it induces the joint state on the pair algebra whose atoms
are (output, input) pairs, indexed ``a = i_out * m + j_in``.

Block-length-k objects live on the k-fold tensor power of the pair algebra;
their weights are Kronecker powers of the level-1 joint weights, so input
strings stay independent across slots.

The random-coding experiment draws ``r_k = floor(2**(k R))`` distinct
codewords iid from the k-fold input state, decodes each output string to
the codeword of maximal likelihood (ties to the lowest index), and measures
how far the block channel sits from the induced lossless decoder channel:
the mean total-variation style deviation and the decoding error both shrink
as k grows whenever R is below capacity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .algebra import (
    EQ_TOL,
    AtomicAlgebra,
    Element,
    GuardExceeded,
    TensorElement,
    _tol,
    tensor_power,
)
from .information import entropy
from .probability import ProductState, State, independence_test

# Joint-state tensor objects carry one explicit term per pair string.
JOINT_GUARD_BITS = 16
# Experiment matrices cap r * n**k entries at 2**(guard + 2).
EXPERIMENT_GUARD_BITS = 24


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver stops short of its tolerance."""


class Channel:
    """Row-stochastic channel matrix, input-major: matrix[i][j] = C(y_j | x_i)."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, tol=None):
        t = _tol(tol)
        mat = np.array(matrix, dtype=float)
        if mat.ndim != 2 or mat.size == 0:
            raise ValueError("channel matrix must be a nonempty 2-d array")
        if float(np.min(mat)) < -t:
            raise ValueError("channel probabilities must be nonnegative")
        sums = mat.sum(axis=1)
        if float(np.max(np.abs(sums - 1.0))) > t:
            raise ValueError("channel rows must sum to 1")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def __setattr__(self, name, value):
        raise AttributeError("Channel is immutable")

    @property
    def input_dim(self):
        return self.matrix.shape[0]

    @property
    def output_dim(self):
        return self.matrix.shape[1]

    def input_algebra(self):
        return AtomicAlgebra(self.input_dim)

    def output_algebra(self):
        return AtomicAlgebra(self.output_dim)

    def __eq__(self, other):
        if not isinstance(other, Channel):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and bool(
            np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.matrix.shape, self.matrix.tobytes()))

    def __repr__(self):
        return "Channel(%d -> %d)" % (self.input_dim, self.output_dim)

    def to_dict(self):
        return {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "matrix": [[float(v) for v in row] for row in self.matrix],
        }

    @classmethod
    def from_dict(cls, data):
        mat = np.array(data["matrix"], dtype=float)
        if mat.shape != (int(data["input_dim"]), int(data["output_dim"])):
            raise ValueError("channel matrix shape disagrees with declared dims")
        return cls(mat)


def bsc(p):
    """Binary symmetric channel with crossover probability p."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError("crossover probability must be in [0, 1]")
    return Channel([[1.0 - p, p], [p, 1.0 - p]])


def bec(p):
    """Binary erasure channel: outputs are (0, erasure, 1)."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError("erasure probability must be in [0, 1]")
    return Channel([[1.0 - p, p, 0.0], [0.0, p, 1.0 - p]])


def identity_channel(d):
    return Channel(np.eye(int(d)))


def useless_channel(row):
    """Every input produces the same output distribution."""
    row = np.asarray(row, dtype=float)
    return Channel(np.tile(row, (row.size, 1)))


def apply_channel(channel, y):
    """Pull an output observable back to the input algebra."""
    if not isinstance(y, Element):
        raise TypeError("apply_channel expects a single-factor Element")
    if y.algebra.dim != channel.output_dim:
        raise ValueError(
            "element dim %d, channel output dim %d" % (y.algebra.dim, channel.output_dim)
        )
    return Element(channel.input_algebra(), channel.matrix @ y.coeffs)


def push_state(channel, omega):
    """Image of an input state under the channel."""
    if omega.algebra.dim != channel.input_dim:
        raise ValueError(
            "state dim %d, channel input dim %d" % (omega.algebra.dim, channel.input_dim)
        )
    return State(channel.output_algebra(), omega.weights @ channel.matrix)


# joint states -----------------------------------------------------------------


class JointState:
    """Input-output joint state at block length ``level`` on the pair algebra.

    ``weights[jvec, ivec]`` is the probability of input string jvec and
    output string ivec (strings packed big-endian).  Evaluation of pair
    tensor elements goes through the iid product of the level-1 pair state.
    """

    __slots__ = ("pair_algebra", "input_state", "level", "weights", "pair_state")

    def __init__(self, channel, input_state, level=1):
        level = int(level)
        if level < 1:
            raise ValueError("block length must be >= 1")
        if input_state.algebra.dim != channel.input_dim:
            raise ValueError("input state does not match the channel input")
        m, n = channel.input_dim, channel.output_dim
        level_one = input_state.weights[:, None] * channel.matrix  # (m, n)
        w = level_one
        for _ in range(level - 1):
            w = np.kron(w, level_one)
        w.setflags(write=False)
        pair_algebra = AtomicAlgebra(n * m)
        pair_state = State(pair_algebra, level_one.T.ravel())
        object.__setattr__(self, "pair_algebra", pair_algebra)
        object.__setattr__(self, "input_state", input_state)
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "pair_state", pair_state)

    def __setattr__(self, name, value):
        raise AttributeError("JointState is immutable")

    def __call__(self, x):
        if isinstance(x, TensorElement) and x.level > self.level:
            raise ValueError("element level %d exceeds block length %d" % (x.level, self.level))
        if isinstance(x, Element):
            return self.pair_state(x)
        return ProductState.iid(self.pair_state)(x)

    def marginal_input(self):
        """Input-string marginal: the level-k power of the input state."""
        return self.weights.sum(axis=1)

    def marginal_output(self):
        return self.weights.sum(axis=0)

    def __repr__(self):
        return "JointState(level=%d, pairs=%d)" % (self.level, self.pair_algebra.dim)


class JointResult(NamedTuple):
    state: JointState
    observable: TensorElement
    density: TensorElement


def joint(channel, omega, k=1, guard_bits=None):
    """Joint state, output observable, and density at block length k.

    The observable carries coefficient ``C(y|x)`` on each pair string, the
    density carries the joint weight, and ``trace(density * z)`` at level k
    reproduces the joint state of z.  Both are dense over (n m)**k strings,
    so the block length is guarded.
    """
    limit = JOINT_GUARD_BITS if guard_bits is None else guard_bits
    pair_dim = channel.input_dim * channel.output_dim
    if k * np.log2(pair_dim) > limit + 1e-9:
        raise GuardExceeded(
            "joint objects need %d**%d explicit terms; guard is 2^%g"
            % (pair_dim, k, limit)
        )
    js = JointState(channel, omega, k)
    pair = js.pair_algebra
    observable = tensor_power(Element(pair, channel.matrix.T.ravel()), k)
    density = tensor_power(Element(pair, js.pair_state.weights), k)
    return JointResult(js, observable, density)


# classification -----------------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    """Channel kind plus, for lossless channels, the decoding assignment.

    ``assignment[j]`` is the unique input index that can produce output j.
    """

    kind: str
    assignment: tuple = None

    def blocks(self):
        if self.assignment is None:
            return None
        out = {}
        for j, i in enumerate(self.assignment):
            out.setdefault(i, []).append(j)
        return {i: tuple(v) for i, v in out.items()}


def classify(channel, omega=None, tol=None, rank_tol=1e-8):
    """Classify a channel as useless, lossless, or generic.

    Useless means rank 1: every input produces one fixed output distribution,
    so input and output are independent under any input state and no
    information flows.  Useless takes precedence over lossless (a one-input
    channel is trivially both).  Lossless requires every output column to
    have exactly one positive entry, which induces the decoding partition.
    """
    t = _tol(tol)
    mat = channel.matrix
    if min(mat.shape) == 1:
        rank_one = True
    else:
        s = np.linalg.svd(mat, compute_uv=False)
        rank_one = s[1] <= rank_tol * s[0]
    if rank_one:
        if omega is not None:
            _verify_useless_independence(channel, omega, t)
        return Classification("useless")
    assignment = []
    for j in range(channel.output_dim):
        rows = np.flatnonzero(mat[:, j] > t)
        if rows.size != 1:
            return Classification("generic")
        assignment.append(int(rows[0]))
    return Classification("lossless", tuple(assignment))


def _verify_useless_independence(channel, omega, tol):
    # On the level-1 joint state the input and output factor subalgebras
    # must be independent for a rank-1 channel.
    js = JointState(channel, omega, 1)
    m, n = channel.input_dim, channel.output_dim
    pair = js.pair_algebra
    out_gen = Element(pair, np.repeat(np.arange(n, dtype=float), m))
    in_gen = Element(pair, np.tile(np.arange(m, dtype=float), n))
    flag, _ = independence_test([out_gen], [in_gen], js.pair_state, tol=max(tol, 1e-9))
    if not flag:
        warnings.warn("rank-1 channel failed the joint independence check")


class InfoMetrics(NamedTuple):
    h_input: float
    h_output: float
    h_input_given_output: float
    mutual_information: float


def _entropy_bits(weights):
    w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
    nz = w[w > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


def info_metrics(channel, omega):
    """Input/output entropies, equivocation, and mutual information (bits)."""
    if omega.algebra.dim != channel.input_dim:
        raise ValueError("state does not match the channel input")
    w = np.clip(np.asarray(omega.weights, dtype=float), 0.0, None)
    joint_w = w[:, None] * channel.matrix  # (m, n)
    q = joint_w.sum(axis=0)
    h_in = _entropy_bits(w)
    h_out = _entropy_bits(q)
    h_cond = 0.0
    for j in range(channel.output_dim):
        if q[j] > 0.0:
            h_cond += q[j] * _entropy_bits(joint_w[:, j] / q[j])
    return InfoMetrics(
        h_input=h_in,
        h_output=h_out,
        h_input_given_output=float(h_cond),
        mutual_information=float(h_in - h_cond),
    )


class CapacityResult(NamedTuple):
    capacity: float
    optimal_input: State
    iterations: int
    gap: float


def capacity(channel, tol=1e-9, max_iter=10000):
    """Channel capacity in bits via Blahut-Arimoto ascent.

    Stops when the standard upper/lower capacity gap drops below tol and
    raises ConvergenceError (reporting the gap) otherwise.
    """
    mat = channel.matrix
    m = channel.input_dim
    positive = mat > 0.0
    with np.errstate(divide="ignore"):
        log_mat = np.where(positive, np.log2(np.where(positive, mat, 1.0)), 0.0)
    p = np.full(m, 1.0 / m)
    gap = np.inf
    for iteration in range(1, int(max_iter) + 1):
        q = p @ mat
        with np.errstate(divide="ignore"):
            log_q = np.log2(q, out=np.full_like(q, -np.inf), where=q > 0.0)
        d = np.where(positive, mat * (log_mat - log_q[None, :]), 0.0).sum(axis=1)
        lower = float(p @ d)
        upper = float(np.max(d))
        gap = upper - lower
        if gap <= tol:
            return CapacityResult(
                capacity=max(lower, 0.0),
                optimal_input=State(channel.input_algebra(), p),
                iterations=iteration,
                gap=gap,
            )
        p = p * np.exp2(d - np.max(d))
        p = p / p.sum()
    raise ConvergenceError(
        "Blahut-Arimoto gap %.3e still above tol %.3e after %d iterations"
        % (gap, tol, max_iter)
    )


# random coding ------------------------------------------------------------------


@dataclass(frozen=True)
class LosslessChannel:
    """Decoder channel induced by a codebook: block rows renormalized on
    their decision sets.

    ``decision[y]`` is the codeword index each output string decodes to;
    ``matrix`` is r x n**k, one row per codeword.
    """

    matrix: np.ndarray
    decision: tuple

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if len(self.decision) != mat.shape[1]:
            raise ValueError("need one decision per output string")
        if any(not 0 <= int(i) < mat.shape[0] for i in self.decision):
            raise ValueError("decision indices out of range")
        sums = mat.sum(axis=1)
        if float(np.max(np.abs(sums - 1.0))) > EQ_TOL:
            raise ValueError("decoder rows must sum to 1")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "decision", tuple(int(i) for i in self.decision))

    @property
    def codebook_size(self):
        return self.matrix.shape[0]

    def blocks(self):
        out = [[] for _ in range(self.codebook_size)]
        for y, i in enumerate(self.decision):
            out[i].append(y)
        return tuple(tuple(b) for b in out)

    def as_channel(self):
        return Channel(self.matrix)


def _codebook_size(k, rate):
    r = int(np.floor(2.0 ** (k * float(rate))))
    if r < 2:
        raise ValueError("rate %g gives fewer than 2 codewords at block length %d" % (rate, k))
    return r


def _sample_codebook(rng, weights, k, r):
    # Plain iid draws; repeated codewords are allowed, as in the classical
    # random-coding argument.  A repeated row loses every argmax tie, so its
    # decision block is empty and the decoder falls back to a uniform row.
    m = weights.size
    if r > m ** k:
        raise ValueError("codebook of %d words cannot fit %d**%d input strings" % (r, m, k))
    w = np.clip(weights, 0.0, None)
    w = w / w.sum()
    return rng.choice(m, size=(r, k), p=w).astype(np.int64)


def _block_rows(matrix, codebook):
    # Row j is the block channel C^k conditioned on codeword j; output strings
    # are packed big-endian, matching the dense() ordering of tensor elements.
    r, k = codebook.shape
    rows = np.ones((r, 1))
    for t in range(k):
        rows = (rows[:, :, None] * matrix[codebook[:, t]][:, None, :]).reshape(r, -1)
    return rows


def _decoder_from_rows(rows):
    # Maximum-likelihood decision per output string, ties to the lowest
    # codeword index; decoder rows are renormalized restrictions.
    r = rows.shape[0]
    decision = np.argmax(rows, axis=0)
    owner = decision[None, :] == np.arange(r)[:, None]
    masses = np.where(owner, rows, 0.0).sum(axis=1)
    decoder = np.where(owner, rows, 0.0)
    empty_mass = masses <= 0.0
    if np.any(empty_mass):
        warnings.warn("decision block with zero mass; decoder row set to uniform")
        for j in np.flatnonzero(empty_mass):
            block = owner[j]
            if np.any(block):
                decoder[j, block] = 1.0 / np.count_nonzero(block)
            else:
                decoder[j, :] = 1.0 / rows.shape[1]
        ok = ~empty_mass
        decoder[ok] = decoder[ok] / masses[ok, None]
    else:
        decoder = decoder / masses[:, None]
    return decision, decoder, masses


def _experiment_guard(k, n, r, guard_bits):
    limit = EXPERIMENT_GUARD_BITS if guard_bits is None else float(guard_bits)
    if k * np.log2(n) > limit + 1e-9:
        raise GuardExceeded(
            "block length %d over a %d-symbol output needs 2^%.1f columns; guard is 2^%g"
            % (k, n, k * np.log2(n), limit)
        )
    if np.log2(r) + k * np.log2(n) > limit + 2 + 1e-9:
        raise GuardExceeded(
            "codebook of %d rows times %d**%d columns exceeds the 2^%g entry guard"
            % (r, n, k, limit + 2)
        )


def build_code_and_decoder(channel, omega, k, rate, seed=0, guard_bits=None):
    """Draw a random codebook and its maximum-likelihood decoder channel.

    Returns ``(codebook, lossless)`` where codebook rows are input strings
    (ints) drawn iid from the k-fold input state; repeats are possible.
    """
    k = int(k)
    if k < 1:
        raise ValueError("block length must be >= 1")
    if omega.algebra.dim != channel.input_dim:
        raise ValueError("state does not match the channel input")
    r = _codebook_size(k, rate)
    _experiment_guard(k, channel.output_dim, r, guard_bits)
    rng = np.random.default_rng(seed)
    codebook = _sample_codebook(rng, omega.weights, k, r)
    rows = _block_rows(channel.matrix, codebook)
    decision, decoder, _ = _decoder_from_rows(rows)
    return codebook, LosslessChannel(decoder, tuple(int(v) for v in decision))


def _trial_metrics(rows, decision, decoder):
    r = rows.shape[0]
    owner = decision[None, :] == np.arange(r)[:, None]
    deviation = float(np.abs(rows - decoder).sum()) / r
    error = float(np.where(~owner, rows, 0.0).sum()) / r
    return deviation, error


@dataclass(frozen=True)
class CodingExperimentResult:
    """Mean deviation and decoding error for one block length."""

    k: int
    rate: float
    codebook_size: int
    trials: int
    seed: int
    deviation: float
    error_prob: float
    trial_deviations: tuple
    trial_error_probs: tuple

    def to_dict(self):
        return {
            "k": self.k,
            "rate": self.rate,
            "codebook_size": self.codebook_size,
            "trials": self.trials,
            "seed": self.seed,
            "deviation": self.deviation,
            "error_prob": self.error_prob,
            "trial_deviations": list(self.trial_deviations),
            "trial_error_probs": list(self.trial_error_probs),
        }


def coding_experiment(channel, omega, rate, ks, trials=20, seed=0, guard_bits=None):
    """Random-coding deviation experiment over a grid of block lengths.

    For each k, ``trials`` independent codebooks are drawn (trial t uses
    seed + t) and the deviation between the block channel and its decoder,
    along with the decoding error probability, is averaged.  Useless
    channels are refused; rates at or above capacity are allowed but warned
    about, since the deviations then have no reason to shrink.
    """
    if classify(channel).kind == "useless":
        raise ValueError("coding experiment on a useless channel is vacuous")
    rate = float(rate)
    trials = int(trials)
    if trials < 1:
        raise ValueError("need at least one trial")
    try:
        cap = capacity(channel, tol=1e-6, max_iter=2000).capacity
    except ConvergenceError:
        cap = None
    if cap is not None and rate >= cap:
        warnings.warn(
            "rate %g is not below capacity %.6g; deviations need not shrink" % (rate, cap)
        )
    if omega.algebra.dim != channel.input_dim:
        raise ValueError("state does not match the channel input")
    results = []
    for k in sorted(set(int(k) for k in ks)):
        if k < 1:
            raise ValueError("block lengths must be >= 1")
        r = _codebook_size(k, rate)
        _experiment_guard(k, channel.output_dim, r, guard_bits)
        devs = []
        errs = []
        for t in range(trials):
            rng = np.random.default_rng(int(seed) + t)
            codebook = _sample_codebook(rng, omega.weights, k, r)
            rows = _block_rows(channel.matrix, codebook)
            decision, decoder, _ = _decoder_from_rows(rows)
            deviation, error = _trial_metrics(rows, decision, decoder)
            devs.append(deviation)
            errs.append(error)
        results.append(
            CodingExperimentResult(
                k=k,
                rate=rate,
                codebook_size=r,
                trials=trials,
                seed=int(seed),
                deviation=float(np.mean(devs)),
                error_prob=float(np.mean(errs)),
                trial_deviations=tuple(devs),
                trial_error_probs=tuple(errs),
            )
        )
    return results
