"""The subspace match model: maximum match, v-minimal matches, simple matches.

A match is a pair ``(X, Y)`` of neuron index sets such that every activation
vector on one side lies within relative distance ``epsilon`` of the span of
the other side. Matches are index sets, never subspaces; bases are computed
on demand and memoised per problem.
"""
from __future__ import annotations

import threading
import warnings
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DegenerateNeuronError, DimensionMismatchError, InvalidInputError
from .geometry import (
    DEFAULT_POLICY,
    NumericPolicy,
    OrthonormalBasis,
    as_activation_matrix,
    orthonormal_basis,
    relative_residuals,
)

SIDES = ("x", "y")


class NeuronId(NamedTuple):
    side: str
    index: int

    def __str__(self):
        return f"{self.side}:{self.index}"

    @classmethod
    def parse(cls, text: str) -> "NeuronId":
        """Parse ``"x:3"`` or ``"y:0"``."""
        side, sep, idx = text.strip().partition(":")
        side = side.lower()
        if not sep or side not in SIDES:
            raise InvalidInputError(f"neuron must look like x:<index> or y:<index>, got {text!r}")
        try:
            index = int(idx)
        except ValueError:
            raise InvalidInputError(f"bad neuron index in {text!r}") from None
        if index < 0:
            raise InvalidInputError(f"neuron index must be >= 0, got {index}")
        return cls(side, index)


def _canon(indices) -> tuple:
    return tuple(sorted({int(i) for i in indices}))


@dataclass(frozen=True, order=True)
class MatchPair:
    """Canonical pair of sorted, duplicate-free index tuples."""

    xs: tuple = ()
    ys: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "xs", _canon(self.xs))
        object.__setattr__(self, "ys", _canon(self.ys))

    @property
    def size(self) -> int:
        return len(self.xs) + len(self.ys)

    def __len__(self):
        return self.size

    def __bool__(self):
        return self.size > 0

    def __contains__(self, v) -> bool:
        side, index = v
        return index in (self.xs if side == "x" else self.ys)

    def support(self) -> frozenset:
        return frozenset(NeuronId("x", i) for i in self.xs) | frozenset(
            NeuronId("y", i) for i in self.ys
        )

    def neurons(self) -> list:
        """Members in canonical neuron order (all x's, then all y's)."""
        return [NeuronId("x", i) for i in self.xs] + [NeuronId("y", i) for i in self.ys]

    def issubset(self, other: "MatchPair") -> bool:
        return set(self.xs) <= set(other.xs) and set(self.ys) <= set(other.ys)

    def is_proper_subset(self, other: "MatchPair") -> bool:
        return self.issubset(other) and self != other

    def union(self, other: "MatchPair") -> "MatchPair":
        return MatchPair(self.xs + other.xs, self.ys + other.ys)

    def intersection(self, other: "MatchPair") -> "MatchPair":
        return MatchPair(set(self.xs) & set(other.xs), set(self.ys) & set(other.ys))

    def without(self, v) -> "MatchPair":
        side, index = v
        if side == "x":
            return MatchPair([i for i in self.xs if i != index], self.ys)
        return MatchPair(self.xs, [i for i in self.ys if i != index])

    def to_dict(self) -> dict:
        return {"x": list(self.xs), "y": list(self.ys)}

    def __str__(self):
        return "({%s}, {%s})" % (
            ", ".join(f"x{i}" for i in self.xs),
            ", ".join(f"y{i}" for i in self.ys),
        )


EMPTY = MatchPair()


def sort_key(pair: MatchPair):
    return (pair.size, pair.xs, pair.ys)


def sorted_pairs(pairs: Iterable[MatchPair]) -> list:
    return sorted(pairs, key=sort_key)


@dataclass(frozen=True)
class NotInMaximumMatch:
    """Returned by :func:`min_match` when ``neuron`` belongs to no match."""

    neuron: NeuronId

    def __bool__(self):
        return False


class _LRU:
    """Small thread-safe LRU map used for per-problem memoisation."""

    def __init__(self, maxsize):
        self.maxsize = maxsize
        self._data = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            try:
                self._data.move_to_end(key)
                return self._data[key]
            except KeyError:
                return None

    def put(self, key, value):
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)


@dataclass(frozen=True, eq=False)
class MatchProblem:
    """Two activation matrices over the same inputs plus a tolerance.

    Row ``i`` of ``x`` is neuron ``x:i``. ``epsilon`` must lie in [0, 1).
    """

    x: np.ndarray
    y: np.ndarray
    epsilon: float = 0.0
    policy: NumericPolicy = DEFAULT_POLICY
    _cache: _LRU = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        x = as_activation_matrix(self.x, "x activations")
        y = as_activation_matrix(self.y, "y activations")
        if x.shape[1] != y.shape[1]:
            raise DimensionMismatchError(
                f"x and y activations have different input counts: {x.shape[1]} vs {y.shape[1]}"
            )
        eps = float(self.epsilon)
        if not 0.0 <= eps < 1.0:
            raise InvalidInputError(f"epsilon must lie in [0, 1), got {eps}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "epsilon", eps)
        norms = {}
        for side, arr in (("x", x), ("y", y)):
            n = np.linalg.norm(arr, axis=1)
            n.setflags(write=False)
            norms[side] = n
            zero = np.flatnonzero(n == 0.0)
            if zero.size and self.policy.zero_vector_policy != "keep":
                raise DegenerateNeuronError(
                    f"{side} row {int(zero[0])} is a zero activation vector "
                    f"(zero_vector_policy={self.policy.zero_vector_policy!r}; "
                    "use 'drop' at load time or 'keep')",
                    side=side,
                    index=int(zero[0]),
                )
        object.__setattr__(self, "_norms", norms)
        object.__setattr__(self, "_cache", _LRU(8192))

    @property
    def n_x(self) -> int:
        return self.x.shape[0]

    @property
    def n_y(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def threshold(self) -> float:
        return self.policy.threshold(self.epsilon)

    def with_epsilon(self, epsilon: float) -> "MatchProblem":
        return MatchProblem(self.x, self.y, epsilon, self.policy)

    def full(self) -> MatchPair:
        return MatchPair(range(self.n_x), range(self.n_y))

    def rows(self, side: str) -> np.ndarray:
        return self.x if side == "x" else self.y

    def check_neuron(self, v) -> NeuronId:
        v = NeuronId(*v)
        if v.side not in SIDES:
            raise InvalidInputError(f"unknown side {v.side!r}")
        n = self.n_x if v.side == "x" else self.n_y
        if not 0 <= v.index < n:
            raise InvalidInputError(f"neuron {v} out of range (side has {n} neurons)")
        return v

    def basis(self, side: str, indices: tuple) -> OrthonormalBasis:
        key = ("basis", side, indices)
        hit = self._cache.get(key)
        if hit is None:
            rows = self.rows(side)[list(indices)] if indices else np.zeros((0, self.d))
            hit = orthonormal_basis(rows, self.policy, dim=self.d)
            self._cache.put(key, hit)
        return hit

    def residuals_against(self, side: str, indices: tuple) -> np.ndarray:
        """Relative residuals of every row of the *other* side against
        ``span(rows(side)[indices])``."""
        key = ("resid", side, indices)
        hit = self._cache.get(key)
        if hit is None:
            other = "y" if side == "x" else "x"
            hit = relative_residuals(self.rows(other), self._norms[other], self.basis(side, indices))
            hit.setflags(write=False)
            self._cache.put(key, hit)
        return hit


def _validate_pair(problem: MatchProblem, pair: MatchPair):
    if pair.xs and not (0 <= pair.xs[0] and pair.xs[-1] < problem.n_x):
        raise InvalidInputError(f"x indices {pair.xs} out of range for {problem.n_x} neurons")
    if pair.ys and not (0 <= pair.ys[0] and pair.ys[-1] < problem.n_y):
        raise InvalidInputError(f"y indices {pair.ys} out of range for {problem.n_y} neurons")


def _is_match(problem: MatchProblem, xs: tuple, ys: tuple) -> bool:
    thr = problem.threshold
    if xs and not np.all(problem.residuals_against("y", ys)[list(xs)] <= thr):
        return False
    if ys and not np.all(problem.residuals_against("x", xs)[list(ys)] <= thr):
        return False
    return True


def is_match(problem: MatchProblem, pair: MatchPair) -> bool:
    _validate_pair(problem, pair)
    return _is_match(problem, pair.xs, pair.ys)


def match_union(a: MatchPair, b: MatchPair) -> MatchPair:
    return a.union(b)


def _max_match(problem: MatchProblem, xs: tuple, ys: tuple) -> MatchPair:
    # Alternating deletion to the fixed point; all failing neurons of one side
    # are removed before the other side's basis is recomputed.
    thr = problem.threshold
    while True:
        changed = False
        if xs:
            r = problem.residuals_against("y", ys)
            keep = tuple(i for i in xs if r[i] <= thr)
            if len(keep) != len(xs):
                xs, changed = keep, True
        if ys:
            r = problem.residuals_against("x", xs)
            keep = tuple(j for j in ys if r[j] <= thr)
            if len(keep) != len(ys):
                ys, changed = keep, True
        if not changed:
            return MatchPair(xs, ys)


def max_match(problem: MatchProblem) -> MatchPair:
    """The unique maximum match: the union of every match in the problem."""
    return _max_match(problem, tuple(range(problem.n_x)), tuple(range(problem.n_y)))


def _check_order(pair: MatchPair, order: str, rng) -> list:
    members = pair.neurons()
    if order == "asc":
        return members
    if order == "shuffle":
        return [members[i] for i in rng.permutation(len(members))]
    raise InvalidInputError(f"order must be 'asc' or 'shuffle', got {order!r}")


def _min_match(problem, v, xs, ys, order="asc", rng=None):
    current = _max_match(problem, xs, ys)
    if v not in current:
        return NotInMaximumMatch(v)
    # Candidates only ever leave the current pair, so one ordering of the
    # initial members fixes the pick sequence.
    for u in _check_order(current, order, rng):
        if u == v or u not in current:
            continue
        trial = current.without(u)
        sub = _max_match(problem, trial.xs, trial.ys)
        if v in sub:
            current = sub
    return current


def _make_rng(order, seed):
    if order != "shuffle":
        return None
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def min_match(problem: MatchProblem, v, order: str = "asc", seed=None):
    """One v-minimal match, or :class:`NotInMaximumMatch`.

    ``order`` picks the sequence in which candidate removals are tried:
    ``"asc"`` is canonical neuron order (x's then y's by index), ``"shuffle"``
    a permutation drawn from ``seed``.
    """
    v = problem.check_neuron(v)
    return _min_match(
        problem, v, tuple(range(problem.n_x)), tuple(range(problem.n_y)),
        order, _make_rng(order, seed),
    )


class BudgetExhausted(UserWarning):
    """all_min_match stopped at its budget; more v-minimal matches may exist."""


def all_min_match(problem: MatchProblem, v, budget: int | None = None) -> frozenset:
    """Every v-minimal match of ``v``; empty when ``v`` is in no match.

    Each new match is searched for after deleting one neuron from every match
    already found, so it must differ from all of them. Deletion choices are
    explored depth-first in canonical order over the found matches' supports;
    a found match already hit by an earlier choice adds nothing, and a branch
    is cut as soon as ``v`` leaves the restricted maximum match (deleting more
    can only shrink it). ``budget`` caps the number of matches returned and
    emits :class:`BudgetExhausted` when reached.
    """
    v = problem.check_neuron(v)
    if budget is not None and budget < 1:
        raise InvalidInputError("budget must be >= 1")
    all_x = tuple(range(problem.n_x))
    all_y = tuple(range(problem.n_y))
    found: list[MatchPair] = []
    supports: list[list] = []
    alive: dict = {}
    leaves: dict = {}

    def restricted(deleted):
        xs = tuple(i for i in all_x if ("x", i) not in deleted)
        ys = tuple(j for j in all_y if ("y", j) not in deleted)
        return xs, ys

    def feasible(deleted):
        if deleted not in alive:
            alive[deleted] = v in _max_match(problem, *restricted(deleted))
        return alive[deleted]

    def search(i, deleted, seen):
        if (i, deleted) in seen or not feasible(deleted):
            return None
        seen.add((i, deleted))
        if i == len(found):
            if deleted not in leaves:
                leaves[deleted] = _min_match(problem, v, *restricted(deleted))
            result = leaves[deleted]
            return result if result and result not in found else None
        if not deleted.isdisjoint(supports[i]):
            return search(i + 1, deleted, seen)
        for u in supports[i]:
            if u != v:
                hit = search(i + 1, deleted | {u}, seen)
                if hit is not None:
                    return hit
        return None

    while True:
        if budget is not None and len(found) >= budget:
            warnings.warn(
                f"all_min_match budget of {budget} reached for {v}; enumeration stopped",
                BudgetExhausted,
                stacklevel=2,
            )
            break
        new = search(0, frozenset(), set())
        if new is None:
            break
        found.append(new)
        supports.append(new.neurons())
    return frozenset(found)


@dataclass(frozen=True)
class SimpleMatchReport:
    matches: frozenset
    per_neuron_counts: dict
    exhaustive: bool

    def sorted_matches(self) -> list:
        return sorted_pairs(self.matches)

    def size_histogram(self) -> dict:
        return size_histogram(self.matches)


def size_histogram(pairs) -> dict:
    hist: dict = {}
    for m in pairs:
        hist[m.size] = hist.get(m.size, 0) + 1
    return dict(sorted(hist.items()))


def _map_neurons(fn, neurons, workers):
    if workers is None or workers <= 1 or len(neurons) <= 1:
        return [fn(v) for v in neurons]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, neurons))


def simple_matches(problem: MatchProblem, workers: int | None = None, budget: int | None = None) -> SimpleMatchReport:
    """All simple matches, as the union of v-minimal matches over both sides."""
    neurons = max_match(problem).neurons()
    results = _map_neurons(lambda v: all_min_match(problem, v, budget), neurons, workers)
    counts = {v: len(r) for v, r in zip(neurons, results)}
    matches = frozenset().union(*results) if results else frozenset()
    return SimpleMatchReport(matches, counts, exhaustive=True)


def _derived_rng(seed: int, v: NeuronId, iteration: int):
    side = SIDES.index(v.side)
    return np.random.default_rng(np.random.SeedSequence([int(seed), side, v.index, iteration]))


def sampled_simple_matches(problem: MatchProblem, iterations: int, seed: int = 0, workers: int | None = None) -> SimpleMatchReport:
    """Randomised simple-match sampling: ``iterations`` shuffled
    :func:`min_match` runs per neuron of the maximum match."""
    if iterations < 1:
        raise InvalidInputError("iterations must be >= 1")
    top = max_match(problem)
    neurons = top.neurons()
    all_x = tuple(range(problem.n_x))
    all_y = tuple(range(problem.n_y))

    def sample(v):
        found = set()
        for it in range(iterations):
            found.add(_min_match(problem, v, all_x, all_y, "shuffle", _derived_rng(seed, v, it)))
        return frozenset(found)

    results = _map_neurons(sample, neurons, workers)
    counts = {v: len(r) for v, r in zip(neurons, results)}
    matches = frozenset().union(*results) if results else frozenset()
    return SimpleMatchReport(matches, counts, exhaustive=False)


def similarity(problem: MatchProblem) -> float:
    """Maximum matching similarity ``(|X*| + |Y*|) / (|X| + |Y|)``."""
    total = problem.n_x + problem.n_y
    if total == 0:
        raise InvalidInputError("similarity is undefined when both networks are empty")
    return max_match(problem).size / total


def similarity_sweep(instance, epsilons, policy: NumericPolicy | None = None) -> list:
    """``[(eps, similarity), ...]`` for each ``eps``.

    ``instance`` is anything with ``x`` and ``y`` activation matrices (an
    :class:`~smatch.instances.Instance` or a :class:`MatchProblem`).
    """
    if policy is None:
        policy = getattr(instance, "policy", DEFAULT_POLICY)
    curve = []
    for eps in epsilons:
        problem = MatchProblem(instance.x, instance.y, eps, policy)
        curve.append((float(eps), similarity(problem)))
    return curve
