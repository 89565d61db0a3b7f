"""Brute-force ground truth for small instances.

Everything here enumerates subset lattices and is exponential by design; each
entry point carries a hard size limit and raises :class:`TooLargeError` above it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, TooLargeError
from .geometry import (
    DEFAULT_POLICY,
    NumericPolicy,
    as_activation_matrix,
    orthonormal_basis,
    subspace_angle,
)
from .matching import EMPTY, MatchPair, MatchProblem, NeuronId, is_match, sorted_pairs

ENUMERATION_LIMIT = 12
STABILITY_LIMIT = 10
INDEPENDENCE_LIMIT = 8
ANGLE_TOL = 1e-12


def _subsets(n):
    for r in range(n + 1):
        yield from itertools.combinations(range(n), r)


def enumerate_matches(problem: MatchProblem, limit: int = ENUMERATION_LIMIT) -> frozenset:
    """Every ``(X, Y)`` satisfying the match definition, ``(∅, ∅)`` included."""
    if problem.n_x + problem.n_y > limit:
        raise TooLargeError(
            f"enumeration over {problem.n_x}+{problem.n_y} neurons exceeds limit {limit}"
        )
    thr = problem.threshold
    # ok_x[Y] = mask of x rows within threshold of span(Y), and symmetrically.
    ok_x = {ys: problem.residuals_against("y", ys) <= thr for ys in _subsets(problem.n_y)}
    ok_y = {xs: problem.residuals_against("x", xs) <= thr for xs in _subsets(problem.n_x)}
    found = set()
    for xs, ymask in ok_y.items():
        for ys, xmask in ok_x.items():
            if all(xmask[i] for i in xs) and all(ymask[j] for j in ys):
                found.add(MatchPair(xs, ys))
    return frozenset(found)


def _strict_subs(m: MatchPair, all_matches):
    return [o for o in all_matches if o.is_proper_subset(m)]


def oracle_simple_matches(all_matches) -> frozenset:
    """Non-empty matches that are not the union of strictly smaller matches.

    The union of *all* strictly contained matches is the largest such union,
    so testing that single union is equivalent to testing every family.
    """
    simple = set()
    for m in all_matches:
        if not m:
            continue
        union = EMPTY
        for o in _strict_subs(m, all_matches):
            union = union.union(o)
        if union != m:
            simple.add(m)
    return frozenset(simple)


def oracle_v_minimal(all_matches, v) -> frozenset:
    v = NeuronId(*v)
    containing = [m for m in all_matches if v in m]
    return frozenset(
        m for m in containing if not any(o.is_proper_subset(m) for o in containing)
    )


def verify_decomposition(target: MatchPair, simples) -> bool:
    union = EMPTY
    for s in simples:
        if s.issubset(target):
            union = union.union(s)
    return union == target


@dataclass(frozen=True)
class OracleReport:
    all_matches: frozenset
    maximum: MatchPair
    simple: frozenset
    minimal_by_neuron: dict


def oracle_report(problem: MatchProblem, limit: int = ENUMERATION_LIMIT) -> OracleReport:
    matches = enumerate_matches(problem, limit)
    maximum = EMPTY
    for m in matches:
        maximum = maximum.union(m)
    minimal = {v: oracle_v_minimal(matches, v) for v in maximum.neurons()}
    return OracleReport(matches, maximum, oracle_simple_matches(matches), minimal)


def _disjoint_pairs(n):
    # Each neuron goes to part 1, part 2 or neither; both parts non-empty.
    for labels in itertools.product((0, 1, 2), repeat=n):
        a = tuple(i for i, l in enumerate(labels) if l == 1)
        b = tuple(i for i, l in enumerate(labels) if l == 2)
        if a and b and a < b:
            yield a, b


def min_disjoint_angle(vectors, policy: NumericPolicy = DEFAULT_POLICY, limit: int = INDEPENDENCE_LIMIT) -> float:
    """Smallest angle between spans of two disjoint non-empty row subsets.

    Returns ``pi/2`` for fewer than two rows and 0 if any row is zero.
    """
    arr = as_activation_matrix(vectors, "vectors")
    n = arr.shape[0]
    if n > limit:
        raise TooLargeError(f"strong-independence check over {n} vectors exceeds limit {limit}")
    if np.any(np.linalg.norm(arr, axis=1) == 0.0):
        return 0.0
    cache = {}

    def basis(idx):
        if idx not in cache:
            cache[idx] = orthonormal_basis(arr[list(idx)], policy)
        return cache[idx]

    best = np.pi / 2
    for a, b in _disjoint_pairs(n):
        best = min(best, subspace_angle(basis(a), basis(b)))
        if best == 0.0:
            break
    return best


def check_strong_independence(vectors, theta: float, limit: int = INDEPENDENCE_LIMIT,
                              policy: NumericPolicy = DEFAULT_POLICY) -> bool:
    if not 0.0 < theta <= np.pi / 2:
        raise InvalidInputError(f"theta must lie in (0, pi/2], got {theta}")
    arr = as_activation_matrix(vectors, "vectors")
    if np.any(np.linalg.norm(arr, axis=1) == 0.0):
        return False
    return min_disjoint_angle(arr, policy, limit) >= theta - ANGLE_TOL


def check_stability(problem: MatchProblem, lam: float, limit: int = STABILITY_LIMIT) -> bool:
    """No cross-side relative residual falls in the band ``(eps, lam * eps]``."""
    if not lam > 1.0:
        raise InvalidInputError(f"lambda must exceed 1, got {lam}")
    if problem.n_x > limit or problem.n_y > limit:
        raise TooLargeError(
            f"stability check over {problem.n_x}/{problem.n_y} neurons exceeds limit {limit}"
        )
    lo = problem.threshold
    hi = lam * problem.epsilon
    if hi <= lo:
        return True
    for side, n in (("y", problem.n_y), ("x", problem.n_x)):
        for idx in _subsets(n):
            r = problem.residuals_against(side, idx)
            if np.any((r > lo) & (r <= hi)):
                return False
    return True


def hadamard_structured_matches(problem: MatchProblem) -> frozenset:
    """Matches of a Hadamard-construction instance, restricted to diagonal
    pairs ``({x_i : i in S}, {y_i : i in S})``.

    Only valid for instances whose matches are known to be diagonal; the
    enumeration covers the 2^n index sets S instead of 4^n pairs.
    """
    if problem.n_x != problem.n_y:
        raise InvalidInputError("structured oracle needs equal side sizes")
    return frozenset(
        MatchPair(s, s) for s in _subsets(problem.n_x) if is_match(problem, MatchPair(s, s))
    )


def summarize(report: OracleReport) -> dict:
    return {
        "all_matches": [m.to_dict() for m in sorted_pairs(report.all_matches)],
        "maximum": report.maximum.to_dict(),
        "simple": [m.to_dict() for m in sorted_pairs(report.simple)],
        "minimal_by_neuron": {
            str(v): [m.to_dict() for m in sorted_pairs(ms)]
            for v, ms in sorted(report.minimal_by_neuron.items())
        },
    }
