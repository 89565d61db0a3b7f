"""Deterministic instance generators: the worked examples and adversarial
constructions, plus seeded random families for property tests."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, InvalidInputError
from .geometry import DEFAULT_POLICY, NumericPolicy, as_activation_matrix
from .matching import MatchProblem

KINDS = ("identical", "rotated", "appendix_c1", "appendix_c2", "remark_a1", "hadamard", "random_gaussian")

_MAX_RETRIES = 16
_MAX_COND = 1e6


@dataclass(frozen=True, eq=False)
class Instance:
    """A pair of activation matrices without a tolerance attached."""

    x: np.ndarray
    y: np.ndarray
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "x", as_activation_matrix(self.x, "x activations"))
        object.__setattr__(self, "y", as_activation_matrix(self.y, "y activations"))

    def problem(self, epsilon: float, policy: NumericPolicy = DEFAULT_POLICY) -> MatchProblem:
        return MatchProblem(self.x, self.y, epsilon, policy)


def _is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


def hadamard_matrix(n: int) -> np.ndarray:
    """Skew block recursion ``A_2m = [[A_m, A_m], [-A_m^T, A_m^T]]`` from ``A_1 = [1]``.

    The result satisfies ``A A^T = n I`` and ``A + A^T = 2 I``.
    """
    if not _is_power_of_two(n):
        raise InvalidInputError(f"n must be a power of 2, got {n}")
    a = np.ones((1, 1), dtype=np.int64)
    while a.shape[0] < n:
        a = np.block([[a, a], [-a.T, a.T]])
    return a


def gen_hadamard(n: int, epsilon0: float, d: int | None = None) -> Instance:
    """Orthonormal instance with ``C(n, ceil(n/2))`` simple matches at ``epsilon0``.

    x_i is the i-th standard basis vector; y_i mixes x_i with the i-th
    Hadamard column so that ``(X_S, Y_S)`` is a match iff ``|S| >= n/2``.
    Extra columns (``d > n``) are zero padding.
    """
    if not _is_power_of_two(n):
        raise InvalidInputError(f"n must be a power of 2, got {n}")
    if not 0.0 < epsilon0 < 1.0 / 3.0:
        raise InvalidInputError(f"epsilon0 must lie in (0, 1/3), got {epsilon0}")
    d = n if d is None else d
    if d < n:
        raise InvalidInputError(f"d must be >= n, got d={d}, n={n}")
    a = hadamard_matrix(n).astype(np.float64)
    delta = np.sqrt(2.0 * epsilon0**2 / n)
    diag = np.sqrt(1.0 - (n - 1) * delta**2)
    zx = np.eye(n)
    w = a.T  # row i is the i-th column of A
    zy = (diag - delta) * zx + delta * w

    tol = 1e-12
    gram = zy @ zy.T
    cross = zx @ zy.T
    if not np.allclose(np.diag(gram), 1.0, rtol=0, atol=tol):
        raise InvalidInputError("hadamard construction: |z_y| != 1")
    if not np.allclose(gram - np.diag(np.diag(gram)), 0.0, rtol=0, atol=tol):
        raise InvalidInputError("hadamard construction: y vectors not orthogonal")
    if not np.allclose(np.diag(cross), diag, rtol=0, atol=tol):
        raise InvalidInputError("hadamard construction: bad diagonal dot products")
    off = np.abs(cross[~np.eye(n, dtype=bool)])
    if not np.allclose(off, delta, rtol=0, atol=tol):
        raise InvalidInputError("hadamard construction: cross dot products != +-delta")

    pad = np.zeros((n, d - n))
    return Instance(
        np.hstack([zx, pad]), np.hstack([zy, pad]), "hadamard",
        {"n": n, "d": d, "epsilon0": epsilon0, "delta": float(delta)},
    )


def gen_appendix_c1() -> Instance:
    """Two nested simple matches; their difference is not a match."""
    return Instance([[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 1.0]], "appendix_c1")


def gen_appendix_c2() -> Instance:
    """A full match with two different decompositions into simple matches."""
    return Instance(
        [[0.0, 1.0], [1.0, 1.0], [1.0, -1.0]],
        [[1.0, 0.0], [1.0, 1.0], [1.0, -1.0]],
        "appendix_c2",
    )


def gen_remark_a1(epsilon0: float) -> Instance:
    """The y-side extra vector sits exactly ``epsilon0`` away from span(X)."""
    if not 0.0 < epsilon0 < 1.0:
        raise InvalidInputError(f"epsilon0 must lie in (0, 1), got {epsilon0}")
    h = np.sqrt(0.5)
    zx = [[h, h, 0.0], [h, -h, 0.0]]
    zy = zx + [[np.sqrt(1.0 - epsilon0**2), 0.0, epsilon0]]
    return Instance(zx, zy, "remark_a1", {"epsilon0": epsilon0})


def _independent_gaussian(rng, n, d) -> np.ndarray:
    for _ in range(_MAX_RETRIES):
        m = rng.standard_normal((n, d))
        if n == 0:
            return m
        s = np.linalg.svd(m, compute_uv=False)
        if s[-1] > 0 and s[0] / s[-1] < _MAX_COND:
            return m
    raise GenerationError(f"no well-conditioned {n}x{d} matrix after {_MAX_RETRIES} draws")


def _check_n_le_d(n, d):
    if n < 0 or d < 1:
        raise InvalidInputError(f"need n >= 0 and d >= 1, got n={n}, d={d}")
    if n > d:
        raise InvalidInputError(f"independent rows need n <= d, got n={n}, d={d}")


def gen_identical(n: int, d: int, seed: int = 0) -> Instance:
    _check_n_le_d(n, d)
    m = _independent_gaussian(np.random.default_rng(seed), n, d)
    return Instance(m, m.copy(), "identical", {"n": n, "d": d, "seed": seed})


def gen_rotated(n: int, d: int, seed: int = 0) -> Instance:
    """Y rows are a random invertible recombination of the X rows."""
    _check_n_le_d(n, d)
    rng = np.random.default_rng(seed)
    x = _independent_gaussian(rng, n, d)
    mix = _independent_gaussian(rng, n, n)
    return Instance(x, mix @ x, "rotated", {"n": n, "d": d, "seed": seed})


def gen_random_gaussian(n_x: int, n_y: int, d: int, seed: int = 0) -> Instance:
    if n_x < 0 or n_y < 0 or d < 1:
        raise InvalidInputError(f"bad sizes n_x={n_x}, n_y={n_y}, d={d}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_x, d))
    y = rng.standard_normal((n_y, d))
    if np.any(np.linalg.norm(x, axis=1) == 0) or np.any(np.linalg.norm(y, axis=1) == 0):
        raise GenerationError("drew a zero row")
    return Instance(x, y, "random_gaussian", {"n_x": n_x, "n_y": n_y, "d": d, "seed": seed})


def generate(kind: str, n: int | None = None, d: int | None = None, epsilon0: float | None = None,
             seed: int = 0, n_x: int | None = None, n_y: int | None = None) -> Instance:
    """Dispatch on ``kind``; used by the ``gen`` subcommand."""
    def need(name, value):
        if value is None:
            raise InvalidInputError(f"kind {kind!r} requires --{name.replace('_', '-')}")
        return value

    if kind == "identical":
        n = need("n", n)
        return gen_identical(n, d if d is not None else n, seed)
    if kind == "rotated":
        n = need("n", n)
        return gen_rotated(n, d if d is not None else n, seed)
    if kind == "appendix_c1":
        return gen_appendix_c1()
    if kind == "appendix_c2":
        return gen_appendix_c2()
    if kind == "remark_a1":
        return gen_remark_a1(need("eps0", epsilon0))
    if kind == "hadamard":
        return gen_hadamard(need("n", n), need("eps0", epsilon0), d)
    if kind == "random_gaussian":
        nx = n_x if n_x is not None else need("n", n)
        ny = n_y if n_y is not None else need("n", n)
        return gen_random_gaussian(nx, ny, need("d", d), seed)
    raise InvalidInputError(f"unknown instance kind {kind!r}; expected one of {KINDS}")
