"""Subspace primitives: orthonormal bases, residuals to spans, principal angles.

Activation matrices are plain 2-D ``float64`` numpy arrays, one neuron per row.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateNeuronError, DimensionMismatchError, InvalidInputError

ZERO_POLICIES = ("reject", "drop", "keep")


@dataclass(frozen=True)
class NumericPolicy:
    """Numerical knobs shared by every computation on a problem.

    Parameters
    ----------
    rank_tol_factor : float
        Singular values at or below ``rank_tol_factor * s_max * max(N, d)``
        are treated as zero.
    boundary_slack : float
        Match thresholds are ``epsilon * (1 + boundary_slack)``.
    zero_vector_policy : {"reject", "drop", "keep"}
        What to do with all-zero activation vectors.
    residual_floor : float
        Relative residuals at or below this value count as exact zeros, so
        that ``epsilon = 0`` is usable in floating point.
    """

    rank_tol_factor: float = 1e-12
    boundary_slack: float = 0.0
    zero_vector_policy: str = "reject"
    residual_floor: float = 1e-10

    def __post_init__(self):
        if not self.rank_tol_factor >= 0:
            raise InvalidInputError("rank_tol_factor must be >= 0")
        if not self.boundary_slack >= 0:
            raise InvalidInputError("boundary_slack must be >= 0")
        if not self.residual_floor >= 0:
            raise InvalidInputError("residual_floor must be >= 0")
        if self.zero_vector_policy not in ZERO_POLICIES:
            raise InvalidInputError(
                f"zero_vector_policy must be one of {ZERO_POLICIES}, "
                f"got {self.zero_vector_policy!r}"
            )

    def threshold(self, epsilon: float) -> float:
        """Largest relative residual accepted as a match at ``epsilon``."""
        return max(epsilon * (1.0 + self.boundary_slack), self.residual_floor)

    def as_dict(self) -> dict:
        return {
            "rank_tol_factor": self.rank_tol_factor,
            "boundary_slack": self.boundary_slack,
            "zero_vector_policy": self.zero_vector_policy,
            "residual_floor": self.residual_floor,
        }


DEFAULT_POLICY = NumericPolicy()


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Orthonormal rows spanning a subspace of R^dim; rank 0 is {0}."""

    dim: int
    basis: np.ndarray  # shape (rank, dim)

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    def project(self, z: np.ndarray) -> np.ndarray:
        return (z @ self.basis.T) @ self.basis


def as_activation_matrix(values, name: str = "activations") -> np.ndarray:
    """Validate and return a read-only 2-D float64 copy of ``values``."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0:
        raise InvalidInputError(f"{name}: need at least one column")
    if arr.ndim != 2:
        raise InvalidInputError(f"{name}: expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.shape[1] < 1:
        raise InvalidInputError(f"{name}: need at least one column")
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr))[0, 0])
        raise InvalidInputError(f"{name}: non-finite entry in row {bad}")
    arr.setflags(write=False)
    return arr


def _as_vectors(vectors, dim=None) -> np.ndarray:
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.size == 0:
        return np.zeros((0, dim or (arr.shape[-1] if arr.ndim == 2 else 0)))
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InvalidInputError("vectors must form a 2-D array")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("vectors contain non-finite entries")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatchError(f"vector length {arr.shape[1]} != dim {dim}")
    return arr


def orthonormal_basis(vectors, policy: NumericPolicy = DEFAULT_POLICY, dim=None) -> OrthonormalBasis:
    """Orthonormal basis of ``span(vectors)`` via a truncated SVD.

    ``dim`` is only needed when ``vectors`` is empty and carries no shape.
    """
    arr = _as_vectors(vectors, dim)
    n, d = arr.shape
    if n == 0:
        return OrthonormalBasis(d, np.zeros((0, d)))
    _, s, vt = np.linalg.svd(arr, full_matrices=False)
    if s[0] == 0.0:
        return OrthonormalBasis(d, np.zeros((0, d)))
    cutoff = policy.rank_tol_factor * s[0] * max(n, d)
    rank = int(np.count_nonzero(s > cutoff))
    return OrthonormalBasis(d, np.ascontiguousarray(vt[:rank]))


def dist_to_span(z, basis: OrthonormalBasis) -> float:
    """Euclidean distance from ``z`` to the span of ``basis``."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] != basis.dim:
        raise DimensionMismatchError(
            f"vector of shape {z.shape} against basis of dim {basis.dim}"
        )
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("vector contains non-finite entries")
    resid = z - basis.project(z)
    return float(min(np.linalg.norm(resid), np.linalg.norm(z)))


def relative_residual(z, basis: OrthonormalBasis, policy: NumericPolicy = DEFAULT_POLICY) -> float:
    z = np.asarray(z, dtype=np.float64)
    dist = dist_to_span(z, basis)
    norm = float(np.linalg.norm(z))
    if norm == 0.0:
        if policy.zero_vector_policy == "keep":
            return 0.0
        raise DegenerateNeuronError("zero activation vector has no relative residual")
    return dist / norm


def relative_residuals(rows: np.ndarray, norms: np.ndarray, basis: OrthonormalBasis) -> np.ndarray:
    """Row-wise ``dist(row, span)/|row|``; zero rows get 0.

    ``norms`` are the precomputed row norms. Callers enforce the zero-vector
    policy before reaching here.
    """
    if basis.rank == 0:
        dists = norms.copy()
    else:
        coeffs = rows @ basis.basis.T
        dists = np.linalg.norm(rows - coeffs @ basis.basis, axis=1)
        np.minimum(dists, norms, out=dists)
    out = np.zeros_like(dists)
    nz = norms > 0
    out[nz] = dists[nz] / norms[nz]
    return out


def subspace_angle(a: OrthonormalBasis, b: OrthonormalBasis) -> float:
    """Smallest principal angle between two non-trivial subspaces."""
    if a.rank == 0 or b.rank == 0:
        raise InvalidInputError("angle is undefined for the zero subspace")
    if a.dim != b.dim:
        raise DimensionMismatchError(f"ambient dims differ: {a.dim} vs {b.dim}")
    # Equal to arccos(largest cosine); the chord between the first principal
    # vectors keeps precision for nearly parallel subspaces.
    u, _, vt = np.linalg.svd(a.basis @ b.basis.T)
    pa = u[:, 0] @ a.basis
    pb = vt[0] @ b.basis
    if pa @ pb < 0:
        pb = -pb
    chord = np.linalg.norm(pa - pb)
    return float(np.clip(2.0 * np.arcsin(min(1.0, chord / 2.0)), 0.0, np.pi / 2))
