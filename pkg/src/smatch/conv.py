"""Column subsampling for convolutional-layer activations.

A conv neuron's activation vector concatenates its flattened ``h x w`` feature
map over ``images`` inputs, so rows have length ``h * w * images``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import as_activation_matrix


@dataclass(frozen=True, eq=False)
class ConvTensor:
    values: np.ndarray
    height: int
    width: int
    images: int

    def __post_init__(self):
        if min(self.height, self.width, self.images) < 1:
            raise InvalidInputError("conv layout dimensions must be >= 1")
        arr = as_activation_matrix(self.values, "conv activations")
        expected = self.height * self.width * self.images
        if arr.shape[1] != expected:
            raise InvalidInputError(
                f"conv rows have length {arr.shape[1]}, expected h*w*images = {expected}"
            )
        object.__setattr__(self, "values", arr)

    @property
    def columns(self) -> int:
        return self.values.shape[1]


def sample_columns(n_columns: int, target_d: int, repeats: int, seed: int) -> list:
    """``repeats`` seeded column choices of size ``target_d`` without replacement."""
    if repeats < 1:
        raise InvalidInputError("repeats must be >= 1")
    if not 1 <= target_d <= n_columns:
        raise InvalidInputError(f"target_d must lie in [1, {n_columns}], got {target_d}")
    children = np.random.SeedSequence(int(seed)).spawn(repeats)
    return [np.random.default_rng(c).permutation(n_columns)[:target_d] for c in children]


def conv_sample(tensor: ConvTensor, target_d: int, repeats: int = 1, seed: int = 0) -> list:
    """Subsampled activation matrices, one per repeat.

    Calling this with the same ``seed`` on two tensors of the same layout
    selects identical columns, which is how paired sampling is done.
    """
    cols = sample_columns(tensor.columns, target_d, repeats, seed)
    return [tensor.values[:, c] for c in cols]


def conv_sample_pair(x: ConvTensor, y: ConvTensor, target_d: int, repeats: int = 1, seed: int = 0) -> list:
    """Paired sampling: both sides see the same input coordinates per repeat."""
    if (x.height, x.width, x.images) != (y.height, y.width, y.images):
        raise InvalidInputError("paired conv sampling needs identical layouts")
    cols = sample_columns(x.columns, target_d, repeats, seed)
    return [(x.values[:, c], y.values[:, c]) for c in cols]
