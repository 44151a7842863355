"""Primitives for l0-penalized minimization: the hard-thresholding prox,
support and threshold index sets, and the subspace stationarity residual.

All functions here are pure and operate on plain 1-D float64 arrays.
Index sets are 1-based on the outside (math convention) and carry their
ambient dimension so complements are well defined.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "InvalidInputError",
    "DimensionMismatchError",
    "IndexSet",
    "ThresholdParams",
    "as_vector",
    "hard_threshold",
    "support",
    "threshold_set",
    "stationarity_residual",
    "is_tau_stationary",
]


class InvalidInputError(ValueError):
    """A vector argument is malformed (wrong shape, NaN or Inf entries)."""


class DimensionMismatchError(ValueError):
    """Two arguments that must share a dimension do not."""


def as_vector(values, name: str = "x") -> np.ndarray:
    """Coerce to a finite 1-D float64 array, raising ``InvalidInputError``
    on NaN/Inf or wrong dimensionality."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def _check_same_dim(x: np.ndarray, g: np.ndarray) -> None:
    if x.shape[0] != g.shape[0]:
        raise DimensionMismatchError(
            f"dimension mismatch: {x.shape[0]} vs {g.shape[0]}"
        )


class IndexSet:
    """A sorted, duplicate-free subset of {1, ..., ambient_n}.

    Stored internally as a 0-based integer array for numpy indexing;
    the public ``indices`` attribute is 1-based.
    """

    __slots__ = ("_idx0", "ambient_n")

    def __init__(self, indices, ambient_n: int):
        if ambient_n < 1:
            raise InvalidInputError("ambient_n must be a positive integer")
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1:
            raise InvalidInputError("indices must be one-dimensional")
        if idx.size:
            if idx.min() < 1 or idx.max() > ambient_n:
                raise InvalidInputError("indices must lie in [1, ambient_n]")
            if np.any(np.diff(idx) <= 0):
                idx = np.unique(idx)
        self._idx0 = idx - 1
        self.ambient_n = int(ambient_n)

    @classmethod
    def _from_zero_based(cls, idx0: np.ndarray, ambient_n: int) -> "IndexSet":
        obj = cls.__new__(cls)
        obj._idx0 = np.asarray(idx0, dtype=np.int64)
        obj.ambient_n = int(ambient_n)
        return obj

    @classmethod
    def from_mask(cls, mask) -> "IndexSet":
        mask = np.asarray(mask, dtype=bool)
        return cls._from_zero_based(np.flatnonzero(mask), mask.shape[0])

    @classmethod
    def empty(cls, ambient_n: int) -> "IndexSet":
        return cls._from_zero_based(np.empty(0, dtype=np.int64), ambient_n)

    @classmethod
    def full(cls, ambient_n: int) -> "IndexSet":
        return cls._from_zero_based(np.arange(ambient_n, dtype=np.int64), ambient_n)

    @property
    def indices(self) -> np.ndarray:
        """1-based member indices, strictly increasing."""
        return self._idx0 + 1

    @property
    def zero_based(self) -> np.ndarray:
        """0-based member indices for array slicing."""
        return self._idx0

    def to_mask(self) -> np.ndarray:
        mask = np.zeros(self.ambient_n, dtype=bool)
        mask[self._idx0] = True
        return mask

    def complement(self) -> "IndexSet":
        return IndexSet.from_mask(~self.to_mask())

    def difference(self, other: "IndexSet") -> "IndexSet":
        self._check_ambient(other)
        idx0 = np.setdiff1d(self._idx0, other._idx0, assume_unique=True)
        return IndexSet._from_zero_based(idx0, self.ambient_n)

    def union(self, other: "IndexSet") -> "IndexSet":
        self._check_ambient(other)
        return IndexSet._from_zero_based(
            np.union1d(self._idx0, other._idx0), self.ambient_n
        )

    def _check_ambient(self, other: "IndexSet") -> None:
        if self.ambient_n != other.ambient_n:
            raise DimensionMismatchError(
                f"ambient dimensions differ: {self.ambient_n} vs {other.ambient_n}"
            )

    def __len__(self) -> int:
        return self._idx0.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, IndexSet):
            return NotImplemented
        return self.ambient_n == other.ambient_n and np.array_equal(
            self._idx0, other._idx0
        )

    def __contains__(self, index: int) -> bool:
        return bool(np.isin(index - 1, self._idx0))

    def __repr__(self) -> str:
        return f"IndexSet({self.indices.tolist()}, ambient_n={self.ambient_n})"


@dataclass(frozen=True)
class ThresholdParams:
    """Step scale ``tau`` and penalty weight ``lam`` of the l0 prox.

    The induced hard threshold is sqrt(2 * tau * lam): entries of
    magnitude below it are pruned, entries at or above it survive.
    """

    tau: float
    lam: float

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise InvalidInputError(f"tau must be positive and finite, got {self.tau}")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise InvalidInputError(f"lam must be positive and finite, got {self.lam}")

    @property
    def threshold(self) -> float:
        return float(np.sqrt(2.0 * self.tau * self.lam))


def hard_threshold(z, params: ThresholdParams) -> np.ndarray:
    """Prox of tau*lam*||.||_0: zero every entry with |z_i| below the
    threshold, keep the rest.

    On the exact tie |z_i| == sqrt(2*tau*lam) both branches attain the
    same prox objective; the kept branch is chosen so that the prox
    support agrees with ``threshold_set``.
    """
    z = as_vector(z, "z")
    return np.where(np.abs(z) >= params.threshold, z, 0.0)


def support(x) -> IndexSet:
    """Exact nonzero pattern of ``x`` (no tolerance; subnormals count)."""
    x = as_vector(x, "x")
    return IndexSet.from_mask(x != 0)


def threshold_set(x, g, params: ThresholdParams) -> IndexSet:
    """Indices where the gradient step x - tau*g survives hard
    thresholding, ties included."""
    x = as_vector(x, "x")
    g = as_vector(g, "g")
    _check_same_dim(x, g)
    mask = np.abs(x - params.tau * g) >= params.threshold
    return IndexSet.from_mask(mask)


def stationarity_residual(x, g, t_set: IndexSet):
    """Stacked residual [g restricted to T; x restricted to the
    complement] and its Euclidean norm.

    Both blocks are ordered by ascending index, so the output is
    reproducible for serialization; only the norm matters to the solver.
    """
    x = as_vector(x, "x")
    g = as_vector(g, "g")
    _check_same_dim(x, g)
    if t_set.ambient_n != x.shape[0]:
        raise DimensionMismatchError(
            f"index set ambient_n {t_set.ambient_n} does not match vector length {x.shape[0]}"
        )
    residual = np.concatenate([g[t_set.zero_based], x[t_set.complement().zero_based]])
    return residual, float(np.linalg.norm(residual))


def is_tau_stationary(x, g, params: ThresholdParams, tol: float = 0.0) -> bool:
    """Fixed-point test for the hard-thresholded gradient step.

    On the support: the gradient must vanish (within ``tol``) and the
    entry must clear the threshold. Off the support: the gradient must
    satisfy |g_i| <= threshold / tau (within ``tol``).
    """
    x = as_vector(x, "x")
    g = as_vector(g, "g")
    _check_same_dim(x, g)
    if tol < 0:
        raise InvalidInputError("tol must be nonnegative")
    thr = params.threshold
    on = x != 0
    if np.any(np.abs(g[on]) > tol):
        return False
    if np.any(np.abs(x[on]) < thr - tol):
        return False
    off = ~on
    return bool(np.all(np.abs(g[off]) <= thr / params.tau + tol))
