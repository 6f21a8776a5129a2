"""Box domains, dense points and the coordinate-wise objective contract.

Indices are 0-based. A point is a plain 1-D float64 ``numpy`` array; helpers
here never mutate their inputs.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when a point, index or box violates its domain."""


def as_point(x, n: int | None = None) -> np.ndarray:
    arr = np.array(x, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"point must be 1-D, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise DomainError(f"point has length {arr.shape[0]}, expected {n}")
    return arr


def check_index(i: int, n: int) -> int:
    if not 0 <= int(i) < n:
        raise DomainError(f"index {i} out of range for ground set of size {n}")
    return int(i)


@dataclass(frozen=True)
class GroundSet:
    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise DomainError(f"ground set needs n >= 1, got {self.n}")

    def check(self, i: int) -> int:
        return check_index(i, self.n)


@dataclass(frozen=True, eq=False)
class BoxDomain:
    """The box ``[lower, upper]``; coordinate-wise ``lower <= upper``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_point(self.lower)
        hi = as_point(self.upper, lo.shape[0])
        if lo.shape[0] < 1:
            raise DomainError("box must have at least one coordinate")
        if np.any(lo > hi):
            bad = int(np.argmax(lo > hi))
            raise DomainError(f"lower[{bad}]={lo[bad]} exceeds upper[{bad}]={hi[bad]}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, n: int) -> "BoxDomain":
        return cls(np.zeros(n), np.ones(n))

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == self.lower.shape and bool(
            np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol)
        )

    def check(self, x) -> np.ndarray:
        x = as_point(x, self.n)
        if not self.contains(x):
            raise DomainError(f"point {x.tolist()} lies outside the box")
        return x

    def __eq__(self, other):
        return (
            isinstance(other, BoxDomain)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    __hash__ = None


def coordinate_replace(x, i: int, k: float) -> np.ndarray:
    """Return a copy of ``x`` with entry ``i`` set to ``k``."""
    out = as_point(x)
    out[check_index(i, out.shape[0])] = k
    return out


def lattice_ops(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate-wise (join, meet) of two points."""
    x = as_point(x)
    y = as_point(y)
    if x.shape != y.shape:
        raise DomainError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    return np.maximum(x, y), np.minimum(x, y)


class DrObjective(ABC):
    """A function on a box that can be maximized one coordinate at a time.

    ``coord_max(i, x)`` returns ``(u, gain)`` where ``u`` is within
    ``delta / n`` of the best value of coordinate ``i`` with the rest of ``x``
    held fixed, and ``gain = value(x with i <- u) - value(x)``.
    """

    #: additive error of the 1-D solver summed over n coordinates
    delta: float = 0.0

    @property
    @abstractmethod
    def domain(self) -> BoxDomain: ...

    @property
    def n(self) -> int:
        return self.domain.n

    @abstractmethod
    def value(self, x) -> float: ...

    @abstractmethod
    def coord_max(self, i: int, x) -> tuple[float, float]: ...
