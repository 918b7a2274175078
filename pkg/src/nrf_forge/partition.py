"""Network area partitioning, selection matrices and communication sets.

Index sets are contiguous, ascending and cover the global index range
exactly; plants whose natural ordering interleaves areas must be permuted
before entering the toolkit (the CLI offers a documented pre-permutation
helper).  Internally everything is 0-based; file formats and reports are
1-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError

_KINDS = ("x", "u", "w")


def _offsets(sizes):
    off = [0]
    for s in sizes[:-1]:
        off.append(off[-1] + s)
    return tuple(off)


@dataclass(frozen=True)
class AreaPartition:
    """Per-area sizes and offsets for states, inputs and controller states.

    Controller-state ('w') sizes are unknown until the controller rows have
    been realised; :meth:`with_w_sizes` attaches them without mutating the
    original object.
    """

    x_sizes: tuple[int, ...]
    u_sizes: tuple[int, ...]
    w_sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        if len(self.x_sizes) != len(self.u_sizes):
            raise DimensionMismatchError("x and u size lists must have equal length")
        if len(self.x_sizes) < 2:
            raise ValueError(f"need N > 1 areas, got N = {len(self.x_sizes)}")
        if any(s <= 0 for s in self.x_sizes + self.u_sizes):
            raise ValueError("all area sizes must be positive")
        if self.w_sizes is not None:
            if len(self.w_sizes) != len(self.x_sizes):
                raise DimensionMismatchError("w size list must match the number of areas")
            if any(s < 0 for s in self.w_sizes):
                raise ValueError("controller state sizes must be nonnegative")

    @property
    def n_areas(self) -> int:
        return len(self.x_sizes)

    @property
    def n_x(self) -> int:
        return sum(self.x_sizes)

    @property
    def n_u(self) -> int:
        return sum(self.u_sizes)

    @property
    def n_w(self) -> int:
        if self.w_sizes is None:
            raise ValueError("controller state sizes not set; call with_w_sizes first")
        return sum(self.w_sizes)

    def with_w_sizes(self, w_sizes) -> "AreaPartition":
        return AreaPartition(self.x_sizes, self.u_sizes, tuple(int(s) for s in w_sizes))

    def _sizes(self, kind: str):
        if kind == "x":
            return self.x_sizes
        if kind == "u":
            return self.u_sizes
        if kind == "w":
            if self.w_sizes is None:
                raise ValueError("controller state sizes not set; call with_w_sizes first")
            return self.w_sizes
        raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")

    def size(self, kind: str, i: int) -> int:
        return self._sizes(kind)[self._check_area(i)]

    def offset(self, kind: str, i: int) -> int:
        return _offsets(self._sizes(kind))[self._check_area(i)]

    def indices(self, kind: str, i: int) -> np.ndarray:
        """0-based global indices of area ``i``'s variables of one kind."""
        off = self.offset(kind, i)
        return np.arange(off, off + self.size(kind, i))

    def selector(self, kind: str, i: int) -> np.ndarray:
        """Selection matrix S whose columns are the standard basis vectors of
        the area's indices; ``S.T @ v`` slices, ``S @ v_i`` embeds."""
        total = sum(self._sizes(kind))
        S = np.zeros((total, self.size(kind, i)))
        S[self.indices(kind, i), np.arange(self.size(kind, i))] = 1.0
        return S

    def z_selector(self, i: int) -> np.ndarray:
        """diag(S_x, S_u) combining an area's state and input selections."""
        import scipy.linalg
        return scipy.linalg.block_diag(self.selector("x", i), self.selector("u", i))

    def zc_selector(self, i: int) -> np.ndarray:
        """diag(S_x, S_w) selecting an area's plant and controller states."""
        import scipy.linalg
        return scipy.linalg.block_diag(self.selector("x", i), self.selector("w", i))

    def _check_area(self, i: int) -> int:
        if not 0 <= i < self.n_areas:
            raise IndexError(f"area index {i} out of range for N = {self.n_areas}")
        return i


def build_partition(sizes) -> AreaPartition:
    """Create a partition from a list of (n_xi, n_ui) pairs."""
    sizes = list(sizes)
    return AreaPartition(tuple(int(s[0]) for s in sizes), tuple(int(s[1]) for s in sizes))


def slice_area(partition: AreaPartition, v, kind: str, i: int) -> np.ndarray:
    """Extract area ``i``'s sub-vector of ``v`` for the given variable kind."""
    v = np.asarray(v, dtype=float).ravel()
    total = sum(partition._sizes(kind))
    if v.size != total:
        raise DimensionMismatchError(f"vector length {v.size} does not match global {kind}-dimension {total}")
    return v[partition.indices(kind, i)]


@dataclass(frozen=True)
class Neighborhoods:
    """For each area, the set of areas allowed to send it information."""

    sets: tuple[frozenset, ...]

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(int(j) for j in s) for s in self.sets))

    @property
    def n_areas(self) -> int:
        return len(self.sets)

    def of(self, i: int) -> frozenset:
        return self.sets[i]

    def __contains__(self, pair) -> bool:
        i, j = pair
        return j in self.sets[i]

    @classmethod
    def complete(cls, n: int) -> "Neighborhoods":
        return cls(tuple(frozenset(range(n)) for _ in range(n)))


def validate_neighborhoods(nb: Neighborhoods, n_areas: int) -> None:
    """Check self-membership and index ranges; raises on violation."""
    if nb.n_areas != n_areas:
        raise DimensionMismatchError(f"{nb.n_areas} neighborhood sets for {n_areas} areas")
    for i, s in enumerate(nb.sets):
        if i not in s:
            raise ValueError(f"area {i} is missing from its own neighborhood")
        bad = [j for j in s if not 0 <= j < n_areas]
        if bad:
            raise ValueError(f"neighborhood of area {i} has out-of-range members {sorted(bad)}")
