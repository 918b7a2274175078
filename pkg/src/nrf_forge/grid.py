"""Five-node mesh benchmark: swing dynamics with per-node power injection.

Each node carries an electrical angle and a rated frequency; coupling acts
angle-to-frequency along the mesh edges.  The shipped coefficient set is a
SURROGATE chosen to keep every node block stable under the default
block-diagonalizing feedback; the authentic benchmark coefficients are not
reprinted here and can be supplied through a coefficient file to unlock the
conditional regression numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .partition import AreaPartition, Neighborhoods, build_partition
from .plant import Plant

#: Mesh edges of the benchmark topology (0-based, undirected).
GRID_EDGES = ((0, 1), (0, 2), (1, 3), (2, 3), (0, 4), (1, 4), (2, 4), (3, 4))

DEFAULT_T_S = 0.2


@dataclass(frozen=True)
class GridCoefficients:
    """Per-node inertia-like gains, damping, and directed coupling weights."""

    h: np.ndarray          # (N,)
    damping: np.ndarray    # (N,)
    coupling: np.ndarray   # (N, N), entry (i, j) weights node j's angle in node i
    t_s: float = DEFAULT_T_S
    label: str = "surrogate"

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        dmp = np.asarray(self.damping, dtype=float)
        cpl = np.asarray(self.coupling, dtype=float)
        n = h.size
        if dmp.size != n or cpl.shape != (n, n):
            raise ValueError("coefficient arrays must agree on the node count")
        if np.any(h <= 0) or np.any(dmp <= 0) or self.t_s <= 0:
            raise ValueError("physical coefficients must be positive")
        if np.any(cpl < 0) or np.any(np.diag(cpl) != 0):
            raise ValueError("coupling weights must be nonnegative with zero diagonal")
        for arr in (h, dmp, cpl):
            arr.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "damping", dmp)
        object.__setattr__(self, "coupling", cpl)

    @property
    def n_nodes(self) -> int:
        return self.h.size


def surrogate_coefficients() -> GridCoefficients:
    """Stable stand-in coefficients on the benchmark topology.

    Documented surrogate: damping clears the coupling-sum stability margin
    d_i > T_s * sum_q l_iq on every node, so each isolated node block has
    spectral radius below one.
    """
    n = 5
    cpl = np.zeros((n, n))
    weights = {
        (0, 1): 0.55, (1, 0): 0.45,
        (0, 2): 0.60, (2, 0): 0.50,
        (1, 3): 0.50, (3, 1): 0.65,
        (2, 3): 0.40, (3, 2): 0.55,
        (0, 4): 0.35, (4, 0): 0.40,
        (1, 4): 0.45, (4, 1): 0.35,
        (2, 4): 0.50, (4, 2): 0.45,
        (3, 4): 0.30, (4, 3): 0.50,
    }
    for (i, j), w in weights.items():
        cpl[i, j] = w
    h = np.array([1.00, 1.10, 0.95, 1.05, 0.90])
    damping = np.array([0.90, 1.00, 0.85, 0.95, 1.05])
    return GridCoefficients(h, damping, cpl, DEFAULT_T_S, "surrogate")


def node_block(coeffs: GridCoefficients, i: int, j: int) -> np.ndarray:
    """One 2x2 block of the mesh state matrix."""
    t_s, h = coeffs.t_s, coeffs.h[i]
    if i == j:
        return np.array([
            [1.0, t_s],
            [-h * t_s * float(np.sum(coeffs.coupling[i])), 1.0 - h * coeffs.damping[i] * t_s],
        ])
    return np.array([[0.0, 0.0], [h * coeffs.coupling[i, j] * t_s, 0.0]])


def build_grid_plant(coeffs: GridCoefficients | None = None) -> Plant:
    """Block-concatenate the node dynamics; disturbance enters with the input."""
    coeffs = coeffs if coeffs is not None else surrogate_coefficients()
    n = coeffs.n_nodes
    A = np.zeros((2 * n, 2 * n))
    for i in range(n):
        for j in range(n):
            A[2 * i:2 * i + 2, 2 * j:2 * j + 2] = node_block(coeffs, i, j)
    B = np.zeros((2 * n, n))
    for i in range(n):
        B[2 * i + 1, i] = 1.0
    return Plant(A, B, B.copy())


def grid_partition() -> AreaPartition:
    """One area per node: two states and one input each."""
    return build_partition([(2, 1)] * 5)


def grid_neighborhoods() -> Neighborhoods:
    """Communication sets induced by the mesh: self plus adjacent nodes."""
    n = 5
    sets = []
    for i in range(n):
        s = {i}
        for (a, b) in GRID_EDGES:
            if a == i:
                s.add(b)
            if b == i:
                s.add(a)
        sets.append(frozenset(s))
    return Neighborhoods(tuple(sets))


def coefficients_from_dict(doc: dict) -> GridCoefficients:
    """Parse a coefficient document (e.g. loaded from a JSON file)."""
    return GridCoefficients(
        h=np.asarray(doc["h"], dtype=float),
        damping=np.asarray(doc["damping"], dtype=float),
        coupling=np.asarray(doc["coupling"], dtype=float),
        t_s=float(doc.get("t_s", DEFAULT_T_S)),
        label=str(doc.get("label", "external")),
    )
