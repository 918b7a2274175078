"""Sparsity-constrained FIR parametrization of the Youla parameter.

The communication constraints on the controller pair translate, entry by
entry, into "identically zero" requirements on Yq = Yt + Q Nt (input-side
block) and Xq = Xt + Q Mt (state-side block).  With a deadbeat observer gain
the left factors are FIR, products of FIR maps are FIR, and coefficient
matching turns every constrained entry into finitely many linear equations
in Q's tap matrices.  The particular solution is the least-norm solution of
that stacked system; the free directions are an orthonormal basis of its
null space.

Two tap layouts are supported:

``fir``
    Q is a free tap sequence Q_1 .. Q_q on powers z^{-1} .. z^{-q}.

``factored``
    Q(z) = P(z) (I - A_L z^{-1}) with A_L the observer pencil and P a free
    strictly proper FIR sequence.  Then Q Nt = P B z^{-1} and
    Q Mt = P (I - A z^{-1}), so the constrained entries stay low-degree and,
    together with the diagonal-preserving rows (P_t B)_ll = 0, every
    controller row keeps the diagonal of Yt untouched.  For deadbeat designs
    whose Yt has unit diagonal this pins all controller poles at zero and
    fixes each row's characteristic polynomial to a pure power of z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dcf import DcfBundle
from .errors import DimensionMismatchError, NonFirDcfError
from .lti import Realization, fir_realization
from .partition import AreaPartition, Neighborhoods, validate_neighborhoods

FEASIBILITY_TOL = 1e-9

MODE_FIR = "fir"
MODE_FACTORED = "factored"


@dataclass(frozen=True)
class SparsityPattern:
    """Binary target pattern for [feedforward feedback], zero diagonal forced."""

    matrix: np.ndarray  # n_u x (n_u + n_x), entries in {0, 1}
    n_u: int
    n_x: int

    def __post_init__(self):
        M = np.asarray(self.matrix)
        if M.shape != (self.n_u, self.n_u + self.n_x):
            raise DimensionMismatchError(
                f"pattern shape {M.shape}, expected {(self.n_u, self.n_u + self.n_x)}"
            )
        if not np.isin(M, (0, 1)).all():
            raise ValueError("pattern entries must be 0 or 1")
        if np.any(np.diag(M[:, :self.n_u]) != 0):
            raise ValueError("the input-side diagonal of the pattern must be zero")
        M = M.astype(np.int8)
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    def constrained_u_entries(self):
        """Zero input-side entries, excluding the structurally zero diagonal."""
        out = []
        for i in range(self.n_u):
            for j in range(self.n_u):
                if i != j and self.matrix[i, j] == 0:
                    out.append((i, j))
        return out

    def constrained_x_entries(self):
        out = []
        for i in range(self.n_u):
            for j in range(self.n_x):
                if self.matrix[i, self.n_u + j] == 0:
                    out.append((i, j))
        return out


def pattern_from_neighborhoods(partition: AreaPartition, nb: Neighborhoods) -> SparsityPattern:
    """Zero the (i, j) area blocks for every j outside area i's sets."""
    validate_neighborhoods(nb, partition.n_areas)
    n_u, n_x = partition.n_u, partition.n_x
    M = np.ones((n_u, n_u + n_x), dtype=np.int8)
    for i in range(partition.n_areas):
        rows = partition.indices("u", i)
        for j in range(partition.n_areas):
            if j in nb.of(i):
                continue
            M[np.ix_(rows, partition.indices("u", j))] = 0
            M[np.ix_(rows, n_u + partition.indices("x", j))] = 0
    np.fill_diagonal(M[:, :n_u], 0)
    return SparsityPattern(M, n_u, n_x)


@dataclass(frozen=True)
class InfeasibilityReport:
    """Structured report when the exact matching constraints have no solution."""

    residual: float
    n_unknowns: int
    n_constraints: int
    rank: int
    message: str


@dataclass(frozen=True)
class QParametrization:
    """Affine family Q(x) = Q0 + sum_k x_k basis_k of FIR tap tensors.

    The basis is orthonormal in tap-coefficient space and Q0 is orthogonal to
    it, so the particular solution is the least-norm member of the family.
    """

    q0_taps: np.ndarray          # (q, n_u, n_x)
    basis: np.ndarray            # (K, q, n_u, n_x)
    fir_degree: int
    mode: str
    residual: float
    constraint_rank: int
    n_constraints: int

    def __post_init__(self):
        for name in ("q0_taps", "basis"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_free(self) -> int:
        return self.basis.shape[0]

    @property
    def n_u(self) -> int:
        return self.q0_taps.shape[1]

    @property
    def n_x(self) -> int:
        return self.q0_taps.shape[2]

    def taps_from_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n_free:
            raise DimensionMismatchError(f"x has length {x.size}, basis size is {self.n_free}")
        taps = self.q0_taps.copy()
        if x.size:
            taps = taps + np.tensordot(x, self.basis, axes=(0, 0))
        return taps


def q_from_x(param: QParametrization, x) -> Realization:
    """Strictly proper block-companion realization of Q(x)."""
    return fir_realization(param.taps_from_x(x))


def left_factor_taps(bundle: DcfBundle) -> dict:
    """FIR taps of (Yt, Nt, Mt, Xt) for a deadbeat bundle.

    Taps are indexed by the power of z^{-1} starting at 0.  Powers of the
    observer pencil are zeroed exactly once they fall below machine scale,
    keeping the assembled linear system finite and exact.
    """
    if not bundle.is_deadbeat():
        raise NonFirDcfError(
            "observer pencil A + L is not nilpotent; the exact coefficient-"
            "matching route needs the deadbeat design"
        )
    A_L = bundle.observer_pencil()
    B, L, F = bundle.plant.B_u, bundle.L, bundle.F
    n = bundle.n_x
    powers = [np.eye(n)]
    scale = max(1.0, np.linalg.norm(A_L, 2))
    for _ in range(n):
        nxt = A_L @ powers[-1]
        if np.linalg.norm(nxt, 2) <= 1e-12 * scale ** (len(powers)):
            nxt = np.zeros_like(nxt)
        powers.append(nxt)
        if not np.any(nxt):
            break
    nu = len(powers) - 1  # smallest k with A_L^k = 0 (<= n)
    m = bundle.n_u
    yt = np.zeros((nu + 1, m, m))
    nt = np.zeros((nu + 1, n, m))
    mt = np.zeros((nu + 1, n, n))
    xt = np.zeros((nu + 1, m, n))
    yt[0] = np.eye(m)
    mt[0] = np.eye(n)
    for tau in range(1, nu + 1):
        P = powers[tau - 1]
        yt[tau] = -F @ P @ B
        nt[tau] = P @ B
        mt[tau] = P @ L
        xt[tau] = -F @ P @ L
    return {"Yt": yt, "Nt": nt, "Mt": mt, "Xt": xt, "degree": nu}


def _assemble_system(bundle: DcfBundle, pattern: SparsityPattern, q: int,
                     mode: str, preserve_diagonal: bool = True):
    """Stack the coefficient-matching equations into (matrix, rhs).

    Unknown layout: tap-major, then row-major, then column:
    v[(t-1)*n_u*n_x + i*n_x + k] = tap_t[i, k], t = 1..n_taps.
    """
    if q < 1:
        raise ValueError("FIR degree must be at least 1")
    taps = left_factor_taps(bundle)
    nu = taps["degree"]
    n_u, n_x = bundle.n_u, bundle.n_x
    if mode == MODE_FIR:
        n_taps = q
    elif mode == MODE_FACTORED:
        if q < 2:
            raise ValueError("factored mode needs q >= 2 (one free tap plus the closing tap)")
        n_taps = q - 1
    else:
        raise ValueError(f"unknown parametrization mode {mode!r}")
    n_unknowns = n_taps * n_u * n_x
    A_pl, B_pl = bundle.plant.A, bundle.plant.B_u

    rows, rhs = [], []

    def row_indices(i):
        return {t: (t - 1) * n_u * n_x + i * n_x for t in range(1, n_taps + 1)}

    def add_row(coeff_by_tap, i, target):
        r = np.zeros(n_unknowns)
        base = row_indices(i)
        for t, coeff in coeff_by_tap.items():
            r[base[t]:base[t] + n_x] = coeff
        rows.append(r)
        rhs.append(-target)

    u_entries = pattern.constrained_u_entries()
    x_entries = pattern.constrained_x_entries()

    if mode == MODE_FIR:
        max_tau_u = max(nu, q + nu)
        for (i, j) in u_entries:
            for tau in range(0, max_tau_u + 1):
                target = taps["Yt"][tau][i, j] if tau <= nu else 0.0
                coeffs = {}
                for t in range(1, n_taps + 1):
                    s = tau - t
                    if 1 <= s <= nu:
                        coeffs[t] = taps["Nt"][s][:, j]
                if coeffs or target:
                    add_row(coeffs, i, target)
        max_tau_x = max(nu, q + nu)
        for (i, j) in x_entries:
            for tau in range(0, max_tau_x + 1):
                target = taps["Xt"][tau][i, j] if tau <= nu else 0.0
                coeffs = {}
                for t in range(1, n_taps + 1):
                    s = tau - t
                    if 0 <= s <= nu:
                        coeffs[t] = taps["Mt"][s][:, j]
                if coeffs or target:
                    add_row(coeffs, i, target)
    else:
        # Q Nt = P B z^{-1};  Q Mt = P (I - A z^{-1})
        max_tau_u = max(nu, n_taps + 1)
        for (i, j) in u_entries:
            for tau in range(0, max_tau_u + 1):
                target = taps["Yt"][tau][i, j] if tau <= nu else 0.0
                coeffs = {}
                if 1 <= tau - 1 <= n_taps:
                    coeffs[tau - 1] = B_pl[:, j]
                if coeffs or target:
                    add_row(coeffs, i, target)
        max_tau_x = max(nu, n_taps + 1)
        for (i, j) in x_entries:
            for tau in range(0, max_tau_x + 1):
                target = taps["Xt"][tau][i, j] if tau <= nu else 0.0
                coeffs = {}
                if 1 <= tau <= n_taps:
                    e_j = np.zeros(n_x)
                    e_j[j] = 1.0
                    coeffs[tau] = e_j
                if 1 <= tau - 1 <= n_taps:
                    prev = coeffs.get(tau - 1, np.zeros(n_x))
                    coeffs[tau - 1] = prev - A_pl[:, j]
                if coeffs or target:
                    add_row(coeffs, i, target)
        if preserve_diagonal:
            for ell in range(n_u):
                for t in range(1, n_taps + 1):
                    add_row({t: B_pl[:, ell]}, ell, 0.0)

    if rows:
        mat = np.vstack(rows)
        vec = np.asarray(rhs)
    else:
        mat = np.zeros((0, n_unknowns))
        vec = np.zeros(0)
    return mat, vec, {"n_taps": n_taps, "nu": nu, "mode": mode}


def _taps_from_vector(v: np.ndarray, n_taps: int, n_u: int, n_x: int) -> np.ndarray:
    return v.reshape(n_taps, n_u, n_x)


def _to_q_taps(sol_taps: np.ndarray, q: int, mode: str, A_L: np.ndarray) -> np.ndarray:
    """Convert a solution in the working layout to Q's own tap tensor."""
    if mode == MODE_FIR:
        return sol_taps
    n_taps, n_u, n_x = sol_taps.shape
    out = np.zeros((q, n_u, n_x))
    for t in range(1, q + 1):
        if t <= n_taps:
            out[t - 1] += sol_taps[t - 1]
        if 1 <= t - 1 <= n_taps:
            out[t - 1] -= sol_taps[t - 2] @ A_L
    return out


def solve_particular(bundle: DcfBundle, pattern: SparsityPattern, q: int,
                     mode: str = MODE_FIR, preserve_diagonal: bool = True):
    """Least-norm tap tensor meeting the constraints, or an infeasibility report."""
    result = build_parametrization(bundle, pattern, q, mode, preserve_diagonal,
                                   want_basis=False)
    if isinstance(result, InfeasibilityReport):
        return result
    return result.q0_taps


def nullspace_basis(bundle: DcfBundle, pattern: SparsityPattern, q: int,
                    mode: str = MODE_FIR, preserve_diagonal: bool = True) -> np.ndarray:
    """Orthonormal (in Q-coefficient space) free directions of the family."""
    result = build_parametrization(bundle, pattern, q, mode, preserve_diagonal)
    if isinstance(result, InfeasibilityReport):
        raise ValueError(f"constraints infeasible: {result.message}")
    return result.basis


def build_parametrization(bundle: DcfBundle, pattern: SparsityPattern, q: int,
                          mode: str = MODE_FIR, preserve_diagonal: bool = True,
                          want_basis: bool = True):
    """Solve the matching system once and package particular + basis.

    Returns a :class:`QParametrization`, or an :class:`InfeasibilityReport`
    when the least-squares residual exceeds the feasibility tolerance (the
    caller is expected to regroup areas or relax the pattern).
    """
    if pattern.n_u != bundle.n_u or pattern.n_x != bundle.n_x:
        raise DimensionMismatchError("pattern dimensions do not match the bundle")
    mat, vec, meta = _assemble_system(bundle, pattern, q, mode, preserve_diagonal)
    n_taps = meta["n_taps"]
    n_u, n_x = bundle.n_u, bundle.n_x
    n_unknowns = n_taps * n_u * n_x
    if mat.shape[0]:
        sol, _, rank, _ = np.linalg.lstsq(mat, vec, rcond=None)
        residual = float(np.linalg.norm(mat @ sol - vec, np.inf))
    else:
        sol = np.zeros(n_unknowns)
        rank = 0
        residual = 0.0
    scale = max(1.0, float(np.max(np.abs(vec))) if vec.size else 1.0)
    if residual > FEASIBILITY_TOL * scale:
        return InfeasibilityReport(
            residual=residual, n_unknowns=n_unknowns,
            n_constraints=mat.shape[0], rank=int(rank),
            message=(f"minimal residual {residual:.3e} over {mat.shape[0]} constraints; "
                     "the requested sparsity pattern is not achievable at this FIR degree"),
        )
    A_L = bundle.observer_pencil()
    q0 = _to_q_taps(_taps_from_vector(sol, n_taps, n_u, n_x), q, mode, A_L)

    basis = np.zeros((0, q, n_u, n_x))
    if want_basis:
        if mat.shape[0]:
            null = scipy.linalg.null_space(mat)
        else:
            null = np.eye(n_unknowns)
        dirs = [
            _to_q_taps(_taps_from_vector(null[:, k], n_taps, n_u, n_x), q, mode, A_L)
            for k in range(null.shape[1])
        ]
        if dirs:
            flat = np.stack([d.ravel() for d in dirs])  # K x (q n_u n_x)
            # orthonormalise in Q-coefficient space
            Uq, sq, Vq = np.linalg.svd(flat, full_matrices=False)
            keep = sq > 1e-12 * (sq[0] if sq.size else 1.0)
            basis_flat = Vq[keep]
            basis = basis_flat.reshape(-1, q, n_u, n_x)
    # make the particular solution the least-norm member of the Q-family
    if basis.shape[0]:
        flat_b = basis.reshape(basis.shape[0], -1)
        q0_flat = q0.ravel()
        q0 = (q0_flat - flat_b.T @ (flat_b @ q0_flat)).reshape(q, n_u, n_x)
    return QParametrization(q0, basis, q, mode, residual, int(rank), mat.shape[0])
