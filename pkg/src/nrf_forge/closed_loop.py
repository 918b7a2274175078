"""Closed-loop maps of the controlled network, assembled symbolically.

The loop of plant and controller bank admits the explicit response

    [x; u_f] = F star d_s  +  I[k] [x_c; w_c]

where d_s stacks the compound disturbances [beta_x; beta_u; beta_f; d].  The
forced map F and the initial-condition map I are assembled here from the
coprime factors and the Youla parameter by realization composition, never by
simulating the loop; the time-domain simulator is the independent
cross-check of this algebra.

    F = [ N Xq | N Yq     | N (Yqd - Yq) | (N Xq + I) G_d ]
        [ M Xq | M Yq - I | M (Yqd - Yq) | M Xq G_d       ]

    I = [ Y J1 + N Q J1 | N J2 ]     J1 = Mt (zI - A)^{-1} z
        [ X J1 + M Q J1 | M J2 ]     J2 = Yqd C_w (zI - A_w)^{-1} z

Properness of J1/J2 uses (zI - A)^{-1} z = I + (zI - A)^{-1} A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dcf import DcfBundle
from .errors import DimensionMismatchError, NonzeroFeedthroughError, UnboundedTfmError
from .lti import (
    Realization,
    SignalTrace,
    from_gain,
    make_realization,
    minimal,
    negate,
    parallel,
    select_cols,
    select_rows,
    series,
    spectral_radius_raw,
    stack_cols_many,
    stack_rows,
    star,
)
from .nrf import NrfPair, form_nrf_pair, stacked_bank
from .partition import AreaPartition, Neighborhoods


@dataclass(frozen=True)
class ClosedLoopMaps:
    """Forced and initial-condition maps plus their building blocks."""

    forced: Realization        # (n_x + n_u) x (n_x + 2 n_u + n_d)
    initial: Realization       # (n_x + n_u) x (n_x + n_w)
    ic_plant_factor: Realization      # J1
    ic_controller_factor: Realization  # J2
    g_d: Realization
    pair: NrfPair
    bank: tuple
    partition: AreaPartition

    @property
    def n_x(self) -> int:
        return self.pair.bundle.n_x

    @property
    def n_u(self) -> int:
        return self.pair.n_u

    @property
    def n_d(self) -> int:
        return self.pair.bundle.plant.n_d

    @property
    def n_w(self) -> int:
        return self.initial.ninputs - self.n_x

    def column_block(self, name: str) -> np.ndarray:
        """Column indices of one input block of the forced map."""
        n_x, n_u, n_d = self.n_x, self.n_u, self.n_d
        offsets = {"beta_x": (0, n_x), "beta_u": (n_x, n_u),
                   "beta_f": (n_x + n_u, n_u), "d": (n_x + 2 * n_u, n_d)}
        if name not in offsets:
            raise KeyError(f"unknown block {name!r}")
        lo, width = offsets[name]
        return np.arange(lo, lo + width)


def _resolvent_times_z(A: np.ndarray, C: np.ndarray) -> Realization:
    """Realize C (zI - A)^{-1} z = C + C (zI - A)^{-1} A, which is proper."""
    n = A.shape[0]
    return make_realization(A, A.copy(), C, C.copy())


def _assert_stable(R: Realization, label: str) -> Realization:
    rho = spectral_radius_raw(R)
    if rho >= 1.0 - 1e-9:
        raise UnboundedTfmError(
            f"{label} has spectral radius {rho:.6g} after minimalization; "
            "the factorization or the Youla parameter is broken"
        )
    return R


def _stabilized_ic_rows(bundle: DcfBundle, q: Realization) -> Realization:
    """Realize [Y + N Q; X + M Q], the left factor shared by the
    disturbance column and the plant-IC columns."""
    top = parallel(bundle.Y, minimal(series(bundle.N, q)))
    bot = parallel(bundle.X, minimal(series(bundle.M, q)))
    return minimal(stack_rows(top, bot))


def build_fq(bundle: DcfBundle, q: Realization, pair: NrfPair | None = None) -> Realization:
    """Assemble and minimalize the forced closed-loop map.

    The disturbance column is built through the Bezout identity
    (N Xq + I) G_d = (Y + N Q) Mt G_d with Mt G_d = (zI - A - L)^{-1} B_d,
    so no unstable plant mode ever has to cancel numerically.
    """
    if pair is None:
        pair = form_nrf_pair(bundle, q)
    n_x, n_u, n_d = bundle.n_x, bundle.n_u, bundle.plant.n_d
    nm = stack_rows(bundle.N, bundle.M)
    diag_gap = minimal(parallel(pair.yq_diag, negate(pair.yq)))
    cols123 = series(nm, stack_cols_many([pair.xq, pair.yq, diag_gap]))
    a_l = bundle.observer_pencil()
    gd_obs = make_realization(a_l, bundle.plant.B_d, np.eye(n_x), np.zeros((n_x, n_d)))
    col4 = series(_stabilized_ic_rows(bundle, q), gd_obs)
    corr = np.zeros((n_x + n_u, n_x + 2 * n_u + n_d))
    corr[n_x:, n_x:n_x + n_u] = -np.eye(n_u)
    fq = minimal(parallel(stack_cols_many([cols123, col4]), from_gain(corr)))
    return _assert_stable(fq, "forced closed-loop map")


def build_iq(bundle: DcfBundle, q: Realization, bank,
             pair: NrfPair | None = None) -> tuple[Realization, Realization, Realization]:
    """Assemble the initial-condition map; returns (I, J1, J2).

    J1 = Mt (zI - A)^{-1} z collapses to I + (zI - A - L)^{-1} (A + L) for
    this factorization, which is stable by construction.
    """
    if pair is None:
        pair = form_nrf_pair(bundle, q)
    a_l = bundle.observer_pencil()
    j1 = minimal(_resolvent_times_z(a_l, np.eye(bundle.n_x)))
    ctrl = stacked_bank(bank)
    j2 = minimal(series(pair.yq_diag, _resolvent_times_z(ctrl.A, ctrl.C)))
    nm = stack_rows(bundle.N, bundle.M)
    left_cols = minimal(series(_stabilized_ic_rows(bundle, q), j1))
    right_cols = minimal(series(nm, j2))
    iq = minimal(stack_cols_many([left_cols, right_cols]))
    _assert_stable(iq, "initial-condition map")
    _assert_stable(minimal(j1), "plant resolvent factor")
    _assert_stable(minimal(j2), "controller resolvent factor")
    return iq, j1, j2


def build_closed_loop_maps(bundle: DcfBundle, q: Realization, bank,
                           partition: AreaPartition) -> ClosedLoopMaps:
    """One-stop construction of every closed-loop map for a designed bank."""
    pair = form_nrf_pair(bundle, q)
    fq = build_fq(bundle, q, pair)
    iq, j1, j2 = build_iq(bundle, q, bank, pair)
    part_w = partition.with_w_sizes([c.order for c in bank])
    return ClosedLoopMaps(fq, iq, j1, j2, bundle.plant.g_d(), pair, tuple(bank), part_w)


def iq_at(iq: Realization, k: int) -> np.ndarray:
    """k-th impulse coefficient of the initial-condition map."""
    if k < 0:
        raise ValueError("time index must be nonnegative")
    if k == 0:
        return iq.D.copy()
    X = iq.B
    for _ in range(k - 1):
        X = iq.A @ X
    return iq.C @ X


def ic_response(iq: Realization, v, horizon: int, start_index: int = 0) -> SignalTrace:
    """Trace of I[k] v for k = 0..horizon-1, by stepping the realization."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != iq.ninputs:
        raise DimensionMismatchError(f"vector length {v.size}, map expects {iq.ninputs}")
    out = np.empty((horizon, iq.noutputs))
    if horizon == 0:
        return SignalTrace(out, start_index)
    out[0] = iq.D @ v
    x = iq.B @ v
    for k in range(1, horizon):
        out[k] = iq.C @ x
        x = iq.A @ x
    return SignalTrace(out, start_index)


def reconstructed_response(maps: ClosedLoopMaps, d_s: SignalTrace, x_c, w_c) -> SignalTrace:
    """[x; u_f] rebuilt from the closed-loop maps (no loop simulation)."""
    forced = star(maps.forced, d_s)
    v = np.concatenate([np.asarray(x_c, dtype=float).ravel(),
                        np.asarray(w_c, dtype=float).ravel()])
    free = ic_response(maps.initial, v, d_s.horizon, d_s.start_index)
    return SignalTrace(forced.samples + free.samples, d_s.start_index)


def _z_rows(partition: AreaPartition, i: int, n_x: int) -> np.ndarray:
    return np.concatenate([partition.indices("x", i), n_x + partition.indices("u", i)])


def area_block(maps: ClosedLoopMaps, partition: AreaPartition, kind: str,
               i: int, j: int | None = None) -> Realization:
    """Minimal realization of one area-level block of the closed-loop maps.

    kind 'disturbance': response of area i to [beta_f; d].
    kind 'coupling':    response of area i to area j's injected commands.
    kind 'init':        response of area i to area j's initial conditions.
    """
    n_x, n_u = maps.n_x, maps.n_u
    rows = _z_rows(partition, i, n_x)
    if kind == "disturbance":
        cols = np.concatenate([maps.column_block("beta_f"), maps.column_block("d")])
        return minimal(select_cols(select_rows(maps.forced, rows), cols))
    if kind == "coupling":
        if j is None:
            raise ValueError("coupling block needs a source area j")
        cols = np.concatenate([partition.indices("x", j),
                               n_x + partition.indices("u", j)])
        return minimal(select_cols(select_rows(maps.forced, rows), cols))
    if kind == "init":
        if j is None:
            raise ValueError("init block needs a source area j")
        part = maps.partition
        cols = np.concatenate([part.indices("x", j), n_x + part.indices("w", j)])
        return minimal(select_cols(select_rows(maps.initial, rows), cols))
    raise ValueError(f"unknown block kind {kind!r}")


@dataclass(frozen=True)
class PredictionModel:
    """Zero-initial-state model of an area's response to its own commands."""

    area: int
    A_s: np.ndarray
    B_s1: np.ndarray
    B_s2: np.ndarray
    C_x: np.ndarray
    C_u: np.ndarray

    @property
    def order(self) -> int:
        return self.A_s.shape[0]

    def initial_state(self) -> np.ndarray:
        # the defining response is a pure convolution, so the state always
        # starts at zero
        return np.zeros(self.order)

    def realization(self) -> Realization:
        B = np.hstack([self.B_s1, self.B_s2])
        C = np.vstack([self.C_x, self.C_u])
        return make_realization(self.A_s, B, C, np.zeros((C.shape[0], B.shape[1])))

    def simulate(self, u_s1: SignalTrace, u_s2: SignalTrace) -> SignalTrace:
        both = SignalTrace(np.hstack([u_s1.samples, u_s2.samples]), u_s1.start_index)
        return star(self.realization(), both)


def prediction_model(maps: ClosedLoopMaps, partition: AreaPartition, i: int,
                     feedthrough_tol: float = 1e-9) -> PredictionModel:
    """Extract area i's prediction model from the forced map.

    The block is strictly proper whenever the factorization is normalised at
    infinity and the Youla parameter is strictly proper; a nonzero
    feedthrough therefore signals an upstream bug and raises.
    """
    block = area_block(maps, partition, "coupling", i, i)
    dmax = float(np.max(np.abs(block.D), initial=0.0))
    if dmax > feedthrough_tol:
        raise NonzeroFeedthroughError(
            f"prediction model of area {i + 1} has feedthrough {dmax:.3e}; "
            "expected a strictly proper block"
        )
    n_xi = partition.size("x", i)
    n_ui = partition.size("u", i)
    return PredictionModel(
        area=i,
        A_s=block.A,
        B_s1=block.B[:, :n_xi].copy(),
        B_s2=block.B[:, n_xi:].copy(),
        C_x=block.C[:n_xi, :].copy(),
        C_u=block.C[n_xi:, :].copy(),
    )


@dataclass(frozen=True)
class DecomposedResponse:
    """Exogenous / neighbour-IC / residual components of one area's response."""

    psi: SignalTrace
    theta: SignalTrace
    delta: SignalTrace
    n_xi: int

    def _split(self, tr: SignalTrace):
        return tr.samples[:, :self.n_xi], tr.samples[:, self.n_xi:]

    @property
    def psi_x(self):
        return self._split(self.psi)[0]

    @property
    def psi_u(self):
        return self._split(self.psi)[1]

    @property
    def theta_x(self):
        return self._split(self.theta)[0]

    @property
    def theta_u(self):
        return self._split(self.theta)[1]

    @property
    def delta_x(self):
        return self._split(self.delta)[0]

    @property
    def delta_u(self):
        return self._split(self.delta)[1]


def decompose_response(maps: ClosedLoopMaps, partition: AreaPartition,
                       nb: Neighborhoods, i: int, d_s: SignalTrace,
                       x_c, w_c, us_others: dict) -> DecomposedResponse:
    """Split area i's response into the three second-layer channels.

    ``d_s`` carries only the exogenous content (measurement noise, encoding
    errors, feedforward noise and plant disturbance); injected second-layer
    commands of the *other* areas arrive through ``us_others`` as
    ``{j: (u_s1j, u_s2j)}`` traces.  Together with the area's own prediction
    model state, psi + theta + delta reconstructs the simulated response.
    """
    n_x, n_u = maps.n_x, maps.n_u
    part = maps.partition
    rows = _z_rows(partition, i, n_x)
    fq_rows = select_rows(maps.forced, rows)
    psi = star(fq_rows, d_s)

    x_c = np.asarray(x_c, dtype=float).ravel()
    w_c = np.asarray(w_c, dtype=float).ravel()
    if x_c.size != n_x or w_c.size != maps.n_w:
        raise DimensionMismatchError("initial condition dimensions do not match the maps")
    iq_rows = select_rows(maps.initial, rows)
    horizon = d_s.horizon

    def masked_ic(area_set):
        v = np.zeros(n_x + maps.n_w)
        for j in area_set:
            v[part.indices("x", j)] = x_c[part.indices("x", j)]
            v[n_x + part.indices("w", j)] = w_c[part.indices("w", j)]
        return v

    theta = ic_response(iq_rows, masked_ic(sorted(nb.of(i))), horizon, d_s.start_index)

    # residual: cross-coupling from other areas' commands + far-away ICs
    beta_x = np.zeros((horizon, n_x))
    beta_u = np.zeros((horizon, n_u))
    for j, (u1, u2) in us_others.items():
        if j == i:
            continue
        beta_x[:, partition.indices("x", j)] += u1.samples
        beta_u[:, partition.indices("u", j)] += u2.samples
    cross = np.hstack([beta_x, beta_u, np.zeros((horizon, n_u)), np.zeros((horizon, maps.n_d))])
    delta_forced = star(fq_rows, SignalTrace(cross, d_s.start_index))
    outside = [j for j in range(partition.n_areas) if j not in nb.of(i)]
    delta_free = ic_response(iq_rows, masked_ic(outside), horizon, d_s.start_index)
    delta = SignalTrace(delta_forced.samples + delta_free.samples, d_s.start_index)
    return DecomposedResponse(psi, theta, delta, partition.size("x", i))
