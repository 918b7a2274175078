"""Invariant suite for a designed artifact set.

Every check returns a (name, measured, threshold, passed) record; the CLI
renders one line per record and fails the run when any record fails.  The
closed-loop identity check is the non-circular certificate: the maps are
assembled by factor algebra, the traces by stepping the loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closed_loop import ClosedLoopMaps, decompose_response, prediction_model, reconstructed_response
from .dcf import DcfBundle, verify_bezout
from .errors import CommConstraintError, SparsityInheritanceError
from .lti import (
    FrequencyGrid,
    SignalTrace,
    frequency_response,
    is_minimal,
    spectral_radius,
)
from .nrf import check_comm_constraints, extract_row, form_nrf_pair, verify_sparsity_inheritance
from .partition import AreaPartition, Neighborhoods
from .plant import Plant
from .sim_net import compose_signals, simulate_distributed, simulate_monolithic
from .sparse_param import QParametrization, q_from_x


@dataclass(frozen=True)
class CheckRecord:
    name: str
    measured: float
    threshold: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        note = f"  ({self.note})" if self.note else ""
        return f"{status}  {self.name}: measured {self.measured:.3e} vs bound {self.threshold:.3e}{note}"


def _rec(name, measured, threshold, note="") -> CheckRecord:
    return CheckRecord(name, float(measured), float(threshold),
                       bool(measured <= threshold), note)


def run_invariant_suite(plant: Plant, partition: AreaPartition, nb: Neighborhoods,
                        bundle: DcfBundle, bank, maps: ClosedLoopMaps,
                        param: QParametrization | None = None,
                        seed: int = 20240, identity_scenarios: int = 20,
                        equivalence_scenarios: int = 100,
                        closure_draws: int = 100) -> list[CheckRecord]:
    """Full verification battery; returns one record per certificate."""
    records: list[CheckRecord] = []
    rng = np.random.default_rng(seed)
    pair = maps.pair
    n_x, n_u, n_d = plant.n_x, plant.n_u, plant.n_d
    grid64 = FrequencyGrid.chebyshev(64)

    records.append(_rec("bezout_residual",
                        verify_bezout(bundle, FrequencyGrid.uniform(512)), 1e-8))
    records.append(_rec("normalization_at_infinity",
                        max(np.max(np.abs(bundle.Yt.D - np.eye(n_u))),
                            np.max(np.abs(bundle.Xt.D))), 0.0))
    records.append(_rec("numerators_strictly_proper",
                        max(np.max(np.abs(bundle.N.D)), np.max(np.abs(bundle.Nt.D))), 0.0))

    # pair identities: Yqd (I - Phi) = Yq and Yqd Gamma = Xq on the grid
    zs = grid64.points
    yqd = frequency_response(pair.yq_diag, zs)
    phi = frequency_response(pair.feedforward, zs)
    gam = frequency_response(pair.feedback, zs)
    yq = frequency_response(pair.yq, zs)
    xq = frequency_response(pair.xq, zs)
    res1 = np.max(np.abs(yqd @ (np.eye(n_u) - phi) - yq))
    res2 = np.max(np.abs(yqd @ gam - xq))
    records.append(_rec("nrf_reconstruction_identities", max(res1, res2), 1e-8))
    diag_vals = np.abs(np.stack([phi[:, i, i] for i in range(n_u)]))
    records.append(_rec("feedforward_diagonal_zero", np.max(diag_vals), 1e-10))

    # canonical rows: eval match, minimality, inherited zeros
    kd_resp = frequency_response(pair.kd, zs)
    row_err = 0.0
    rows = [extract_row(pair.kd, ell) for ell in range(n_u)]
    for r in rows:
        resp = frequency_response(r.realization(), zs)[:, 0, :]
        scale = max(1.0, float(np.max(np.abs(kd_resp[:, r.index, :]))))
        row_err = max(row_err, float(np.max(np.abs(resp - kd_resp[:, r.index, :]))) / scale)
    records.append(_rec("row_canonical_eval_match", row_err, 1e-8))
    records.append(_rec("row_canonical_minimal",
                        0.0 if all(is_minimal(r.realization()) for r in rows) else 1.0, 0.0))
    try:
        for r in rows:
            verify_sparsity_inheritance(r, pair.kd)
        records.append(_rec("row_sparsity_inheritance", 0.0, 0.0))
    except SparsityInheritanceError as exc:
        records.append(CheckRecord("row_sparsity_inheritance", 1.0, 0.0, False, str(exc)))

    # stacked subcontrollers match the row-selected controller
    stack_err = 0.0
    for ctrl in bank:
        resp = frequency_response(ctrl.realization(), zs)
        sel = kd_resp[:, partition.indices("u", ctrl.area), :]
        stack_err = max(stack_err, float(np.max(np.abs(resp - sel))))
    records.append(_rec("area_stack_eval_match", stack_err, 1e-8))

    try:
        check_comm_constraints(bank, partition, nb)
        records.append(_rec("communication_constraints", 0.0, 0.0))
    except CommConstraintError as exc:
        records.append(CheckRecord("communication_constraints", 1.0, 0.0, False, str(exc)))

    rho_f = spectral_radius(maps.forced)
    rho_i = spectral_radius(maps.initial)
    records.append(_rec("forced_map_spectral_radius", rho_f, 1.0 - 1e-12))
    records.append(_rec("ic_map_spectral_radius", rho_i, 1.0 - 1e-12))
    probe = np.max(np.abs(maps.forced.eval(1e6)))
    records.append(_rec("forced_map_proper_probe", 0.0 if np.isfinite(probe) else 1.0, 0.0))

    # closed-loop identity: simulation vs map reconstruction
    n_w = maps.n_w
    worst = 0.0
    for _ in range(identity_scenarios):
        sig = compose_signals(200, n_x, n_u, n_d, seed=int(rng.integers(2**31)),
                              amplitudes={"d": 0.5, "zeta": 0.1, "u_s1": 0.3,
                                          "u_s2": 0.2, "beta_f": 0.05, "beta_s2": 0.05})
        x_c = rng.uniform(-1, 1, n_x)
        w_c = rng.uniform(-1, 1, n_w)
        tr = simulate_monolithic(plant, list(bank), sig, x_c, w_c)
        rec = reconstructed_response(maps, sig.stacked_disturbance(), x_c, w_c)
        worst = max(worst, float(np.max(np.abs(tr.outputs().samples - rec.samples))))
    records.append(_rec("closed_loop_identity", worst, 1e-6,
                        f"{identity_scenarios} scenarios x 200 steps"))

    worst = 0.0
    for _ in range(equivalence_scenarios):
        sig = compose_signals(500, n_x, n_u, n_d, seed=int(rng.integers(2**31)),
                              amplitudes={"d": 0.4, "zeta": 0.05, "u_s1": 0.2,
                                          "u_s2": 0.2, "beta_f": 0.02})
        x_c = rng.uniform(-1, 1, n_x)
        w_c = rng.uniform(-1, 1, n_w)
        tm = simulate_monolithic(plant, list(bank), sig, x_c, w_c)
        td = simulate_distributed(plant, list(bank), partition, nb, sig, x_c, w_c)
        err = max(float(np.max(np.abs(tm.x - td.x))), float(np.max(np.abs(tm.u_f - td.u_f))),
                  float(np.max(np.abs(tm.w - td.w))) if tm.w.size else 0.0)
        worst = max(worst, err)
    records.append(_rec("distributed_equivalence", worst, 1e-10,
                        f"{equivalence_scenarios} scenarios x 500 steps"))

    if param is not None and param.n_free:
        worst = 0.0
        for _ in range(closure_draws):
            xr = rng.standard_normal(param.n_free)
            pr = form_nrf_pair(bundle, q_from_x(param, xr))
            worst = max(worst, _comm_pattern_residual(pr.kd, partition, nb, zs))
        records.append(_rec("sparsity_closure", worst, 1e-8,
                            f"{closure_draws} random draws"))

    # prediction models: zero feedthrough and response decomposition
    try:
        models = [prediction_model(maps, partition, i) for i in range(partition.n_areas)]
        records.append(_rec("prediction_model_feedthrough", 0.0, 0.0))
    except Exception as exc:  # NonzeroFeedthroughError
        models = None
        records.append(CheckRecord("prediction_model_feedthrough", 1.0, 0.0, False, str(exc)))
    if models is not None:
        records.append(_rec("response_decomposition",
                            _decomposition_residual(plant, partition, nb, maps, models, rng),
                            1e-8))
    return records


def _comm_pattern_residual(kd, partition: AreaPartition, nb: Neighborhoods, zs) -> float:
    resp = frequency_response(kd, zs)
    n_u = partition.n_u
    worst = 0.0
    for i in range(partition.n_areas):
        rows = partition.indices("u", i)
        for j in range(partition.n_areas):
            if j in nb.of(i):
                continue
            cols = np.concatenate([partition.indices("u", j), n_u + partition.indices("x", j)])
            worst = max(worst, float(np.max(np.abs(resp[:, rows[:, None], cols[None, :]]))))
    return worst


def _decomposition_residual(plant: Plant, partition: AreaPartition, nb: Neighborhoods,
                            maps: ClosedLoopMaps, models, rng) -> float:
    """Reconstruct each area's simulated response from xi/psi/theta/delta."""
    n_x, n_u, n_d = plant.n_x, plant.n_u, plant.n_d
    horizon = 120
    sig = compose_signals(horizon, n_x, n_u, n_d, seed=int(rng.integers(2**31)),
                          amplitudes={"d": 0.4, "zeta": 0.05, "u_s1": 0.3, "u_s2": 0.25,
                                      "beta_s1": 0.03, "beta_s2": 0.03, "beta_f": 0.02})
    x_c = rng.uniform(-1, 1, n_x)
    w_c = rng.uniform(-1, 1, maps.n_w)
    trace = simulate_monolithic(plant, list(maps.bank), sig, x_c, w_c)
    exo = sig.exogenous_only().stacked_disturbance()
    u_s1 = sig.u_s1 if sig.u_s1 is not None else np.zeros((horizon, n_x))
    u_s2 = sig.u_s2 if sig.u_s2 is not None else np.zeros((horizon, n_u))
    worst = 0.0
    for i in range(partition.n_areas):
        others = {
            j: (SignalTrace(u_s1[:, partition.indices("x", j)], sig.start_index),
                SignalTrace(u_s2[:, partition.indices("u", j)], sig.start_index))
            for j in range(partition.n_areas) if j != i
        }
        dec = decompose_response(maps, partition, nb, i, exo, x_c, w_c, others)
        own = models[i].simulate(
            SignalTrace(u_s1[:, partition.indices("x", i)], sig.start_index),
            SignalTrace(u_s2[:, partition.indices("u", i)], sig.start_index))
        total = own.samples + dec.psi.samples + dec.theta.samples + dec.delta.samples
        ref = np.hstack([trace.x[:, partition.indices("x", i)],
                         trace.u_f[:, partition.indices("u", i)]])
        worst = max(worst, float(np.max(np.abs(total - ref))))
    return worst
