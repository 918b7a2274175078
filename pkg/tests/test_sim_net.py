import numpy as np
import pytest

from conftest import deadbeat_bundle
from nrf_forge.closed_loop import build_closed_loop_maps, ic_response
from nrf_forge.errors import AlgebraicLoopError, DimensionMismatchError
from nrf_forge.lti import fir_realization, impulse_response
from nrf_forge.nrf import AreaController, bank_from_pair, form_nrf_pair
from nrf_forge.partition import Neighborhoods, build_partition
from nrf_forge.sim_net import (
    ScenarioSignals,
    compose_signals,
    simulate_distributed,
    simulate_monolithic,
)


@pytest.fixture(scope="module")
def loop(two_area_plant):
    rng = np.random.default_rng(3)
    part = build_partition([(2, 1), (2, 1)])
    nb = Neighborhoods.complete(2)
    bundle = deadbeat_bundle(two_area_plant)
    q = fir_realization([0.05 * rng.standard_normal((2, 4))])
    pair = form_nrf_pair(bundle, q)
    _, bank = bank_from_pair(pair, part)
    maps = build_closed_loop_maps(bundle, q, bank, part)
    return two_area_plant, part, nb, bundle, bank, maps


# ---------------------------------------------------------------------------
# signal composition
# ---------------------------------------------------------------------------

def test_zero_amplitude_gives_zero_signals():
    sig = compose_signals(50, 4, 2, 2, seed=42, amplitudes={"d": 0.0})
    assert np.max(np.abs(sig.stacked_disturbance().samples)) == 0.0


def test_file_provided_disturbance_only():
    d = np.ones((20, 2))
    sig = compose_signals(20, 4, 2, 2, seed=0, traces={"d": d})
    assert np.allclose(sig.d_full, d)
    assert np.max(np.abs(sig.beta_x)) == 0.0
    assert np.max(np.abs(sig.beta_u)) == 0.0


def test_same_seed_reproduces_traces():
    kwargs = dict(amplitudes={"d": 0.5, "zeta": 0.2}, kinds={"d": "gauss"})
    a = compose_signals(64, 4, 2, 2, seed=9, **kwargs)
    b = compose_signals(64, 4, 2, 2, seed=9, **kwargs)
    assert np.array_equal(a.stacked_disturbance().samples, b.stacked_disturbance().samples)
    c = compose_signals(64, 4, 2, 2, seed=10, **kwargs)
    assert not np.array_equal(a.d_full, c.d_full)


def test_compound_channels_recomputed():
    rng = np.random.default_rng(5)
    zeta = rng.standard_normal((10, 4))
    u_s1 = rng.standard_normal((10, 4))
    u_s2 = rng.standard_normal((10, 2))
    sig = ScenarioSignals(10, 4, 2, 2, zeta=zeta, u_s1=u_s1, u_s2=u_s2)
    assert np.allclose(sig.beta_x, zeta + u_s1)
    assert np.allclose(sig.beta_u, u_s2)


def test_horizon_mismatch_rejected():
    with pytest.raises(DimensionMismatchError):
        ScenarioSignals(10, 4, 2, 2, d=np.zeros((5, 2)))


# ---------------------------------------------------------------------------
# monolithic loop
# ---------------------------------------------------------------------------

def test_zero_everything_stays_zero(loop):
    plant, part, nb, bundle, bank, maps = loop
    sig = compose_signals(40, 4, 2, 2, seed=0)
    tr = simulate_monolithic(plant, list(bank), sig, np.zeros(4), np.zeros(maps.n_w))
    assert np.max(np.abs(tr.x)) == 0.0
    assert np.max(np.abs(tr.u_f)) == 0.0


def test_free_response_matches_ic_map(loop):
    plant, part, nb, bundle, bank, maps = loop
    rng = np.random.default_rng(2)
    x_c = rng.uniform(-1, 1, 4)
    w_c = rng.uniform(-1, 1, maps.n_w)
    sig = compose_signals(60, 4, 2, 2, seed=0)
    tr = simulate_monolithic(plant, list(bank), sig, x_c, w_c)
    free = ic_response(maps.initial, np.concatenate([x_c, w_c]), 60)
    assert np.max(np.abs(tr.outputs().samples - free.samples)) <= 1e-9


def test_disturbance_impulse_matches_forced_column(loop):
    plant, part, nb, bundle, bank, maps = loop
    horizon = 50
    d = np.zeros((horizon, 2))
    d[0, 1] = 1.0
    sig = compose_signals(horizon, 4, 2, 2, seed=0, traces={"d": d})
    tr = simulate_monolithic(plant, list(bank), sig, np.zeros(4), np.zeros(maps.n_w))
    col = maps.column_block("d")[1]
    imp = impulse_response(maps.forced, horizon)[:, :, col]
    assert np.max(np.abs(tr.outputs().samples - imp)) <= 1e-9


def test_command_identity_holds_samplewise(loop):
    plant, part, nb, bundle, bank, maps = loop
    sig = compose_signals(40, 4, 2, 2, seed=3,
                          amplitudes={"u_s2": 0.4, "beta_s2": 0.1, "d": 0.2})
    tr = simulate_monolithic(plant, list(bank), sig, np.zeros(4), np.zeros(maps.n_w))
    u_s2 = sig.u_s2 if sig.u_s2 is not None else 0.0
    beta_s2 = sig.beta_s2 if sig.beta_s2 is not None else 0.0
    assert np.allclose(tr.u, tr.u_f + u_s2 + beta_s2)


def test_superposition(loop):
    plant, part, nb, bundle, bank, maps = loop
    rng = np.random.default_rng(4)
    s1 = ScenarioSignals(80, 4, 2, 2, d=rng.standard_normal((80, 2)),
                         zeta=0.1 * rng.standard_normal((80, 4)))
    s2 = ScenarioSignals(80, 4, 2, 2, d=0.3 * rng.standard_normal((80, 2)),
                         u_s1=0.2 * rng.standard_normal((80, 4)))
    both = ScenarioSignals(80, 4, 2, 2, d=s1.d + s2.d, zeta=s1.zeta, u_s1=s2.u_s1)
    z = np.zeros(4)
    zw = np.zeros(maps.n_w)
    t1 = simulate_monolithic(plant, list(bank), s1, z, zw)
    t2 = simulate_monolithic(plant, list(bank), s2, z, zw)
    tb = simulate_monolithic(plant, list(bank), both, z, zw)
    assert np.max(np.abs(tb.x - (t1.x + t2.x))) <= 1e-9
    assert np.max(np.abs(tb.u_f - (t1.u_f + t2.u_f))) <= 1e-9


def test_bounded_response_under_l1_certificate(loop):
    plant, part, nb, bundle, bank, maps = loop
    horizon = 10_000
    sig = compose_signals(horizon, 4, 2, 2, seed=6, amplitudes={"d": 1.0})
    tr = simulate_monolithic(plant, list(bank), sig, np.zeros(4), np.zeros(maps.n_w))
    # l1 certificate: row sums of the absolute impulse response, plus a tail
    # bound from the spectral radius contraction
    K = 400
    imp = impulse_response(maps.forced, K)
    row_l1 = np.sum(np.abs(imp), axis=(0, 2))
    tail = np.sum(np.abs(impulse_response(maps.forced, 2 * K)[K:]), axis=(0, 2))
    bound = (row_l1 + tail * 10.0)[:4] * np.max(np.abs(sig.stacked_disturbance().samples))
    assert np.all(np.max(np.abs(tr.x), axis=0) <= bound + 1e-9)
    assert np.all(np.isfinite(tr.x))


def test_algebraic_loop_detected(loop):
    plant, part, nb, bundle, bank, maps = loop
    bad = []
    for ctrl in bank:
        D = ctrl.D.copy()
        D[0, 0] = 0.5  # feedthrough on a command column closes a loop
        bad.append(AreaController(ctrl.area, ctrl.A, ctrl.B, ctrl.C, D,
                                  ctrl.row_orders, ctrl.w0))
    sig = compose_signals(10, 4, 2, 2, seed=0)
    with pytest.raises(AlgebraicLoopError):
        simulate_monolithic(plant, bad, sig, np.zeros(4), np.zeros(maps.n_w))


# ---------------------------------------------------------------------------
# distributed loop
# ---------------------------------------------------------------------------

def test_distributed_equals_monolithic_complete_sets(loop):
    plant, part, nb, bundle, bank, maps = loop
    rng = np.random.default_rng(8)
    sig = compose_signals(200, 4, 2, 2, seed=8,
                          amplitudes={"d": 0.5, "zeta": 0.1, "u_s1": 0.2, "beta_f": 0.05})
    x_c = rng.uniform(-1, 1, 4)
    w_c = rng.uniform(-1, 1, maps.n_w)
    tm = simulate_monolithic(plant, list(bank), sig, x_c, w_c)
    td = simulate_distributed(plant, list(bank), part, nb, sig, x_c, w_c)
    assert np.max(np.abs(tm.x - td.x)) <= 1e-10
    assert np.max(np.abs(tm.u_f - td.u_f)) <= 1e-10
    assert np.max(np.abs(tm.w - td.w)) <= 1e-10


def test_grid_distributed_equivalence(grid_design, grid_setup):
    plant, part, nb = grid_setup
    bank = list(grid_design.bank)
    maps = grid_design.maps
    rng = np.random.default_rng(9)
    sig = compose_signals(500, 10, 5, 5, seed=9,
                          amplitudes={"d": 0.4, "zeta": 0.05, "u_s1": 0.2, "u_s2": 0.2})
    x_c = rng.uniform(-1, 1, 10)
    w_c = rng.uniform(-1, 1, maps.n_w)
    tm = simulate_monolithic(plant, bank, sig, x_c, w_c)
    td = simulate_distributed(plant, bank, part, nb, sig, x_c, w_c)
    assert np.max(np.abs(tm.x - td.x)) <= 1e-10
    assert np.max(np.abs(tm.u_f - td.u_f)) <= 1e-10


def test_delayed_messages_break_equivalence(grid_design, grid_setup):
    # negative control: the off-spec delayed mode must NOT match
    plant, part, nb = grid_setup
    bank = list(grid_design.bank)
    sig = compose_signals(100, 10, 5, 5, seed=10, amplitudes={"d": 0.5})
    x_c = np.ones(10) * 0.3
    w_c = np.zeros(grid_design.maps.n_w)
    tm = simulate_monolithic(plant, bank, sig, x_c, w_c)
    td = simulate_distributed(plant, bank, part, nb, sig, x_c, w_c,
                              delay_messages=True)
    assert np.max(np.abs(tm.x - td.x)) > 1e-6


def test_controller_state_noise_only_shifts_reported_states(loop):
    # beta_w must not influence the first layer's closed loop: x and u_f are
    # bit-identical; only the reported controller-state trace shifts
    plant, part, nb, bundle, bank, maps = loop
    rng = np.random.default_rng(14)
    base = compose_signals(60, 4, 2, 2, seed=14, amplitudes={"d": 0.4})
    bw = rng.standard_normal((60, maps.n_w))
    noisy = compose_signals(60, 4, 2, 2, seed=14, amplitudes={"d": 0.4},
                            traces={"beta_w": bw})
    x_c = rng.uniform(-1, 1, 4)
    w_c = rng.uniform(-1, 1, maps.n_w)
    t0 = simulate_monolithic(plant, list(bank), base, x_c, w_c)
    t1 = simulate_monolithic(plant, list(bank), noisy, x_c, w_c)
    assert np.array_equal(t0.x, t1.x)
    assert np.array_equal(t0.u_f, t1.u_f)
    assert np.allclose(t1.w - t0.w, bw)


def test_metadata_carried_on_traces(loop):
    plant, part, nb, bundle, bank, maps = loop
    sig = compose_signals(10, 4, 2, 2, seed=77)
    tr = simulate_monolithic(plant, list(bank), sig, np.zeros(4), np.zeros(maps.n_w))
    assert tr.seed == 77
    assert tr.mode == "monolithic"
    assert tr.horizon == 10
