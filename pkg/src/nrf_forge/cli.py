"""Command-line entry point.

Subcommands: ``example-grid`` writes a ready-to-run scenario configuration,
``design`` runs the full first-layer synthesis and exports the artifact set,
``verify`` replays the invariant suite on an exported run directory,
``simulate`` produces monolithic and distributed traces, and ``report``
collates everything into one human-readable summary.

Exit codes: 0 success, 2 configuration error, 3 design infeasibility,
4 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from dataclasses import replace

import numpy as np

from . import io as artifact_io
from .closed_loop import build_closed_loop_maps, prediction_model
from .errors import DimensionMismatchError
from .grid import (
    build_grid_plant,
    coefficients_from_dict,
    grid_neighborhoods,
    grid_partition,
    surrogate_coefficients,
)
from .lti import frequency_response, FrequencyGrid
from .match_synth import (
    AlgorithmConfig,
    AlgorithmReport,
    OptimizerSettings,
    run_algorithm1,
)
from .partition import Neighborhoods, build_partition, validate_neighborhoods
from .plant import Plant
from .sim_net import compose_signals, simulate_distributed, simulate_monolithic
from .verify import run_invariant_suite

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# scenario configuration
# ---------------------------------------------------------------------------

def _load_config(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cfg = artifact_io.load_document(path)
    if int(cfg.get("schema_version", 0)) != 1:
        raise ConfigError("config must declare schema_version 1")
    return cfg


def _apply_permutation(M: np.ndarray, rows, cols) -> np.ndarray:
    out = M
    if rows is not None:
        out = out[np.asarray(rows, dtype=int) - 1, :]
    if cols is not None:
        out = out[:, np.asarray(cols, dtype=int) - 1]
    return out


def _plant_from_config(cfg: dict, coeffs_path: str | None) -> Plant:
    if "grid" in cfg:
        doc = dict(cfg["grid"])
        if coeffs_path:
            doc = artifact_io.load_document(coeffs_path)
        coeffs = coefficients_from_dict(doc) if ("h" in doc) else surrogate_coefficients()
        return build_grid_plant(coeffs)
    if "plant" not in cfg:
        raise ConfigError("config needs either a 'plant' or a 'grid' section")
    pl = cfg["plant"]
    try:
        A = np.asarray(pl["A"], dtype=float)
        B_u = np.asarray(pl["B_u"], dtype=float)
        B_d = np.asarray(pl["B_d"], dtype=float)
    except KeyError as exc:
        raise ConfigError(f"plant section is missing {exc}") from exc
    # documented pre-permutation helper: the toolkit needs contiguous
    # ascending area index sets, so interleaved models are reordered here
    sp = pl.get("state_permutation")
    ip = pl.get("input_permutation")
    if sp is not None:
        A = _apply_permutation(_apply_permutation(A, sp, None), None, sp)
        B_u = _apply_permutation(B_u, sp, None)
        B_d = _apply_permutation(B_d, sp, None)
    if ip is not None:
        B_u = _apply_permutation(B_u, None, ip)
    try:
        return Plant(A, B_u, B_d)
    except DimensionMismatchError as exc:
        raise ConfigError(str(exc)) from exc


def _partition_from_config(cfg: dict):
    try:
        part = build_partition([tuple(s) for s in cfg["partition"]])
        nb = Neighborhoods(tuple(frozenset(int(j) - 1 for j in s)
                                 for s in cfg["neighborhoods"]))
        validate_neighborhoods(nb, part.n_areas)
    except (KeyError, ValueError, DimensionMismatchError) as exc:
        raise ConfigError(f"invalid partition/neighborhoods: {exc}") from exc
    return part, nb


def _algorithm_config(cfg: dict, q_override: int | None) -> AlgorithmConfig:
    syn = dict(cfg.get("synthesis", {}))
    if syn.get("norm", "hinf") != "hinf":
        raise ConfigError("only the 'hinf' norm is supported at v1; "
                          "the quadratic-norm route is out of scope")
    return AlgorithmConfig(
        q=int(q_override if q_override is not None else syn.get("q", 2)),
        param_mode=str(syn.get("param_mode", "factored")),
        preserve_diagonal=bool(syn.get("preserve_diagonal", True)),
        gain_strategy=str(syn.get("gain_strategy", "block_diagonalizing_F_deadbeat_L")),
        bezout_grid=int(syn.get("bezout_grid", 512)),
        bound_slack=float(syn.get("bound_slack", 0.0)),
    )


def _optimizer_settings(cfg: dict) -> OptimizerSettings:
    opt = dict(cfg.get("synthesis", {}).get("optimizer", {}))
    base = OptimizerSettings()
    fields = {k: type(getattr(base, k))(v) for k, v in opt.items() if hasattr(base, k)}
    return replace(base, **fields)


def _config_hash(cfg: dict) -> str:
    canon = repr(sorted(artifact_io._plainify(cfg).items())).encode()
    return hashlib.sha256(canon).hexdigest()[:16]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_example_grid(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    coeffs = surrogate_coefficients()
    if args.coeffs:
        coeffs = coefficients_from_dict(artifact_io.load_document(args.coeffs))
    part = grid_partition()
    nb = grid_neighborhoods()
    cfg = {
        "schema_version": 1,
        "grid": {
            "label": coeffs.label,
            "h": list(coeffs.h),
            "damping": list(coeffs.damping),
            "coupling": coeffs.coupling.tolist(),
            "t_s": coeffs.t_s,
        },
        "partition": [[part.size("x", i), part.size("u", i)] for i in range(part.n_areas)],
        "neighborhoods": [sorted(j + 1 for j in nb.of(i)) for i in range(nb.n_areas)],
        "synthesis": {
            "q": args.q if args.q is not None else 2,
            "param_mode": "factored",
            "preserve_diagonal": True,
            "norm": "hinf",
            "bound_slack": 0.25,
            "optimizer": {"seed": 12345},
        },
        "simulation": {
            "horizon": 500,
            "seed": args.seed if args.seed is not None else 7,
            "amplitudes": {"d": 0.5, "zeta": 0.05, "u_s1": 0.2, "u_s2": 0.2, "beta_f": 0.02},
        },
    }
    path = os.path.join(args.out, "config.json")
    artifact_io.dump_document(cfg, path)
    print(f"wrote grid scenario ({coeffs.label} coefficients) to {path}")
    if coeffs.label == "surrogate":
        print("note: surrogate coefficient set; pass --coeffs to use authentic values")
    return 0


def cmd_design(args) -> int:
    cfg = _load_config(args.config)
    plant = _plant_from_config(cfg, args.coeffs)
    partition, nb = _partition_from_config(cfg)
    algo = _algorithm_config(cfg, args.q)
    opts = _optimizer_settings(cfg)
    if args.seed is not None:
        opts = replace(opts, seed=int(args.seed))

    from .match_synth import default_targets
    spec = default_targets(partition, plant.n_d, optimizer=opts)
    result = run_algorithm1(plant, partition, nb, spec, algo)
    if isinstance(result, AlgorithmReport):
        print(f"design infeasible: {result.message}")
        if result.detail is not None:
            print(f"  detail: {result.detail}")
        return EXIT_INFEASIBLE

    out = args.out
    os.makedirs(out, exist_ok=True)
    artifact_io.dump_document(cfg, os.path.join(out, "config.json"))
    artifact_io.export_plant(plant, os.path.join(out, "plant.json"))
    bundle = result.maps.pair.bundle
    artifact_io.export_partition(result.maps.partition, nb, os.path.join(out, "partition.json"))
    artifact_io.export_bundle(bundle, os.path.join(out, "bundle"))
    artifact_io.export_bank(result.bank, partition, os.path.join(out, "bank"))
    artifact_io.export_maps(result.maps, os.path.join(out, "maps"))
    models = [prediction_model(result.maps, partition, i) for i in range(partition.n_areas)]
    artifact_io.export_prediction_models(models, os.path.join(out, "prediction_models"))
    artifact_io.export_parametrization(result.param, result.x, os.path.join(out, "param"))
    _write_synthesis_report(result, out)
    print(f"design complete: objective {result.objective:.6g}, artifacts in {out}")
    return 0


def _write_synthesis_report(result, out: str) -> None:
    N = result.spec.n_areas
    lines = ["constraint,achieved,bound"]
    for i in range(N):
        lines.append(f"gamma_d[{i + 1}],{result.gamma_d[i]:.17g},{result.spec.gamma_bar_d[i]:.17g}")
    for i in range(N):
        for j in range(N):
            lines.append(f"gamma_u[{i + 1};{j + 1}],{result.gamma_u[i, j]:.17g},"
                         f"{result.spec.gamma_bar_u[i, j]:.17g}")
    for i in range(N):
        for j in range(N):
            lines.append(f"gamma_c[{i + 1};{j + 1}],{result.gamma_c[i, j]:.17g},"
                         f"{result.spec.gamma_bar_c[i, j]:.17g}")
    with open(os.path.join(out, "gamma_table.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(os.path.join(out, "objective_trace.csv"), "w") as fh:
        fh.write("step,objective\n")
        for k, v in enumerate(result.objective_log):
            fh.write(f"{k},{v:.17g}\n")
    report = [
        "first-layer synthesis report",
        f"objective (certified): {result.objective:.12g}",
        f"free coefficients: {result.x.size} (nonzero {int(np.sum(result.x != 0))})",
        f"surrogate evaluations: {result.n_evals}",
        f"x: {np.array2string(result.x, precision=6, max_line_width=100)}",
        "constraints at their admissible bounds:",
    ]
    report.extend(f"  - {h}" for h in (result.hints or ["none"]))
    report.append("exported artifacts:")
    report.extend(f"  - {rel}" for rel in (
        "plant.json", "partition.json", "bundle/", "bank/", "maps/",
        "prediction_models/", "param/parametrization.json",
        "gamma_table.csv", "objective_trace.csv"))
    with open(os.path.join(out, "synthesis_report.txt"), "w") as fh:
        fh.write("\n".join(report) + "\n")


def _load_run(out: str):
    plant = artifact_io.load_plant(os.path.join(out, "plant.json"))
    partition, nb = artifact_io.load_partition(os.path.join(out, "partition.json"))
    bundle = artifact_io.load_bundle(os.path.join(out, "bundle"), plant)
    bank = artifact_io.load_bank(os.path.join(out, "bank"), partition)
    param, x = artifact_io.load_parametrization(os.path.join(out, "param"))
    return plant, partition, nb, bundle, bank, param, x


def cmd_verify(args) -> int:
    try:
        plant, partition, nb, bundle, bank, param, x = _load_run(args.out)
    except (OSError, KeyError) as exc:
        print(f"cannot load run directory {args.out}: {exc}")
        return EXIT_CONFIG
    from .sparse_param import q_from_x
    q = q_from_x(param, x)
    maps = build_closed_loop_maps(bundle, q, bank, partition)

    records = run_invariant_suite(plant, partition, nb, bundle, bank, maps, param)
    records.append(_roundtrip_record(maps, args.out))
    lines = [r.line() for r in records]
    report_path = os.path.join(args.out, "verify_report.txt")
    with open(report_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    for line in lines:
        print(line)
    failed = [r for r in records if not r.passed]
    print(f"{len(records) - len(failed)}/{len(records)} checks passed; report at {report_path}")
    return EXIT_VERIFY if failed else 0


def _roundtrip_record(maps, out: str):
    from .verify import CheckRecord
    zs = FrequencyGrid.uniform(32).points
    worst = 0.0
    for name, built in (("forced", maps.forced), ("initial", maps.initial)):
        doc = artifact_io.load_document(os.path.join(out, "maps", f"{name}.json"))
        loaded = artifact_io.realization_from_doc(doc)
        worst = max(worst, float(np.max(np.abs(
            frequency_response(loaded, zs) - frequency_response(built, zs)))))
    return CheckRecord("artifact_roundtrip_eval", worst, 1e-12, worst <= 1e-12)


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config) if args.config else _load_config(
        os.path.join(args.out, "config.json"))
    try:
        plant, partition, nb, bundle, bank, param, x = _load_run(args.out)
    except (OSError, KeyError) as exc:
        print(f"cannot load run directory {args.out}: {exc}")
        return EXIT_CONFIG
    sim = dict(cfg.get("simulation", {}))
    horizon = int(sim.get("horizon", 500))
    seed = int(args.seed if args.seed is not None else sim.get("seed", 0))
    signals = compose_signals(
        horizon, plant.n_x, plant.n_u, plant.n_d, seed=seed,
        amplitudes=sim.get("amplitudes"), kinds=sim.get("kinds"),
    )
    n_w = sum(c.order for c in bank)
    rng = np.random.default_rng(seed + 1)
    x_c = rng.uniform(-1.0, 1.0, plant.n_x)
    w_c = np.zeros(n_w)
    mono = simulate_monolithic(plant, list(bank), signals, x_c, w_c)
    dist = simulate_distributed(plant, list(bank), partition, nb, signals, x_c, w_c)
    tdir = os.path.join(args.out, "traces")
    os.makedirs(tdir, exist_ok=True)
    artifact_io.export_trace_csv(mono, os.path.join(tdir, "monolithic.csv"))
    artifact_io.export_trace_csv(dist, os.path.join(tdir, "distributed.csv"))
    gap = max(float(np.max(np.abs(mono.x - dist.x))), float(np.max(np.abs(mono.u_f - dist.u_f))))
    artifact_io.dump_document({
        "seed": seed,
        "horizon": horizon,
        "config_hash": _config_hash(cfg),
        "monolithic_vs_distributed_max_abs": gap,
        "x_c": list(x_c),
    }, os.path.join(tdir, "metadata.json"))
    print(f"traces written to {tdir}; monolithic-vs-distributed gap {gap:.3e}")
    return 0


def cmd_report(args) -> int:
    out = args.out
    pieces = []
    for name in ("synthesis_report.txt", "verify_report.txt"):
        path = os.path.join(out, name)
        if os.path.exists(path):
            with open(path) as fh:
                pieces.append(f"== {name} ==\n{fh.read().rstrip()}")
    gpath = os.path.join(out, "gamma_table.csv")
    if os.path.exists(gpath):
        with open(gpath) as fh:
            rows = fh.read().strip().splitlines()
        pieces.append("== achieved constraint values ==\n" + "\n".join(rows[:40])
                      + ("\n..." if len(rows) > 40 else ""))
    mpath = os.path.join(out, "traces", "metadata.json")
    if os.path.exists(mpath):
        meta = artifact_io.load_document(mpath)
        pieces.append("== simulation ==\n" + "\n".join(f"{k}: {v}" for k, v in meta.items()))
    if not pieces:
        print(f"nothing to report in {out}")
        return EXIT_CONFIG
    summary = "\n\n".join(pieces) + "\n"
    spath = os.path.join(out, "summary.txt")
    with open(spath, "w") as fh:
        fh.write(summary)
    print(summary)
    print(f"summary written to {spath}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nrf-forge",
        description="distributed controller synthesis, verification and simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("design", cmd_design), ("verify", cmd_verify),
                     ("simulate", cmd_simulate), ("report", cmd_report),
                     ("example-grid", cmd_example_grid)):
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None, help="scenario config document")
        p.add_argument("--out", type=str, required=True, help="run directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--q", type=int, default=None, help="FIR degree of the free parameter")
        p.add_argument("--coeffs", type=str, default=None,
                       help="coefficient document overriding the shipped surrogate")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "design" and not args.config:
        print("design needs --config")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
