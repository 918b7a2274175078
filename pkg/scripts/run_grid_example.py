#!/usr/bin/env python3
"""End-to-end mesh benchmark run: design, verify, simulate, report.

Equivalent to chaining the CLI subcommands; kept as a script so the run
directory and knobs are easy to tweak while experimenting.

    python3 scripts/run_grid_example.py [run_dir] [--seed N] [--q N] [--slack S]
"""

import argparse
import os
import sys
import time

from nrf_forge.cli import main as cli_main
from nrf_forge import io as artifact_io


def run(out: str, seed: int, q: int, slack: float) -> int:
    t0 = time.time()
    rc = cli_main(["example-grid", "--out", out, "--seed", str(seed), "--q", str(q)])
    if rc:
        return rc
    cfg_path = os.path.join(out, "config.json")
    cfg = artifact_io.load_document(cfg_path)
    cfg["synthesis"]["bound_slack"] = slack
    artifact_io.dump_document(cfg, cfg_path)
    for args in (["design", "--config", cfg_path, "--out", out],
                 ["verify", "--out", out],
                 ["simulate", "--out", out, "--seed", str(seed)],
                 ["report", "--out", out]):
        rc = cli_main(args)
        if rc:
            return rc
    print(f"\nfull run finished in {time.time() - t0:.1f} s; artifacts in {out}")
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("out", nargs="?", default="runs/grid_example")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--q", type=int, default=2)
    parser.add_argument("--slack", type=float, default=0.25)
    args = parser.parse_args()
    sys.exit(run(args.out, args.seed, args.q, args.slack))
