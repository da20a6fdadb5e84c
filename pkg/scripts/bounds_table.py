#!/usr/bin/env python3
"""CSV table of the sampling-inequality constants against the sample count.

Shows how far desk-scale sample counts sit from the thresholds at which
the probability bounds stop being vacuous.
"""
import argparse
import csv
import sys

from qsis.bounds import p_min, thm32_constants, thm33_constants
from qsis.harness import ExperimentConfig, build_context, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="JSON config (default: reference settings)")
    ap.add_argument("--sides", default="4,8,16,32,64,128,256,512,1024")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    ctx = build_context(cfg)
    bi = ctx.bound_inputs
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "m", "nm", "p_min", "A_tilde", "B_tilde", "nm_min_32", "prob_lower_32",
                "nm_min_33", "prob_lower_33"])
    for side in map(int, args.sides.split(",")):
        r32 = thm32_constants(bi, cfg.zeta, cfg.params.gamma, side, side)
        r33 = thm33_constants(bi, cfg.params.mu, cfg.params.eta, side, side)
        w.writerow([side, side, side * side, f"{p_min(side, side, bi.d, bi.omega_l1):.6g}",
                    f"{r32.A_tilde:.6g}", f"{r32.B_tilde:.6g}", f"{r32.nm_min:.6g}",
                    f"{r32.prob_lower:.6g}", f"{r33.nm_min:.6g}", f"{r33.prob_lower:.6g}"])
    a = ctx.analysis
    print(f"# d={a.d} C~={a.c_phi_tilde:.4g} a1={a.a1:.4g} a2={a.a2:.4g} |omega|_1={bi.omega_l1:.4g}",
          file=sys.stderr)


if __name__ == "__main__":
    main()
