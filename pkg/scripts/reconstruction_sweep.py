#!/usr/bin/env python3
"""Injectivity failure rate of the sample matrix against the oversampling factor nm/cols."""
import argparse
import math

from qsis.harness import ExperimentConfig, SpaceSpec, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", type=int, default=1)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--factors", default="1,2,4,8,16,32")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print("factor,n,m,nm_over_cols,injectivity_failures,trials,max_rel_coeff")
    for fac in map(float, args.factors.split(",")):
        cfg = ExperimentConfig(trials=args.trials, seed=args.seed, space=SpaceSpec(r=args.r),
                               oversample=fac)
        rep = run_experiment(cfg)
        n, m, cols = rep.constants["n"], rep.constants["m"], rep.constants["num_cols"]
        s = rep.summary
        err = s.get("max_rel_coeff", math.nan)
        print(f"{fac:g},{n},{m},{n * m / cols:.2f},{s['injectivity_failures']},{rep.trials},{err:.3g}")


if __name__ == "__main__":
    main()
