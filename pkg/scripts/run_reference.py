#!/usr/bin/env python3
"""Run every config in configs/ and write one JSON report per config."""
import argparse
import json
from pathlib import Path

from qsis.harness import load_config, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", type=Path, default=ROOT / "configs")
    ap.add_argument("--out-dir", type=Path, default=ROOT / "results")
    ap.add_argument("--trials", type=int, help="override the trial count of every config")
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for path in sorted(args.configs.glob("*.json")):
        cfg = load_config(path)
        if args.trials:
            cfg = cfg.replace(trials=args.trials)
        rep = run_experiment(cfg, args.workers)
        (args.out_dir / f"{path.stem}.report.json").write_text(rep.to_json(), encoding="utf-8")
        line = {"config": path.name, "kind": rep.kind, "successes": rep.successes,
                "trials": rep.trials, "prob_lower": rep.prob_lower, "vacuous": rep.vacuous,
                "seconds": round(rep.wall_clock, 2)}
        print(json.dumps(line))


if __name__ == "__main__":
    main()
