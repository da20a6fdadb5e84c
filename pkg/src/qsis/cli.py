"""Command-line entry point.

Exit codes: 0 success, 1 usage or validation error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .harness import (
    ConfigError, ExperimentConfig, _jsonable, bound_constants, build_context, load_config,
    run_experiment,
)
from .bounds import thm32_constants

OVERRIDES = ("gamma", "theta", "alpha", "mu", "eta", "zeta")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser, experiment: bool = True):
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    for name in OVERRIDES:
        p.add_argument(f"--{name}", type=float)
    if experiment:
        p.add_argument("--trials", type=int)
        p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qsis", description="Random average sampling experiments on local shift spaces.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    _common(sub.add_parser("bounds", help="closed-form constants as a CSV row"), experiment=False)
    _common(sub.add_parser("verify-lemmas", help="sup-norm, Young and moment checks"))
    si = sub.add_parser("sample-ineq", help="empirical sampling inequality")
    _common(si)
    si.add_argument("--variant", choices=("32", "33"), default="32",
                    help="sampling-inequality-32 (mixed-norm form) or -33 (l1 form)")
    _common(sub.add_parser("reconstruct", help="exact recovery trials"))
    _common(sub.add_parser("montecarlo", help="run the experiment kind named in the config"))
    rp = sub.add_parser("report", help="summarise a saved report")
    rp.add_argument("path", metavar="REPORT")
    rp.add_argument("--out", metavar="PATH")
    rp.add_argument("--format", choices=("json", "csv"), default="csv")
    return ap


def _config(args, kind: str | None) -> ExperimentConfig:
    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {args.config}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
    kw = {}
    if kind is not None:
        kw["kind"] = kind
    for k in ("seed", "n", "m", "p", "q", "trials") + OVERRIDES:
        v = getattr(args, k, None)
        if v is not None:
            kw[k] = v
    return cfg.replace(**kw) if kw else cfg


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v) if isinstance(v, (dict, list)) else v for k, v in r.items()})
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_bounds(args) -> str:
    cfg = _config(args, "bounds")
    ctx = build_context(cfg)
    n, m = ctx.sample_size()
    rep = thm32_constants(ctx.bound_inputs, cfg.zeta, cfg.params.gamma, n, m)
    if args.format == "json":
        return json.dumps(_jsonable({"thm32": rep.to_dict(), "all": bound_constants(ctx)}), indent=2)
    return _csv([_jsonable(rep.to_dict())])


def _cmd_experiment(args, kind: str | None) -> str:
    cfg = _config(args, kind)
    rep = run_experiment(cfg, args.workers)
    if args.format == "csv":
        return _csv(_jsonable(rep.outcomes))
    return rep.to_json()


def _cmd_report(args) -> str:
    try:
        with open(args.path, encoding="utf-8") as fh:
            rep = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"report file not found: {args.path}") from None
    if args.format == "json":
        keys = ("kind", "seed", "trials", "successes", "success_rate", "ci95", "prob_lower",
                "vacuous", "summary")
        return json.dumps({k: rep.get(k) for k in keys}, indent=2)
    row = {k: rep.get(k) for k in ("kind", "seed", "trials", "successes", "success_rate",
                                   "prob_lower", "vacuous")}
    row["ci95_low"], row["ci95_high"] = rep.get("ci95", [None, None])
    return _csv([row])


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "bounds":
            text = _cmd_bounds(args)
        elif args.command == "report":
            text = _cmd_report(args)
        elif args.command == "sample-ineq":
            text = _cmd_experiment(args, f"sampling-inequality-{args.variant}")
        elif args.command == "montecarlo":
            text = _cmd_experiment(args, None)
        else:
            text = _cmd_experiment(args, args.command)
        _emit(text, args.out)
    except (ConfigError, ValueError) as exc:
        print(f"qsis: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"qsis: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
