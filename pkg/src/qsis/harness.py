"""Experiment configuration, seeded trial runner and Monte Carlo reports."""
from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import binomtest

from .averaging import AveragingKernel, box_kernel, gaussian_kernel, young_check_mixed
from .bounds import BoundInputs, covering_bound, p_min, thm32_constants, thm33_constants
from .domain import INF, MixedExponents, build_axis, make_product_domain, seq_mixed_norm
from .reconstruction import (
    INJECTIVE_TOL, NotInjectiveError, assemble_matrix, beta_estimate, reconstruct, solve_dual,
)
from .sampling import draw_sample_set, empirical_y_moments, make_density
from .space import (
    analyze_space, averaged_matrix, build_space, classify_membership, coeff_norms,
    make_bspline_generators, make_shift_system, norm_on_ktilde, random_unit_element, shift_extent,
)

KINDS = ("verify-lemmas", "sampling-inequality-32", "sampling-inequality-33", "reconstruct", "bounds")
MEMBERSHIP_RETRIES = 64


class ConfigError(ValueError):
    pass


def _exp_value(x):
    if isinstance(x, str):
        if x.lower() in ("inf", "infinity"):
            return INF
        raise ConfigError(f"bad exponent {x!r}")
    return float(x)


@dataclass
class AxisSpec:
    kind: str = "interval"
    start: float = -0.5
    end: float = 1.5
    num_points: int = 128


@dataclass
class DomainSpec:
    axes: list = field(default_factory=lambda: [AxisSpec(), AxisSpec()])
    K: list = field(default_factory=lambda: [[0.0, 1.0], [0.0, 1.0]])
    W: list = field(default_factory=lambda: [[-0.25, 0.25], [-0.25, 0.25]])


@dataclass
class SpaceSpec:
    family: str = "bspline"
    order: int = 1
    scale: float = 0.5
    r: int = 1
    delta: list = field(default_factory=lambda: [0.5, 0.5])
    jitter: float = 0.25
    shift_seed: int = 0


@dataclass
class KernelSpec:
    family: str = "box"
    mass: float = 1.0
    sigma: float = 0.1
    phase: float = 0.0


@dataclass
class DensitySpec:
    family: str = "uniform"
    params: dict = field(default_factory=dict)
    mode: str = "joint"


@dataclass
class Params:
    gamma: float = 0.5
    theta: float = 0.1
    alpha: float = 1.0
    mu: float = 0.2
    eta: float = 0.1
    zeta: float | None = None


@dataclass
class ExperimentConfig:
    kind: str = "reconstruct"
    domain: DomainSpec = field(default_factory=DomainSpec)
    space: SpaceSpec = field(default_factory=SpaceSpec)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    density: DensitySpec = field(default_factory=DensitySpec)
    p: float = 2.0
    q: float = 2.0
    trials: int = 100
    n: int | None = None
    m: int | None = None
    seed: int = 0
    probes: int = 256
    moment_trials: int = 10000
    oversample: float = 16.0
    params: Params = field(default_factory=Params)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        for k in ("n", "m"):
            v = getattr(self, k)
            if v is not None and v < 1:
                raise ConfigError(f"{k} must be positive")
        if self.oversample < 1:
            raise ConfigError("oversample must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        try:
            MixedExponents(_exp_value(self.p), _exp_value(self.q))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        pr = self.params
        if not 0 < pr.gamma < 1:
            raise ConfigError("gamma must lie in (0, 1)")
        if not 0 < pr.mu <= 1:
            raise ConfigError("mu must lie in (0, 1]")
        if pr.alpha <= 0 or pr.theta < 0 or pr.eta <= 0:
            raise ConfigError("alpha and eta must be positive, theta non-negative")
        if pr.zeta is not None and pr.zeta <= 0:
            raise ConfigError("zeta must be positive")

    @property
    def exponents(self) -> MixedExponents:
        return MixedExponents(_exp_value(self.p), _exp_value(self.q))

    @property
    def zeta(self) -> float:
        pr = self.params
        return pr.zeta if pr.zeta is not None else pr.theta / pr.alpha

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            if "domain" in d:
                dd = dict(d["domain"])
                if "axes" in dd:
                    dd["axes"] = [a if isinstance(a, AxisSpec) else AxisSpec(**a) for a in dd["axes"]]
                d["domain"] = DomainSpec(**dd)
            for key, typ in (("space", SpaceSpec), ("kernel", KernelSpec),
                             ("density", DensitySpec), ("params", Params)):
                if key in d and not isinstance(d[key], typ):
                    d[key] = typ(**d[key])
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def replace(self, **kw) -> "ExperimentConfig":
        d = self.to_dict()
        for k, v in kw.items():
            if k in ("gamma", "theta", "alpha", "mu", "eta", "zeta"):
                d["params"][k] = v
            else:
                d[k] = v
        return ExperimentConfig.from_dict(d)


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_json(fh.read())


@dataclass(eq=False)
class Context:
    config: ExperimentConfig
    domain: object
    space: object
    analysis: object
    kernel: AveragingKernel
    density: object
    e: MixedExponents

    @property
    def bound_inputs(self) -> BoundInputs:
        a = self.analysis
        mu1, mu2 = self.domain.mu
        return BoundInputs(a.d, a.c_phi_tilde, a.a1, self.kernel.l1_norm, mu1, mu2,
                           self.density.c_rho_1, self.density.c_rho_2,
                           self.e.p, self.e.q)

    def sample_size(self) -> tuple[int, int]:
        cfg = self.config
        if cfg.n is not None and cfg.m is not None:
            return cfg.n, cfg.m
        side = math.ceil(math.sqrt(cfg.oversample * self.space.num_cols))
        return cfg.n or side, cfg.m or side


def _kernel(spec: KernelSpec, W) -> AveragingKernel:
    if spec.family == "box":
        k = box_kernel(W, spec.mass)
    elif spec.family == "gaussian":
        k = gaussian_kernel(W, spec.sigma, spec.mass)
    else:
        raise ConfigError(f"unknown kernel family {spec.family!r}")
    if spec.phase:
        ph = np.exp(1j * spec.phase)
        f1, f2 = k.factors
        k = AveragingKernel(k.region, k.values * ph, (f1 * ph, f2), k.name + "-complex")
    return k


def build_context(cfg: ExperimentConfig) -> Context:
    axes = tuple(build_axis(a.kind, a.start, a.end, a.num_points) for a in cfg.domain.axes)
    if len(axes) != 2:
        raise ConfigError("exactly two axes are required")
    dom = make_product_domain(axes, cfg.domain.K, cfg.domain.W)
    sp = cfg.space
    if sp.family != "bspline":
        raise ConfigError(f"unknown generator family {sp.family!r}")
    gens = make_bspline_generators(sp.order, sp.scale, sp.r)
    shifts = make_shift_system(sp.delta[0], sp.delta[1], sp.jitter, sp.shift_seed,
                               shift_extent(dom, gens, 0, sp.delta[0]),
                               shift_extent(dom, gens, 1, sp.delta[1]))
    space = build_space(dom, gens, shifts)
    e = cfg.exponents
    analysis = analyze_space(space, e, cfg.probes, cfg.seed)
    kernel = _kernel(cfg.kernel, dom.W)
    dens = make_density(dom.K, cfg.density.family, **cfg.density.params)
    return Context(cfg, dom, space, analysis, kernel, dens, e)


@lru_cache(maxsize=8)
def _cached_context(cfg_json: str) -> Context:
    return build_context(ExperimentConfig.from_json(cfg_json))


def trial_seed(master: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master), int(trial)])


def _sample_values(ctx: Context, c, samples) -> np.ndarray:
    u, v = samples.points
    vals = (averaged_matrix(ctx.space, ctx.kernel, u, v) @ c).reshape(samples.n, samples.m)
    return vals


def _draw_member(ctx: Context, rng_seed, predicate):
    """Draw unit elements until ``predicate(f, c)`` returns a membership dict that is truthy."""
    children = rng_seed.spawn(MEMBERSHIP_RETRIES)
    for attempt, child in enumerate(children):
        f, c = random_unit_element(ctx.space, ctx.e, child)
        mem = predicate(f, c)
        if mem is not None:
            return f, c, mem, attempt + 1
    return None, None, None, MEMBERSHIP_RETRIES


def _trial_thm32(ctx: Context, i: int, ss) -> dict:
    cfg, pr = ctx.config, ctx.config.params
    n, m = ctx.sample_size()
    rep = thm32_constants(ctx.bound_inputs, cfg.zeta, pr.gamma, n, m)
    s_f, s_pts = ss.spawn(2)

    def member(f, c):
        f2 = f * pr.alpha
        mem = classify_membership(f2, None, pr.theta, pr.alpha, pr.mu, ctx.kernel, ctx.domain, ctx.e)
        return mem if mem["in_V_pq_alpha_theta"] else None

    f, c, mem, attempts = _draw_member(ctx, s_f, member)
    if f is None:
        return {"trial": i, "membership": False, "attempts": attempts, "pass": False}
    cv = c.vector * pr.alpha
    samples = draw_sample_set(ctx.density, n, m, s_pts, cfg.density.mode)
    norm = seq_mixed_norm(_sample_values(ctx, cv, samples), ctx.e)
    fn = mem["f_pq"]
    lower, upper = rep.A_tilde * fn, rep.B_tilde * fn
    return {"trial": i, "membership": True, "attempts": attempts, "f_norm": fn,
            "sample_norm": norm, "lower": lower, "upper": upper,
            "pass": bool(lower <= norm <= upper)}


def _trial_thm33(ctx: Context, i: int, ss) -> dict:
    cfg, pr = ctx.config, ctx.config.params
    n, m = ctx.sample_size()
    rep = thm33_constants(ctx.bound_inputs, pr.mu, pr.eta, n, m)
    s_f, s_pts = ss.spawn(2)

    def member(f, c):
        mem = classify_membership(f, None, 0.0, INF, pr.mu, ctx.kernel, ctx.domain, ctx.e)
        return mem if mem["in_V_omega_mu"] else None

    f, c, mem, attempts = _draw_member(ctx, s_f, member)
    if f is None:
        return {"trial": i, "membership": False, "attempts": attempts, "pass": False}
    samples = draw_sample_set(ctx.density, n, m, s_pts, cfg.density.mode)
    total = float(np.sum(np.abs(_sample_values(ctx, c.vector, samples))))
    scale = n * m * ctx.kernel.l1_norm * mem["f_pq"]
    lower, upper = scale * rep.lower_factor, scale * rep.upper_factor
    return {"trial": i, "membership": True, "attempts": attempts, "sample_l1": total,
            "lower": lower, "upper": upper, "pass": bool(lower <= total <= upper)}


@lru_cache(maxsize=8)
def _linkage_constant(cfg_json: str) -> float | None:
    """A~ of the sampling inequality at zeta = beta^/a2, or None when it is undefined."""
    ctx = _cached_context(cfg_json)
    beta = beta_estimate(ctx.space, ctx.kernel, ctx.e, seed=ctx.config.seed)
    if beta.hypothesis_failed:
        return None
    try:
        bi = ctx.bound_inputs
    except ValueError:
        return None
    n, m = ctx.sample_size()
    zeta = beta.beta / ctx.analysis.a2
    return thm32_constants(bi, zeta, ctx.config.params.gamma, n, m).A_tilde


def _linkage(ctx: Context, M: np.ndarray) -> dict:
    """Lower sampling inequality tested on the weakest direction of M.

    If it holds there, it bounds sigma_min(M) away from zero, so M must be
    injective; a violation of that implication is a counterexample.
    """
    A_t = _linkage_constant(ctx.config.to_json())
    if A_t is None or M.shape[0] < M.shape[1] or not (ctx.e.p == 2 and ctx.e.q == 2):
        return {"linkage_event": None, "linkage_ok": True}
    _, s, Vh = np.linalg.svd(M, full_matrices=False)
    c = Vh[-1].conj()
    fn = float(norm_on_ktilde(ctx.space, c, ctx.e)[0])
    injective = bool(s[-1] > INJECTIVE_TOL * s[0])
    if A_t * fn <= INJECTIVE_TOL * s[0]:
        # the certified lower bound sits below floating-point resolution of sigma_min
        return {"linkage_event": None, "linkage_ok": True}
    event = bool(A_t * fn <= s[-1])
    return {"linkage_event": event, "linkage_ok": bool(injective or not event)}


def _trial_reconstruct(ctx: Context, i: int, ss) -> dict:
    cfg = ctx.config
    n, m = ctx.sample_size()
    s_f, s_pts = ss.spawn(2)
    _, c = random_unit_element(ctx.space, ctx.e, s_f)
    samples = draw_sample_set(ctx.density, n, m, s_pts, cfg.density.mode)
    M = assemble_matrix(ctx.space, ctx.kernel, samples)
    S = M.values @ c.vector
    out = {"trial": i, "n": n, "m": m,
           "l1_ratio": float(np.sum(np.abs(S)) / coeff_norms(ctx.space, c.vector, ctx.e)[0])}
    out.update(_linkage(ctx, M.values))
    try:
        dual = solve_dual(M, ctx.space)
    except NotInjectiveError as exc:
        out.update(injective=False, gap=exc.gap, pass_=False)
        out["pass"] = out.pop("pass_")
        return out
    rep = reconstruct(S, dual, ctx.space, M, ctx.e, c, spot_points=100, seed=i)
    s = dual.singular_values
    out.update(injective=True, gap=float(s[-1] / s[0]), **rep.to_dict())
    out["pass"] = bool(max(rep.rel_coeff, rep.rel_pq) <= 1e-8)
    return out


def _trial_lemmas(ctx: Context, i: int, ss) -> dict:
    f, c = random_unit_element(ctx.space, ctx.e, ss)
    a = ctx.analysis
    sup = ctx.space.sup_norm(c)
    bound = a.c_phi_tilde / a.a1
    young = young_check_mixed(f, ctx.kernel, ctx.domain.K, ctx.e)
    ok_sup = sup <= bound + 1e-9
    oky = min(young.values()) >= -1e-12
    return {"trial": i, "sup": sup, "sup_bound": bound, "sup_ok": bool(ok_sup),
            "young_pq": young["pq"], "young_inf": young["inf"],
            "pass": bool((ok_sup or not a.a_exact) and oky)}


_TRIALS = {
    "sampling-inequality-32": _trial_thm32,
    "sampling-inequality-33": _trial_thm33,
    "reconstruct": _trial_reconstruct,
    "verify-lemmas": _trial_lemmas,
}


def run_trial(cfg_json: str, index: int) -> dict:
    ctx = _cached_context(cfg_json)
    try:
        return _TRIALS[ctx.config.kind](ctx, index, trial_seed(ctx.config.seed, index))
    except Exception as exc:  # annotate and re-raise in the parent
        raise RuntimeError(f"trial {index}: {type(exc).__name__}: {exc}") from exc


def _run_chunk(args) -> list:
    cfg_json, indices = args
    return [run_trial(cfg_json, i) for i in indices]


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("QSIS_WORKERS", "1")))
    except ValueError:
        return 1


def run_trials(cfg: ExperimentConfig, workers: int | None = None) -> list[dict]:
    workers = default_workers() if workers is None else max(1, int(workers))
    cfg_json = cfg.to_json()
    idx = list(range(cfg.trials))
    if workers == 1:
        return _run_chunk((cfg_json, idx))
    chunks = [idx[k::workers] for k in range(workers)]
    chunks = [ch for ch in chunks if ch]
    with ProcessPoolExecutor(max_workers=len(chunks)) as ex:
        parts = list(ex.map(_run_chunk, [(cfg_json, ch) for ch in chunks]))
    merged = [o for part in parts for o in part]
    return sorted(merged, key=lambda o: o["trial"])


@dataclass
class MonteCarloReport:
    kind: str
    seed: int
    trials: int
    successes: int
    success_rate: float
    ci95: tuple
    prob_lower: float | None
    vacuous: bool | None
    constants: dict
    summary: dict
    outcomes: list
    config: dict
    wall_clock: float = 0.0

    def to_dict(self, include_clock: bool = True) -> dict:
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        if not include_clock:
            d.pop("wall_clock")
        return d

    def to_json(self, include_clock: bool = True) -> str:
        return json.dumps(_jsonable(self.to_dict(include_clock)), indent=2)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def wilson_interval(k: int, n: int) -> tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def bound_constants(ctx: Context) -> dict:
    """Every closed-form constant for the config, recomputed from the bound calculator."""
    cfg, pr = ctx.config, ctx.config.params
    n, m = ctx.sample_size()
    out = {"space": ctx.analysis.to_dict(), "num_cols": ctx.space.num_cols, "n": n, "m": m,
           "omega_l1": ctx.kernel.l1_norm,
           "c_rho_1": ctx.density.c_rho_1, "c_rho_2": ctx.density.c_rho_2,
           "mu1": ctx.domain.mu[0], "mu2": ctx.domain.mu[1]}
    try:
        bi = ctx.bound_inputs
    except ValueError as exc:
        out["bound_inputs_error"] = str(exc)
        return out
    out["covering_eta"] = covering_bound(bi.d, bi.c_phi_tilde, bi.a1, pr.eta)
    out["p_min"] = p_min(n, m, bi.d, bi.omega_l1)
    out["thm32"] = thm32_constants(bi, cfg.zeta, pr.gamma, n, m).to_dict()
    try:
        out["thm33"] = thm33_constants(bi, pr.mu, pr.eta, n, m).to_dict()
    except ValueError as exc:
        out["thm33_error"] = str(exc)
    return out


def _summary(kind: str, outcomes: list, ctx: Context) -> dict:
    if kind == "reconstruct":
        inj = [o for o in outcomes if o["injective"]]
        s = {"injectivity_failures": len(outcomes) - len(inj),
             "linkage_counterexamples": sum(not o["linkage_ok"] for o in outcomes),
             "linkage_events": sum(o["linkage_event"] is True for o in outcomes),
             "linkage_undecidable": sum(o["linkage_event"] is None for o in outcomes)}
        if inj:
            for k in ("rel_coeff", "rel_pq", "rel_inf", "spot_check"):
                s[f"max_{k}"] = max(o[k] for o in inj)
            s["max_condition"] = max(o["condition"] for o in inj)
        ratios = [o["l1_ratio"] for o in outcomes]
        s["l1_ratio_min"], s["l1_ratio_max"] = min(ratios), max(ratios)
        s["beta_hat"] = beta_estimate(ctx.space, ctx.kernel, ctx.e, seed=ctx.config.seed).beta
        return s
    if kind in ("sampling-inequality-32", "sampling-inequality-33"):
        return {"membership_failures": sum(not o["membership"] for o in outcomes),
                "label": "per-function empirical rate; the bound holds uniformly over the class, so this only checks a necessary condition"}
    if kind == "verify-lemmas":
        mom = empirical_y_moments(
            ctx.space, ctx.analysis, ctx.kernel, ctx.density,
            random_unit_element(ctx.space, ctx.e, trial_seed(ctx.config.seed, 10 ** 6))[1],
            random_unit_element(ctx.space, ctx.e, trial_seed(ctx.config.seed, 10 ** 6 + 1))[1],
            ctx.config.moment_trials, trial_seed(ctx.config.seed, 10 ** 6 + 2), ctx.e)
        return {"sup_bound_violations": sum(not o["sup_ok"] for o in outcomes),
                "min_young_slack": min(min(o["young_pq"], o["young_inf"]) for o in outcomes),
                "a_exact": ctx.analysis.a_exact, "moments": mom}
    return {}


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> MonteCarloReport:
    t0 = time.perf_counter()
    ctx = _cached_context(cfg.to_json())
    constants = bound_constants(ctx)
    # surface precondition failures before any trial runs
    if cfg.kind == "sampling-inequality-32":
        thm32_constants(ctx.bound_inputs, cfg.zeta, cfg.params.gamma, *ctx.sample_size())
    elif cfg.kind == "sampling-inequality-33":
        thm33_constants(ctx.bound_inputs, cfg.params.mu, cfg.params.eta, *ctx.sample_size())
    if cfg.kind == "bounds":
        outcomes = []
    else:
        outcomes = run_trials(cfg, workers)
    succ = sum(bool(o["pass"]) for o in outcomes)
    total = len(outcomes)
    prob, vac = None, None
    if cfg.kind == "sampling-inequality-32" and "thm32" in constants:
        prob, vac = constants["thm32"]["prob_lower"], constants["thm32"]["vacuous"]
    elif cfg.kind == "sampling-inequality-33" and "thm33" in constants:
        prob, vac = constants["thm33"]["prob_lower"], constants["thm33"]["vacuous"]
    rate = succ / total if total else math.nan
    ci = wilson_interval(succ, total) if total else (math.nan, math.nan)
    return MonteCarloReport(cfg.kind, cfg.seed, total, succ, rate, ci, prob, vac, constants,
                            _summary(cfg.kind, outcomes, ctx) if total else {},
                            outcomes, cfg.to_dict(), time.perf_counter() - t0)


__all__ = [
    "ExperimentConfig", "AxisSpec", "DomainSpec", "SpaceSpec", "KernelSpec", "DensitySpec",
    "Params", "ConfigError", "load_config", "Context", "build_context", "trial_seed",
    "run_trial", "run_trials", "run_experiment", "MonteCarloReport", "wilson_interval",
    "bound_constants", "default_workers", "KINDS",
]
