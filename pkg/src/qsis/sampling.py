"""Sampling densities on K, random sample sets, and the centred statistic Y."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .averaging import AveragingKernel, convolve
from .domain import MixedExponents, ProductDomain, Region
from .space import (
    QsisSpace, SpaceAnalysis, averaged_matrix, averaged_product_matrix, norm_on_ktilde,
)


class ModeError(ValueError):
    pass


def _midpoint_grid(K: Region):
    u, v = K.cell_midpoints(0), K.cell_midpoints(1)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    return uu.ravel(), vv.ravel(), K.axes[0].step * K.axes[1].step


@dataclass(frozen=True, eq=False)
class SamplingDensity:
    """A bounded density on the rectangle K, normalised by the cell-midpoint rule.

    Uniform and Gaussian densities are tensor products with 1-d factors
    available through :meth:`factor`; only those support product-mode draws.
    """
    K: Region
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        raw1, raw2, joint = self._raw()
        if raw1 is not None:
            z = []
            for k, raw in enumerate((raw1, raw2)):
                z.append(float(np.sum(raw(self.K.cell_midpoints(k))) * self.K.axes[k].step))
            object.__setattr__(self, "_z", tuple(z))
        else:
            uu, vv, w = _midpoint_grid(self.K)
            object.__setattr__(self, "_z", (float(np.sum(joint(uu, vv)) * w), 1.0))
        lo, hi = self._raw_extremes()
        zz = self._z[0] * self._z[1]
        object.__setattr__(self, "c_rho_1", lo / zz)
        object.__setattr__(self, "c_rho_2", hi / zz)
        if not self.c_rho_1 > 0:
            raise ValueError("density must be bounded below by a positive constant on K")

    def _raw(self):
        (lo1, hi1), (lo2, hi2) = self.K.bounds
        f = self.family
        if f == "uniform":
            one = lambda x: np.ones_like(np.asarray(x, dtype=float))  # noqa: E731
            return one, one, None
        if f == "gaussian":
            c1, c2 = self.params.get("center", ((lo1 + hi1) / 2, (lo2 + hi2) / 2))
            s1, s2 = self.params.get("sigma", (0.5, 0.5))
            return (lambda x: np.exp(-0.5 * ((np.asarray(x) - c1) / s1) ** 2),
                    lambda x: np.exp(-0.5 * ((np.asarray(x) - c2) / s2) ** 2), None)
        if f == "tilted":
            kappa = float(self.params.get("kappa", 0.5))
            if not abs(kappa) < 1:
                raise ValueError("tilted density needs |kappa| < 1")

            def joint(u, v):
                a = 2 * (np.asarray(u) - lo1) / (hi1 - lo1) - 1
                b = 2 * (np.asarray(v) - lo2) / (hi2 - lo2) - 1
                return 1 + kappa * a * b
            return None, None, joint
        raise ValueError(f"unknown density family {f!r}")

    def _raw_extremes(self) -> tuple[float, float]:
        (lo1, hi1), (lo2, hi2) = self.K.bounds
        if self.family == "uniform":
            return 1.0, 1.0
        if self.family == "gaussian":
            c = self.params.get("center", ((lo1 + hi1) / 2, (lo2 + hi2) / 2))
            s = self.params.get("sigma", (0.5, 0.5))
            hi_v, lo_v = 1.0, 1.0
            for (lo, hi), ck, sk in zip(((lo1, hi1), (lo2, hi2)), c, s):
                near = min(max(ck, lo), hi)
                far = lo if abs(lo - ck) > abs(hi - ck) else hi
                hi_v *= math.exp(-0.5 * ((near - ck) / sk) ** 2)
                lo_v *= math.exp(-0.5 * ((far - ck) / sk) ** 2)
            return lo_v, hi_v
        kappa = abs(float(self.params.get("kappa", 0.5)))
        return 1 - kappa, 1 + kappa

    @property
    def is_product(self) -> bool:
        return self.family in ("uniform", "gaussian")

    def factor(self, k: int, x) -> np.ndarray:
        if not self.is_product:
            raise ModeError(f"{self.family} density is not a tensor product")
        raw = self._raw()[k]
        return raw(x) / self._z[k]

    def __call__(self, u, v) -> np.ndarray:
        raw1, raw2, joint = self._raw()
        if joint is None:
            return raw1(u) * raw2(v) / (self._z[0] * self._z[1])
        return joint(u, v) / self._z[0]

    def quadrature(self, values_at_midpoints: np.ndarray | None = None) -> float:
        """Midpoint-rule integral over K of rho * values (values default to 1)."""
        uu, vv, w = _midpoint_grid(self.K)
        rho = self(uu, vv)
        if values_at_midpoints is None:
            return float(np.sum(rho) * w)
        return float(np.sum(rho * values_at_midpoints) * w)


def make_density(K: Region, family: str = "uniform", **params) -> SamplingDensity:
    return SamplingDensity(K, family, params)


@dataclass(frozen=True)
class SampleSet:
    n: int
    m: int
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    mode: str
    seed: object

    @property
    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Row-major (j, k) flattened coordinates."""
        return self.u.ravel(), self.v.ravel()


def _reject(rng, count, lo, hi, dens, bound) -> np.ndarray:
    """``count`` draws by rejection against a uniform envelope; ``dens`` acts on (count, dim) arrays."""
    lo, hi = np.atleast_1d(lo), np.atleast_1d(hi)
    out = np.empty((0, lo.size))
    while len(out) < count:
        batch = max(64, 2 * (count - len(out)))
        z = lo + (hi - lo) * rng.random((batch, lo.size))
        keep = rng.random(batch) * bound <= dens(z)
        out = np.concatenate([out, z[keep]])
    return out[:count]


def draw_sample_set(rho: SamplingDensity, n: int, m: int, seed, mode: str = "joint") -> SampleSet:
    """n*m random points of K laid out on the (j, k) grid."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = np.random.default_rng(seed)
    (lo1, hi1), (lo2, hi2) = rho.K.bounds
    if mode == "joint":
        z = _reject(rng, n * m, (lo1, lo2), (hi1, hi2),
                    lambda z: rho(z[:, 0], z[:, 1]), rho.c_rho_2)
        u, v = z[:, 0].reshape(n, m), z[:, 1].reshape(n, m)
    elif mode == "product":
        if not rho.is_product:
            raise ModeError("product mode needs a tensor-product density")
        b1 = float(np.max(rho.factor(0, np.linspace(lo1, hi1, 513))))
        b2 = float(np.max(rho.factor(1, np.linspace(lo2, hi2, 513))))
        if rho.family == "gaussian":
            # the factors peak at the clipped centre
            c = rho.params.get("center", ((lo1 + hi1) / 2, (lo2 + hi2) / 2))
            b1 = max(b1, float(rho.factor(0, min(max(c[0], lo1), hi1))))
            b2 = max(b2, float(rho.factor(1, min(max(c[1], lo2), hi2))))
        uj = _reject(rng, n, lo1, hi1, lambda z: rho.factor(0, z[:, 0]), b1)[:, 0]
        vk = _reject(rng, m, lo2, hi2, lambda z: rho.factor(1, z[:, 0]), b2)[:, 0]
        u, v = np.meshgrid(uj, vk, indexing="ij")
    else:
        raise ModeError(f"unknown sampling mode {mode!r}")
    return SampleSet(n, m, u, v, mode, seed)


class YStatistic:
    """Y(f) at points: |(f*omega)(point)| minus the rho-weighted mean of |f*omega| over K.

    ``conv_at(u, v)`` returns (f*omega) at points of K.  The mean is computed
    once by the cell-midpoint rule and cached.
    """

    def __init__(self, conv_at, density: SamplingDensity):
        self.conv_at = conv_at
        self.density = density
        uu, vv, _ = _midpoint_grid(density.K)
        self.mid_abs = np.abs(conv_at(uu, vv))
        self.expectation = density.quadrature(self.mid_abs)

    @classmethod
    def for_function(cls, f, kernel: AveragingKernel, domain: ProductDomain, density: SamplingDensity):
        return cls(lambda u, v: convolve(f, kernel, domain, u, v), density)

    @classmethod
    def for_element(cls, space: QsisSpace, kernel: AveragingKernel, density: SamplingDensity, c,
                    mid_matrix: np.ndarray | None = None):
        c = np.asarray(getattr(c, "vector", c))
        if mid_matrix is None:
            mid_matrix = midpoint_matrix(space, kernel, density)
        obj = cls.__new__(cls)
        obj.conv_at = lambda u, v: averaged_matrix(space, kernel, u, v) @ c
        obj.density = density
        obj.mid_abs = np.abs(mid_matrix @ c)
        obj.expectation = density.quadrature(obj.mid_abs)
        return obj

    def __call__(self, u, v) -> np.ndarray:
        if not np.all(self.density.K.contains_points(u, v)):
            raise ValueError("sample point outside K")
        return np.abs(self.conv_at(u, v)) - self.expectation

    def grid_mean(self) -> float:
        """rho-weighted midpoint mean of Y; zero up to roundoff by construction."""
        return self.density.quadrature(self.mid_abs - self.expectation)


def y_statistic(f, u, v, density: SamplingDensity, kernel: AveragingKernel, domain: ProductDomain):
    return YStatistic.for_function(f, kernel, domain, density)(u, v)


def midpoint_matrix(space: QsisSpace, kernel: AveragingKernel, density: SamplingDensity) -> np.ndarray:
    K = density.K
    return averaged_product_matrix(space, kernel, K.cell_midpoints(0), K.cell_midpoints(1))


def empirical_y_moments(space: QsisSpace, analysis: SpaceAnalysis, kernel: AveragingKernel,
                        density: SamplingDensity, c_f, c_g, trials: int, seed,
                        e: MixedExponents, tol: float = 1e-12) -> dict:
    """Monte Carlo moments of Y against the deterministic bounds on Y and its increments."""
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    c_f = np.asarray(getattr(c_f, "vector", c_f))
    c_g = np.asarray(getattr(c_g, "vector", c_g))
    mid = midpoint_matrix(space, kernel, density)
    pts = draw_sample_set(density, trials, 1, seed)
    u, v = pts.points
    A = averaged_matrix(space, kernel, u, v)
    w1 = kernel.l1_norm

    def ystat(c):
        y = YStatistic.for_element(space, kernel, density, c, mid)
        return np.abs(A @ c) - y.expectation, y

    yf, Yf = ystat(c_f)
    yg, _ = ystat(c_g)
    diff = yf - yg
    sup_fg = space.sup_norm(c_f - c_g)
    nrm = float(norm_on_ktilde(space, c_f, e)[0])
    c_unit = c_f / nrm if nrm > 0 else c_f
    yu, _ = ystat(c_unit)
    radius = analysis.c_phi_tilde / analysis.a1 * w1
    mean, std = float(np.mean(yf)), float(np.std(yf, ddof=1))
    out = {
        "trials": trials,
        "mean": mean,
        "std": std,
        "stderr": std / math.sqrt(trials),
        "clt_ok": abs(mean) <= 3 * std / math.sqrt(trials),
        "grid_mean": Yf.grid_mean(),
        "b_value": float(np.max(np.abs(diff))),
        "b_bound": 2 * sup_fg * w1,
        "c_value": float(np.var(diff)),
        "c_bound": 4 * sup_fg ** 2 * w1 ** 2,
        "d_value": float(np.max(np.abs(yu))),
        "d_bound": radius,
        "e_value": float(np.var(yu)),
        "e_bound": radius ** 2,
        "a_exact": analysis.a_exact,
    }
    for k in "bcde":
        out[f"{k}_ok"] = bool(out[f"{k}_value"] <= out[f"{k}_bound"] + tol)
    return out
