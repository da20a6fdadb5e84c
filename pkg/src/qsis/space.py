"""Generators, separated shift systems and the space they span on K - W.

An element of the space is ``f = sum_{i,s,t} c_i(s,t) phi_i(. - x_s, . - y_t)``
restricted to the enlarged window K - W.  Only the finitely many shifts whose
support meets that window carry coefficients ("active" shifts).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .averaging import AveragingKernel, conv_l1_holder_factor, convolve_grid
from .domain import (
    INF, Axis, GridFunction, MixedExponents, ProductDomain,
    mixed_norm_array, seq_mixed_norm,
)

RANK_TOL = 1e-10


class DegenerateSpaceError(ValueError):
    pass


class ConventionError(ValueError):
    pass


class ParameterError(ValueError):
    pass


def cardinal_bspline(order: int, x) -> np.ndarray:
    """Cardinal B-spline of the given order, supported on [0, order + 1]."""
    x = np.asarray(x, dtype=float)
    if order == 0:
        return ((x >= 0) & (x < 1)).astype(float)
    out = np.zeros_like(x)
    for k in range(order + 2):
        out += (-1) ** k * math.comb(order + 1, k) * np.clip(x - k, 0, None) ** order
    out /= math.factorial(order)
    inside = (x > 0) & (x < order + 1)
    return np.where(inside, np.clip(out, 0.0, None), 0.0)


@dataclass(frozen=True)
class Generator:
    """Tensor-product B-spline ``B(u/a1 - o1) B(v/a2 - o2)``."""
    order: int
    scale: tuple[float, float]
    offset: tuple[float, float] = (0.0, 0.0)

    def factor(self, k: int, x) -> np.ndarray:
        return cardinal_bspline(self.order, np.asarray(x, dtype=float) / self.scale[k] - self.offset[k])

    def __call__(self, u, v) -> np.ndarray:
        return self.factor(0, u) * self.factor(1, v)

    def support(self, k: int) -> tuple[float, float]:
        a, o = self.scale[k], self.offset[k]
        return (a * o, a * (o + self.order + 1))

    def knots(self, k: int) -> np.ndarray:
        return self.scale[k] * (self.offset[k] + np.arange(self.order + 2))


@dataclass(frozen=True)
class GeneratorSet:
    generators: tuple[Generator, ...]

    @property
    def r(self) -> int:
        return len(self.generators)

    @property
    def continuous(self) -> bool:
        return all(g.order >= 1 for g in self.generators)

    @property
    def omega(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Union support rectangle of all generators."""
        return tuple(
            (min(g.support(k)[0] for g in self.generators),
             max(g.support(k)[1] for g in self.generators))
            for k in range(2)
        )


def make_bspline_generators(order: int, scale: float, r: int = 1) -> GeneratorSet:
    """``r`` tensor-product cardinal B-splines.

    Generator ``i`` has order ``order + i`` and is dilated so that every
    generator keeps the support ``[0, (order + 1) * scale]^2``.  A common
    support rectangle keeps the active shift set identical for all
    generators, so no coefficient column vanishes on K - W.
    """
    if order not in (0, 1, 2, 3) or order + r - 1 > 3:
        raise ParameterError(f"unsupported B-spline order {order} with r={r} (orders up to 3)")
    if scale <= 0 or r < 1:
        raise ParameterError("scale must be positive and r >= 1")
    width = (order + 1) * scale
    gens = []
    for i in range(r):
        a = width / (order + i + 1)
        gens.append(Generator(order + i, (a, a)))
    return GeneratorSet(tuple(gens))


@dataclass(frozen=True)
class ShiftSystem:
    X: np.ndarray = field(repr=False)
    Y: np.ndarray = field(repr=False)
    rad1: float
    rad2: float
    s_labels: np.ndarray = field(repr=False)
    t_labels: np.ndarray = field(repr=False)

    def check_separation(self, axes: tuple[Axis, Axis] | None = None) -> bool:
        for k, (pts, rad) in enumerate(((self.X, self.rad1), (self.Y, self.rad2))):
            if rad <= 0:
                return False
            if len(pts) < 2:
                continue
            if axes is not None:
                d = axes[k].gap(pts[:, None], pts[None, :])
            else:
                d = np.abs(pts[:, None] - pts[None, :])
            np.fill_diagonal(d, np.inf)
            if d.min() < 2 * rad - 1e-12:
                return False
        return True


def _lattice(delta: float, extent, jitter: float, rng) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = extent
    labels = np.arange(math.ceil(lo / delta - 1e-9), math.floor(hi / delta + 1e-9) + 1)
    jit = rng.uniform(-1.0, 1.0, size=labels.size) * jitter * delta / 2
    return labels, labels * delta + jit


def make_shift_system(delta1: float, delta2: float, jitter: float, seed: int,
                      extent1=(-4.0, 4.0), extent2=(-4.0, 4.0)) -> ShiftSystem:
    """Perturbed lattice ``x_s = s*delta1 + d_s`` with ``|d_s| <= jitter*delta1/2``."""
    if delta1 <= 0 or delta2 <= 0:
        raise ParameterError("lattice steps must be positive")
    if not 0 <= jitter < 1:
        raise ParameterError(f"jitter must lie in [0, 1), got {jitter}")
    rng = np.random.default_rng(seed)
    s_lab, X = _lattice(delta1, extent1, jitter, rng)
    t_lab, Y = _lattice(delta2, extent2, jitter, rng)
    return ShiftSystem(X, Y, delta1 * (1 - jitter) / 2, delta2 * (1 - jitter) / 2, s_lab, t_lab)


def _overlap(axis: Axis, a: float, b: float, lo: float, hi: float) -> bool:
    """Does [a, b] meet [lo, hi] in positive length (modulo the period on cyclic axes)?"""
    tol = 1e-12 * max(1.0, abs(hi - lo))
    if axis.kind == "cyclic":
        if hi - lo >= axis.period - tol:
            return b - a > tol
        P = axis.period
        k = math.floor((a - lo) / P)
        return any(min(b + j * P, hi) - max(a + j * P, lo) > tol for j in (-k - 1, -k, -k + 1))
    return min(b, hi) - max(a, lo) > tol


def active_shifts(domain: ProductDomain, gens: GeneratorSet, shifts: ShiftSystem):
    """Active (s, t) index pairs plus the sorted distinct s and t indices."""
    Kt = domain.K_tilde
    (lo1, hi1), (lo2, hi2) = Kt.bounds
    ax1, ax2 = domain.axes
    hit_x = np.zeros((gens.r, len(shifts.X)), dtype=bool)
    hit_y = np.zeros((gens.r, len(shifts.Y)), dtype=bool)
    for i, g in enumerate(gens.generators):
        (a1, b1), (a2, b2) = g.support(0), g.support(1)
        hit_x[i] = [_overlap(ax1, x + a1, x + b1, lo1, hi1) for x in shifts.X]
        hit_y[i] = [_overlap(ax2, y + a2, y + b2, lo2, hi2) for y in shifts.Y]
    pairs = np.any(hit_x[:, :, None] & hit_y[:, None, :], axis=0)
    active = tuple((int(s), int(t)) for s, t in zip(*np.nonzero(pairs)))
    if not active:
        raise DegenerateSpaceError("no shifted generator meets K - W")
    s_idx = tuple(sorted({s for s, _ in active}))
    t_idx = tuple(sorted({t for _, t in active}))
    return active, s_idx, t_idx


@dataclass(frozen=True)
class CoefficientArray:
    """Coefficients indexed (i, s, t) over the reindexed active shifts."""
    values: np.ndarray
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite coefficients")
        if np.any(self.values[:, ~self.mask] != 0):
            raise ConventionError("nonzero coefficient at an inactive shift")

    @property
    def vector(self) -> np.ndarray:
        return self.values[:, self.mask].reshape(-1)

    def norm(self, e: MixedExponents) -> float:
        return seq_mixed_norm(self.values, e)


@dataclass(frozen=True, eq=False)
class QsisSpace:
    domain: ProductDomain
    generators: GeneratorSet
    shifts: ShiftSystem
    active: tuple[tuple[int, int], ...]
    s_index: tuple[int, ...]
    t_index: tuple[int, ...]

    @property
    def s0(self) -> int:
        return len(self.s_index)

    @property
    def t0(self) -> int:
        return len(self.t_index)

    @property
    def r(self) -> int:
        return self.generators.r

    @property
    def num_cols(self) -> int:
        return self.r * len(self.active)

    @cached_property
    def mask(self) -> np.ndarray:
        m = np.zeros((self.s0, self.t0), dtype=bool)
        sp = {s: a for a, s in enumerate(self.s_index)}
        tp = {t: b for b, t in enumerate(self.t_index)}
        for s, t in self.active:
            m[sp[s], tp[t]] = True
        return m

    @cached_property
    def column_labels(self) -> list[tuple[int, int, int]]:
        """(generator, s-label, t-label) for each column, generator-major."""
        sl, tl = self.shifts.s_labels, self.shifts.t_labels
        return [(i + 1, int(sl[s]), int(tl[t])) for i in range(self.r) for s, t in self.active]

    def coefficients(self, vector) -> CoefficientArray:
        vector = np.asarray(vector)
        vals = np.zeros((self.r, self.s0, self.t0), dtype=vector.dtype)
        vals[:, self.mask] = vector.reshape(self.r, -1)
        return CoefficientArray(vals, self.mask)

    def _diff(self, k: int, x, shift_idx) -> np.ndarray:
        """x - shift, wrapped on cyclic axes into a window starting at the support origin."""
        a = self.domain.axes[k]
        pts = (self.shifts.X, self.shifts.Y)[k][list(shift_idx)]
        d = np.asarray(x, dtype=float)[..., None] - pts
        if a.kind == "cyclic":
            lo = self.generators.omega[k][0]
            d = lo + np.mod(d - lo, a.period)
        return d

    def factor_table(self, k: int, x) -> np.ndarray:
        """Array (r, len(x), s0 or t0) of generator factors at x minus each active shift."""
        idx = self.s_index if k == 0 else self.t_index
        d = self._diff(k, x, idx)
        return np.stack([g.factor(k, d) for g in self.generators.generators])

    def design(self, u, v) -> np.ndarray:
        """Synthesis matrix on the product grid u x v: rows (a, b) row-major, one column per coefficient."""
        F1, F2 = self.factor_table(0, u), self.factor_table(1, v)
        S, T = np.nonzero(self.mask)
        cols = [np.einsum("ac,bc->abc", F1[i][:, S], F2[i][:, T]) for i in range(self.r)]
        A = np.concatenate(cols, axis=2)
        return A.reshape(len(np.atleast_1d(u)) * len(np.atleast_1d(v)), -1)

    def point_design(self, u, v) -> np.ndarray:
        """Synthesis matrix at scattered points (u_k, v_k)."""
        u, v = np.atleast_1d(u), np.atleast_1d(v)
        F1, F2 = self.factor_table(0, u), self.factor_table(1, v)
        S, T = np.nonzero(self.mask)
        return np.concatenate([F1[i][:, S] * F2[i][:, T] for i in range(self.r)], axis=1)

    def evaluate(self, c, u, v) -> np.ndarray:
        c = c.vector if isinstance(c, CoefficientArray) else np.asarray(c)
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        return (self.point_design(u.ravel(), v.ravel()) @ c).reshape(u.shape)

    @cached_property
    def synthesis_matrix(self) -> np.ndarray:
        """Unweighted synthesis matrix on the nodes of K - W."""
        Kt = self.domain.K_tilde
        return self.design(Kt.coords(0), Kt.coords(1))

    @cached_property
    def sup_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis coordinates where sup norms over K - W are evaluated.

        Grid nodes, the closed right end, and every shifted generator knot
        inside the window.  Sums of order <= 1 splines are piecewise
        bilinear between these lines, so their maxima are attained here.
        """
        out = []
        Kt = self.domain.K_tilde
        for k in range(2):
            a = self.domain.axes[k]
            lo, hi = Kt.bounds[k]
            pts = [Kt.coords(k), [hi]]
            shifts = (self.shifts.X, self.shifts.Y)[k][list(self.s_index if k == 0 else self.t_index)]
            for g in self.generators.generators:
                kn = (shifts[:, None] + g.knots(k)[None, :]).ravel()
                if a.kind == "cyclic":
                    kn = lo + np.mod(kn - lo, a.period)
                pts.append(kn[(kn >= lo) & (kn <= hi)])
            out.append(np.unique(np.concatenate([np.asarray(p, dtype=float) for p in pts])))
        return tuple(out)

    @cached_property
    def _sup_tables(self):
        u, v = self.sup_points
        return self.factor_table(0, u), self.factor_table(1, v)

    def sup_norm(self, c) -> float:
        """sup over K - W of |f| for f with coefficients ``c``."""
        cv = self.coefficients(c.vector if isinstance(c, CoefficientArray) else c).values
        F1, F2 = self._sup_tables
        vals = sum(F1[i] @ cv[i] @ F2[i].T for i in range(self.r))
        return float(np.max(np.abs(vals)))

    def shift_sum_max(self) -> float:
        F1, F2 = self._sup_tables
        m = self.mask.astype(float)
        tot = sum(np.abs(F1[i]) @ m @ np.abs(F2[i]).T for i in range(self.r))
        return float(np.max(tot))

    @property
    def weight(self) -> float:
        a = self.domain.axes
        return a[0].step * a[1].step


def build_space(domain: ProductDomain, gens: GeneratorSet, shifts: ShiftSystem) -> QsisSpace:
    if not shifts.check_separation(domain.axes):
        raise ParameterError("shift system is not separated")
    active, s_idx, t_idx = active_shifts(domain, gens, shifts)
    return QsisSpace(domain, gens, shifts, active, s_idx, t_idx)


def shift_extent(domain: ProductDomain, gens: GeneratorSet, k: int, delta: float) -> tuple[float, float]:
    """Lattice extent guaranteed to contain every shift whose support can meet K - W."""
    a = domain.axes[k]
    if a.kind == "cyclic":
        return (a.start, a.end - 0.5 * delta)
    lo, hi = domain.K_tilde.bounds[k]
    olo, ohi = gens.omega[k]
    return (lo - ohi - delta, hi - olo + delta)


def synthesize(c: CoefficientArray, space: QsisSpace) -> GridFunction:
    """Grid values of sum c_i(s,t) phi_i(. - x_s, . - y_t) on K - W (zero elsewhere)."""
    if c.values.shape != (space.r, space.s0, space.t0):
        raise ConventionError("coefficient array does not match the active shifts")
    if np.any(c.values[:, ~space.mask] != 0):
        raise ConventionError("nonzero coefficient at an inactive shift")
    Kt = space.domain.K_tilde
    vals = (space.synthesis_matrix @ c.vector).reshape(Kt.shape)
    a1, a2 = space.domain.axes
    full = np.zeros((a1.num_points, a2.num_points), dtype=vals.dtype)
    full[np.ix_(Kt.indices(0), Kt.indices(1))] = vals
    return GridFunction(space.domain.axes, full)


def norm_on_ktilde(space: QsisSpace, vectors, e: MixedExponents) -> np.ndarray:
    """L^{p,q}(K - W) norms of elements given as coefficient vectors (columns of ``vectors``)."""
    vectors = np.asarray(vectors)
    Kt = space.domain.K_tilde
    vals = space.synthesis_matrix @ vectors.reshape(space.num_cols, -1)
    vals = vals.T.reshape(-1, *Kt.shape)
    a = space.domain.axes
    return mixed_norm_array(vals, (a[0].step, a[1].step), e)


def coeff_norms(space: QsisSpace, vectors, e: MixedExponents) -> np.ndarray:
    vectors = np.asarray(vectors).reshape(space.num_cols, -1)
    out = []
    for col in vectors.T:
        out.append(space.coefficients(col).norm(e))
    return np.asarray(out)


@dataclass(frozen=True)
class SpaceAnalysis:
    a1: float
    a2: float
    d: int
    c_phi_tilde: float
    a_exact: bool
    singular_values: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {"a1": self.a1, "a2": self.a2, "d": self.d,
                "c_phi_tilde": self.c_phi_tilde, "a_exact": self.a_exact}


def _unit_probes(space: QsisSpace, e: MixedExponents, probes: int, seed: int) -> np.ndarray:
    n = space.num_cols
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((n, probes))
    P = np.concatenate([np.eye(n), P], axis=1)
    return P / coeff_norms(space, P, e)[None, :]


def analyze_space(space: QsisSpace, e: MixedExponents, probes: int = 256, seed: int = 0) -> SpaceAnalysis:
    """Stability constants, dimension and the shift-sum constant of the space."""
    A = space.synthesis_matrix * math.sqrt(space.weight)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        raise DegenerateSpaceError("synthesis matrix is zero on K - W")
    d = int(np.sum(sv > RANK_TOL * sv[0]))
    c_phi = space.shift_sum_max()
    if e.p == 2 and e.q == 2:
        # ||c|| sums per-generator l2 norms, hence the 1/sqrt(r) on the lower constant
        a1 = float(sv[d - 1]) / math.sqrt(space.r)
        a2 = float(sv[0])
        exact = True
    else:
        P = _unit_probes(space, e, probes, seed)
        ratios = norm_on_ktilde(space, P, e)
        a1, a2 = float(ratios.min()), float(ratios.max())
        exact = False
    return SpaceAnalysis(a1, a2, d, c_phi, exact, tuple(float(s) for s in sv))


def random_unit_element(space: QsisSpace, e: MixedExponents, seed) -> tuple[GridFunction, CoefficientArray]:
    """Gaussian coefficients rescaled so that ||f||_{L^{p,q}(K - W)} = 1."""
    rng = np.random.default_rng(seed)
    for _ in range(8):
        c = rng.standard_normal(space.num_cols)
        nrm = float(norm_on_ktilde(space, c, e)[0])
        if nrm > 0 and math.isfinite(nrm):
            ca = space.coefficients(c / nrm)
            return synthesize(ca, space), ca
    raise DegenerateSpaceError("could not draw a nonzero element in 8 attempts")


def classify_membership(f: GridFunction, c: CoefficientArray | None, theta: float, alpha: float,
                        mu: float, kernel: AveragingKernel, domain: ProductDomain,
                        e: MixedExponents) -> dict:
    """Membership of f in the theta/alpha subset and the mu-averaging subset."""
    if not 0 < mu <= 1:
        raise ParameterError(f"mu must lie in (0, 1], got {mu}")
    fw = convolve_grid(f, kernel, domain)
    a = domain.axes
    steps = (a[0].step, a[1].step)
    conv_pq = float(mixed_norm_array(fw, steps, e))
    conv_l1 = float(np.sum(np.abs(fw)) * steps[0] * steps[1])
    f_pq = float(mixed_norm_array(f.restrict(domain.K_tilde), steps, e))
    return {
        "in_V_pq_alpha_theta": bool(conv_pq >= theta and f_pq <= alpha),
        "in_V_omega_mu": bool(mu * kernel.l1_norm * f_pq <= conv_l1),
        "conv_pq": conv_pq,
        "conv_l1": conv_l1,
        "f_pq": f_pq,
    }


def averaged_matrix(space: QsisSpace, kernel: AveragingKernel, u, v) -> np.ndarray:
    """Columns (phi_i * omega)(u - x_s, v - y_t) at scattered points, W-grid quadrature."""
    u, v = np.atleast_1d(np.asarray(u, dtype=float)), np.atleast_1d(np.asarray(v, dtype=float))
    W = kernel.region
    w1, w2 = W.coords(0), W.coords(1)
    h1, h2 = (ax.step for ax in space.domain.axes)
    S, T = np.nonzero(space.mask)
    if kernel.factors is not None:
        k1, k2 = kernel.factors
        G1 = np.einsum("rnws,w->rns", space.factor_table(0, u[:, None] - w1[None, :]), k1) * h1
        G2 = np.einsum("rnws,w->rns", space.factor_table(1, v[:, None] - w2[None, :]), k2) * h2
        return np.concatenate([G1[i][:, S] * G2[i][:, T] for i in range(space.r)], axis=1)
    return averaged_matrix_direct(space, kernel, u, v)


def averaged_matrix_direct(space: QsisSpace, kernel: AveragingKernel, u, v) -> np.ndarray:
    """Same as :func:`averaged_matrix` without using kernel separability."""
    u, v = np.atleast_1d(np.asarray(u, dtype=float)), np.atleast_1d(np.asarray(v, dtype=float))
    W = kernel.region
    w1, w2 = W.coords(0), W.coords(1)
    S, T = np.nonzero(space.mask)
    F1 = space.factor_table(0, u[:, None] - w1[None, :])  # (r, n, W1, s0)
    F2 = space.factor_table(1, v[:, None] - w2[None, :])  # (r, n, W2, t0)
    cols = []
    for i in range(space.r):
        a = F1[i][:, :, S]  # (n, W1, cols)
        b = F2[i][:, :, T]  # (n, W2, cols)
        cols.append(np.einsum("npc,pq,nqc->nc", a, kernel.values, b))
    return np.concatenate(cols, axis=1) * kernel.weights


def averaged_product_matrix(space: QsisSpace, kernel: AveragingKernel, u, v) -> np.ndarray:
    """Averaged synthesis on the product grid u x v: rows (a, b) row-major."""
    u, v = np.atleast_1d(np.asarray(u, dtype=float)), np.atleast_1d(np.asarray(v, dtype=float))
    if kernel.factors is None:
        uu, vv = np.meshgrid(u, v, indexing="ij")
        return averaged_matrix(space, kernel, uu.ravel(), vv.ravel())
    W = kernel.region
    h1, h2 = (ax.step for ax in space.domain.axes)
    k1, k2 = kernel.factors
    G1 = np.einsum("rnws,w->rns", space.factor_table(0, u[:, None] - W.coords(0)[None, :]), k1) * h1
    G2 = np.einsum("rnws,w->rns", space.factor_table(1, v[:, None] - W.coords(1)[None, :]), k2) * h2
    S, T = np.nonzero(space.mask)
    cols = [np.einsum("ac,bc->abc", G1[i][:, S], G2[i][:, T]) for i in range(space.r)]
    return np.concatenate(cols, axis=2).reshape(len(u) * len(v), -1)


def averaged_grid_matrix(space: QsisSpace, kernel: AveragingKernel) -> np.ndarray:
    """Averaged synthesis on the nodes of K: rows (a, b) row-major."""
    K = space.domain.K
    return averaged_product_matrix(space, kernel, K.coords(0), K.coords(1))


__all__ = [
    "INF", "cardinal_bspline", "Generator", "GeneratorSet", "make_bspline_generators",
    "ShiftSystem", "make_shift_system", "active_shifts", "CoefficientArray", "QsisSpace",
    "build_space", "shift_extent", "synthesize", "norm_on_ktilde", "SpaceAnalysis",
    "analyze_space", "random_unit_element", "classify_membership", "averaged_matrix",
    "averaged_matrix_direct", "averaged_product_matrix", "averaged_grid_matrix", "conv_l1_holder_factor",
    "DegenerateSpaceError", "ConventionError", "ParameterError",
]
