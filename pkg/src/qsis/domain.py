"""Concrete group axes, product regions and mixed-norm quadrature.

Each factor group is realised as a uniform grid: an ``interval`` axis is a
window of the real line, a ``cyclic`` axis is a circle of given period.  The
Haar measure is the left-endpoint rule, so node ``i`` carries the cell
``[x_i, x_i + step)`` with weight ``step``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SNAP_TOL = 1e-9

INF = math.inf


class InvalidAxisError(ValueError):
    pass


class DomainOverflowError(ValueError):
    pass


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    kind: str
    start: float
    end: float
    num_points: int

    def __post_init__(self):
        if self.kind not in ("interval", "cyclic"):
            raise InvalidAxisError(f"unknown axis kind {self.kind!r}")
        if not (self.end > self.start) or self.num_points < 2:
            raise InvalidAxisError(
                f"need end > start and num_points >= 2, got "
                f"[{self.start}, {self.end}] with {self.num_points} points"
            )

    @property
    def step(self) -> float:
        return (self.end - self.start) / self.num_points

    @property
    def period(self) -> float:
        return self.end - self.start

    @property
    def nodes(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.num_points)

    @property
    def origin_index(self) -> int | None:
        """Index of the identity element 0 on the (extended) lattice, if any."""
        pos = -self.start / self.step
        k = round(pos)
        if abs(pos - k) > SNAP_TOL:
            return None
        return int(k)

    def node(self, i) -> np.ndarray | float:
        return self.start + self.step * np.asarray(i, dtype=float)

    def wrap(self, x):
        """Reduce coordinates into ``[start, end)`` on cyclic axes; identity otherwise."""
        if self.kind == "cyclic":
            return self.start + np.mod(np.asarray(x, dtype=float) - self.start, self.period)
        return x

    def gap(self, a, b):
        """Group distance |a - b| (modulo the period on cyclic axes)."""
        d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        if self.kind == "cyclic":
            d = np.mod(d, self.period)
            d = np.minimum(d, self.period - d)
        return d

    def to_dict(self) -> dict:
        return {"kind": self.kind, "start": self.start, "end": self.end,
                "num_points": self.num_points}


def build_axis(kind: str, start: float, end: float, num_points: int) -> Axis:
    return Axis(kind, float(start), float(end), int(num_points))


@dataclass(frozen=True)
class Interval:
    """Snapped factor of a region: ``count`` consecutive nodes from ``first``.

    ``lo``/``hi`` are the closed continuous bounds the nodes represent.  A
    degenerate (single point) factor has ``lo == hi`` and one node.
    """
    first: int
    count: int
    lo: float
    hi: float


def _snap(axis: Axis, lo: float, hi: float) -> Interval:
    if hi < lo:
        raise RegionError(f"empty interval [{lo}, {hi}]")
    h = axis.step
    if axis.kind == "cyclic" and hi - lo >= axis.period - SNAP_TOL * h:
        return Interval(0, axis.num_points, axis.start, axis.end)
    p_lo = (lo - axis.start) / h
    first = math.floor(p_lo + SNAP_TOL)
    if hi - lo <= SNAP_TOL * h:
        count = 1
        lo_s = hi_s = axis.start + first * h
    else:
        stop = math.ceil((hi - axis.start) / h - SNAP_TOL)
        count = max(stop - first, 1)
        lo_s, hi_s = axis.start + first * h, axis.start + (first + count) * h
    if axis.kind == "cyclic":
        if count >= axis.num_points:
            return Interval(0, axis.num_points, axis.start, axis.end)
        shift = (first // axis.num_points) * axis.num_points
        first -= shift
        lo_s -= shift * h
        hi_s -= shift * h
    else:
        if first < 0 or first + count > axis.num_points:
            raise DomainOverflowError(
                f"interval [{lo}, {hi}] leaves the grid [{axis.start}, {axis.end}]"
            )
    return Interval(first, count, lo_s, hi_s)


@dataclass(frozen=True)
class Region:
    """Product of two snapped closed intervals on a pair of axes."""
    axes: tuple[Axis, Axis]
    parts: tuple[Interval, Interval]

    @property
    def bounds(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return tuple((p.lo, p.hi) for p in self.parts)

    @property
    def measures(self) -> tuple[float, float]:
        return tuple(p.count * a.step for p, a in zip(self.parts, self.axes))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.parts[0].count, self.parts[1].count)

    def indices(self, k: int) -> np.ndarray:
        p, a = self.parts[k], self.axes[k]
        idx = p.first + np.arange(p.count)
        if a.kind == "cyclic":
            idx = np.mod(idx, a.num_points)
        return idx

    def coords(self, k: int) -> np.ndarray:
        """Node coordinates of factor ``k`` (unwrapped, increasing)."""
        p, a = self.parts[k], self.axes[k]
        return a.start + a.step * (p.first + np.arange(p.count))

    def cell_midpoints(self, k: int) -> np.ndarray:
        return self.coords(k) + 0.5 * self.axes[k].step

    def contains_points(self, u, v, tol: float = 1e-12) -> np.ndarray:
        ok = np.ones(np.broadcast(np.asarray(u), np.asarray(v)).shape, dtype=bool)
        for k, x in enumerate((u, v)):
            p, a = self.parts[k], self.axes[k]
            x = np.asarray(x, dtype=float)
            if a.kind == "cyclic":
                if p.count >= a.num_points:
                    continue
                x = p.lo + np.mod(x - p.lo, a.period)
            ok &= (x >= p.lo - tol) & (x <= p.hi + tol)
        return ok

    def contains_region(self, other: "Region") -> bool:
        for k in range(2):
            mine = set(self.indices(k).tolist())
            if not set(other.indices(k).tolist()) <= mine:
                return False
        return True

    def indicator(self) -> "GridFunction":
        vals = np.zeros((self.axes[0].num_points, self.axes[1].num_points))
        vals[np.ix_(self.indices(0), self.indices(1))] = 1.0
        return GridFunction(self.axes, vals)

    def to_dict(self) -> dict:
        return {"bounds": [list(b) for b in self.bounds]}


def make_region(axes, b1, b2) -> Region:
    axes = tuple(axes)
    return Region(axes, (_snap(axes[0], *b1), _snap(axes[1], *b2)))


def minkowski_diff(K: Region, W: Region) -> Region:
    """The region ``K - W = {k - w}`` snapped outward to grid nodes."""
    if K.axes != W.axes:
        raise RegionError("K and W live on different axes")
    bounds = []
    for (klo, khi), (wlo, whi) in zip(K.bounds, W.bounds):
        bounds.append((klo - whi, khi - wlo))
    return make_region(K.axes, *bounds)


@dataclass(frozen=True)
class GridFunction:
    """Values on the full product grid of ``axes``, indexed (i1, i2)."""
    axes: tuple[Axis, Axis]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = (self.axes[0].num_points, self.axes[1].num_points)
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} != grid {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function has non-finite values")

    def restrict(self, region: Region) -> np.ndarray:
        return self.values[np.ix_(region.indices(0), region.indices(1))]

    def __add__(self, other):
        return GridFunction(self.axes, self.values + other.values)

    def __sub__(self, other):
        return GridFunction(self.axes, self.values - other.values)

    def __mul__(self, lam):
        return GridFunction(self.axes, self.values * lam)

    __rmul__ = __mul__


def _exponent(x) -> float:
    x = float(x)
    if math.isnan(x) or x < 1:
        raise ValueError(f"exponent must lie in [1, inf], got {x}")
    return x


@dataclass(frozen=True)
class MixedExponents:
    p: float
    q: float

    def __post_init__(self):
        object.__setattr__(self, "p", _exponent(self.p))
        object.__setattr__(self, "q", _exponent(self.q))


def _lp_reduce(a: np.ndarray, r: float, weight: float, axis: int) -> np.ndarray:
    if r == INF:
        return np.max(a, axis=axis) if a.shape[axis] else np.zeros(np.delete(a.shape, axis))
    if r == 1:
        return np.sum(a, axis=axis) * weight
    # scale by the max so powers neither overflow nor go subnormal
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    s = np.sum((a / safe) ** r, axis=axis) * weight
    return np.squeeze(safe, axis=axis) * s ** (1.0 / r)


def mixed_norm_array(a, steps: tuple[float, float], e: MixedExponents) -> np.ndarray:
    """Weighted L^{p,q} norm over the last two axes of ``a`` (inner q over axis -1)."""
    a = np.abs(np.asarray(a))
    inner = _lp_reduce(a, e.q, steps[1], axis=-1)
    return _lp_reduce(inner, e.p, steps[0], axis=-1)


def mixed_norm(f: GridFunction, region: Region, e: MixedExponents) -> float:
    steps = (region.axes[0].step, region.axes[1].step)
    return float(mixed_norm_array(f.restrict(region), steps, e))


def seq_mixed_norm(c, e: MixedExponents) -> float:
    """Unweighted l^{p,q} norm; a 3-d array (generator, s, t) sums the per-generator norms."""
    c = np.asarray(c)
    if c.ndim == 2:
        return float(mixed_norm_array(c, (1.0, 1.0), e))
    if c.ndim == 3:
        return float(np.sum(mixed_norm_array(c, (1.0, 1.0), e)))
    raise ValueError("coefficient array must be 2-d (s, t) or 3-d (i, s, t)")


@dataclass(frozen=True)
class ProductDomain:
    """Sampling window K, averaging support W and the enlarged window K - W."""
    K: Region
    W: Region
    K_tilde: Region

    def __post_init__(self):
        for a in self.K.axes:
            if a.origin_index is None:
                raise RegionError(f"axis {a} does not contain the identity as a node")
        if not self.W.contains_points(0.0, 0.0):
            raise RegionError("W must contain the identity element (0, 0)")
        if not self.K_tilde.contains_region(self.K):
            raise RegionError("K is not contained in K - W")
        # nodewise: every k - w lands on a node of K_tilde
        for k in range(2):
            a = self.K.axes[k]
            o = a.origin_index
            diff = (self.K.parts[k].first + np.arange(self.K.parts[k].count))[:, None] \
                - (self.W.parts[k].first + np.arange(self.W.parts[k].count))[None, :] + o
            if a.kind == "cyclic":
                diff = np.mod(diff, a.num_points)
            if not np.isin(diff, self.K_tilde.indices(k)).all():
                raise RegionError("K - W is not covered by K_tilde on the grid")

    @property
    def axes(self) -> tuple[Axis, Axis]:
        return self.K.axes

    @property
    def mu(self) -> tuple[float, float]:
        return self.K.measures


def make_product_domain(axes, K_bounds, W_bounds) -> ProductDomain:
    K = make_region(axes, *K_bounds)
    W = make_region(axes, *W_bounds)
    return ProductDomain(K, W, minkowski_diff(K, W))
