"""Averaging kernels, convolution on the grid, and Young-type inequality checks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import (
    INF, Axis, GridFunction, MixedExponents, ProductDomain, Region,
    _snap, minkowski_diff, mixed_norm, mixed_norm_array,
)


class OutOfDomainError(ValueError):
    pass


class ExponentError(ValueError):
    pass


@dataclass(frozen=True)
class AveragingKernel:
    """Kernel values on the nodes of its region W (possibly complex).

    ``factors`` holds the 1-d factor arrays when the kernel is a tensor
    product; evaluation routines use them as a fast path.
    """
    region: Region
    values: np.ndarray = field(repr=False)
    factors: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)
    name: str = "custom"

    def __post_init__(self):
        if self.values.shape != self.region.shape:
            raise ValueError(f"kernel values {self.values.shape} != W grid {self.region.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("kernel has non-finite values")
        if self.l1_norm <= 0:
            raise ValueError("kernel must have positive L1 norm")

    @property
    def weights(self) -> float:
        a = self.region.axes
        return a[0].step * a[1].step

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.values)) * self.weights)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)


def _separable(region: Region, f1: np.ndarray, f2: np.ndarray, name: str) -> AveragingKernel:
    return AveragingKernel(region, np.outer(f1, f2), (f1, f2), name)


def box_kernel(W: Region, mass: float = 1.0) -> AveragingKernel:
    """Constant kernel on W with L1 norm ``mass``."""
    m1, m2 = W.measures
    f1 = np.full(W.shape[0], 1.0 / m1)
    f2 = np.full(W.shape[1], mass / m2)
    return _separable(W, f1, f2, "box")


def gaussian_kernel(W: Region, sigma: float, mass: float = 1.0) -> AveragingKernel:
    """Gaussian truncated to W, centred at the identity, rescaled to L1 norm ``mass``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    fs = []
    for k in range(2):
        x = W.coords(k)
        g = np.exp(-0.5 * (x / sigma) ** 2)
        fs.append(g / (g.sum() * W.axes[k].step))
    fs[1] = fs[1] * mass
    return _separable(W, fs[0], fs[1], "gaussian")


def kernel_from_values(W: Region, values, name: str = "custom") -> AveragingKernel:
    return AveragingKernel(W, np.asarray(values), None, name)


def make_kernel(W: Region, family: str, **kw) -> AveragingKernel:
    if family == "box":
        return box_kernel(W, kw.get("mass", 1.0))
    if family == "gaussian":
        return gaussian_kernel(W, kw.get("sigma", 0.1), kw.get("mass", 1.0))
    raise ValueError(f"unknown kernel family {family!r}")


def _bilinear(f: GridFunction, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    out_idx, out_w = [], []
    for k, x in enumerate((u, v)):
        a = f.axes[k]
        pos = (np.asarray(x, dtype=float) - a.start) / a.step
        i0 = np.floor(pos + 1e-12).astype(int)
        t = np.clip(pos - i0, 0.0, 1.0)
        i1 = i0 + 1
        if a.kind == "cyclic":
            i0, i1 = np.mod(i0, a.num_points), np.mod(i1, a.num_points)
        else:
            # right edge of the grid: reuse the last node
            i1 = np.minimum(i1, a.num_points - 1)
            if np.any(i0 < 0) or np.any(i0 >= a.num_points):
                raise OutOfDomainError("interpolation point outside the grid")
        out_idx.append((i0, i1))
        out_w.append(t)
    (a0, a1), (b0, b1) = out_idx
    tu, tv = out_w
    F = f.values
    return ((1 - tu) * (1 - tv) * F[a0, b0] + tu * (1 - tv) * F[a1, b0]
            + (1 - tu) * tv * F[a0, b1] + tu * tv * F[a1, b1])


def convolve(f, kernel: AveragingKernel, domain: ProductDomain, u, v) -> np.ndarray:
    """(f * omega) at target points of K by W-grid quadrature.

    ``f`` is either a callable ``f(u, v)`` (exact evaluation) or a
    :class:`GridFunction` (bilinear interpolation).
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.all(domain.K.contains_points(u, v)):
        raise OutOfDomainError("convolution target outside K")
    W = kernel.region
    w1, w2 = W.coords(0), W.coords(1)
    evaluate = (lambda a, b: _bilinear(f, a, b)) if isinstance(f, GridFunction) else f
    out = np.zeros(np.broadcast(u, v).shape, dtype=np.result_type(float, kernel.values))
    uu, vv = np.broadcast_arrays(u, v)
    for p, wp in enumerate(w1):
        a = domain.axes[0].wrap(uu[..., None] - wp)
        b = domain.axes[1].wrap(vv[..., None] - w2)
        vals = evaluate(np.broadcast_to(a, b.shape), b)
        out = out + vals @ kernel.values[p]
    return out * kernel.weights


def convolve_grid(f: GridFunction, kernel: AveragingKernel, domain: ProductDomain) -> np.ndarray:
    """Exact discrete convolution (f * omega) at the nodes of K."""
    K, W = domain.K, kernel.region
    idx = []
    for k in range(2):
        a = K.axes[k]
        d = (K.parts[k].first + np.arange(K.parts[k].count))[:, None] \
            - (W.parts[k].first + np.arange(W.parts[k].count))[None, :] + a.origin_index
        if a.kind == "cyclic":
            d = np.mod(d, a.num_points)
        idx.append(d)
    F = f.values
    out = np.zeros(K.shape, dtype=np.result_type(F, kernel.values))
    i1, i2 = idx
    for p in range(W.shape[0]):
        rows = F[i1[:, p]]
        for q in range(W.shape[1]):
            w = kernel.values[p, q]
            if w != 0:
                out += w * rows[:, i2[:, q]]
    return out * kernel.weights


def _inv(x: float) -> float:
    return 0.0 if x == INF else 1.0 / x


def _lp1d(a: np.ndarray, r: float, h: float) -> float:
    return float(mixed_norm_array(np.abs(a)[None, :], (1.0, h), MixedExponents(r, r)))


def young_check_scalar(axis: Axis, f, g, K0, W0, p, q, r) -> float:
    """Slack of the local Young inequality on one axis.

    ``f`` and ``g`` are value arrays on the full ``axis`` grid; ``K0`` and
    ``W0`` are (lo, hi) bounds.  Returns RHS - LHS of
    ||f*g||_{L^r(K0)} <= ||f||_{L^p(K0 - W0)} ||g||_{L^q(W0)}.
    """
    p, q, r = (float(x) for x in (p, q, r))
    if min(p, q, r) < 1:
        raise ExponentError("exponents must be >= 1")
    if abs(_inv(p) + _inv(q) - _inv(r) - 1.0) > 1e-12:
        raise ExponentError(f"1/p + 1/q != 1/r + 1 for p={p}, q={q}, r={r}")
    f, g = np.asarray(f), np.asarray(g)
    k0, w0 = _snap(axis, *K0), _snap(axis, *W0)
    kt = _snap(axis, k0.lo - w0.hi, k0.hi - w0.lo)
    n, h = axis.num_points, axis.step

    def idx(part):
        i = part.first + np.arange(part.count)
        return np.mod(i, n) if axis.kind == "cyclic" else i

    iw, ik, it = idx(w0), idx(k0), idx(kt)
    outside = np.ones(n, dtype=bool)
    outside[iw] = False
    if np.any(g[outside] != 0):
        raise ValueError("g is not supported in W0")
    d = ik[:, None] - iw[None, :] + axis.origin_index
    if axis.kind == "cyclic":
        d = np.mod(d, n)
    conv = (f[d] * g[iw][None, :]).sum(axis=1) * h
    lhs = _lp1d(conv, r, h)
    rhs = _lp1d(f[it], p, h) * _lp1d(g[iw], q, h)
    return rhs - lhs


def young_check_mixed(f: GridFunction, g: AveragingKernel, K0: Region, e: MixedExponents) -> dict:
    """Slacks (RHS - LHS) of the mixed-norm Young bound and its L^inf variant."""
    W0 = g.region
    K0t = minkowski_diff(K0, W0)
    dom = ProductDomain(K0, W0, K0t)
    conv = convolve_grid(f, g, dom)
    steps = (K0.axes[0].step, K0.axes[1].step)
    lhs_pq = float(mixed_norm_array(conv, steps, e))
    lhs_inf = float(np.max(np.abs(conv)))
    f_pq = mixed_norm(f, K0t, e)
    f_inf = float(np.max(np.abs(f.restrict(K0t))))
    return {"pq": f_pq * g.l1_norm - lhs_pq, "inf": f_inf * g.l1_norm - lhs_inf}


def conv_l1_holder_factor(domain: ProductDomain, e: MixedExponents) -> float:
    """mu2^{(q-1)/q} mu1^{(p-1)/p}: the constant bounding ||h||_{L^1(K)} by ||h||_{L^{p,q}(K)}."""
    mu1, mu2 = domain.mu
    ep = 0.0 if e.p == INF else 1.0 / e.p
    eq = 0.0 if e.q == INF else 1.0 / e.q
    return mu2 ** (1.0 - eq) * mu1 ** (1.0 - ep)


__all__ = [
    "AveragingKernel", "OutOfDomainError", "ExponentError", "box_kernel", "gaussian_kernel",
    "kernel_from_values", "make_kernel", "convolve", "convolve_grid", "young_check_scalar",
    "young_check_mixed", "conv_l1_holder_factor",
]
