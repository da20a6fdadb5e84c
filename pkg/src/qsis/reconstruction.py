"""Sample matrix, dual system and least-squares recovery from average samples."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .averaging import AveragingKernel
from .domain import GridFunction, MixedExponents, mixed_norm_array
from .sampling import SampleSet
from .space import (
    DegenerateSpaceError, QsisSpace, _unit_probes, averaged_grid_matrix,
    averaged_matrix, coeff_norms, synthesize,
)

INJECTIVE_TOL = 1e-10


class NotInjectiveError(RuntimeError):
    def __init__(self, msg: str, gap: float):
        super().__init__(msg)
        self.gap = gap


class LayoutError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """Rows: samples (j, k) row-major.  Columns: (i, s, t) generator-major."""
    values: np.ndarray = field(repr=False)
    n: int
    m: int
    column_labels: tuple

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["j", "k"] + [f"({i},{s},{t})" for i, s, t in self.column_labels])
        for row in range(self.values.shape[0]):
            j, k = divmod(row, self.m)
            w.writerow([j + 1, k + 1] + [repr(x) for x in self.values[row].tolist()])
        return buf.getvalue()


def assemble_matrix(space: QsisSpace, kernel: AveragingKernel, samples: SampleSet) -> SampleMatrix:
    if space.num_cols == 0:
        raise DegenerateSpaceError("no active shifts")
    u, v = samples.points
    M = averaged_matrix(space, kernel, u, v)
    if not np.all(np.isfinite(M)):
        raise ValueError("sample matrix has non-finite entries")
    return SampleMatrix(M, samples.n, samples.m, tuple(space.column_labels))


@dataclass(frozen=True)
class BetaEstimate:
    beta: float
    exact: bool
    hypothesis_failed: bool


def beta_estimate(space: QsisSpace, kernel: AveragingKernel, e: MixedExponents,
                  probes: int | None = None, seed: int = 0) -> BetaEstimate:
    """Lower constant of the averaged synthesis map from coefficients to L^{p,q}(K).

    Exact (smallest singular value over sqrt(r)) for p = q = 2, probe
    minimum over coordinate vectors plus random directions otherwise.
    """
    A = averaged_grid_matrix(space, kernel)
    K = space.domain.K
    h = (K.axes[0].step, K.axes[1].step)
    if e.p == 2 and e.q == 2:
        sv = np.linalg.svd(A * math.sqrt(h[0] * h[1]), compute_uv=False)
        smin = float(sv[-1]) if sv.size and A.shape[0] >= A.shape[1] else 0.0
        beta = 0.0 if sv.size == 0 or smin <= INJECTIVE_TOL * sv[0] else smin / math.sqrt(space.r)
        return BetaEstimate(beta, True, beta <= 0)
    n = space.num_cols
    extra = max((probes or n) - n, 0)
    P = _unit_probes(space, e, extra, seed)
    vals = (A @ P).T.reshape(-1, *K.shape)
    ratios = mixed_norm_array(vals, h, e)
    beta = float(ratios.min())
    return BetaEstimate(beta, False, not beta > 0)


@dataclass(frozen=True, eq=False)
class DualSystem:
    """Dual matrix M~ with M~^T M = I, and the dual functions built from it."""
    dual: np.ndarray = field(repr=False)
    singular_values: np.ndarray = field(repr=False)
    space: QsisSpace | None = None

    @property
    def condition(self) -> float:
        """Condition number of the Gram matrix M^* M."""
        s = self.singular_values
        return float((s[0] / s[-1]) ** 2)

    @property
    def dual_t(self) -> np.ndarray:
        """M~^T = (M^* M)^{-1} M^*, shape (cols, rows)."""
        return self.dual.T

    def h(self, jk: int, u, v) -> np.ndarray:
        """Dual function h_{jk} evaluated at points (u, v)."""
        if self.space is None:
            raise ValueError("dual system was built without a space")
        return self.space.evaluate(self.dual[jk], u, v)


def solve_dual(M, space: QsisSpace | None = None) -> DualSystem:
    """Pseudo-inverse of a full-column-rank M via its SVD."""
    A = M.values if isinstance(M, SampleMatrix) else np.asarray(M)
    if A.shape[0] < A.shape[1]:
        raise NotInjectiveError(f"fewer samples ({A.shape[0]}) than unknowns ({A.shape[1]})", 0.0)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0 or s[-1] <= INJECTIVE_TOL * s[0]:
        gap = float(s[-1] / s[0]) if s[0] > 0 else 0.0
        raise NotInjectiveError(f"sample matrix is not injective: sigma_min/sigma_max = {gap:.3e}", gap)
    # M~^T = V diag(1/s) U^*, so M~ = conj(U) diag(1/s) V^T
    dual = (U.conj() / s) @ Vh.conj()
    return DualSystem(dual, s, space)


@dataclass
class ReconstructionReport:
    c_hat: np.ndarray = field(repr=False)
    f_hat: GridFunction = field(repr=False)
    condition: float
    residual: float
    spot_check: float
    beta_hat: float | None = None
    rel_pq: float | None = None
    rel_inf: float | None = None
    rel_coeff: float | None = None

    def to_dict(self) -> dict:
        out = {"condition": self.condition, "residual": self.residual, "spot_check": self.spot_check}
        for k in ("beta_hat", "rel_pq", "rel_inf", "rel_coeff"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v
        return out


def _rel(num: float, den: float) -> float:
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def reconstruction_error(f: GridFunction, f_hat: GridFunction, region, e: MixedExponents) -> dict:
    steps = (region.axes[0].step, region.axes[1].step)
    a, b = f.restrict(region), f_hat.restrict(region)
    return {
        "rel_pq": _rel(float(mixed_norm_array(a - b, steps, e)), float(mixed_norm_array(a, steps, e))),
        "rel_inf": _rel(float(np.max(np.abs(a - b))), float(np.max(np.abs(a)))),
    }


def reconstruct(S, dual: DualSystem, space: QsisSpace, M: SampleMatrix | None = None,
                e: MixedExponents | None = None, c_true=None, spot_points: int = 100,
                seed: int = 0) -> ReconstructionReport:
    """Coefficients c^ = M~^T S and the synthesized f^ on K - W."""
    S = np.asarray(S).ravel()
    if S.shape[0] != dual.dual.shape[0]:
        raise LayoutError(f"{S.shape[0]} sample values for a {dual.dual.shape[0]}-row dual system")
    c_hat = dual.dual_t @ S
    f_hat = synthesize(space.coefficients(c_hat), space)
    residual = float(np.linalg.norm(M.values @ c_hat - S)) if M is not None else math.nan
    # f^ = sum S_jk h_jk at random nodes of K - W
    Kt = space.domain.K_tilde
    rng = np.random.default_rng(seed)
    iu = rng.integers(0, Kt.shape[0], spot_points)
    iv = rng.integers(0, Kt.shape[1], spot_points)
    u, v = Kt.coords(0)[iu], Kt.coords(1)[iv]
    H = space.point_design(u, v) @ dual.dual_t  # column jk is h_jk at the points
    via_h = H @ S
    direct = f_hat.values[Kt.indices(0)[iu], Kt.indices(1)[iv]]
    spot = _rel(float(np.max(np.abs(via_h - direct))), float(np.max(np.abs(direct))))
    rep = ReconstructionReport(c_hat, f_hat, dual.condition, residual, spot)
    if c_true is not None:
        e = e or MixedExponents(2, 2)
        ct = np.asarray(getattr(c_true, "vector", c_true))
        f = synthesize(space.coefficients(ct), space)
        err = reconstruction_error(f, f_hat, Kt, e)
        rep.rel_pq, rep.rel_inf = err["rel_pq"], err["rel_inf"]
        rep.rel_coeff = _rel(float(coeff_norms(space, ct - c_hat, e)[0]),
                             float(coeff_norms(space, ct, e)[0]))
    return rep


__all__ = [
    "SampleMatrix", "assemble_matrix", "BetaEstimate", "beta_estimate", "DualSystem",
    "solve_dual", "ReconstructionReport", "reconstruct", "reconstruction_error",
    "NotInjectiveError", "LayoutError", "INJECTIVE_TOL",
]
