"""Closed-form covering, deviation-probability and sampling-inequality constants.

Large powers such as (4 C / a1)^(2d) are assembled in log space; results
that would overflow come back as ``inf`` rather than raising.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

LN2 = math.log(2.0)
SQRT2 = math.sqrt(2.0)


class BoundParameterError(ValueError):
    pass


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


@dataclass(frozen=True)
class BoundInputs:
    d: int
    c_phi_tilde: float
    a1: float
    omega_l1: float
    mu1: float
    mu2: float
    c_rho_1: float
    c_rho_2: float
    p: float
    q: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise BoundParameterError(f"d must be a positive integer, got {self.d}")
        for name in ("c_phi_tilde", "a1", "omega_l1", "mu1", "mu2", "c_rho_1", "c_rho_2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise BoundParameterError(f"{name} must be finite and positive, got {v}")
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 1):
                raise BoundParameterError(f"{name} must satisfy 1 < {name} < inf, got {v}")

    @property
    def ratio(self) -> float:
        return self.c_phi_tilde / self.a1

    def to_dict(self) -> dict:
        return asdict(self)


def log_covering_bound(d: int, c_phi_tilde: float, a1: float, eta: float) -> float:
    if eta <= 0:
        raise BoundParameterError("eta must be positive")
    return max(d * math.log(4 * c_phi_tilde / (eta * a1)), 0.0)


def covering_bound(d: int, c_phi_tilde: float, a1: float, eta: float) -> float:
    """Upper bound on the sup-norm covering number of the unit sphere; at least 1."""
    return _exp(log_covering_bound(d, c_phi_tilde, a1, eta))


def p_min(n: int, m: int, d: int, omega_l1: float) -> float:
    if n < 1 or m < 1:
        raise BoundParameterError("n and m must be positive")
    c = 2 * SQRT2 * LN2 * d
    return 54 * c * (1 + math.sqrt(1 + 3 * n * m / c)) * omega_l1


def log_script_a(d: int, ratio: float) -> tuple[float, float]:
    """Logs of the two prefactors multiplying the deviation exponentials."""
    la1 = math.log(2) + d * math.log(8 * ratio)
    la2 = math.log(4 / (3 * d * LN2 ** 2)) + 2 * d * math.log(4 * ratio)
    return la1, la2


def lemma31_exponents(c_phi_tilde, a1, omega_l1, n, m, p_frak) -> tuple[float, float]:
    nm, w = n * m, omega_l1
    e1 = -3 * a1 ** 2 * p_frak ** 2 / (4 * c_phi_tilde * w * (6 * nm * c_phi_tilde * w + p_frak * a1))
    e2 = -p_frak ** 2 / (72 * SQRT2 * w * (81 * nm * w + p_frak))
    return e1, e2


@dataclass(frozen=True)
class Lemma31Result:
    term1: float
    term2: float
    total: float
    precondition_ok: bool
    p_min: float


def lemma31_bound(inputs: BoundInputs, n: int, m: int, p_frak: float) -> Lemma31Result:
    """Tail bound on the sup of |sum Y| over the unit sphere exceeding p_frak.

    The value is returned even when p_frak is at or below the threshold; the
    flag then marks it as not a valid bound.
    """
    la1, la2 = log_script_a(inputs.d, inputs.ratio)
    e1, e2 = lemma31_exponents(inputs.c_phi_tilde, inputs.a1, inputs.omega_l1, n, m, p_frak)
    t1, t2 = _exp(la1 + e1), _exp(la2 + e2)
    pm = p_min(n, m, inputs.d, inputs.omega_l1)
    return Lemma31Result(t1, t2, t1 + t2, p_frak > pm, pm)


@dataclass(frozen=True)
class Thm32Report:
    zeta: float
    gamma: float
    n: int
    m: int
    A_tilde: float
    B_tilde: float
    beta_prime: float
    beta_dprime: float
    nm_min: float
    p_frak: float
    prob_lower: float
    vacuous: bool
    A1: float
    A2: float

    def to_dict(self) -> dict:
        return asdict(self)


def _n2(inputs: BoundInputs, zeta: float, gamma: float) -> float:
    """gamma C_rho1 mu1^(1-q) mu2^(1-p) (C w / a1)^(1-pq) zeta^(pq), via logs."""
    p, q = inputs.p, inputs.q
    lg = (math.log(gamma * inputs.c_rho_1) + (1 - q) * math.log(inputs.mu1)
          + (1 - p) * math.log(inputs.mu2)
          + (1 - p * q) * math.log(inputs.ratio * inputs.omega_l1) + p * q * math.log(zeta))
    return _exp(lg)


def thm32_constants(inputs: BoundInputs, zeta: float, gamma: float, n: int, m: int) -> Thm32Report:
    if not 0 < gamma < 1:
        raise BoundParameterError(f"gamma must lie in (0, 1), got {gamma}")
    if not zeta > 0:
        raise BoundParameterError("zeta must be positive")
    if n < 1 or m < 1:
        raise BoundParameterError("n and m must be positive")
    p, q, w, d = inputs.p, inputs.q, inputs.omega_l1, inputs.d
    P = inputs.mu1 ** (1 - q) * inputs.mu2 ** (1 - p)
    N2 = _n2(inputs, zeta, gamma)
    nm = n * m
    A_t = (1 - gamma) / gamma * N2 * n ** (1 / p) * m ** (1 / q)
    B_t = (inputs.c_rho_2 * inputs.mu1 ** ((p - 1) / p) * inputs.mu2 ** ((q - 1) / q) * w * nm
           + N2 * nm)
    T = gamma * inputs.c_rho_1 * (zeta / (inputs.ratio * w)) ** (p * q)
    bp = P * (math.sqrt(3) / 2 * T) ** 2 / (6 / P + T)
    Tc = T * inputs.ratio
    bpp = P * Tc ** 2 / (72 * SQRT2 * (81 / P + Tc))
    nm_min = 108 * SQRT2 * LN2 * d * w / N2 ** 2 * (162 * w + 2 * N2)
    la1, la2 = log_script_a(d, inputs.ratio)
    prob = 1 - _exp(la1 - nm * bp) - _exp(la2 - nm * bpp)
    return Thm32Report(zeta, gamma, n, m, A_t, B_t, bp, bpp, nm_min, nm * N2, prob,
                       not prob > 0, _exp(la1), _exp(la2))


@dataclass(frozen=True)
class Thm33Report:
    mu: float
    eta: float
    n: int
    m: int
    lower_factor: float
    upper_factor: float
    nm_min: float
    exponent1: float
    exponent2: float
    prob_lower: float
    vacuous: bool

    def to_dict(self) -> dict:
        return asdict(self)


def thm33_constants(inputs: BoundInputs, mu: float, eta: float, n: int, m: int) -> Thm33Report:
    if not 0 < mu <= 1:
        raise BoundParameterError(f"mu must lie in (0, 1], got {mu}")
    if not 0 < eta < mu * inputs.c_rho_1:
        raise BoundParameterError(
            f"eta must lie in (0, mu*c_rho_1) = (0, {mu * inputs.c_rho_1}), got {eta}")
    p, q, d = inputs.p, inputs.q, inputs.d
    ct, a1, nm = inputs.c_phi_tilde, inputs.a1, n * m
    e1 = -nm * 3 * a1 ** 2 * eta ** 2 / (4 * ct * (6 * ct + eta * a1))
    e2 = -nm * eta ** 2 / (72 * SQRT2 * (81 + eta))
    la1, la2 = log_script_a(d, inputs.ratio)
    prob = 1 - _exp(la1 + e1) - _exp(la2 + e2)
    return Thm33Report(
        mu, eta, n, m,
        lower_factor=mu * inputs.c_rho_1 - eta,
        upper_factor=inputs.c_rho_2 * inputs.mu1 ** ((p - 1) / p) * inputs.mu2 ** ((q - 1) / q) + eta,
        nm_min=108 * SQRT2 * LN2 * d / eta * (2 + 162 / eta),
        exponent1=e1, exponent2=e2, prob_lower=prob, vacuous=not prob > 0,
    )


__all__ = [
    "BoundInputs", "BoundParameterError", "Lemma31Result", "Thm32Report", "Thm33Report",
    "covering_bound", "log_covering_bound", "p_min", "log_script_a", "lemma31_exponents",
    "lemma31_bound", "thm32_constants", "thm33_constants",
]
