"""Independent high-precision evaluation of the closed-form bounds.

Written against the displayed formulas directly (no log-space tricks, no
shared helpers with the package) so the package can be checked against it.
"""
import mpmath as mp

mp.mp.dps = 50

LN2 = mp.log(2)
SQ2 = mp.sqrt(2)


def covering(d, ct, a1, eta):
    x = 4 * mp.mpf(ct) / (mp.mpf(eta) * a1)
    if x <= 1:
        return mp.mpf(1)
    return x ** d


def p_min(n, m, d, w):
    n, m, d, w = map(mp.mpf, (n, m, d, w))
    return 108 * SQ2 * LN2 * d * (1 + mp.sqrt(1 + 3 * n * m / (2 * SQ2 * LN2 * d))) * w


def script_a(d, ct, a1):
    d, ct, a1 = map(mp.mpf, (d, ct, a1))
    A1 = 2 * (8 * ct / a1) ** d
    A2 = 4 / (3 * d * LN2 ** 2) * (4 * ct / a1) ** (2 * d)
    return A1, A2


def lemma31(d, ct, a1, w, n, m, pf):
    d, ct, a1, w, n, m, pf = map(mp.mpf, (d, ct, a1, w, n, m, pf))
    A1, A2 = script_a(d, ct, a1)
    t1 = A1 * mp.exp(-3 * a1 ** 2 * pf ** 2 / (4 * ct * w * (6 * n * m * ct * w + pf * a1)))
    t2 = A2 * mp.exp(-pf ** 2 / (72 * SQ2 * w * (81 * n * m * w + pf)))
    return t1, t2, t1 + t2


def thm32(d, ct, a1, w, mu1, mu2, cr1, cr2, p, q, zeta, gamma, n, m):
    d, ct, a1, w, mu1, mu2, cr1, cr2, p, q, zeta, gamma, n, m = map(
        mp.mpf, (d, ct, a1, w, mu1, mu2, cr1, cr2, p, q, zeta, gamma, n, m))
    g = (ct / a1 * w) ** (1 - p * q) * zeta ** (p * q)
    A_t = (1 - gamma) * cr1 * mu1 ** (1 - q) * mu2 ** (1 - p) * g * n ** (1 / p) * m ** (1 / q)
    B_t = (cr2 * mu1 ** ((p - 1) / p) * mu2 ** ((q - 1) / q) * w * n * m
           + gamma * cr1 * mu1 ** (1 - q) * mu2 ** (1 - p) * g * n * m)
    X = gamma * cr1 * (a1 * zeta / (ct * w)) ** (p * q)
    bp = (mu1 ** (1 - q) * mu2 ** (1 - p) * (mp.sqrt(3) / 2 * X) ** 2
          / (6 * mu1 ** (q - 1) * mu2 ** (p - 1) + X))
    bpp = (mu1 ** (1 - q) * mu2 ** (1 - p) * (X * ct / a1) ** 2
           / (72 * SQ2 * (81 * mu1 ** (q - 1) * mu2 ** (p - 1) + X * ct / a1)))
    # threshold as displayed, with theta/alpha = zeta written as theta = zeta, alpha = 1
    N2 = gamma * cr1 * mu1 ** (1 - q) * mu2 ** (1 - p) * (ct / a1 * w) ** (1 - p * q) * zeta ** (p * q)
    nm_min = 108 * SQ2 * LN2 * d * w / N2 ** 2 * (162 * w + 2 * N2)
    A1, A2 = script_a(d, ct, a1)
    prob = 1 - A1 * mp.exp(-n * m * bp) - A2 * mp.exp(-n * m * bpp)
    return {"A_tilde": A_t, "B_tilde": B_t, "beta_prime": bp, "beta_dprime": bpp,
            "nm_min": nm_min, "prob_lower": prob, "A1": A1, "A2": A2, "p_frak": n * m * N2}


def thm33(d, ct, a1, mu1, mu2, cr1, cr2, p, q, mu, eta, n, m):
    d, ct, a1, mu1, mu2, cr1, cr2, p, q, mu, eta, n, m = map(
        mp.mpf, (d, ct, a1, mu1, mu2, cr1, cr2, p, q, mu, eta, n, m))
    A1, A2 = script_a(d, ct, a1)
    e1 = -n * m * 3 * a1 ** 2 * eta ** 2 / (4 * ct * (6 * ct + eta * a1))
    e2 = -n * m * eta ** 2 / (72 * SQ2 * (81 + eta))
    return {
        "lower_factor": mu * cr1 - eta,
        "upper_factor": cr2 * mu1 ** ((p - 1) / p) * mu2 ** ((q - 1) / q) + eta,
        "nm_min": 108 * SQ2 * LN2 * d / eta * (2 + 162 / eta),
        "prob_lower": 1 - A1 * mp.exp(e1) - A2 * mp.exp(e2),
        "exp1": e1, "exp2": e2,
    }
