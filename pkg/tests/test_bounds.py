import json
import math
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import draws
import oracles
from qsis.bounds import (
    BoundInputs, BoundParameterError, covering_bound, lemma31_bound, lemma31_exponents, p_min,
    thm32_constants, thm33_constants,
)

GOLDEN = json.loads((Path(__file__).parent / "data" / "golden.json").read_text())
UNIT = BoundInputs(1, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0)


def close(got, want, rel=1e-12):
    want = float(want)
    return abs(got - want) <= rel * abs(want)


def sig4(x, y):
    return float(f"{x:.4g}") == float(f"{y:.4g}")


def test_golden_values():
    assert sig4(p_min(1, 1, 1, 1.0), 274.27)
    assert p_min(1, 1, 1, 1.0) == pytest.approx(GOLDEN["p_min_d1_nm1_w1"], rel=1e-13)
    r = thm33_constants(UNIT, 1.0, 0.5, 1, 1)
    assert r.nm_min == pytest.approx(108 * math.sqrt(2) * math.log(2) / 0.5 * (2 + 324))
    nm_min = thm33_constants(BoundInputs(1, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0), 1.0, 1.0, 1, 1).nm_min
    assert nm_min == pytest.approx(GOLDEN["thm33_nm_min_eta1_d1"], rel=1e-13)
    # 108 sqrt2 ln2 * 164 = 17362.33 in full precision; 4 significant digits match 17362.4
    assert sig4(nm_min, 17362.4)
    assert covering_bound(2, 2.0, 1.0, 1.0) == pytest.approx(GOLDEN["covering_d2_c2_a1_eta1"], rel=1e-14)
    assert lemma31_bound(UNIT, 1, 1, 300.0).total == pytest.approx(GOLDEN["lemma31_total_unit_p300"], rel=1e-13)
    assert thm32_constants(UNIT, 1.0, 0.5, 2, 2).A_tilde == pytest.approx(1.0, rel=1e-14)


def test_covering_examples():
    assert covering_bound(3, 0.25, 1.0, 1.0) == 1.0
    assert covering_bound(5, 0.1, 1.0, 1.0) == 1.0
    etas = np.linspace(0.1, 3.0, 40)
    vals = [covering_bound(3, 1.5, 0.7, e) for e in etas]
    unclamped = [v for v in vals if v > 1]
    assert all(a > b for a, b in zip(unclamped, unclamped[1:]))
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(BoundParameterError):
        covering_bound(1, 1.0, 1.0, 0.0)


def test_p_min_examples():
    assert p_min(3, 4, 2, 2.0) == pytest.approx(2 * p_min(3, 4, 2, 1.0), rel=1e-15)
    assert p_min(3, 5, 2, 1.0) > p_min(3, 4, 2, 1.0)
    with pytest.raises(BoundParameterError):
        p_min(0, 1, 1, 1.0)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 500), m=st.integers(1, 500), d=st.integers(1, 20),
       w=st.floats(0.01, 100.0))
def test_p_min_monotone(n, m, d, w):
    base = p_min(n, m, d, w)
    assert p_min(n + 1, m, d, w) >= base
    assert p_min(n, m + 1, d, w) >= base
    assert p_min(n, m, d + 1, w) >= base
    assert p_min(n, m, d, w * 1.5) >= base


def test_lemma31_decreasing_in_p():
    b = BoundInputs(2, 1.3, 0.8, 0.9, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0)
    prev = lemma31_bound(b, 3, 4, 100.0)
    for pf in np.linspace(110.0, 600.0, 30):
        cur = lemma31_bound(b, 3, 4, float(pf))
        assert cur.term1 < prev.term1 and cur.term2 < prev.term2
        prev = cur


def test_lemma31_precondition_flag():
    pm = p_min(2, 2, 1, 1.0)
    assert not lemma31_bound(UNIT, 2, 2, pm * 0.99).precondition_ok
    assert lemma31_bound(UNIT, 2, 2, pm * 1.01).precondition_ok
    assert math.isfinite(lemma31_bound(UNIT, 2, 2, 1.0).total)


def test_oracle_agreement_sample():
    rng = np.random.default_rng(7)
    for _ in range(60):
        b, zeta, gamma, n, m = draws.thm32_args(rng)
        got = thm32_constants(b, zeta, gamma, n, m)
        want = oracles.thm32(b.d, b.c_phi_tilde, b.a1, b.omega_l1, b.mu1, b.mu2, b.c_rho_1,
                             b.c_rho_2, b.p, b.q, zeta, gamma, n, m)
        for k in ("A_tilde", "B_tilde", "beta_prime", "beta_dprime", "nm_min", "A1", "A2", "p_frak"):
            assert close(getattr(got, k), want[k]), k
        scale = 1 + want["A1"] * mp.exp(-n * m * want["beta_prime"]) + want["A2"] * mp.exp(-n * m * want["beta_dprime"])
        assert abs(got.prob_lower - float(want["prob_lower"])) <= 1e-12 * float(scale)


def test_rescaling_invariance():
    rng = np.random.default_rng(3)
    for _ in range(100):
        b = draws.bound_inputs(rng)
        n, m = draws.sizes(rng)
        pf = float(rng.uniform(1, 1e4))
        lam = float(np.exp(rng.uniform(-3, 3)))
        base = lemma31_bound(b, n, m, pf).total
        # (p_frak, ||omega||_1) scaled together
        b1 = BoundInputs(**{**b.to_dict(), "omega_l1": b.omega_l1 * lam})
        assert close(lemma31_bound(b1, n, m, pf * lam).total, base, 1e-12)
        # (C~, a1) scaled together
        b2 = BoundInputs(**{**b.to_dict(), "c_phi_tilde": b.c_phi_tilde * lam, "a1": b.a1 * lam})
        assert close(lemma31_bound(b2, n, m, pf).total, base, 1e-12)


def test_thm32_invariants_and_monotone():
    rng = np.random.default_rng(11)
    for _ in range(100):
        b, zeta, gamma, n, m = draws.thm32_args(rng)
        r = thm32_constants(b, zeta, gamma, n, m)
        assert r.A_tilde > 0 and r.beta_prime > 0 and r.beta_dprime > 0 and r.nm_min > 0
        assert r.prob_lower <= 1
        assert r.vacuous == (r.prob_lower <= 0)
        assert thm32_constants(b, zeta, gamma, n + 1, m).prob_lower >= r.prob_lower


def test_thm32_errors():
    for g in (0.0, 1.0, -0.2, 2.0):
        with pytest.raises(BoundParameterError):
            thm32_constants(UNIT, 1.0, g, 2, 2)
    with pytest.raises(BoundParameterError):
        thm32_constants(UNIT, 0.0, 0.5, 2, 2)


def test_thm33_monotone_and_errors():
    b = BoundInputs(1, 1.0, 1.0, 1.0, 1.0, 1.0, 0.8, 1.2, 2.0, 2.0)
    probs = [thm33_constants(b, 0.9, 0.5, n, 1000).prob_lower for n in range(1, 200, 7)]
    finite = [p for p in probs if p > -1e300]
    assert all(a < b_ for a, b_ in zip(finite, finite[1:]))
    with pytest.raises(BoundParameterError):
        thm33_constants(b, 0.5, 0.5 * 0.8, 10, 10)
    with pytest.raises(BoundParameterError):
        thm33_constants(b, 0.5, 0.0, 10, 10)
    with pytest.raises(BoundParameterError):
        thm33_constants(b, 1.5, 0.1, 10, 10)
    r = thm33_constants(b, 0.5, 0.1, 10, 10)
    assert r.lower_factor > 0 and r.nm_min > 0


def test_threshold_equivalence_sample():
    rng = np.random.default_rng(5)
    for _ in range(100):
        b, zeta, gamma, n, m = draws.thm32_args(rng)
        r = thm32_constants(b, zeta, gamma, n, m)
        assert (n * m > r.nm_min) == (r.p_frak > p_min(n, m, b.d, b.omega_l1))


def test_exponent_identity_sample():
    rng = np.random.default_rng(9)
    for _ in range(100):
        b, mu, eta, n, m = draws.thm33_args(rng)
        r = thm33_constants(b, mu, eta, n, m)
        e1, e2 = lemma31_exponents(b.c_phi_tilde, b.a1, b.omega_l1, n, m, n * m * eta * b.omega_l1)
        assert close(e1, r.exponent1) and close(e2, r.exponent2)


@pytest.mark.parametrize("bad", [
    {"d": 0}, {"d": 1.5}, {"a1": 0.0}, {"c_phi_tilde": -1.0}, {"omega_l1": math.inf},
    {"p": 1.0}, {"q": math.inf}, {"c_rho_1": math.nan},
])
def test_bound_inputs_validation(bad):
    with pytest.raises(BoundParameterError):
        BoundInputs(**{**UNIT.to_dict(), **bad})


def test_overflow_returns_inf():
    b = BoundInputs(400, 50.0, 0.01, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0)
    assert math.isinf(covering_bound(400, 50.0, 0.01, 0.001))
    r = thm32_constants(b, 1.0, 0.5, 2, 2)
    assert math.isinf(r.A2) and r.prob_lower == -math.inf and r.vacuous
