import math
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from milattice.errors import SingularSymbol
from milattice.model import (ModelParams, apply_F, apply_K, cosine_set, delta, invert_K,
                             recognize_rational, residual, resonance_scan, sigma, theta)
from milattice.series import TrigSeries, norm, product

from conftest import LAM, OMEGA, base_params, cos_series, random_series


def test_symbol_formula_and_symmetry():
    P = base_params(0.3)
    k = np.arange(-6, 7)
    s = sigma(P, k)
    ref = 1 - OMEGA**2 * k**2 + 2 * LAM * OMEGA**2 * k**2 * np.cos(k * np.pi / 4) + 0.3j * OMEGA * k
    assert np.allclose(s, ref, rtol=0, atol=1e-13)
    assert np.allclose(s[::-1], np.conj(s))
    assert delta(P, 0) == 1.0
    assert np.allclose(delta(P, k), s.real)


def test_resonances_single_pair():
    t = time.perf_counter()
    rep = resonance_scan(base_params())
    assert sorted(rep.resonant_modes) == [-1, 1] and rep.simple
    assert time.perf_counter() - t < 1.0


def test_resonances_double():
    P = base_params(omega=math.sqrt(37 / 1225))
    rep = resonance_scan(P)
    assert sorted(rep.resonant_modes) == [-7, -5, 5, 7] and not rep.simple


def test_resonances_empty():
    P = ModelParams.with_rational_phase(0.0, 0.1, 10.0, 1, 4)
    rep = resonance_scan(P)
    assert rep.resonant_modes == () or list(rep.resonant_modes) == []
    k = np.arange(1, 10**6 + 1)
    defect = np.abs(100.0 * k**2 * (1 - 0.2 * np.cos(k * np.pi / 4)) - 1)
    assert defect.min() > 1e-3


def test_cosine_set_contains_phase_cosines():
    for p2 in range(1, 13):
        M2 = cosine_set(p2)
        for p1 in range(1, 2 * p2):
            if math.gcd(p1, p2) != 1:
                continue
            vals = np.unique(np.round(np.cos(np.arange(1, 2 * p2 + 1) * p1 * np.pi / p2), 12))
            assert all(np.min(np.abs(M2 - v)) < 1e-12 for v in vals)
            if p1 % 2 == 1:
                assert len(vals) == len(M2)


def test_apply_K_examples(resonant, rng):
    assert np.allclose(apply_K(resonant, TrigSeries.constant(1.0)).coeffs, [1.0])
    assert norm(apply_K(resonant, cos_series()), 0) < 1e-14
    P = base_params(0.1)
    U = random_series(rng, 10)
    assert np.max(np.abs(invert_K(P, apply_K(P, U)).coeffs - U.coeffs)) < 1e-12
    bound = (1 + OMEGA**2 * (1 + 2 * LAM) + 0.1 * OMEGA) * norm(U, 2)
    assert norm(apply_K(P, U), 0) <= bound


def test_invert_K_examples(resonant):
    P = base_params(0.1)
    assert norm(invert_K(P, TrigSeries.zeros(3)), 0) == 0
    out = invert_K(P, cos_series())
    B = 5 * math.sqrt(37) / 37 / 0.1
    assert np.allclose(out.coeffs, TrigSeries.from_cos_sin(0, sin={1: B}).coeffs, atol=1e-12)
    with pytest.raises(SingularSymbol):
        invert_K(resonant, cos_series())


def test_invert_K_bound(rng):
    P = base_params(0.1)
    f = random_series(rng, 12)
    assert norm(invert_K(P, f), 2) <= norm(f, 0) / theta(P).value * (1 + 1e-12)


def test_apply_F_examples():
    P = base_params(0.2, cos_series(0.3))
    assert np.allclose(apply_F(P, TrigSeries.zeros()).coeffs, P.h.coeffs)
    # lambda must be positive; a negligible coupling reproduces the lambda = 0 identity
    P0 = ModelParams(0.0, 1e-300, 1.0, 1.0)
    out = apply_F(P0, cos_series())
    assert np.allclose(out.resized(2).coeffs, TrigSeries.from_cos_sin(0, {2: 2.0}).coeffs, atol=1e-12)


u_st = st.lists(st.floats(-1, 1), min_size=3, max_size=11)


def _series(vals):
    modes = {0: vals[0]}
    for k in range(1, (len(vals) - 1) // 2 + 1):
        modes[k] = complex(vals[2 * k - 1], vals[2 * k])
    return TrigSeries.from_modes(modes)


@settings(max_examples=100, deadline=None)
@given(u_st, u_st, st.floats(0, 1), st.floats(0.05, 0.45), st.floats(0.2, 3))
def test_nonlinear_bounds(a, b, g, lam, w):
    P = ModelParams.with_rational_phase(g, lam, w, 1, 4, cos_series(0.1))
    U1, U2 = _series(a), _series(b)
    C = 2 * w * (2 * w + 4 * lam * w + g)
    assert 2 * P.nonlinear_constant == pytest.approx(C)
    F1, F2 = apply_F(P, U1), apply_F(P, U2)
    assert norm(F1, 0) <= C * norm(U1, 2) ** 2 + norm(P.h, 0) + 1e-12
    lhs = norm(F1 - F2, 0)
    rhs = C * norm(U1 - U2, 2) * (norm(U1, 2) + norm(U2, 2))
    assert lhs <= rhs * (1 + 1e-12) + 1e-12


def test_residual_matches_composition(rng):
    P = base_params(0.1, random_series(rng, 3, 0.01))
    U = random_series(rng, 6, 0.1)
    r = residual(P, U)
    ref = apply_K(P, U) - apply_F(P, U)
    K = max(r.K_max, ref.K_max)
    assert np.max(np.abs(r.resized(K).coeffs - ref.resized(K).coeffs)) < 1e-13


def test_theta_cases(resonant):
    P = ModelParams(0.0, 1.0, 1.0, 2 * math.pi)
    t = theta(P)
    assert t.value == pytest.approx(1.0) and t.case == "integer-phase"
    assert theta(resonant).value == pytest.approx(0.0, abs=1e-12)
    t = theta(base_params(0.1))
    assert t.value == pytest.approx(0.1 * OMEGA, rel=1e-12)
    assert t.case == "damped-rational" and t.argmin in (1, -1)
    assert t.value >= t.bound - 1e-15
    # brute-force scan oracle
    k = np.arange(1, 10**4 + 1)
    vals = np.sqrt((1 / k**2 + OMEGA**2 * (2 * LAM * np.cos(k * np.pi / 4) - 1)) ** 2
                   + 0.01 * OMEGA**2 / k**2)
    assert t.value <= min(1.0, vals.min()) + 1e-14


def test_theta_bound_consistency():
    for g, w in ((0.0, 1.23), (0.05, 1.23), (0.3, 0.7)):
        t = theta(base_params(g, omega=w))
        if t.case != "generic-scan":
            assert t.value >= t.bound - 1e-14


def test_rational_recognition():
    assert recognize_rational(0.25) == Fraction(1, 4)
    assert recognize_rational(math.sqrt(2)) is None
    P = ModelParams(0.0, 0.2, 1.0, math.pi / 4)
    assert P.phase_fraction == Fraction(1, 4)


@pytest.mark.parametrize("field,kwargs", [
    ("gamma", dict(gamma=-0.1)), ("lambda", dict(lam=0.0)), ("omega", dict(omega=-1.0)),
    ("p", dict(p=0.0)),
])
def test_params_validation(field, kwargs):
    base = dict(gamma=0.0, lam=0.2, omega=1.0, p=1.0)
    base.update(kwargs)
    with pytest.raises(ValueError, match=field):
        ModelParams(**base)


def test_params_json_roundtrip():
    P = base_params(0.1, cos_series(0.5))
    Q = ModelParams.from_json(P.to_json())
    assert Q == P or (Q.p_over_pi == P.p_over_pi and Q.lam == P.lam and
                      np.array_equal(Q.h.coeffs, P.h.coeffs))
    R = ModelParams.from_dict({"gamma": 0, "lambda": 0.2, "omega": 1, "p": "pi/4"})
    assert R.p_over_pi == Fraction(1, 4)
