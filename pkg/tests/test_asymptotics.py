import math

import numpy as np
import pytest

from milattice.asymptotics import (CUBEROOT, LINEAR, ORDER_EPS, SQRT, bif_coefficients,
                                   bif_residual, branch_determinant, branch_thresholds,
                                   predict, reduced_system, scaled_problem, sqrt_branches,
                                   tilde_coefficients)
from milattice.errors import ComplexBranch, NotSimpleResonance
from milattice.galerkin import newton_solve
from milattice.series import TrigSeries

from conftest import OMEGA, base_params, cos_series


def ex4_shape(mu0=0.25):
    return TrigSeries.from_cos_sin(mu0, {2: 2.0}, {2: -2.0})


def test_coefficients_resonant_instance():
    co = bif_coefficients(base_params(0.0, cos_series()), 1)
    assert co.delta_2k0 == pytest.approx(-123 / 25, rel=1e-13)
    assert co.upsilon == pytest.approx(-296 / 123, rel=1e-13)
    assert co.mu_k0 == pytest.approx(0.5) and co.nu_k0 == 0
    assert co.at(co.delta, 0) == 1.0
    d = co.d
    assert np.allclose(d[::-1], np.conj(d))


def test_coefficients_reject_double_resonance():
    P = base_params(0.0, cos_series(), omega=math.sqrt(37 / 1225))
    with pytest.raises(NotSimpleResonance):
        bif_coefficients(P, 5)


def test_bif_residual_trivial_and_reduced():
    co = bif_coefficients(base_params(0.0, cos_series()), 1)
    assert bif_residual(co, 0.0, 0.0, 0.0) == (0.0, 0.0)
    x, y, eps = 0.3, -0.2, 1e-3
    r1, _ = bif_residual(co, x, y, eps)
    ref = eps * 0.5 + 2 * (1 - co.delta_2k0) / co.delta_2k0 * x * (x * x + y * y)
    assert r1 == pytest.approx(ref, rel=1e-12)


def test_cuberoot_point_zeroes_reduced_system():
    P = base_params(0.1, cos_series())
    pred = predict(P)
    assert pred.regime == CUBEROOT and pred.scaling_exponent == pytest.approx(1 / 3)
    x0, y0 = pred.points[0]
    assert x0 == pytest.approx(0.592281, abs=1e-6) and y0 == 0
    co = bif_coefficients(P, 1)
    ratios = []
    for eps in (1e-6, 1e-7, 1e-8):
        s = np.cbrt(eps)
        r = bif_residual(co, s * x0, s * y0, eps)
        ratios.append(max(abs(r[0]), abs(r[1])) / eps ** (4 / 3))
    # leading order cancels; what remains is the next order eps^(4/3)
    assert max(ratios) < 10 and ratios[-1] == pytest.approx(ratios[0], rel=0.05)
    U = pred.profile(1e-6)
    assert 2 * U.coeff(1).real / 1e-2 == pytest.approx(1.18456, abs=1e-5)


def test_linear_regime_profile():
    P = base_params(0.1, cos_series())
    pred = predict(P, forcing_order=2)
    assert pred.regime == LINEAR
    x0, y0 = pred.points[0]
    assert x0 == pytest.approx(0, abs=1e-15)
    assert y0 == pytest.approx(-25 / math.sqrt(37), rel=1e-12)
    U = pred.profile(1e-4)
    assert -2 * U.coeff(1).imag / 1e-4 == pytest.approx(8.21995, abs=1e-5)


def test_order_eps_profile():
    P = base_params(0.1, ex4_shape())
    pred = predict(P)
    assert pred.regime == ORDER_EPS
    U = pred.profile(1.0)
    ref = TrigSeries.from_cos_sin(0.25, {2: -50 / 123}, {2: 50 / 123})
    K = max(U.K_max, ref.K_max)
    assert np.max(np.abs(U.resized(K).coeffs - ref.resized(K).coeffs)) < 1e-12
    assert [c.regime for c in pred.companions] == [SQRT, SQRT]


def test_sqrt_branches_positive_eps():
    co = bif_coefficients(base_params(0.1, ex4_shape()), 1)
    pts = sqrt_branches(co, 1)
    assert len(pts) == 2
    (x, y), (xm, ym) = pts
    assert x / y == pytest.approx(-0.294153, abs=1e-6)
    assert y * y == pytest.approx(0.214884 + 0.764897 * 0.25, abs=2e-6)
    assert (xm, ym) == (-x, -y)
    t = tilde_coefficients(co, 1)
    for px, py in pts:
        assert max(map(abs, reduced_system(t, px, py))) < 1e-10


def test_sqrt_branches_negative_eps():
    co = bif_coefficients(base_params(0.1, ex4_shape()), 1)
    pts = sqrt_branches(co, -1)
    q = [x / y for x, y in pts]
    assert any(abs(v - 1.83348) < 1e-5 for v in q)
    y2 = [y * y for x, y in pts if abs(x / y - 1.83348) < 1e-5]
    assert y2[0] == pytest.approx(0.0535297 - 0.190543 * 0.25, abs=2e-6)
    co_m = bif_coefficients(base_params(0.1, ex4_shape()), -1)
    qm = [x / y for x, y in sqrt_branches(co_m, -1)]
    assert any(abs(v + 1.83348) < 1e-5 for v in qm)


def test_sqrt_branches_degenerate_forcing():
    co = bif_coefficients(base_params(0.1, TrigSeries.from_cos_sin(0.0, {3: 0.1})), 1)
    assert sqrt_branches(co, 1) == [] and sqrt_branches(co, -1) == []
    # grid search of the cubic system finds only the trivial root
    t = tilde_coefficients(co, 1)
    g = np.linspace(-3, 3, 601)
    X, Y = np.meshgrid(g, g)
    r2 = X**2 + Y**2
    res = np.hypot(t.a * X + t.b * Y + X * r2, t.c * X + t.d * Y + Y * r2)
    i = np.unravel_index(np.argmin(res), res.shape)
    assert abs(X[i]) < 0.02 and abs(Y[i]) < 0.02


def test_strict_complex_branch():
    # b~ c~ strongly negative: large damping with tiny 2 k0 forcing
    co = bif_coefficients(base_params(2.0, TrigSeries.from_cos_sin(0.0, {2: 1e-3})), 1)
    t = tilde_coefficients(co, 1)
    assert (t.a - t.d) ** 2 + 4 * t.b * t.c < 0
    assert sqrt_branches(co, 1) == []
    with pytest.raises(ComplexBranch):
        sqrt_branches(co, 1, strict=True)


def test_thresholds():
    co = bif_coefficients(base_params(0.1, ex4_shape()), 1)
    th = branch_thresholds(co)
    assert round(th.mu0_two_branch_edge, 6) == 0.280932
    assert round(th.mu0_four_branch_edge, 6) == 0.286921
    assert th.mu0_two_branch_edge == pytest.approx(math.sqrt(11940227) / 12300, rel=1e-12)
    assert th.two_branch
    zero = bif_coefficients(base_params(0.1, cos_series(0.0, 3)), 1)
    th0 = branch_thresholds(zero)
    g = 0.1 * OMEGA
    assert th0.discriminant == pytest.approx(zero.delta_2k0**2 * g * g, rel=1e-12)
    assert not th0.two_branch


def test_branch_determinant():
    for mu0 in (0.05, 0.25):
        co = bif_coefficients(base_params(0.1, ex4_shape(mu0)), 1)
        for x, y in sqrt_branches(co, 1):
            assert branch_determinant(co, x / y, y, 1) == pytest.approx(0.218047 + 0.776154 * mu0,
                                                                       abs=2e-6)
        dets = [branch_determinant(co, x / y, y, -1) for x, y in sqrt_branches(co, -1)
                if abs(x / y - 1.83348) < 1e-5]
        assert dets[0] == pytest.approx(0.218047 - 0.776154 * mu0, abs=2e-6)
    t = tilde_coefficients(co, 1)
    assert branch_determinant(co, 0.0, 0.0) == pytest.approx(t.a * t.d - t.b * t.c)


@pytest.mark.parametrize("kind", ["cuberoot", "linear", "order-eps", "sqrt"])
def test_predictions_seed_newton(kind):
    if kind == "cuberoot":
        P, order, eps = base_params(0.1, cos_series()), 1, 1e-5
    elif kind == "linear":
        P, order, eps = base_params(0.1, cos_series()), 2, 1e-4
    else:
        P, order, eps = base_params(0.1, ex4_shape()), 1, 1e-4
    pred = predict(P, forcing_order=order)
    if kind == "sqrt":
        pred = pred.companions[0]
    guess = pred.profile(eps)
    sol = newton_solve(scaled_problem(P, eps, order), guess, J=16)
    assert sol.iterations <= 8
    k = 2 if kind == "order-eps" else 1
    # compare the dominant real component (cos or sin part) of mode k
    g, c = guess.coeff(k), sol.series.coeff(k)
    if abs(g.real) >= abs(g.imag):
        g, c = g.real, c.real
    else:
        g, c = g.imag, c.imag
    assert abs(c - g) <= 0.02 * abs(g)


def test_prediction_json():
    pred = predict(base_params(0.1, ex4_shape()))
    d = pred.to_dict(1e-4, n_samples=8)
    assert d["regime"] == ORDER_EPS and len(d["samples"]) == 8
    assert len(d["companions"]) == 2 and d["companions"][0]["scaling_exponent"] == 0.5
