import io
import math

import numpy as np
import pytest

from milattice.asymptotics import predict, scaled_problem
from milattice.errors import NoConvergence, SingularJacobian
from milattice.galerkin import (ContinuationCurve, GalerkinSystem, continue_in_h0, from_ser_basis,
                                newton_solve, series_to_vector, solve_on_curve, to_ser_basis,
                                vector_to_series)
from milattice.model import residual as model_residual
from milattice.series import TrigSeries, amplitude, norm, shift

from conftest import base_params, cos_series, random_series


def test_layout_roundtrip(rng):
    U = random_series(rng, 5)
    x = series_to_vector(U, 8)
    assert x.size == 17
    assert np.allclose(vector_to_series(x, 8).resized(5).coeffs, U.coeffs)
    B, C = to_ser_basis(U, 6)
    z = np.linspace(0, 2 * np.pi, 9)
    j = np.arange(1, 7)
    direct = (np.cos(np.outer(z, j - 1)) @ B) + (np.sin(np.outer(z, j)) @ C)
    assert np.allclose(direct, U(z), atol=1e-13)
    assert np.allclose(from_ser_basis(B, C).resized(5).coeffs, U.coeffs)


def test_residual_zero_state_is_minus_h():
    P = base_params(0.1, TrigSeries.from_cos_sin(0.2, {1: 0.3}, {2: 0.1}))
    S = GalerkinSystem(P, 6)
    r = S.residual(np.zeros(S.size))
    assert np.allclose(r, -S.forcing_vector())


def test_residual_agrees_with_operator_composition(rng):
    P = base_params(0.1, random_series(rng, 3, 0.01))
    U = random_series(rng, 5, 0.1)
    J = 10  # U^2 fits, so the projection is exact
    r = vector_to_series(GalerkinSystem(P, J).residual(series_to_vector(U, J)), J)
    ref = model_residual(P, U).resized(J)
    assert np.max(np.abs(r.coeffs - ref.coeffs)) < 1e-13


def test_jacobian_matches_finite_differences(rng):
    P = base_params(0.05, random_series(rng, 2, 0.1))
    S = GalerkinSystem(P, 7)
    for _ in range(3):
        x = rng.standard_normal(S.size) * 0.2
        Jm = S.jacobian(x)
        h = 1e-6
        fd = np.empty_like(Jm)
        for i in range(S.size):
            e = np.zeros(S.size)
            e[i] = h
            fd[:, i] = (S.residual(x + e) - S.residual(x - e)) / (2 * h)
        assert np.max(np.abs(fd - Jm)) <= 1e-6 * max(1.0, np.max(np.abs(Jm)))
        v = rng.standard_normal(S.size)
        # derivative of J(x) v along v is the product matrix
        dJ = (S.jacobian(x + h * v) - S.jacobian(x - h * v)) / (2 * h)
        assert np.allclose(dJ @ v, S.product_matrix(v) @ v, atol=1e-6)


def test_newton_zero_forcing():
    sol = newton_solve(base_params(0.1), J=8)
    assert sol.iterations == 1 and norm(sol.series, 0) == 0 and sol.residual_norm == 0


def test_newton_validation_and_failures(resonant):
    with pytest.raises(ValueError):
        newton_solve(base_params(0.1, cos_series(0.1, 5)), J=6)
    with pytest.raises(SingularJacobian):
        newton_solve(resonant.replace(h=cos_series(0.01)), J=16)
    with pytest.raises(NoConvergence):
        newton_solve(base_params(0.1, cos_series(0.01)), J=16, max_iter=2)


def test_newton_cuberoot_instance():
    eps = 1e-5
    P = base_params(0.1, cos_series())
    guess = predict(P).profile(eps)
    sol = newton_solve(scaled_problem(P, eps), guess, J=16)
    assert sol.residual_norm <= 1e-11
    assert 2 * sol.series.coeff(1).real / np.cbrt(eps) == pytest.approx(1.18456, rel=0.02)


def test_newton_quadratic_convergence():
    P = base_params(0.0, cos_series(0.001), omega=1.23)
    sol = newton_solve(P, J=32, tol=1e-14)
    e = np.array(sol.step_history)
    e = e[e > 1e-12]
    assert len(e) >= 3
    ratios = e[1:] / e[:-1] ** 2
    assert np.all(ratios < 100)


def test_amplitude_definition():
    sol = newton_solve(base_params(0.1, cos_series(0.01)), J=32)
    z = 2 * np.pi * np.arange(1024) / 1024
    v = sol.series(z)
    assert sol.amplitude == pytest.approx((v.max() - v.min()) / 2, rel=1e-14)
    assert amplitude(-sol.series) == sol.amplitude


def test_sign_symmetry_of_forcing():
    P = base_params(0.0, cos_series(0.001), omega=1.23)
    a = newton_solve(P, J=32, tol=1e-13)
    b = newton_solve(P.replace(h=-P.h), shift(a.series, math.pi), J=32, tol=1e-13)
    assert norm(b.series - shift(a.series, math.pi), 0) < 1e-12
    assert b.amplitude == pytest.approx(a.amplitude, rel=1e-12)


def _fold_curve(gamma):
    P = base_params(gamma, omega=1.23)
    return continue_in_h0(P, cos_series(), (0.0, 0.2), J=64, h0_bounds=(-0.2, 0.2))


@pytest.fixture(scope="module")
def fold_curve():
    return _fold_curve(0.001)


def test_curve_structure(fold_curve):
    c = fold_curve
    assert c.n_folds == 2
    pts = c.points
    for f in c.folds:
        i = f.index
        assert pts[i].fold
        # neighbours on either side have opposite dh0/ds
        assert pts[i - 1].dh0_ds * pts[i + 1].dh0_ds < 0
    for a, b in zip(pts[:-1], pts[1:]):
        dh = abs(b.h0 - a.h0)
        assert dh <= 0.02 + 1e-12 and b.arc_s >= a.arc_s


def test_fold_certificate(fold_curve):
    smins = np.array([p.sigma_min for p in fold_curve.points if not p.fold])
    med = np.median(smins)
    for f in fold_curve.folds:
        assert f.sigma_min < 1e-8 * med
        assert f.sigma_min_bordered > 1e-4


def test_curve_csv(fold_curve):
    buf = io.StringIO()
    fold_curve.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(ContinuationCurve.CSV_HEADER)
    assert sum(line.endswith(",true") for line in lines[1:]) == 2
    buf2 = io.StringIO()
    _fold_curve(0.001).to_csv(buf2)
    assert buf2.getvalue() == buf.getvalue()


def test_solve_on_curve():
    P = base_params(0.1)
    curve = continue_in_h0(P, cos_series(), (0.0, 0.05), J=32)
    sol = solve_on_curve(curve, P, cos_series(), 0.01)
    ref = newton_solve(P.replace(h=cos_series(0.01)), J=32)
    assert norm(sol.series - ref.series, 0) < 1e-12
    with pytest.raises(ValueError):
        solve_on_curve(curve, P, cos_series(), 1.0)
