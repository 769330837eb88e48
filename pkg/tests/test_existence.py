import math

import numpy as np
import pytest

from milattice.errors import NotAdmissible
from milattice.existence import ball_radius, certify, lipschitz_check, max_radius, solve_contraction
from milattice.galerkin import newton_solve
from milattice.series import TrigSeries, norm

from conftest import OMEGA, base_params, cos_series, random_series

NONRES_OMEGA = 1.23


def random_admissible(rng, P, K=3, frac=0.5):
    """Random forcing with norm ``frac`` of the admissible bound."""
    h = random_series(rng, K)
    bound = certify(P.replace(h=h)).bound_H
    return h * (frac * bound / norm(h, 0))


def test_zero_forcing_not_admissible():
    c = certify(base_params(0.1))
    assert not c.admissible and c.rho_h == 0


def test_resonant_not_admissible(resonant):
    c = certify(resonant)
    assert not c.admissible and c.reason == "resonant"


def test_double_root_at_max_forcing():
    P = base_params(0.1)
    th = certify(P.replace(h=cos_series(1e-3))).theta
    C = P.nonlinear_constant
    H = th**2 / (8 * C)
    assert ball_radius(th, C, H) == pytest.approx(th / (4 * C))
    assert max_radius(P, th) == pytest.approx(th / (4 * C))


def test_radius_against_bisection():
    P = base_params(0.1, cos_series(1e-4))
    c = certify(P)
    assert c.admissible
    C = P.nonlinear_constant
    A = lambda r: c.theta * r - 2 * C * r * r - c.h_norm
    lo, hi = 0.0, c.theta / (4 * C)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if A(mid) < 0 else (lo, mid)
    assert c.rho_h == pytest.approx(lo, rel=1e-12)
    assert c.contraction_constant == pytest.approx(4 * C * c.rho_h / c.theta)
    assert c.contraction_constant < 1


def test_contraction_zero_forcing_forced():
    res = solve_contraction(base_params(0.1), force=True)
    assert res.iterations == 1 and norm(res.U, 0) == 0


def test_contraction_not_admissible(resonant):
    with pytest.raises(NotAdmissible):
        solve_contraction(resonant)


def test_unit_forcing_1e3_exceeds_bound():
    # the admissible bound here is about 4.17e-4
    c = certify(base_params(0.1, cos_series(1e-3)))
    assert not c.admissible and c.bound_H == pytest.approx(4.1673e-4, rel=1e-4)
    res = solve_contraction(base_params(0.1, cos_series(1e-3)), force=True)
    B = 5 * math.sqrt(37) / 37 / 0.1
    assert -2 * res.U.coeff(1).imag / 1e-3 == pytest.approx(B, rel=5e-3)


def test_contraction_linear_response():
    eps = 1e-4
    P = base_params(0.1, cos_series(eps))
    res = solve_contraction(P)
    B = 5 * math.sqrt(37) / 37 / 0.1
    b1 = -2 * res.U.coeff(1).imag
    assert b1 / eps == pytest.approx(B, rel=5e-3)
    assert norm(res.U, 2) <= res.certificate.rho_h + 1e-12
    assert res.observed_rate <= res.certificate.contraction_constant + 0.05
    assert res.max_iterate_norm <= res.certificate.rho_h + 1e-12
    q = res.certificate.contraction_constant
    assert res.iterations <= math.log(1e-13) / math.log(q) + 50
    sol = newton_solve(P, J=32, tol=1e-14)
    assert norm(sol.series - res.U, 2) < 1e-10


def test_contraction_matches_newton_nonresonant(rng):
    P = base_params(0.0, omega=NONRES_OMEGA)
    P = P.replace(h=random_admissible(rng, P))
    res = solve_contraction(P)
    sol = newton_solve(P, J=48)
    assert norm(sol.series - res.U, 2) < 1e-10


def test_lipschitz_checks(rng):
    P = base_params(0.1, cos_series(1e-4))
    U = solve_contraction(P).U
    rep = lipschitz_check(P, P, U, U)
    assert rep.lhs == 0 and rep.rhs == 0 and rep.holds
    P2 = P.replace(h=P.h * 1.1)
    rep = lipschitz_check(P, P2, U, solve_contraction(P2).U)
    assert rep.holds and rep.lhs < rep.rhs
    base = base_params(0.1)
    for _ in range(20):
        h1 = random_admissible(rng, base, frac=rng.uniform(0.05, 0.9))
        h2 = random_admissible(rng, base, frac=rng.uniform(0.05, 0.9))
        P1, P2 = base.replace(h=h1), base.replace(h=h2)
        assert lipschitz_check(P1, P2, solve_contraction(P1).U, solve_contraction(P2).U).holds


def test_uniqueness_probe(rng):
    P = base_params(0.1)
    P = P.replace(h=random_admissible(rng, P, K=2, frac=0.6))
    ref = solve_contraction(P)
    rho = ref.certificate.rho_h
    for _ in range(10):
        U0 = random_series(rng, 6, decay=3.0)
        U0 = U0 * (rng.uniform(0.1, 0.95) * rho / norm(U0, 2))
        res = solve_contraction(P, U0=U0)
        K = max(res.U.K_max, ref.U.K_max)
        assert norm(res.U.resized(K) - ref.U.resized(K), 2) < 1e-10
