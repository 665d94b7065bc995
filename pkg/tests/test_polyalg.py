import numpy as np
import pytest

from momentocp.polyalg import (
    LinearFunctional,
    Polynomial,
    basis,
    lie_derivative,
    liouville_apply,
    monomial_count,
    poly_eval,
    rank,
    unrank,
)
from momentocp.spectral import Horizon, ModalSystem


def make_system(lam=-np.pi**2, b=1.0):
    return ModalSystem(
        blocks=(("real", lam),),
        b=np.array([[b]]),
        z0=np.array([0.0]),
        state_bounds=np.array([[-1.0, 1.0]]),
        terminal_bounds=np.array([[0.0, 0.0]]),
        horizon=Horizon.free(1.0),
    )


def test_monomial_count_examples():
    assert monomial_count(6, 2) == 28
    # wave state-moment count at one mode, order one: binom(4N+2r, 2r)
    assert monomial_count(4, 2) == 15
    assert monomial_count(1, 5) == 6


def test_monomial_count_overflow_is_explicit():
    with pytest.raises(OverflowError):
        monomial_count(10_000, 40)


def test_rank_unrank_roundtrip_deg8_10vars():
    n = monomial_count(10, 8)
    for i in range(n):
        assert rank(unrank(i, 10)) == i


def test_basis_matches_rank_order():
    for nv, d in ((1, 5), (3, 4), (5, 3)):
        B = basis(nv, d)
        assert len(B) == monomial_count(nv, d)
        for i, e in enumerate(B):
            assert rank(e) == i
            assert unrank(i, nv) == e


def test_poly_eval_examples():
    # p = t*z1 at (t=2, z1=3, u=0)
    p = Polynomial.t(1, 1) * Polynomial.z(1, 1, 1)
    assert poly_eval(p, [2.0, 3.0, 0.0]) == 6.0
    one = Polynomial.constant(1.0, 1, 1)
    assert poly_eval(one, [5.0, -2.0, 7.0]) == 1.0
    # p = z1^2 - u1 at (t=0, z1=2, u1=1)
    p = Polynomial.z(1, 1, 1) ** 2 - Polynomial.u(1, 1, 1)
    assert poly_eval(p, [0.0, 2.0, 1.0]) == 3.0


def test_poly_eval_arity_mismatch():
    p = Polynomial.t(2, 1)
    with pytest.raises(ValueError):
        p.eval([1.0, 2.0])


def test_no_zero_terms_stored():
    p = Polynomial.z(1, 1, 0) - Polynomial.z(1, 1, 0)
    assert p.terms == {}
    q = Polynomial({(0, 1): 0.0}, 1, 0)
    assert q.terms == {}


def test_product_degree_adds():
    rng = np.random.default_rng(7)
    for _ in range(10):
        e1 = tuple(rng.integers(0, 3, size=4))
        e2 = tuple(rng.integers(0, 3, size=4))
        p = Polynomial({e1: 1.5}, 2, 1)
        q = Polynomial({e2: -2.0}, 2, 1)
        assert (p * q).degree() == p.degree() + q.degree()


def test_liouville_constant_and_time():
    sysm = make_system()
    one = Polynomial.constant(1.0, 1, 1)
    assert liouville_apply(one, sysm).terms == {}
    t = Polynomial.t(1, 1)
    assert liouville_apply(t, sysm) == Polynomial.constant(1.0, 1, 1)


def test_liouville_linear_mode():
    c = 0.7
    sysm = make_system(lam=-np.pi**2, b=c)
    z1 = Polynomial.z(1, 1, 1)
    res = liouville_apply(z1, sysm)
    expected = -np.pi**2 * z1 + c * Polynomial.u(1, 1, 1)
    assert res == expected


def test_liouville_quadratic_mode():
    c = 0.7
    lam = -np.pi**2
    sysm = make_system(lam=lam, b=c)
    z1 = Polynomial.z(1, 1, 1)
    res = liouville_apply(z1**2, sysm)
    expected = 2 * lam * z1**2 + 2 * c * z1 * Polynomial.u(1, 1, 1)
    assert res == expected


def test_liouville_rejects_control_dependence():
    sysm = make_system()
    with pytest.raises(ValueError):
        liouville_apply(Polynomial.u(1, 1, 1), sysm)


def _random_state_poly(rng, N, m, deg, nterms):
    terms = {}
    for _ in range(nterms):
        e = [0] * (1 + N + m)
        e[0] = int(rng.integers(0, deg + 1))
        left = deg - e[0]
        for k in range(1, N + 1):
            e[k] = int(rng.integers(0, left + 1))
            left -= e[k]
        terms[tuple(e)] = float(rng.normal())
    return Polynomial(terms, N, m)


def test_liouville_linearity():
    rng = np.random.default_rng(3)
    sysm = ModalSystem(
        blocks=(("real", -1.0), ("pair", -0.5, 2.0)),
        b=np.array([[1.0], [0.2], [-0.3]]),
        z0=np.zeros(3),
        state_bounds=np.tile([-1.0, 1.0], (3, 1)),
        terminal_bounds=np.zeros((3, 2)),
        horizon=Horizon.fixed(1.0),
    )
    for _ in range(5):
        g1 = _random_state_poly(rng, 3, 1, 3, 4)
        g2 = _random_state_poly(rng, 3, 1, 3, 4)
        a, b = float(rng.normal()), float(rng.normal())
        lhs = liouville_apply(a * g1 + b * g2, sysm)
        rhs = a * liouville_apply(g1, sysm) + b * liouville_apply(g2, sysm)
        keys = set(lhs.terms) | set(rhs.terms)
        scale = max(1.0, max(abs(c) for c in lhs.terms.values()) if lhs.terms else 1.0)
        for e in keys:
            assert abs(lhs.terms.get(e, 0.0) - rhs.terms.get(e, 0.0)) <= 1e-12 * scale


def test_liouville_degree_bound():
    sysm = make_system(lam=-2.0, b=0.5)
    for e in basis(3, 4):
        if e[2] != 0:  # control slot
            continue
        g = Polynomial({e: 1.0}, 1, 1)
        assert liouville_apply(g, sysm).degree() <= g.degree()


def test_liouville_matches_finite_differences_along_trajectory():
    # d/dt g(t, z(t)) along z' = lam z + b u against the symbolic generator
    lam, b = -1.3, 0.8
    sysm = make_system(lam=lam, b=b)
    u_fn = lambda t: 0.4 * np.sin(3 * t)

    def rhs(t, z):
        return lam * z + b * u_fn(t)

    from scipy.integrate import solve_ivp

    sol = solve_ivp(rhs, (0.0, 1.0), [0.5], dense_output=True, rtol=1e-10, atol=1e-12)
    dt = 1e-6
    rng = np.random.default_rng(0)
    for e in basis(2, 4):
        g = Polynomial({(e[0], e[1], 0): 1.0}, 1, 1)
        Lg = liouville_apply(g, sysm)
        for t in rng.uniform(0.1, 0.9, size=3):
            z = sol.sol(t)[0]
            zp = sol.sol(t + dt)[0]
            zm = sol.sol(t - dt)[0]
            fd = (g.eval([t + dt, zp, 0.0]) - g.eval([t - dt, zm, 0.0])) / (2 * dt)
            sym = Lg.eval([t, z, u_fn(t)])
            assert abs(fd - sym) <= 1e-4 * max(1.0, abs(sym))


def test_lie_derivative_with_offset_and_time_rate():
    # scaled dynamics carry a constant term and a non-unit time rate
    g = Polynomial.t(1, 1) * Polynomial.z(1, 1, 1)
    res = lie_derivative(g, A=[[2.0]], B=[[1.0]], const=[0.5], t_rate=3.0)
    t, z1, u1 = Polynomial.t(1, 1), Polynomial.z(1, 1, 1), Polynomial.u(1, 1, 1)
    assert res == 3.0 * z1 + t * (0.5 + 2.0 * z1 + u1)


def test_linear_functional_linearity():
    rng = np.random.default_rng(11)
    y = rng.normal(size=monomial_count(3, 4))
    ell = LinearFunctional(y, 3, 4)
    p1 = _random_state_poly(rng, 1, 1, 4, 5)
    p2 = _random_state_poly(rng, 1, 1, 4, 5)
    a, b = 1.7, -0.3
    lhs = ell(a * p1 + b * p2)
    rhs = a * ell(p1) + b * ell(p2)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_subst_affine():
    # t -> (1+tau)/2, z -> 0.5 + 0.25 zeta
    p = Polynomial.t(1, 0) * Polynomial.z(1, 1, 0) ** 2
    q = p.subst_affine([0.5, 0.5, ], [0.5, 0.25])
    for tau, zeta in [(-1.0, -1.0), (0.3, 0.7), (1.0, 1.0)]:
        t, z = 0.5 + 0.5 * tau, 0.5 + 0.25 * zeta
        assert abs(q.eval([tau, zeta]) - p.eval([t, z])) < 1e-14
