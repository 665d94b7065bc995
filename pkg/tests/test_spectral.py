import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from momentocp.polyalg import Polynomial
from momentocp.spectral import (
    BoundsConfig,
    ControlSet,
    Horizon,
    _energy_inner,
    _wave_phi,
    _wave_psi_coeffs,
    heat_model,
    truncate_and_realify,
    wave_model,
)

EPS, X0 = 0.4, 0.27


def quad_c(fn, a=0.0, b=1.0):
    re = quad(lambda x: np.real(fn(x)), a, b, epsabs=1e-10, limit=200)[0]
    im = quad(lambda x: np.imag(fn(x)), a, b, epsabs=1e-10, limit=200)[0]
    return re + 1j * im


class TestHeat:
    def test_eigenvalues(self):
        model = heat_model(EPS, X0)
        assert model.eigenvalue(3) == pytest.approx(-9 * np.pi**2)
        lams = [model.eigenvalue(k).real for k in range(1, 8)]
        assert all(a > b for a, b in zip(lams, lams[1:]))

    def test_initial_projection_closed_forms(self):
        model = heat_model(EPS, X0)
        assert model.initial_projection(1) == 0.0
        assert model.initial_projection(2).real == pytest.approx(4 * np.sqrt(2) / (3 * np.pi))

    def test_projections_match_quadrature(self):
        model = heat_model(EPS, X0)
        a, c = max(0.0, X0 - EPS), min(1.0, X0 + EPS)
        for k in range(1, 7):
            zq = quad_c(lambda x: np.cos(np.pi * x) * np.sqrt(2) * np.sin(k * np.pi * x))
            assert abs(model.initial_projection(k) - zq) < 1e-9
            bq = quad_c(lambda x: np.sqrt(2) * np.sin(k * np.pi * x) / EPS, a, c)
            assert abs(model.input_projection(k)[0] - bq) < 1e-9

    def test_b1_clipped_support(self):
        # nominal support [-0.13, 0.67] exits the domain; integration is clipped
        model = heat_model(EPS, X0)
        expected = np.sqrt(2) / (EPS * np.pi) * (np.cos(0.0) - np.cos(np.pi * 0.67))
        assert model.input_projection(1)[0].real == pytest.approx(expected, rel=1e-12)

    def test_uncontrolled_mode_decay(self):
        model = heat_model(EPS, X0)
        k = 2
        lam = model.eigenvalue(k).real
        z0 = model.initial_projection(k).real
        sol = solve_ivp(
            lambda t, z: lam * z, (0, 0.3), [z0], rtol=1e-11, atol=1e-13, dense_output=True
        )
        for t in (0.05, 0.17, 0.3):
            assert abs(sol.sol(t)[0] - np.exp(lam * t) * z0) < 1e-8


class TestWave:
    def test_eigenvalues_conjugate_pairs(self):
        model = wave_model(EPS, X0)
        assert model.eigenvalue(2) == pytest.approx(2j * np.pi)
        assert model.eigenvalue(-2) == pytest.approx(-2j * np.pi)

    def test_biorthonormality(self):
        for n in (1, 2, 3):
            pos_c, vel_c = _wave_psi_coeffs(n)
            for k in (n, -n):
                phi_pos, phi_vel = _wave_phi(k)
                phi_pos_d = lambda x: abs(k) * np.pi * np.cos(abs(k) * np.pi * x) / (
                    1j * k * np.pi
                )
                psi_pos_d = lambda x: pos_c * n * np.pi * np.cos(n * np.pi * x)
                psi_vel = lambda x: vel_c * np.sin(n * np.pi * x)
                val = _energy_inner(phi_pos_d, phi_vel, psi_pos_d, psi_vel)
                assert abs(val - (1.0 if k == n else 0.0)) < 1e-9

    def test_initial_projection_conjugate_symmetry(self):
        model = wave_model(EPS, X0)
        for k in (1, 2, 3):
            zk = model.initial_projection(k)
            zmk = model.initial_projection(-k)
            assert abs(zmk - np.conj(zk)) < 1e-9

    def test_position_content_only_at_frequency_two(self):
        # position part of the initial data is sin(2 pi x): its contribution
        # to z_k^0 vanishes except at |k| = 2
        for k in (1, -1, 2, 3, -3):
            pos_c, _ = _wave_psi_coeffs(k)
            pos_c = _wave_psi_coeffs(k)[0]
            n = abs(k)
            contrib = quad_c(
                lambda x: 2 * np.pi * np.cos(2 * np.pi * x)
                * np.conj(pos_c * n * np.pi * np.cos(n * np.pi * x))
            )
            if n == 2:
                assert abs(contrib) > 0.1
            else:
                assert abs(contrib) < 1e-9

    def test_input_projection_conjugate_symmetry(self):
        model = wave_model(EPS, X0)
        for k in (1, 2):
            bk = model.input_projection(k)[0]
            bmk = model.input_projection(-k)[0]
            assert abs(bmk - np.conj(bk)) < 1e-9
            assert abs(bk) > 1e-3


class TestRealify:
    def test_heat_three_modes_diagonal(self):
        sysm = truncate_and_realify(
            heat_model(EPS, X0), 3, BoundsConfig(), Horizon.free(1.0)
        )
        assert sysm.n_states == 3
        A = sysm.dynamics_matrix()
        assert np.allclose(np.diag(A), [-np.pi**2, -4 * np.pi**2, -9 * np.pi**2])
        assert np.allclose(A, np.diag(np.diag(A)))

    def test_wave_one_mode_dimension_four(self):
        sysm = truncate_and_realify(
            wave_model(EPS, X0), 1, BoundsConfig(), Horizon.free(1.0)
        )
        assert sysm.n_states == 4

    def test_real_mode_realification_identity(self):
        sysm = truncate_and_realify(
            heat_model(EPS, X0), 1, BoundsConfig(), Horizon.free(1.0)
        )
        assert sysm.blocks == (("real", -np.pi**2),)

    def test_realified_flow_matches_complex_exponential(self):
        # 2x2 rotation block reproduces Re/Im of exp(lam t) z0 for lam = i pi,
        # and the scalar path for lam = -pi^2
        for lam in (1j * np.pi, complex(-np.pi**2)):
            z0 = 0.7 - 0.2j
            if lam.imag == 0:
                A = np.array([[lam.real]])
                y0 = np.array([z0.real])
            else:
                A = np.array([[lam.real, -lam.imag], [lam.imag, lam.real]])
                y0 = np.array([z0.real, z0.imag])
            sol = solve_ivp(
                lambda t, y: A @ y, (0, 1.0), y0, rtol=1e-11, atol=1e-13, dense_output=True
            )
            for t in np.linspace(0, 1, 7):
                exact = np.exp(lam * t) * z0
                got = sol.sol(t)
                assert abs(got[0] - exact.real) < 1e-8
                if lam.imag != 0:
                    assert abs(got[1] - exact.imag) < 1e-8

    def test_infeasible_initial_condition_rejected(self):
        with pytest.raises(ValueError, match="infeasible initial condition"):
            truncate_and_realify(
                heat_model(EPS, X0),
                3,
                BoundsConfig(state=np.tile([-0.1, 0.1], (3, 1))),
                Horizon.free(1.0),
            )

    def test_default_bounds_contain_z0_and_are_order_independent(self):
        b2 = truncate_and_realify(heat_model(EPS, X0), 2, BoundsConfig(), Horizon.free(1.0))
        b3 = truncate_and_realify(heat_model(EPS, X0), 3, BoundsConfig(), Horizon.free(1.0))
        assert np.allclose(b2.state_bounds, b3.state_bounds[:2])
        assert np.all(b3.z0 >= b3.state_bounds[:, 0])
        assert np.all(b3.z0 <= b3.state_bounds[:, 1])


class TestControlSet:
    def test_box_adds_interval_polys(self):
        cs = ControlSet.from_box([[-1.0, 1.0]])
        # (1-u)(u+1) = 1 - u^2 doubles as the Archimedean witness: no duplicate
        assert len(cs.constraint_polys) == 1
        p = cs.constraint_polys[0]
        assert p.eval([0.0, 0.5]) == pytest.approx(0.75)

    def test_witness_added_for_two_controls(self):
        cs = ControlSet.from_box([[-1.0, 1.0], [-1.0, 1.0]])
        # two interval polys plus M - u1^2 - u2^2
        assert len(cs.constraint_polys) == 3
        w = cs.constraint_polys[-1]
        assert w.eval([0.0, 1.0, 1.0]) == pytest.approx(0.0)

    def test_rejects_empty_interval(self):
        with pytest.raises(ValueError):
            ControlSet.from_box([[1.0, -1.0]])
