import numpy as np
import pytest

from activesysid.errors import NonFiniteOutput
from activesysid.rng import RngStream
from activesysid.systems import (
    DampedPendulum,
    DoubleIntegrator,
    PursuitEvasionLqr,
    PursuitEvasionMpc,
    make_system,
    system_descriptions,
)

from conftest import DecayParams, FirstCoordObserver


def fd_jac_theta(sys, x, u, theta, h=2e-5):
    """Independent central-difference oracle for d f / d theta."""
    theta = np.asarray(theta, dtype=np.float64)
    jac = np.zeros((sys.n_x, sys.n_theta))
    for k in range(sys.n_theta):
        up, dn = theta.copy(), theta.copy()
        up[k] += h
        dn[k] -= h
        jac[:, k] = (sys.step(x, u, up) - sys.step(x, u, dn)) / (2 * h)
    return jac


def random_inputs(sys, gen, theta_scale=0.3):
    x = gen.standard_normal(sys.n_x)
    u = gen.uniform(sys.control_lo, sys.control_hi)
    theta = sys.theta_true + theta_scale * gen.standard_normal(sys.n_theta)
    return x, u, theta


class TestDoubleIntegrator:
    def test_identity_dynamics(self):
        sys = DoubleIntegrator()
        theta = DoubleIntegrator.pack_theta(np.eye(4), np.zeros((4, 2)))
        x = np.array([0.3, -1.0, 0.5, 2.0])
        for u in (np.zeros(2), np.array([1.0, -1.0])):
            assert np.allclose(sys.step(x, u, theta), x, atol=1e-14)

    def test_pack_unpack_roundtrip(self):
        gen = np.random.default_rng(0)
        A, B = gen.standard_normal((4, 4)), gen.standard_normal((4, 2))
        A2, B2 = DoubleIntegrator.unpack_theta(DoubleIntegrator.pack_theta(A, B))
        assert np.array_equal(A, A2) and np.array_equal(B, B2)

    def test_linearity_in_theta(self):
        sys = DoubleIntegrator()
        gen = np.random.default_rng(1)
        for _ in range(20):
            x, u = gen.standard_normal(4), gen.standard_normal(2)
            ta, tb = gen.standard_normal(24), gen.standard_normal(24)
            lhs = (
                sys.step(x, u, ta + tb)
                - sys.step(x, u, ta)
                - sys.step(x, u, tb)
                + sys.step(x, u, np.zeros(24))
            )
            assert np.all(np.abs(lhs) < 1e-12)

    def test_jacobian_matches_fd_exactly(self):
        sys = DoubleIntegrator()
        gen = np.random.default_rng(2)
        for _ in range(100):
            x, u, theta = random_inputs(sys, gen)
            assert np.allclose(
                sys.jac_f_theta(x, u, theta), fd_jac_theta(sys, x, u, theta), atol=1e-9
            )

    def test_jacobian_kron_structure(self):
        sys = DoubleIntegrator()
        x, u = np.array([1.0, 2.0, 3.0, 4.0]), np.array([5.0, 6.0])
        jac = sys.jac_f_theta(x, u, sys.theta_true)
        expect = np.hstack([np.kron(x[None, :], np.eye(4)), np.kron(u[None, :], np.eye(4))])
        assert np.array_equal(jac, expect)

    def test_batches_match_scalar(self):
        sys = DoubleIntegrator()
        gen = np.random.default_rng(3)
        X = gen.standard_normal((6, 4))
        U = gen.standard_normal((6, 2))
        theta = sys.theta_true
        batch = sys.step_batch(X, U, theta)
        jbatch = sys.jac_f_theta_batch(X, U, theta)
        for i in range(6):
            assert np.allclose(batch[i], sys.step(X[i], U[i], theta), atol=1e-12)
            assert np.allclose(jbatch[i], sys.jac_f_theta(X[i], U[i], theta), atol=1e-12)
        thetas = sys.theta_true + 0.1 * gen.standard_normal((5, 24))
        tb = sys.step_batch_theta(X[0], U[0], thetas)
        for k in range(5):
            assert np.allclose(tb[k], sys.step(X[0], U[0], thetas[k]), atol=1e-12)


class TestDampedPendulum:
    def test_equilibrium(self):
        sys = DampedPendulum()
        assert np.allclose(sys.step([0.0, 0.0], [0.0], sys.theta_true), [0.0, 0.0])

    def test_hand_value_quarter_turn(self):
        # mgl = 1, L = 1, b = 0, dt = 0.1: accel at phi = pi/2 is -1
        sys = DampedPendulum(dt=0.1, m=1.0, g_grav=1.0, l=1.0, b_true=0.0, L_true=1.0)
        out = sys.step([np.pi / 2, 0.0], [0.0], [0.0, 1.0])
        assert out[0] == pytest.approx(np.pi / 2)
        assert out[1] == pytest.approx(-0.1, abs=1e-12)

    def test_jacobian_hand_columns(self):
        sys = DampedPendulum()
        phi, om, tau = 0.7, -1.3, 0.9
        b, L = 0.4, 1.7
        jac = sys.jac_f_theta([phi, om], [tau], [b, L])
        net = tau - b * om - sys.m * sys.g_grav * sys.l * np.sin(phi)
        assert np.allclose(jac[0], [0.0, 0.0])
        assert jac[1, 0] == pytest.approx(-om * sys.dt / L, rel=1e-12)
        assert jac[1, 1] == pytest.approx(-net * sys.dt / L**2, rel=1e-12)

    def test_jacobian_matches_fd(self):
        sys = DampedPendulum()
        gen = np.random.default_rng(4)
        for _ in range(100):
            x, u, theta = random_inputs(sys, gen, theta_scale=0.2)
            assert np.allclose(
                sys.jac_f_theta(x, u, theta), fd_jac_theta(sys, x, u, theta), atol=1e-4
            )

    def test_tiny_inertia_raises(self):
        sys = DampedPendulum()
        with pytest.raises(NonFiniteOutput):
            sys.step([0.1, 0.0], [0.0], [0.3, 1e-10])

    def test_batches_match_scalar(self):
        sys = DampedPendulum()
        gen = np.random.default_rng(5)
        X = gen.standard_normal((5, 2))
        U = gen.uniform(-3, 3, size=(5, 1))
        assert np.allclose(
            sys.step_batch(X, U, sys.theta_true),
            [sys.step(X[i], U[i], sys.theta_true) for i in range(5)],
        )
        thetas = np.abs(gen.standard_normal((4, 2))) + 0.2
        tb = sys.step_batch_theta(X[0], U[0], thetas)
        for k in range(4):
            assert np.allclose(tb[k], sys.step(X[0], U[0], thetas[k]))


class TestParamAndObservationMaps:
    def test_identity_param_step(self):
        sys = DoubleIntegrator()
        theta = np.arange(24.0)
        assert np.array_equal(sys.param_step(theta), theta)
        assert np.array_equal(sys.jac_g_theta(theta), np.eye(24))

    def test_identity_observation(self):
        sys = DampedPendulum()
        x = np.array([0.3, -0.2])
        assert np.array_equal(sys.observe(x), x)
        assert np.array_equal(sys.jac_q_x(x), np.eye(2))
        assert sys.has_identity_observation

    def test_decay_param_double(self):
        sys = DecayParams()
        theta = np.array([1.0, -2.0, 3.0])
        assert np.allclose(sys.param_step(theta), 0.9 * theta)
        assert np.allclose(sys.jac_g_theta(theta), 0.9 * np.eye(3))

    def test_projection_observer_double(self):
        sys = FirstCoordObserver()
        x = np.array([2.0, 3.0, 4.0])
        assert np.array_equal(sys.observe(x), [2.0])
        assert np.array_equal(sys.jac_q_x(x), [[1.0, 0.0, 0.0]])
        assert not sys.has_identity_observation


class TestPursuitEvasionLqr:
    def test_zero_tracking_error_zero_policy(self):
        sys = PursuitEvasionLqr()
        gen = np.random.default_rng(6)
        x2 = gen.standard_normal(4)
        x1 = sys.A @ x2
        assert np.allclose(sys.pursuer_policy(x1, x2, sys.theta_true), 0.0, atol=1e-12)

    def test_zero_q_zero_policy(self):
        sys = PursuitEvasionLqr()
        theta = np.zeros(13)
        theta[10:] = [1.0, 0.0, 1.0]  # R = I, Q = 0
        gen = np.random.default_rng(7)
        pi = sys.pursuer_policy(gen.standard_normal(4), gen.standard_normal(4), theta)
        assert np.allclose(pi, 0.0, atol=1e-12)

    def test_policy_matches_direct_solve_oracle(self):
        sys = PursuitEvasionLqr(Q_true=np.eye(4), R_true=np.eye(2))
        gen = np.random.default_rng(8)
        x1, x2 = gen.standard_normal(4), gen.standard_normal(4)
        Q, R = PursuitEvasionLqr.unpack_theta(sys.theta_true)
        expect = -np.linalg.solve(R + sys.B.T @ Q @ sys.B, sys.B.T @ Q @ (sys.A @ x2 - x1))
        assert np.allclose(sys.pursuer_policy(x1, x2, sys.theta_true), expect, atol=1e-10)

    def test_reconstruction_psd(self):
        gen = np.random.default_rng(9)
        for _ in range(50):
            Q, R = PursuitEvasionLqr.unpack_theta(gen.standard_normal(13))
            assert np.linalg.eigvalsh(Q)[0] >= -1e-12
            assert np.linalg.eigvalsh(R)[0] > 0
    def test_translation_invariance(self):
        sys = PursuitEvasionLqr()
        gen = np.random.default_rng(10)
        x1, x2 = gen.standard_normal(4), gen.standard_normal(4)
        delta = np.array([1.5, -2.5])
        x1t, x2t = x1.copy(), x2.copy()
        x1t[:2] += delta
        x2t[:2] += delta
        assert np.allclose(
            sys.pursuer_policy(x1, x2, sys.theta_true),
            sys.pursuer_policy(x1t, x2t, sys.theta_true),
            atol=1e-12,
        )

    def test_jacobian_matches_fd(self):
        sys = PursuitEvasionLqr()
        gen = np.random.default_rng(11)
        for _ in range(100):
            x, u, theta = random_inputs(sys, gen)
            assert np.allclose(
                sys.jac_f_theta(x, u, theta), fd_jac_theta(sys, x, u, theta), atol=1e-4
            )

    def test_batches_match_scalar(self):
        sys = PursuitEvasionLqr()
        gen = np.random.default_rng(12)
        X = gen.standard_normal((5, 8))
        U = gen.standard_normal((5, 2))
        theta = sys.theta_true + 0.1 * gen.standard_normal(13)
        sb = sys.step_batch(X, U, theta)
        jb = sys.jac_f_theta_batch(X, U, theta)
        for i in range(5):
            assert np.allclose(sb[i], sys.step(X[i], U[i], theta), atol=1e-12)
            assert np.allclose(jb[i], sys.jac_f_theta(X[i], U[i], theta), atol=1e-12)


class TestPursuitEvasionMpc:
    def test_effort_only_limit(self):
        sys = PursuitEvasionMpc()
        pi = sys.pursuer_policy(
            np.array([0.0, 0.0, 0.0, 0.0]), np.array([3.0, 3.0, -2.4, 0.5]), 1e-8
        )
        assert np.linalg.norm(pi) < 1e-3

    def test_stationary_at_target(self):
        sys = PursuitEvasionMpc()
        pi = sys.pursuer_policy(
            np.array([1.0, -1.0, 0.0, 0.0]), np.array([1.0, -1.0, 0.7, 0.0]), 5.0
        )
        assert np.linalg.norm(pi) <= 1e-9

    def test_one_step_grid_oracle(self):
        sys = PursuitEvasionMpc(mpc_horizon=1)
        x1 = np.array([0.5, -0.5, 0.0, 0.0])
        x2 = np.array([2.0, 1.0, 2.2, 0.8])
        got = sys.pursuer_policy(x1, x2, 5.0)
        # exhaustive grid over the 2-D control box at 1e-2 resolution
        grid = np.arange(-2.0, 2.0 + 1e-9, 1e-2)
        om, ac = np.meshgrid(grid, grid, indexing="ij")
        candidates = np.stack([om.ravel(), ac.ravel()], axis=1)[:, None, :]
        costs = sys.mpc_objective(
            np.tile(x1[:2], (candidates.shape[0], 1)),
            np.tile(x2, (candidates.shape[0], 1)),
            5.0,
            candidates,
        )
        best = candidates[np.argmin(costs), 0]
        assert np.all(np.abs(got - best) <= 1e-2 + 1e-12)

    def test_descent_from_zero(self):
        sys = PursuitEvasionMpc()
        gen = np.random.default_rng(13)
        for _ in range(10):
            x1 = gen.standard_normal(4)
            x2 = np.concatenate(
                [gen.standard_normal(2) * 2, [gen.uniform(-np.pi, np.pi), gen.uniform(0, 1.5)]]
            )
            p1, X2 = x1[None, :2], x2[None, :]
            zero_cost = sys.mpc_objective(p1, X2, 5.0, np.zeros((1, sys.mpc_horizon, 2)))
            _, final_cost = sys._mpc_solve(p1, X2, 5.0)
            assert final_cost[0] <= zero_cost[0] + 1e-12

    def test_grad_modes_agree(self):
        analytic = PursuitEvasionMpc(mpc_grad_mode="analytic")
        fd = PursuitEvasionMpc(mpc_grad_mode="fd")
        x1 = np.array([0.0, 0.0, 0.0, 0.0])
        x2 = np.array([2.5, -1.0, 1.0, 0.6])
        pa = analytic.pursuer_policy(x1, x2, 5.0)
        pf = fd.pursuer_policy(x1, x2, 5.0)
        assert np.allclose(pa, pf, atol=1e-5)

    def test_fd_jacobian_smooth(self):
        sys = PursuitEvasionMpc()
        gen = np.random.default_rng(14)
        for _ in range(100):
            x = np.concatenate(
                [
                    gen.standard_normal(4),
                    gen.standard_normal(2) * 2,
                    [gen.uniform(-np.pi, np.pi), gen.uniform(0, 1.5)],
                ]
            )
            u = gen.uniform(-2, 2, size=2)
            w = gen.uniform(1.0, 10.0)
            jac = sys.jac_f_theta(x, u, [w])
            oracle = fd_jac_theta(sys, x, u, np.array([w]), h=2e-5)
            assert np.allclose(jac, oracle, atol=1e-4)

    def test_batch_theta_matches_scalar(self):
        sys = PursuitEvasionMpc()
        x = sys.default_initial_state()
        u = np.array([0.5, -0.5])
        ws = np.array([[1.0], [5.0], [9.0]])
        tb = sys.step_batch_theta(x, u, ws)
        for k in range(3):
            assert np.allclose(tb[k], sys.step(x, u, ws[k]), atol=1e-12)


def test_registry_contents():
    names = [name for name, _ in system_descriptions()]
    assert names == ["double_integrator", "damped_pendulum", "pe_lqr", "pe_mpc"]
    sys = make_system("double_integrator")
    assert isinstance(sys, DoubleIntegrator)
    with pytest.raises(KeyError):
        make_system("nope")


def test_base_control_helpers():
    sys = DampedPendulum()
    assert np.array_equal(sys.clamp_control(np.array([9.0])), [3.0])
    rng = RngStream(0)
    for _ in range(100):
        u = sys.sample_control(rng)
        assert sys.control_lo[0] <= u[0] <= sys.control_hi[0]
