import math

import numpy as np
import pytest

from quarterstep import (DirectionSet, DivergenceError, GaussianTarget,
                         InvalidInputError, LogisticTarget, PhasePoint,
                         TargetModel, exact_gaussian_flow, gen_synthetic,
                         hamiltonian, inf_seminorm, leapfrog_step,
                         leapfrog_trajectory, n_leapfrog_steps)


class ZeroPotential(TargetModel):
    def __init__(self, dim):
        super().__init__(dim=dim)

    def potential(self, q):
        self._check_point(q)
        return 0.0

    def gradient(self, q):
        q = self._check_point(q)
        return np.zeros_like(q)


class ExplodingPotential(TargetModel):
    def __init__(self):
        super().__init__(dim=1)

    def potential(self, q):
        return float(q[0] ** 2)

    def gradient(self, q):
        return np.array([np.inf]) if abs(q[0]) > 1.0 else 2.0 * q


def random_targets():
    rng = np.random.default_rng(77)
    A = rng.standard_normal((4, 4))
    gauss = GaussianTarget(A @ A.T + 2 * np.eye(4))
    data = gen_synthetic(4, 6, seed=12)
    logistic = LogisticTarget(data.X, data.Y, np.eye(4))
    return [gauss, logistic]


class TestLeapfrogStep:
    def test_free_particle(self):
        target = ZeroPotential(1)
        phase, _ = leapfrog_step(target, PhasePoint([0.0], [1.0]), eta=0.1)
        np.testing.assert_allclose(phase.q, [0.1])
        np.testing.assert_allclose(phase.p, [1.0])

    def test_unit_oscillator_hand_values(self):
        target = GaussianTarget(np.array([[1.0]]))
        phase, _ = leapfrog_step(target, PhasePoint([1.0], [0.0]), eta=0.1)
        assert phase.q[0] == pytest.approx(0.995, abs=1e-15)
        assert phase.p[0] == pytest.approx(-0.09975, abs=1e-15)

    def test_cached_gradient_matches_fresh(self):
        target = GaussianTarget.standard(3)
        start = PhasePoint([1.0, -2.0, 0.5], [0.3, 0.1, -0.2])
        grad = target.gradient(start.q)
        a, _ = leapfrog_step(target, start, 0.2)
        b, _ = leapfrog_step(target, start, 0.2, cached_grad=grad)
        np.testing.assert_array_equal(a.q, b.q)
        np.testing.assert_array_equal(a.p, b.p)

    def test_step_reversibility(self):
        for target in random_targets():
            rng = np.random.default_rng(3)
            start = PhasePoint(rng.standard_normal(4), rng.standard_normal(4))
            fwd, _ = leapfrog_step(target, start, 0.05)
            back, _ = leapfrog_step(target, PhasePoint(fwd.q, -fwd.p), 0.05)
            np.testing.assert_allclose(back.q, start.q, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(-back.p, start.p, rtol=1e-12, atol=1e-12)

    def test_divergence_raises(self):
        target = ExplodingPotential()
        with pytest.raises(DivergenceError):
            leapfrog_step(target, PhasePoint([2.0], [0.0]), eta=0.1)


class TestTrajectory:
    def test_step_count_and_grad_evals(self):
        target = GaussianTarget.standard(2)
        start = PhasePoint(np.zeros(2), np.ones(2))
        result = leapfrog_trajectory(target, start, eta=0.1, T=1.0)
        assert result.n_steps == 10
        assert result.grad_evals == 11

    def test_eta_equals_T_is_one_step(self):
        target = GaussianTarget.standard(2)
        start = PhasePoint(np.zeros(2), np.ones(2))
        result = leapfrog_trajectory(target, start, eta=0.5, T=0.5)
        assert result.n_steps == 1
        assert result.grad_evals == 2

    def test_floor_guard_on_float_quotients(self):
        # 0.35 does not divide pi/3 evenly, 0.2 divides 1.0 only up to rounding
        assert n_leapfrog_steps(1.0, 0.2) == 5
        assert n_leapfrog_steps(math.pi / 3, 0.35) == 2
        with pytest.raises(InvalidInputError):
            n_leapfrog_steps(0.5, 0.6)

    def test_energy_near_conserved(self):
        d = 100
        target = GaussianTarget.standard(d)
        rng = np.random.default_rng(11)
        start = PhasePoint(rng.standard_normal(d), rng.standard_normal(d))
        h0 = hamiltonian(target, start)
        result = leapfrog_trajectory(target, start, eta=0.05, T=math.pi / 3)
        assert result.energy_drift < 0.01 * h0

    def test_trajectory_reversibility_random_cases(self):
        targets = random_targets()
        rng = np.random.default_rng(2024)
        for case in range(200):
            target = targets[case % len(targets)]
            eta = float(rng.uniform(0.01, 0.1))
            steps = int(rng.integers(1, 51))
            start = PhasePoint(rng.standard_normal(4), rng.standard_normal(4))
            T = eta * steps
            fwd = leapfrog_trajectory(target, start, eta, T)
            back = leapfrog_trajectory(target, PhasePoint(fwd.end.q, -fwd.end.p),
                                       eta, T)
            scale = 1.0 + np.linalg.norm(start.q) + np.linalg.norm(start.p)
            assert np.linalg.norm(back.end.q - start.q) <= 1e-9 * scale
            assert np.linalg.norm(back.end.p + start.p) <= 1e-9 * scale

    def test_no_secular_energy_drift(self):
        target = GaussianTarget.standard(2)
        rng = np.random.default_rng(8)
        phase = PhasePoint(rng.standard_normal(2), rng.standard_normal(2))
        h0 = hamiltonian(target, phase)
        grad = None
        max_err_1e3 = 0.0
        max_err_1e4 = 0.0
        for step in range(10_000):
            phase, grad = leapfrog_step(target, phase, 0.05, cached_grad=grad)
            err = abs(hamiltonian(target, phase) - h0)
            max_err_1e4 = max(max_err_1e4, err)
            if step < 1000:
                max_err_1e3 = max(max_err_1e3, err)
        assert max_err_1e4 < 2.0 * max_err_1e3

    def test_volume_preservation_1d(self):
        target = GaussianTarget(np.array([[1.0]]))
        eta, h = 0.3, 1e-6

        def step(q, p):
            out, _ = leapfrog_step(target, PhasePoint([q], [p]), eta)
            return float(out.q[0]), float(out.p[0])

        q0, p0 = 0.7, -0.4
        dq_dq = (step(q0 + h, p0)[0] - step(q0 - h, p0)[0]) / (2 * h)
        dq_dp = (step(q0, p0 + h)[0] - step(q0, p0 - h)[0]) / (2 * h)
        dp_dq = (step(q0 + h, p0)[1] - step(q0 - h, p0)[1]) / (2 * h)
        dp_dp = (step(q0, p0 + h)[1] - step(q0, p0 - h)[1]) / (2 * h)
        det = dq_dq * dp_dp - dq_dp * dp_dq
        assert det == pytest.approx(1.0, abs=1e-6)


class TestExactFlow:
    def test_time_zero_is_identity(self):
        target = GaussianTarget.standard(3)
        start = PhasePoint([1.0, 2.0, -1.0], [0.5, -0.5, 0.25])
        out = exact_gaussian_flow(target, start, 0.0)
        np.testing.assert_allclose(out.q, start.q)
        np.testing.assert_allclose(out.p, start.p)

    def test_quarter_period_unit_oscillator(self):
        out = exact_gaussian_flow(np.array([[1.0]]),
                                  PhasePoint([1.0], [0.0]), math.pi / 2)
        np.testing.assert_allclose(out.q, [0.0], atol=1e-12)
        np.testing.assert_allclose(out.p, [-1.0], atol=1e-12)

    def test_frequency_two_oscillator(self):
        out = exact_gaussian_flow(np.array([[4.0]]),
                                  PhasePoint([1.0], [0.0]), math.pi / 4)
        np.testing.assert_allclose(out.q, [0.0], atol=1e-12)
        np.testing.assert_allclose(out.p, [-2.0], atol=1e-12)

    def test_energy_conservation(self):
        rng = np.random.default_rng(4)
        A = rng.standard_normal((5, 5))
        target = GaussianTarget(A @ A.T + np.eye(5))
        start = PhasePoint(rng.standard_normal(5), rng.standard_normal(5))
        h0 = hamiltonian(target, start)
        for t in (0.1, 0.7, 2.3):
            out = exact_gaussian_flow(target, start, t)
            assert abs(hamiltonian(target, out) - h0) <= 1e-10 * max(1.0, h0)

    def test_order_two_convergence(self):
        d = 50
        target = GaussianTarget.standard(d)
        rng = np.random.default_rng(30)
        start = PhasePoint(rng.standard_normal(d), rng.standard_normal(d))
        etas = [0.2, 0.1, 0.05, 0.025]
        errors = []
        for eta in etas:
            end = leapfrog_trajectory(target, start, eta, 1.0).end
            exact = exact_gaussian_flow(target, start, eta * n_leapfrog_steps(1.0, eta))
            errors.append(np.linalg.norm(end.q - exact.q))
        slope = np.polyfit(np.log(etas), np.log(errors), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.15)

    def test_rejects_non_spd(self):
        with pytest.raises(InvalidInputError):
            exact_gaussian_flow(np.array([[0.0]]), PhasePoint([1.0], [0.0]), 1.0)


class TestHamiltonian:
    def test_zero_phase(self):
        assert hamiltonian(GaussianTarget.standard(2), PhasePoint([0.0, 0.0], [0.0, 0.0])) == 0.0

    def test_hand_value(self):
        target = GaussianTarget(np.array([[1.0]]))
        assert hamiltonian(target, PhasePoint([1.0], [2.0])) == pytest.approx(2.5)


class TestSeminorm:
    def test_coordinate_directions(self):
        dirs = DirectionSet(np.eye(2))
        assert inf_seminorm(dirs, np.array([3.0, -4.0])) == 4.0

    def test_single_direction(self):
        dirs = DirectionSet(np.array([[1.0, 0.0]]))
        assert inf_seminorm(dirs, np.array([3.0, -4.0])) == 3.0

    def test_diagonal_direction(self):
        dirs = DirectionSet(np.array([[1.0, 1.0]]) / math.sqrt(2))
        assert inf_seminorm(dirs, np.array([1.0, 1.0])) == pytest.approx(math.sqrt(2))

    def test_empty_set_gives_zero(self):
        assert inf_seminorm(DirectionSet([]), np.array([1.0, 2.0])) == 0.0

    def test_bounded_by_euclidean_norm(self):
        rng = np.random.default_rng(5)
        U = rng.standard_normal((6, 4))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        dirs = DirectionSet(U)
        for _ in range(50):
            x = rng.standard_normal(4)
            assert inf_seminorm(dirs, x) <= np.linalg.norm(x) + 1e-12

    def test_requires_unit_vectors(self):
        with pytest.raises(InvalidInputError):
            DirectionSet(np.array([[1.0, 1.0]]))
