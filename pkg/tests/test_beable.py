import numpy as np
import pytest
from scipy import stats

from rdmsim import beable, hilbert
from rdmsim.errors import (
    DegenerateOccupationError,
    DimensionMismatchError,
    StepSizeError,
)


def rand_pair(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = hilbert.HermitianOperator((m + m.conj().T) / 2)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi = hilbert.ComplexVectorState(v / np.linalg.norm(v))
    return h, psi


TWO_SITE_H = hilbert.HermitianOperator([[0.0, -1.0], [-1.0, 0.0]])
TWO_SITE_PSI = hilbert.ComplexVectorState([1 / np.sqrt(2), 1j / np.sqrt(2)])


class TestProbabilityCurrent:
    def test_real_state_real_h_zero(self):
        h = hilbert.HermitianOperator([[1.0, 0.5], [0.5, -1.0]])
        psi = hilbert.ComplexVectorState([0.6, 0.8])
        assert np.max(np.abs(beable.probability_current(h, psi))) == 0.0

    def test_two_site_value(self):
        # hand evaluation: J_12 = 2 Im((1/sqrt2)(-1)(i/sqrt2)) = -1
        j = beable.probability_current(TWO_SITE_H, TWO_SITE_PSI)
        assert j[0, 1] == pytest.approx(-1.0, abs=1e-14)
        assert j[1, 0] == pytest.approx(1.0, abs=1e-14)

    def test_eigenstate_stationary(self):
        h = hilbert.HermitianOperator([[0.0, -1.0], [-1.0, 0.0]])
        psi = hilbert.ComplexVectorState(np.array([1.0, 1.0]) / np.sqrt(2))
        assert np.max(np.abs(beable.probability_current(h, psi))) < 1e-15

    def test_antisymmetry(self):
        rng = np.random.Generator(np.random.PCG64(0))
        for _ in range(100):
            h, psi = rand_pair(rng, int(rng.integers(2, 7)))
            j = beable.probability_current(h, psi)
            assert np.max(np.abs(j + j.T)) < 1e-12

    def test_continuity_against_finite_difference(self):
        # hbar dP/dt = row sums of J, checked against a centered difference
        rng = np.random.Generator(np.random.PCG64(1))
        h, psi = rand_pair(rng, 4)
        dt = 1e-5
        u = beable.unitary_step_matrix(h, dt, 1.0)
        u_inv = u.conj().T
        p_plus = np.abs(u @ psi.amplitudes) ** 2
        p_minus = np.abs(u_inv @ psi.amplitudes) ** 2
        dp_dt = (p_plus - p_minus) / (2 * dt)
        j = beable.probability_current(h, psi)
        assert np.max(np.abs(dp_dt - j.sum(axis=1))) < 1e-6


class TestBellRates:
    def test_zero_current_zero_rates(self):
        t = beable.bell_transition_rates(np.zeros((3, 3)), np.full(3, 1 / 3))
        assert np.all(t.rates == 0.0)

    def test_two_site_example(self):
        j = beable.probability_current(TWO_SITE_H, TWO_SITE_PSI)
        t = beable.bell_transition_rates(j, np.array([0.5, 0.5]))
        assert t.rates[1, 0] == pytest.approx(2.0)
        assert t.rates[0, 1] == 0.0

    def test_one_direction_per_pair(self):
        rng = np.random.Generator(np.random.PCG64(2))
        for _ in range(50):
            h, psi = rand_pair(rng, 4)
            p = np.abs(psi.amplitudes) ** 2
            if p.min() < 1e-6:
                continue
            t = beable.bell_transition_rates(beable.probability_current(h, psi), p)
            both = (t.rates > 0) & (t.rates.T > 0)
            assert not np.any(both)

    def test_defining_relation(self):
        rng = np.random.Generator(np.random.PCG64(3))
        worst = 0.0
        for _ in range(100):
            h, psi = rand_pair(rng, int(rng.integers(2, 6)))
            p = np.abs(psi.amplitudes) ** 2
            if p.min() < 1e-6:
                continue
            j = beable.probability_current(h, psi)
            t = beable.bell_transition_rates(j, p)
            rhs = t.rates * p[None, :] - t.rates.T * p[:, None]
            worst = max(worst, float(np.max(np.abs(j - rhs))))
        assert worst < 1e-10

    def test_occupation_floor(self):
        j = np.array([[0.0, 1e-3], [-1e-3, 0.0]])
        with pytest.raises(DegenerateOccupationError):
            beable.bell_transition_rates(j, np.array([1.0, 1e-14]))


class TestHomogeneousNoise:
    def test_zero_noise_unchanged(self):
        t = beable.TransitionRateMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]))
        t2 = beable.add_homogeneous_noise(t, np.array([0.5, 0.5]), 0.0)
        assert t2 is t

    def test_symmetric_two_site(self):
        t = beable.TransitionRateMatrix(np.zeros((2, 2)))
        t2 = beable.add_homogeneous_noise(t, np.array([0.5, 0.5]), 1.0)
        assert t2.rates[0, 1] == pytest.approx(2.0)
        assert t2.rates[1, 0] == pytest.approx(2.0)

    def test_net_flow_unchanged(self):
        rng = np.random.Generator(np.random.PCG64(4))
        for _ in range(50):
            p = rng.random(4) + 0.1
            p /= p.sum()
            base = beable.TransitionRateMatrix(rng.random((4, 4)))
            noisy = beable.add_homogeneous_noise(base, p, rng.uniform(0.1, 10))
            flow_base = base.rates @ p - (base.rates.sum(0) - np.diag(base.rates)) * p
            flow_noisy = noisy.rates @ p - (noisy.rates.sum(0) - np.diag(noisy.rates)) * p
            assert np.max(np.abs(flow_base - flow_noisy)) < 1e-12

    def test_master_evolution_invariant(self):
        # integrating with rates rebuilt each step, the noise cancels
        h, psi0 = TWO_SITE_H, hilbert.ComplexVectorState(np.sqrt([0.7, 0.3]))
        u = beable.unitary_step_matrix(h, 0.01, 1.0)
        amps = psi0.amplitudes.copy()
        p_plain = np.abs(amps) ** 2
        p_noisy = p_plain.copy()
        for _ in range(200):
            state = hilbert.ComplexVectorState(amps)
            j = beable.probability_current(h, state)
            pq = np.abs(amps) ** 2
            t_plain = beable.bell_transition_rates(j, p_plain)
            p_plain = beable.master_equation_step(p_plain, t_plain, 0.01)
            t_noisy = beable.add_homogeneous_noise(
                beable.bell_transition_rates(j, p_noisy), p_noisy, 1.0)
            p_noisy = beable.master_equation_step(p_noisy, t_noisy, 0.01)
            amps = u @ amps
        assert np.max(np.abs(p_plain - p_noisy)) < 1e-9


class TestMasterEquation:
    def test_zero_rates_identity(self):
        p = np.array([0.3, 0.7])
        t = beable.TransitionRateMatrix(np.zeros((2, 2)))
        assert np.array_equal(beable.master_equation_step(p, t, 0.05), p)

    def test_euler_step_value(self):
        # T_21 = 2, dt = 0.01 moves 0.01 of probability from site 1
        t = beable.TransitionRateMatrix(np.array([[0.0, 0.0], [2.0, 0.0]]))
        p = beable.master_equation_step(np.array([0.5, 0.5]), t, 0.01)
        assert np.allclose(p, [0.49, 0.51], atol=1e-15)

    def test_conservation(self):
        rng = np.random.Generator(np.random.PCG64(5))
        for _ in range(50):
            p = rng.random(5)
            p /= p.sum()
            t = beable.TransitionRateMatrix(rng.random((5, 5)))
            p2 = beable.master_equation_step(p, t, 0.01)
            assert abs(p2.sum() - 1.0) < 1e-14
            assert np.all(p2 >= 0)

    def test_step_guard(self):
        t = beable.TransitionRateMatrix(np.array([[0.0, 0.0], [50.0, 0.0]]))
        with pytest.raises(StepSizeError):
            beable.master_equation_step(np.array([0.5, 0.5]), t, 0.01)


class TestJumpTrajectory:
    def test_eigenstate_never_jumps(self):
        h = hilbert.HermitianOperator([[0.0, -1.0], [-1.0, 0.0]])
        psi = hilbert.ComplexVectorState(np.array([1.0, -1.0]) / np.sqrt(2))
        traj = beable.jump_trajectory(h, psi, 1, 0.01, 500, seed=6)
        assert np.all(traj.stays == 1)

    def test_reproducible(self):
        h, psi = TWO_SITE_H, hilbert.ComplexVectorState(np.sqrt([0.7, 0.3]))
        a = beable.jump_trajectory(h, psi, 0, 0.01, 300, seed=7)
        b = beable.jump_trajectory(h, psi, 0, 0.01, 300, seed=7)
        assert np.array_equal(a.stays, b.stays)

    def test_equivariance(self):
        # ensemble initialized ~|psi(0)|^2 stays |psi(t)|^2-distributed
        h = TWO_SITE_H
        psi0 = hilbert.ComplexVectorState(np.sqrt([0.7, 0.3]))
        rec_steps, sites, p_rows = beable.ensemble_jump_run(
            h, psi0, 10_000, 0.005, 1200, seed=8, record_every=120)
        for row in range(1, len(rec_steps)):
            counts = np.bincount(sites[row], minlength=2)
            assert stats.chisquare(counts, f_exp=10_000 * p_rows[row]).pvalue > 0.001

    def test_dt_refinement_distribution_stable(self):
        # halving dt leaves the final-time site distribution unchanged
        h = TWO_SITE_H
        psi0 = hilbert.ComplexVectorState(np.sqrt([0.7, 0.3]))
        _, coarse, _ = beable.ensemble_jump_run(h, psi0, 8000, 0.01, 400,
                                                seed=9, record_every=400)
        _, fine, _ = beable.ensemble_jump_run(h, psi0, 8000, 0.005, 800,
                                              seed=10, record_every=800)
        table = np.array([np.bincount(coarse[-1], minlength=2),
                          np.bincount(fine[-1], minlength=2)])
        assert stats.chi2_contingency(table).pvalue > 0.001

    def test_noise_does_not_change_distributions(self):
        h = TWO_SITE_H
        psi0 = hilbert.ComplexVectorState(np.sqrt([0.7, 0.3]))
        for c in (0.1, 1.0, 10.0):
            _, plain, _ = beable.ensemble_jump_run(h, psi0, 6000, 0.002, 1000,
                                                   seed=11, record_every=500)
            _, noisy, _ = beable.ensemble_jump_run(h, psi0, 6000, 0.002, 1000,
                                                   seed=12, noise_c=c,
                                                   record_every=500)
            for row in range(1, plain.shape[0]):
                table = np.array([np.bincount(plain[row], minlength=2),
                                  np.bincount(noisy[row], minlength=2)])
                assert stats.chi2_contingency(table).pvalue > 0.001

    def test_guard_surfaces_with_step_index(self):
        h = hilbert.HermitianOperator([[0.0, -40.0], [-40.0, 0.0]])
        psi = hilbert.ComplexVectorState(np.sqrt([0.7, 0.3]))
        with pytest.raises(StepSizeError):
            beable.jump_trajectory(h, psi, 0, 0.01, 100, seed=13)
