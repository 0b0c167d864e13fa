import numpy as np
import pytest

from rdmsim import collapse, constants, hilbert
from rdmsim.collapse import CollapseConfig, ManyBodyBranchTable
from rdmsim.errors import ContractViolation, SuperPlanckianError
from rdmsim.seeding import trial_rng


def equal_two_level():
    return hilbert.EnergySuperposition([0.0, 1.0], np.sqrt([0.5, 0.5]))


class TestCollapseStep:
    def test_eigenstate_unchanged(self):
        s = hilbert.EnergySuperposition([3.0], [1.0])
        out, stay = collapse.collapse_step(s, CollapseConfig(), trial_rng(0, 0))
        assert stay == 0
        assert out.probabilities[0] == pytest.approx(1.0)

    def test_hand_evaluated_update(self):
        # natural units, dE = 0.5 so k = 0.5; staying branch 1 gives (0.25, 0.75)
        rng = trial_rng(1, 0)
        found = False
        for _ in range(20):
            out, stay = collapse.collapse_step(equal_two_level(), CollapseConfig(), rng)
            if stay == 1:
                assert np.allclose(out.probabilities, [0.25, 0.75], atol=1e-15)
                found = True
                break
        assert found

    def test_bounds_and_sum(self):
        cfg = CollapseConfig(k_mode="frozen", k0=0.3)
        rng = trial_rng(2, 0)
        s = hilbert.EnergySuperposition([0.0, 0.4, 0.9],
                                        np.sqrt([0.2, 0.5, 0.3]))
        for _ in range(300):
            s, _ = collapse.collapse_step(s, cfg, rng)
            p = s.probabilities
            assert np.all(p >= 0.0) and np.all(p <= 1.0)
            assert abs(p.sum() - 1.0) < 1e-14

    def test_martingale_identity(self):
        # summing over the staying draw, E[P'] = P exactly
        p = np.array([0.3, 0.45, 0.25])
        k = 0.7
        expected = sum(p[stay] * np.where(np.arange(3) == stay, p + k * (1 - p),
                                          p - k * p)
                       for stay in range(3))
        assert np.allclose(expected, p, atol=1e-15)

    def test_super_planckian_guard(self):
        s = hilbert.EnergySuperposition([0.0, 3.0], np.sqrt([0.5, 0.5]))
        with pytest.raises(SuperPlanckianError):
            collapse.collapse_step(s, CollapseConfig(), trial_rng(3, 0))

    def test_phases_advance(self):
        cfg = CollapseConfig(k_mode="frozen", k0=0.0)
        s = hilbert.EnergySuperposition([0.0, np.pi], np.sqrt([0.5, 0.5]))
        out, _ = collapse.collapse_step(s, cfg, trial_rng(4, 0))
        # k = 0: probabilities frozen, phases rotated by -E t_P
        assert np.allclose(out.probabilities, [0.5, 0.5], atol=1e-15)
        rel = out.amplitudes[1] / out.amplitudes[0]
        assert np.angle(rel) == pytest.approx(-np.pi, abs=1e-12)

    def test_degenerate_branches_move_together(self):
        cfg = CollapseConfig(k_mode="frozen", k0=0.2)
        s = hilbert.EnergySuperposition([1.0, 1.0, 2.0],
                                        np.sqrt([0.2, 0.3, 0.5]))
        out, stay = collapse.collapse_step(s, cfg, trial_rng(5, 0))
        p = out.probabilities
        # members of the degenerate group keep their relative weights
        assert p[0] / p[1] == pytest.approx(2.0 / 3.0, rel=1e-12)
        assert stay in (0, 2)


class TestRunTrajectory:
    def test_eigenstate_immediate(self):
        s = hilbert.EnergySuperposition([5.0], [1.0])
        out = collapse.run_trajectory(s, CollapseConfig(), 100)
        assert out["collapsed"] and out["steps"] == 0 and out["outcome"] == 0

    def test_median_steps_order(self):
        # frozen k = 0.01: median steps ~ 1/k^2 within a factor 3
        cfg = CollapseConfig(k_mode="frozen", k0=0.01, seed=6)
        res = collapse.ensemble_outcomes(equal_two_level(), cfg, 400,
                                         max_steps=200_000)
        assert np.all(res["outcomes"] >= 0)
        median = float(np.median(res["steps"]))
        assert 1e4 / 3 <= median <= 3e4

    def test_outcome_frequencies_born(self):
        s = hilbert.EnergySuperposition([0.0, 1.0], np.sqrt([0.3, 0.7]))
        cfg = CollapseConfig(k_mode="frozen", k0=0.1, seed=7)
        res = collapse.ensemble_outcomes(s, cfg, 10_000, max_steps=10_000)
        freq = np.mean(res["outcomes"] == 0)
        assert abs(freq - 0.3) <= 3 * np.sqrt(0.3 * 0.7 / 10_000)

    def test_scalar_matches_vectorized(self):
        # one trial of the block engine follows the scalar walk (same
        # uniform stream and update order; agreement to rounding)
        s = equal_two_level()
        cfg = CollapseConfig(k_mode="frozen", k0=0.05, seed=8)
        scalar = collapse.run_trajectory(s, cfg, 50, rng=trial_rng(cfg.seed, 0))
        path = [p[0].copy() for _, p in collapse._ensemble_probability_paths(
            s.probabilities, s.energies, cfg, 1, 50)]
        n = min(len(scalar["probabilities"]), len(path))
        assert np.allclose(np.array(path[:n]), scalar["probabilities"][:n],
                           atol=1e-13, rtol=0)


class TestEnsembleStatistics:
    def test_mean_p_conserved(self):
        s = hilbert.EnergySuperposition([0.0, 1.0], np.sqrt([0.3, 0.7]))
        cfg = CollapseConfig(k_mode="frozen", k0=0.05, seed=9)
        res = collapse.ensemble_statistics(s, cfg, 4000, 100, 20)
        for r in range(1, len(res["steps"])):
            assert abs(res["mean_p"][r, 0] - 0.3) <= 3 * res["se_p"][r, 0]

    @pytest.mark.parametrize("k0", [0.01, 0.1, 0.3])
    def test_offdiagonal_decay_law(self, k0):
        cfg = CollapseConfig(k_mode="frozen", k0=k0, seed=10)
        res = collapse.ensemble_statistics(equal_two_level(), cfg, 4000, 60, 20)
        for r in range(1, len(res["steps"])):
            n = res["steps"][r]
            expect = 0.25 * (1 - k0**2) ** n
            assert abs(res["mean_pp"][r, 0] - expect) <= 3 * res["se_pp"][r, 0]

    def test_dynamic_k_outcomes_born(self):
        # state-dependent k keeps the martingale: outcome frequencies
        # still reproduce the initial weights
        s = hilbert.EnergySuperposition([0.0, 0.8], np.sqrt([0.3, 0.7]))
        cfg = CollapseConfig(k_mode="dynamic", seed=13)
        res = collapse.ensemble_outcomes(s, cfg, 4000, max_steps=20_000)
        assert np.all(res["outcomes"] >= 0)
        freq = np.mean(res["outcomes"] == 0)
        assert abs(freq - 0.3) <= 3 * np.sqrt(0.3 * 0.7 / 4000)

    def test_thread_count_invariant(self):
        s = equal_two_level()
        cfg = CollapseConfig(k_mode="frozen", k0=0.1, seed=11)
        a = collapse.ensemble_statistics(s, cfg, 600, 30, 10, threads=1)
        b = collapse.ensemble_statistics(s, cfg, 600, 30, 10, threads=4)
        assert np.array_equal(a["mean_p"], b["mean_p"])
        assert np.array_equal(a["se_pp"], b["se_pp"])

    def test_rejects_degenerate_energies(self):
        s = hilbert.EnergySuperposition([1.0, 1.0], np.sqrt([0.5, 0.5]))
        with pytest.raises(ContractViolation):
            collapse.ensemble_statistics(s, CollapseConfig(), 10, 10, 5)


class TestCollapseTime:
    def test_reference_values(self):
        cfg = CollapseConfig.physical()
        assert collapse.collapse_time(1e-6, cfg) == pytest.approx(8.04e24, rel=0.01)
        assert collapse.collapse_time(8.6e-6, cfg) == pytest.approx(1.087e23, rel=0.01)
        assert collapse.collapse_time(2.5e11, cfg) == pytest.approx(1.286e-10, rel=0.01)

    def test_rejects_nonpositive(self):
        with pytest.raises(ContractViolation):
            collapse.collapse_time(0.0, CollapseConfig())

    def test_relativistic_factor(self):
        cfg = CollapseConfig.physical()
        base = collapse.collapse_time(1.0, cfg)
        assert collapse.relativistic_collapse_time(1.0, 0.0, cfg) == base
        third = collapse.relativistic_collapse_time(1.0, cfg.c / 3.0, cfg)
        assert third / base == pytest.approx(9.0 / 16.0, abs=1e-12)

    def test_rejects_superluminal(self):
        cfg = CollapseConfig.physical()
        with pytest.raises(ContractViolation):
            collapse.relativistic_collapse_time(1.0, cfg.c, cfg)


class TestManyBodyDeltaE:
    def test_single_subsystem_matches(self):
        s = hilbert.EnergySuperposition([0.0, 1.0, 2.0], np.sqrt([0.5, 0.3, 0.2]))
        table = ManyBodyBranchTable(s.energies[None, :], s.amplitudes)
        expected = hilbert.energy_uncertainty(s)
        assert collapse.manybody_delta_e(table, "rms") == pytest.approx(expected)
        assert collapse.manybody_delta_e(table, "linear-sum") == pytest.approx(expected)

    def test_two_subsystem_example(self):
        # two subsystems, equal two-branch superposition, unit gap each
        table = ManyBodyBranchTable([[0.0, 1.0], [0.0, 1.0]],
                                    np.sqrt([0.5, 0.5]))
        assert collapse.manybody_delta_e(table, "rms") == pytest.approx(np.sqrt(0.5))
        assert collapse.manybody_delta_e(table, "linear-sum") == pytest.approx(1.0)

    def test_product_state_zero(self):
        table = ManyBodyBranchTable([[2.0, 2.0], [5.0, 5.0]],
                                    np.sqrt([0.4, 0.6]))
        assert collapse.manybody_delta_e(table, "rms") == 0.0
        assert collapse.manybody_delta_e(table, "linear-sum") == 0.0

    def test_degenerate_total_but_nonzero_sum(self):
        # branch total energies equal, per-subsystem spreads do not vanish
        table = ManyBodyBranchTable([[0.0, 1.0], [1.0, 0.0]],
                                    np.sqrt([0.5, 0.5]))
        totals = table.energies.sum(axis=0)
        assert totals[0] == totals[1]
        assert collapse.manybody_delta_e(table, "rms") > 0.5


class TestScaleInvariance:
    def test_singleton_grouping(self):
        s = hilbert.EnergySuperposition([0.0, 0.3, 0.6],
                                        np.sqrt([0.2, 0.5, 0.3]))
        res = collapse.scale_invariance_check(s, CollapseConfig(), [[0], [1], [2]], 1)
        assert res["passed"]

    def test_pairwise_grouping(self):
        s = hilbert.EnergySuperposition([0.0, 0.2, 0.4, 0.6],
                                        np.sqrt([0.25, 0.25, 0.25, 0.25]))
        res = collapse.scale_invariance_check(s, CollapseConfig(),
                                              [[0, 1], [2, 3]], 0)
        assert res["passed"]

    def test_random_partitions(self):
        rng = np.random.Generator(np.random.PCG64(12))
        s = hilbert.EnergySuperposition(0.25 * np.arange(8.0),
                                        np.sqrt(np.full(8, 0.125)))
        for _ in range(50):
            perm = rng.permutation(8)
            cut = int(rng.integers(1, 8))
            grouping = [perm[:cut], perm[cut:]]
            stay = int(rng.integers(0, 8))
            assert collapse.scale_invariance_check(
                s, CollapseConfig(), grouping, stay)["passed"]

    def test_invalid_partition(self):
        s = equal_two_level()
        with pytest.raises(ContractViolation):
            collapse.scale_invariance_check(s, CollapseConfig(), [[0]], 0)


class TestHorizonLevels:
    def test_massless_value(self):
        levels = collapse.horizon_energy_levels(1e25, 3)
        assert levels[0] == pytest.approx(3.1e-32, rel=0.01)
        assert levels[1] / levels[0] == pytest.approx(4.0)
        assert levels[2] / levels[0] == pytest.approx(9.0)

    def test_electron_value(self):
        levels = collapse.horizon_energy_levels(
            1e25, 1, mass_ev=constants.ELECTRON_MC2_EV)
        assert levels[0] == pytest.approx(9.4e-70, rel=0.01)

    def test_doubling_n_quadruples(self):
        levels = collapse.horizon_energy_levels(3.3e24, 4)
        assert levels[3] / levels[1] == pytest.approx(4.0)


class TestConfig:
    def test_frozen_requires_k0(self):
        with pytest.raises(ContractViolation):
            CollapseConfig(k_mode="frozen")

    def test_physical_constants(self):
        cfg = CollapseConfig.physical()
        assert cfg.hbar == constants.HBAR_EVS
        assert cfg.t_p == constants.PLANCK_TIME_S
        assert cfg.c == constants.C_M_S

    def test_epsilon_range(self):
        with pytest.raises(ContractViolation):
            CollapseConfig(collapse_epsilon=1.5)
