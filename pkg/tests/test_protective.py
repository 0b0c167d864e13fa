import numpy as np
import pytest

from rdmsim import hilbert, protective, schrodinger as sch
from rdmsim.errors import ContractViolation, PhaseAmbiguityError, PointerDomainError


def pointer(w0=5.0, n=512, length=80.0):
    return protective.PointerState.gaussian(-length / 2, length / n, n, 0.0, w0)


def plus_state():
    return hilbert.ComplexVectorState(np.array([1.0, 1.0]) / np.sqrt(2))


def projector0():
    return hilbert.HermitianOperator(np.diag([1.0, 0.0]))


class TestSetupInvariants:
    def test_pointer_width_guard(self):
        with pytest.raises(ContractViolation):
            protective.PointerState.gaussian(-10, 0.5, 64, 0.0, 1.0)

    def test_requires_normalized_system(self):
        with pytest.raises(ContractViolation):
            protective.ProtectiveSetup(
                hilbert.ComplexVectorState([1.0, 1.0]), projector0(), 10, 1.0,
                pointer())

    def test_coupling_weights_integrate_to_one(self):
        for profile in ("constant", "triangular"):
            setup = protective.ProtectiveSetup(plus_state(), projector0(), 100,
                                               0.7, pointer(), g_profile=profile)
            assert abs(setup.coupling_weights().sum() - 1.0) < 1e-12

    def test_triangular_needs_even_n(self):
        setup = protective.ProtectiveSetup(plus_state(), projector0(), 101,
                                           1.0, pointer(), g_profile="triangular")
        with pytest.raises(ContractViolation):
            setup.coupling_weights()


class TestUnprotectedMeasurement:
    def test_eigenstate_single_branch(self):
        psi = hilbert.ComplexVectorState([0.0, 1.0])
        a = hilbert.HermitianOperator(np.diag([2.0, -1.5]))
        setup = protective.ProtectiveSetup(psi, a, 1, 1.0, pointer())
        branches = protective.unprotected_measurement(setup)
        assert len(branches) == 1
        _, eig, ps = branches[0]
        assert eig == pytest.approx(-1.5)
        assert ps.mean_position() == pytest.approx(-1.5, abs=1e-9)

    def test_superposition_two_branches(self):
        setup = protective.ProtectiveSetup(plus_state(), projector0(), 1, 1.0,
                                           pointer())
        branches = protective.unprotected_measurement(setup)
        assert len(branches) == 2
        weights = sorted(abs(c) ** 2 for c, _, _ in branches)
        assert np.allclose(weights, [0.5, 0.5])
        centers = sorted(ps.mean_position() for _, _, ps in branches)
        assert centers[0] == pytest.approx(0.0, abs=1e-9)
        assert centers[1] == pytest.approx(1.0, abs=1e-9)

    def test_zero_observable_leaves_pointer(self):
        a = hilbert.HermitianOperator(np.zeros((2, 2)))
        setup = protective.ProtectiveSetup(plus_state(), a, 1, 1.0, pointer())
        branches = protective.unprotected_measurement(setup)
        for _, _, ps in branches:
            assert ps.mean_position() == pytest.approx(0.0, abs=1e-12)

    def test_widths_unchanged(self):
        setup = protective.ProtectiveSetup(plus_state(), projector0(), 1, 1.0,
                                           pointer())
        for _, _, ps in protective.unprotected_measurement(setup):
            assert ps.width() == pytest.approx(pointer().width(), rel=1e-12)

    def test_shift_domain_guard(self):
        a = hilbert.HermitianOperator(np.diag([100.0, 0.0]))
        setup = protective.ProtectiveSetup(plus_state(), a, 1, 1.0, pointer())
        with pytest.raises(PointerDomainError):
            protective.unprotected_measurement(setup)


class TestZenoRun:
    def test_eigenstate_exact(self):
        psi = hilbert.ComplexVectorState([1.0, 0.0])
        a = hilbert.HermitianOperator(np.diag([0.8, -0.3]))
        for n in (1, 10, 100):
            setup = protective.ProtectiveSetup(psi, a, n, 1.0, pointer())
            out = protective.zeno_protective_run(setup)
            assert out["pointer_shift"] == pytest.approx(0.8, abs=1e-9)
            assert out["survival_probability"] == pytest.approx(1.0, abs=1e-12)
            assert out["width_ratio"] == pytest.approx(1.0, abs=1e-12)

    def test_plus_state_converges_to_half(self):
        setup = protective.ProtectiveSetup(plus_state(), projector0(), 10_000,
                                           1.0, pointer())
        out = protective.zeno_protective_run(setup)
        assert abs(out["pointer_shift"] - 0.5) <= 1e-3
        assert out["survival_probability"] > 0.999
        assert abs(out["width_ratio"] - 1.0) < 1e-6

    def test_survival_deficit_first_order(self):
        deficits = []
        ns = (100, 1000, 10_000)
        for n in ns:
            setup = protective.ProtectiveSetup(plus_state(), projector0(), n,
                                               1.0, pointer())
            deficits.append(1.0 - protective.zeno_protective_run(setup)
                            ["survival_probability"])
        slope = np.polyfit(np.log(ns), np.log(deficits), 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.2)

    def test_shift_error_within_first_order_envelope(self):
        # |shift(N) - <A>| <= C/N; for symmetric eigenvalue weights the
        # post-selected error collapses to the float floor
        ns = (100, 1000, 10_000)
        for n in ns:
            setup = protective.ProtectiveSetup(plus_state(), projector0(), n,
                                               1.0, pointer())
            out = protective.zeno_protective_run(setup)
            assert abs(out["pointer_shift"] - 0.5) <= 1.0 / n

    def test_random_pairs_shift_convergence(self):
        rng = np.random.Generator(np.random.PCG64(14))
        for _ in range(20):
            dim = int(rng.integers(2, 5))
            v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
            psi = hilbert.ComplexVectorState(v / np.linalg.norm(v))
            m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            a = hilbert.HermitianOperator((m + m.conj().T) / 4)
            target = hilbert.expectation_value(psi, a)
            setup = protective.ProtectiveSetup(psi, a, 2000, 1.0,
                                               pointer(w0=6.0, length=120.0,
                                                       n=1024))
            out = protective.zeno_protective_run(setup)
            assert abs(out["pointer_shift"] - target) <= 3.0 / 2000

    def test_triangular_profile_same_limit(self):
        setup = protective.ProtectiveSetup(plus_state(), projector0(), 2000,
                                           1.0, pointer(), g_profile="triangular")
        out = protective.zeno_protective_run(setup)
        assert abs(out["pointer_shift"] - 0.5) <= 1e-3

    def test_width_preserved(self):
        setup = protective.ProtectiveSetup(plus_state(), projector0(), 10_000,
                                           1.0, pointer())
        out = protective.zeno_protective_run(setup)
        assert abs(out["final_width"] / 5.0 - 1.0) < 1e-6

    def test_protection_failure_flagged_not_raised(self):
        # two coarse projections with a wide eigenvalue gap leak more
        # than half the norm: the run completes and flags the failure
        a = hilbert.HermitianOperator(np.diag([4.0, 0.0]))
        narrow = protective.PointerState.gaussian(-10.0, 20.0 / 256, 256,
                                                  0.0, 0.5)
        setup = protective.ProtectiveSetup(plus_state(), a, 2, 1.0, narrow)
        out = protective.zeno_protective_run(setup)
        assert out["survival_probability"] < 0.5
        assert out["protection_failed"]


class TestFirstOrderBranch:
    def test_eigenstate_no_leakage(self):
        psi = hilbert.ComplexVectorState([1.0, 0.0])
        a = hilbert.HermitianOperator(np.diag([0.8, -0.3]))
        setup = protective.ProtectiveSetup(psi, a, 2000, 1.0, pointer())
        out = protective.first_order_branch_check(setup)
        assert out["measured_amplitude"] < 1e-12

    def test_leading_amplitude_matches(self):
        setup = protective.ProtectiveSetup(plus_state(), projector0(), 2000,
                                           1.0, pointer())
        out = protective.first_order_branch_check(setup)
        assert out["residual"] <= 0.01 * out["predicted_amplitude"]

    def test_residual_at_least_second_order(self):
        # the deviation from the leading-order amplitude is O(1/N^2) at
        # worst; a symmetric Gaussian pointer kills the cross term and
        # yields O(1/N^3), so the refinement ratio is >= 4
        setups = [protective.ProtectiveSetup(plus_state(), projector0(), n,
                                             1.0, pointer())
                  for n in (2000, 4000)]
        res = [protective.first_order_branch_check(s)["residual"] for s in setups]
        assert res[0] / res[1] >= 3.4


class TestPointerShiftRate:
    def test_constant_profile(self):
        rate = protective.pointer_shift_rate(plus_state(), projector0(), 1.0 / 2.0)
        assert rate == pytest.approx(0.25)

    def test_zero_expectation(self):
        a = hilbert.HermitianOperator(np.array([[0.0, 1.0], [1.0, 0.0]]))
        psi = hilbert.ComplexVectorState([1.0, 0.0])
        assert protective.pointer_shift_rate(psi, a, 3.0) == 0.0

    def test_integral_profile_independent(self):
        # quadrature oracle: integrating g(t) <A> over [0, tau] gives <A>
        tau = 2.0
        t = np.linspace(0, tau, 20_001)
        tri = np.where(t <= tau / 2, 4 * t / tau**2, 4 * (tau - t) / tau**2)
        target = hilbert.expectation_value(plus_state(), projector0())
        integral = np.trapezoid(
            [protective.pointer_shift_rate(plus_state(), projector0(), g)
             for g in tri], t)
        assert integral == pytest.approx(target, abs=1e-6)


class TestRegionMeasurements:
    def test_whole_domain_density(self):
        g = sch.GridWavefunction.gaussian(-20, 40 / 256, 256, 0.0, 1.0)
        val = protective.measure_density(g, (0, 256))
        assert val == pytest.approx(1.0 / 40.0, abs=1e-12)

    def test_two_box_average(self):
        n = 128
        rho = np.zeros(n)
        rho[:32] = 0.36 / 32
        rho[64:96] = 0.64 / 32
        g = sch.GridWavefunction(0.0, 1.0, np.sqrt(rho).astype(complex))
        # box 1 occupies 32 sites of unit length: average density |a|^2 / v1
        assert protective.measure_density(g, (0, 32)) == pytest.approx(0.36 / 32)

    def test_real_state_zero_flux(self):
        g = sch.GridWavefunction.gaussian(-20, 40 / 256, 256, 0.0, 1.0)
        assert protective.measure_flux(g, (50, 200)) == pytest.approx(0.0, abs=1e-14)

    def test_empty_region_rejected(self):
        g = sch.GridWavefunction.gaussian(-20, 40 / 256, 256, 0.0, 1.0)
        with pytest.raises(ContractViolation):
            protective.measure_density(g, (10, 10))


class TestTomography:
    TRUTH = sch.GridWavefunction.gaussian(-16.0, 32.0 / 4096, 4096,
                                          center=0.5, sigma=2.5, momentum=0.5)

    def test_error_small_at_256(self):
        out = protective.tomography(self.TRUTH, 256)
        assert out["l2_error"] < 1e-2

    def test_first_order_in_region_width(self):
        e = [protective.tomography(self.TRUTH, n)["l2_error"]
             for n in (256, 1024)]
        assert e[0] / e[1] == pytest.approx(4.0, rel=0.6)

    def test_exact_data_limit(self):
        # vanishing region width with exact data: feed the analytic
        # (rho, j) of a boosted Gaussian and recover it to rounding
        g = self.TRUTH
        x = g.x
        rho = np.exp(-((x - 0.5) ** 2) / (2 * 2.5**2))
        rho /= rho.sum() * g.dx
        pair = sch.DensityPair(g.x0, g.dx, rho, rho * 0.5)
        rec = sch.reconstruct_wavefunction(pair)
        truth = np.sqrt(rho) * np.exp(1j * 0.5 * (x - x[0]))
        err = np.sqrt(g.dx * np.sum(np.abs(rec.samples - truth) ** 2))
        assert err < 1e-8

    def test_dead_zone_propagates_ambiguity(self):
        # two packets separated by a region where even the block-averaged
        # density falls below the support floor: reconstruction cannot
        # carry the phase across and the error propagates out
        n, length = 4096, 64.0
        dx = length / n
        x = -length / 2 + dx * np.arange(n)
        rho = np.exp(-((x + 16) ** 2) / 2) + np.exp(-((x - 16) ** 2) / 2)
        psi = np.sqrt(rho / (rho.sum() * dx)).astype(complex)
        g = sch.GridWavefunction(-length / 2, dx, psi)
        with pytest.raises(PhaseAmbiguityError):
            protective.tomography(g, 64)

    def test_measured_averages_match_reconstruction(self):
        out = protective.tomography(self.TRUTH, 256)
        rec = out["reconstruction"]
        block = self.TRUTH.n // 256
        rho_rec = sch.position_density(rec)
        for r in range(0, 256, 37):
            sl = slice(r * block, (r + 1) * block)
            assert np.mean(rho_rec[sl]) == pytest.approx(
                out["rho_measured"][sl.start], rel=1e-10)
