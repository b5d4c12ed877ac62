import math

import numpy as np
import pytest
from scipy.linalg import expm

from permsym.core import coherent_state
from permsym.errors import CapacityError, DomainError
from permsym.kickedtop import (KickedTopParams, angular_momentum_matrices,
                               bloch_vector, build_spin_system, classical_step,
                               classical_tangent_step, ehrenfest_time, evolve,
                               lyapunov_exponent, otoc_growth_rate,
                               otoc_series, phase_portrait,
                               saturation_residuals, time_averaged_tmi_grid,
                               timeseries_measures)
from permsym.measures import LINEAR, VON_NEUMANN, block_entropy


def coherent_point(theta, phi):
    return np.array([math.sin(theta) * math.cos(phi),
                     math.sin(theta) * math.sin(phi),
                     math.cos(theta)])


class TestSpinSystem:
    def test_params_validation(self):
        with pytest.raises(DomainError):
            KickedTopParams(0.3, 1.0)
        with pytest.raises(DomainError):
            KickedTopParams(2.0, -1.0)

    def test_commutator_invariant(self):
        for j in (0.5, 1.0, 7.5, 20.0):
            jx, jy, jz = angular_momentum_matrices(j)
            defect = np.abs(jx @ jy - jy @ jx - 1j * jz).max()
            assert defect < 1e-9 * j ** 2 + 1e-12

    def test_jz_diagonal_ascending(self):
        _, _, jz = angular_momentum_matrices(1.5)
        np.testing.assert_allclose(np.diagonal(jz).real, [-1.5, -0.5, 0.5, 1.5])
        assert np.abs(jz - np.diag(np.diagonal(jz))).max() == 0.0

    def test_unitarity(self):
        for j in (0.5, 6.0, 41.5):
            sys_ = build_spin_system(KickedTopParams(j, 3.7, 1.1))
            defect = np.abs(sys_.floquet.conj().T @ sys_.floquet
                            - np.eye(sys_.dim)).max()
            assert defect < 1e-10

    def test_half_spin_pure_rotation(self):
        # k=0, p=pi/2: U = exp(-i pi sigma_y / 4), a real 45-degree rotation
        # (off-diagonal signs depend on the basis ordering convention)
        sys_ = build_spin_system(KickedTopParams(0.5, 0.0, math.pi / 2))
        u = sys_.floquet
        c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
        assert np.abs(u.imag).max() < 1e-14
        assert u[0, 0].real == pytest.approx(c, abs=1e-14)
        assert u[1, 1].real == pytest.approx(c, abs=1e-14)
        assert abs(u[0, 1].real) == pytest.approx(s, abs=1e-14)
        assert u[0, 1].real == pytest.approx(-u[1, 0].real, abs=1e-14)
        assert np.linalg.det(u.real) == pytest.approx(1.0, abs=1e-12)

    def test_matrix_exponential_oracle(self):
        # independent scaling-and-squaring route for both factors
        params = KickedTopParams(10.0, 6.0, math.pi / 2)
        sys_ = build_spin_system(params)
        jx, jy, jz = angular_momentum_matrices(10.0)
        want = expm(-1j * params.k / (2 * params.j) * jz @ jz) @ expm(-1j * params.p * jy)
        assert abs(np.trace(sys_.floquet) - np.trace(want)) < 1e-8
        assert np.abs(sys_.floquet - want).max() < 1e-8

    def test_capacity_cap(self):
        with pytest.raises(CapacityError):
            build_spin_system(KickedTopParams(5000.0, 1.0))


class TestEvolve:
    def test_zero_steps_identity(self):
        state = coherent_state(4, 1.0, 2.0)
        sys_ = build_spin_system(KickedTopParams(4, 2.0))
        out = evolve(state, sys_, 0)
        assert len(out) == 1
        np.testing.assert_array_equal(out[0].amplitudes, state.amplitudes)

    def test_rotation_preserves_coherence(self):
        # k=0 is integrable: coherent states stay coherent (product states)
        state = coherent_state(5, 1.2, 0.7)
        sys_ = build_spin_system(KickedTopParams(5, 0.0, math.pi / 2))
        for psi in evolve(state, sys_, 12):
            assert block_entropy(psi, 1, LINEAR) < 1e-9

    def test_norm_drift_bounded(self):
        state = coherent_state(10, 2.25, 0.63)
        sys_ = build_spin_system(KickedTopParams(10, 6.0))
        final = evolve(state, sys_, 1000)[-1]
        assert abs(np.sum(np.abs(final.amplitudes) ** 2) - 1.0) < 1e-9

    def test_dimension_mismatch(self):
        state = coherent_state(4, 1.0, 0.0)
        sys_ = build_spin_system(KickedTopParams(5, 1.0))
        with pytest.raises(DomainError):
            evolve(state, sys_, 1)


class TestQuantumClassicalCorrespondence:
    def test_one_kick_large_j(self):
        j, k, p = 200.0, 6.0, math.pi / 2
        sys_ = build_spin_system(KickedTopParams(j, k, p))
        for theta, phi in [(2.25, 0.63), (1.1, 2.0), (0.7, 4.4)]:
            start = coherent_state(j, theta, phi)
            kicked = evolve(start, sys_, 1)[1]
            quantum = bloch_vector(kicked, sys_)
            classical = classical_step(coherent_point(theta, phi), k, p)
            assert np.abs(quantum - classical).max() < 5 / math.sqrt(j)

    def test_initial_bloch_vector(self):
        j = 50.0
        sys_ = build_spin_system(KickedTopParams(j, 1.0))
        state = coherent_state(j, 2.25, 0.63)
        np.testing.assert_allclose(bloch_vector(state, sys_),
                                   coherent_point(2.25, 0.63), atol=1e-10)


class TestClassicalMap:
    def test_pure_rotation_example(self):
        out = classical_step([1.0, 0.0, 0.0], 0.0, math.pi / 2)
        np.testing.assert_allclose(out, [0.0, 0.0, -1.0], atol=1e-15)

    def test_norm_preserved(self):
        rng = np.random.default_rng(0)
        v = rng.standard_normal((200, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        for k in (0.0, 3.0, 6.0):
            out = classical_step(v, k, math.pi / 2)
            np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)

    def test_tangent_step_is_jacobian(self):
        # finite-difference oracle for the tangent push-forward
        rng = np.random.default_rng(1)
        v = rng.standard_normal(3)
        v /= np.linalg.norm(v)
        u = rng.standard_normal(3)
        eps = 1e-7
        _, ju = classical_tangent_step(v, u, 6.0, math.pi / 2)
        fd = (classical_step(v + eps * u, 6.0, math.pi / 2)
              - classical_step(v - eps * u, 6.0, math.pi / 2)) / (2 * eps)
        np.testing.assert_allclose(ju, fd, atol=1e-6)


class TestLyapunov:
    def test_rotation_is_neutral(self):
        lam = lyapunov_exponent(0.0, math.pi / 2, 100, 1000, 8,
                                np.random.default_rng(3))
        assert abs(lam) < 0.01

    def test_global_chaos_value(self):
        lam = lyapunov_exponent(6.0, math.pi / 2, 200, 4000, 32,
                                np.random.default_rng(4))
        assert 0.92 <= lam <= 1.02

    def test_mixed_phase_space_contrast(self):
        sea = lyapunov_exponent(3.0, math.pi / 2, 200, 4000, 1,
                                np.random.default_rng(5),
                                initial_points=[coherent_point(2.25, 2.0)])
        island = lyapunov_exponent(3.0, math.pi / 2, 200, 4000, 1,
                                   np.random.default_rng(5),
                                   initial_points=[coherent_point(2.25, 0.63)])
        assert sea > 0.1
        assert abs(island) < 0.02

    def test_trajectory_separation_oracle(self):
        # two nearby trajectories: log-separation growth classifies the
        # same two initial conditions the tangent method does
        def growth(point, steps=18, delta=1e-9):
            a = np.array(point)
            b = a + delta * np.array([1.0, -0.5, 0.25])
            b /= np.linalg.norm(b)
            start = np.linalg.norm(a - b)
            for _ in range(steps):
                a = classical_step(a, 3.0, math.pi / 2)
                b = classical_step(b, 3.0, math.pi / 2)
            return math.log(np.linalg.norm(a - b) / start) / steps

        assert growth(coherent_point(2.25, 2.0)) > 0.15
        assert growth(coherent_point(2.25, 0.63)) < 0.05


class TestEhrenfest:
    def test_reference_value(self):
        assert ehrenfest_time(750, 0.97) == pytest.approx(7.54, abs=0.01)

    def test_unit_lambda_definition(self):
        j = (math.e - 1) / 2
        assert ehrenfest_time(j, 1.0) == pytest.approx(1.0, rel=1e-12)

    def test_doubling_law(self):
        # 2j+1 -> 2(2j+1) adds exactly ln(2)/lambda
        lam = 0.8
        assert ehrenfest_time(64, lam) - ehrenfest_time(31.75, lam) == pytest.approx(
            math.log(2) / lam, rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            ehrenfest_time(10, 0.0)


class TestOtoc:
    def test_zero_step_values(self):
        s = otoc_series(KickedTopParams(5, 6.0), 3)
        assert s.f[0] == 0.0
        jx, _, _ = angular_momentum_matrices(5.0)
        want = np.trace(np.linalg.matrix_power(jx, 4)).real / 5.0 ** 4
        assert s.c2[0] == pytest.approx(want, rel=1e-12)
        assert s.c4[0] == pytest.approx(want, rel=1e-12)

    def test_commutator_identity(self):
        s = otoc_series(KickedTopParams(8, 6.0), 10)
        np.testing.assert_allclose(s.f, 2 * (s.c2 - s.c4), rtol=1e-8, atol=1e-12)

    def test_rotation_bounded(self):
        # k=0 conjugation is periodic: no exponential envelope
        s = otoc_series(KickedTopParams(5, 0.0), 60)
        assert s.f.max() <= s.f[1] * (1 + 1e-9)
        np.testing.assert_allclose(s.f[0::2], 0.0, atol=1e-9)

    def test_growth_rate_window(self):
        s = otoc_series(KickedTopParams(50, 6.0), 8)
        rate = otoc_growth_rate(s, 1, 4)
        assert rate > 1.0

    def test_growth_requires_positive_f(self):
        s = otoc_series(KickedTopParams(5, 0.0), 6)
        with pytest.raises(DomainError):
            otoc_growth_rate(s, 0, 4)


class TestTimeseries:
    def test_initial_step_zero(self):
        table = timeseries_measures(KickedTopParams(6, 6.0), 1.8, 0.4, 5)
        for col in ("S_A_vn", "I2_AB_vn", "I2_A_BC_vn", "I3_vn", "I3_lin"):
            assert abs(table[col][0]) < 1e-10

    def test_saturation_window_statistics(self):
        table = timeseries_measures(KickedTopParams(10, 6.0), 2.25, 0.63, 100,
                                    kinds=(VON_NEUMANN,))
        t_e = ehrenfest_time(10, 0.97)
        window = table["I3_vn"][int(3 * t_e):]
        assert window.std() < 0.1 * window.mean()

    def test_residuals_helper(self):
        values = np.array([0.1, 0.2, 0.25])
        res = saturation_residuals(values, 0.25)
        np.testing.assert_allclose(res[:2], np.log([0.15, 0.05]))
        assert res[2] == -np.inf

    def test_block_overflow(self):
        with pytest.raises(DomainError):
            timeseries_measures(KickedTopParams(2, 1.0), 1.0, 1.0, 3, (2, 2, 2))


class TestGrid:
    def test_single_node_matches_timeseries(self):
        params = KickedTopParams(5, 6.0)
        _, _, grid = time_averaged_tmi_grid(params, (1, 1), n_steps=40)
        table = timeseries_measures(params, 0.0, 0.0, 40, kinds=(VON_NEUMANN,))
        assert grid[0, 0] == pytest.approx(table["I3_vn"][1:].mean(), abs=1e-12)

    def test_axes_cover_half_open_ranges(self):
        thetas, phis, grid = time_averaged_tmi_grid(KickedTopParams(3, 1.0),
                                                    (4, 6), n_steps=3)
        assert grid.shape == (4, 6)
        assert thetas[0] == 0.0 and thetas[-1] < math.pi
        assert phis[0] == 0.0 and phis[-1] < 2 * math.pi


class TestPhasePortrait:
    def test_rows_and_ranges(self):
        rows = phase_portrait(3.0, math.pi / 2, 7, 11, np.random.default_rng(2))
        assert rows.shape == ((11 + 1) * 7, 4)
        assert np.all(np.abs(rows[:, 1]) <= 1.0 + 1e-12)  # Z of unit vectors
        assert np.all(np.abs(rows[:, 0]) <= math.pi + 1e-12)
        assert set(rows[:, 2].astype(int)) == set(range(7))

    def test_deterministic_given_rng_seed(self):
        a = phase_portrait(6.0, math.pi / 2, 3, 5, np.random.default_rng(9))
        b = phase_portrait(6.0, math.pi / 2, 3, 5, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)
