import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import ks_2samp

from permsym.ensembles import (EnsembleSpec, avg_linear_entropy_ps,
                               avg_linear_entropy_wishart, avg_purity_ps,
                               avg_tmi_linear_ps_111, avg_tmi_linear_ps_mmm,
                               avg_tmi_vn_ps, avg_tmi_vn_wishart,
                               avg_tmi_vn_wishart_blocks, avg_vn_entropy_ps,
                               comb_identity_residual, ensemble_eigenvalues,
                               fit_vn_alpha,
                               marchenko_pastur_density, mc_purity,
                               mc_purity_sweep, mc_tmi, page_entropy,
                               ps_amplitude_batch, random_unitary,
                               reduced_density_full, sample_ps_state,
                               sample_wishart_rdm, spectral_histogram, stream,
                               tmi_full_state)
from permsym.errors import DomainError
from permsym.measures import LINEAR, VON_NEUMANN, block_spectra_batch


class TestSampler:
    def test_single_qubit_symmetry(self):
        amps = ps_amplitude_batch(1, seed=1, count=4000)
        mean = np.mean(np.abs(amps[:, 0]) ** 2)
        # var of |a0|^2 on the 2-dim sphere is 1/12; 3 sigma window
        assert abs(mean - 0.5) < 3 * math.sqrt(1 / 12 / 4000)

    def test_fourth_moment(self):
        # <sum |a_m|^4> = 2/(N+2) from the quartic moments of the sphere
        n = 12
        amps = ps_amplitude_batch(n, seed=2, count=20000)
        value = np.mean(np.sum(np.abs(amps) ** 4, axis=1))
        assert value == pytest.approx(2.0 / (n + 2), rel=0.01)

    def test_deterministic_sequence(self):
        a = ps_amplitude_batch(6, seed=99, count=5)
        b = ps_amplitude_batch(6, seed=99, count=5)
        np.testing.assert_array_equal(a, b)

    def test_shard_independence(self):
        whole = ps_amplitude_batch(6, seed=7, count=10)
        parts = np.concatenate([ps_amplitude_batch(6, seed=7, count=4),
                                ps_amplitude_batch(6, seed=7, count=6, start=4)])
        np.testing.assert_array_equal(whole, parts)

    def test_single_draw_matches_batch(self):
        batch = ps_amplitude_batch(5, seed=3, count=3)
        for i in range(3):
            state = sample_ps_state(5, stream(3, i))
            np.testing.assert_array_equal(state.amplitudes, batch[i])

    def test_unitary_invariance(self):
        # rotating the amplitude sphere by a fixed unitary leaves pooled
        # eigenvalue statistics unchanged
        n, q, count = 8, 3, 3000
        amps = ps_amplitude_batch(n, seed=11, count=count)
        u = random_unitary(n + 1, stream(12, 0))
        rotated = amps @ u.T
        base = block_spectra_batch(amps, n, q).ravel()
        rot = block_spectra_batch(rotated, n, q).ravel()
        assert ks_2samp(base, rot).pvalue > 0.01


class TestWishart:
    def test_one_dimensional(self):
        rho = sample_wishart_rdm(1, 5, stream(0, 0))
        np.testing.assert_allclose(rho, [[1.0]], atol=1e-14)

    def test_lubkin_purity(self):
        # (M+N)/(1+MN) with M=N=2 -> 0.8
        vals = [np.trace(np.linalg.matrix_power(sample_wishart_rdm(2, 2, stream(5, i)), 2)).real
                for i in range(20000)]
        assert np.mean(vals) == pytest.approx(0.8, rel=0.01)

    def test_square_spectrum_matches_mp(self):
        ev = ensemble_eigenvalues(EnsembleSpec("wishart", (51, 51), 400, 8)) * 51
        hist, edges = np.histogram(ev, bins=40, range=(0.0, 4.0), density=True)
        # compare against the law's mass per bin (the density diverges at 0,
        # so point values at bin centers are biased there)
        mp_mass = np.array([quad(marchenko_pastur_density, edges[i], edges[i + 1])[0]
                            for i in range(len(hist))])
        width = np.diff(edges)
        assert np.max(np.abs(hist - mp_mass / width)) < 0.15


class TestMarchenkoPastur:
    def test_midpoint(self):
        assert marchenko_pastur_density(2.0) == pytest.approx(1 / (2 * math.pi))

    def test_edges(self):
        assert marchenko_pastur_density(4.0) == 0.0
        assert marchenko_pastur_density(0.0) == 0.0
        assert marchenko_pastur_density(-1.0) == 0.0
        assert marchenko_pastur_density(5.0) == 0.0

    def test_unit_mass_quadrature(self):
        total, err = quad(marchenko_pastur_density, 0, 4)
        assert abs(total - 1.0) < 1e-8


class TestSpectralHistogram:
    def test_unit_area(self):
        hist = spectral_histogram(EnsembleSpec("ps", (12, 2), 400, 3), bins=60)
        area = np.sum(hist.densities * np.diff(hist.bin_edges))
        assert abs(area - 1.0) < 1e-9

    def test_two_peaks_for_single_qubit(self):
        # Q+1 = 2 merging peaks with a gap at the scaled midpoint
        hist = spectral_histogram(EnsembleSpec("ps", (12, 1), 4000, 5), bins=100)
        centers = 0.5 * (hist.bin_edges[:-1] + hist.bin_edges[1:])
        left = hist.densities[(centers > 0.1) & (centers < 0.9)].max()
        mid = hist.densities[(centers > 0.95) & (centers < 1.05)].min()
        right = hist.densities[(centers > 1.1) & (centers < 1.9)].max()
        assert left > 5 * max(mid, 0.01)
        assert right > 5 * max(mid, 0.01)

    def test_bins_precondition(self):
        with pytest.raises(DomainError):
            spectral_histogram(EnsembleSpec("ps", (8, 2), 10, 0), bins=5)

    def test_ps_origin_lighter_than_wishart(self):
        ev_ps = ensemble_eigenvalues(EnsembleSpec("ps", (100, 50), 300, 6)) * 51
        ev_w = ensemble_eigenvalues(EnsembleSpec("wishart", (51, 51), 300, 6)) * 51
        assert np.mean(ev_ps < 0.05) < np.mean(ev_w < 0.05)

    def test_ps_tail_beyond_mp_edge(self):
        ev_ps = ensemble_eigenvalues(EnsembleSpec("ps", (100, 50), 300, 9)) * 51
        ev_w = ensemble_eigenvalues(EnsembleSpec("wishart", (51, 51), 300, 9)) * 51
        assert np.mean(ev_ps > 4.0) > 0.005
        assert np.mean(ev_w > 4.0) < np.mean(ev_ps > 4.0) / 5

    def test_threads_do_not_change_output(self):
        spec = EnsembleSpec("ps", (10, 4), 300, 17)
        np.testing.assert_array_equal(
            spectral_histogram(spec, bins=40, threads=1).densities,
            spectral_histogram(spec, bins=40, chunk=64, threads=2).densities)


class TestClosedForms:
    def test_purity_example(self):
        assert avg_purity_ps(12, 6) == pytest.approx(13 / 49)

    def test_symmetry(self):
        for q in (1, 3, 5):
            assert avg_purity_ps(12, q) == pytest.approx(avg_purity_ps(12, 12 - q))
            assert avg_linear_entropy_ps(12, q) == pytest.approx(
                avg_linear_entropy_ps(12, 12 - q))

    def test_purity_plus_linear_entropy(self):
        assert avg_purity_ps(20, 7) + avg_linear_entropy_ps(20, 7) == pytest.approx(1.0)

    def test_wishart_qubit_flavor(self):
        assert avg_linear_entropy_wishart(2, 1, "qubits") == pytest.approx(0.2)

    def test_wishart_dims_flavor_below_ps(self):
        assert avg_linear_entropy_wishart(12, 2, "dims") == pytest.approx(20 / 34)
        for n, q in [(12, 2), (12, 6), (30, 10)]:
            assert (avg_linear_entropy_wishart(n, q, "dims")
                    < avg_linear_entropy_ps(n, q))

    def test_single_qubit_large_n_forms(self):
        for n in range(2, 40):
            ps = avg_linear_entropy_ps(n, 1)
            dims = avg_linear_entropy_wishart(n, 1, "dims")
            assert ps == pytest.approx(0.5 * (1 - 1 / n))
            assert dims == pytest.approx(0.5 * (1 - 3 / (2 * n + 1)))
            assert dims < ps

    def test_vn_form_evaluation(self):
        value = avg_vn_entropy_ps(100, 50, half_correction=True)
        want = math.log2(51) - (2 / 3) * (51 / 51) - 1 / 101
        assert value == pytest.approx(want, rel=1e-12)

    def test_vn_correction_guard(self):
        with pytest.raises(DomainError):
            avg_vn_entropy_ps(100, 20, half_correction=True)

    def test_page_square_case(self):
        assert page_entropy(51, 51) == pytest.approx(math.log2(51) - 0.721, abs=5e-4)

    def test_comb_identity_small(self):
        assert comb_identity_residual(4, 2) < 1e-12
        assert comb_identity_residual(2, 1) < 1e-12

    def test_comb_identity_logspace(self):
        assert comb_identity_residual(60, 30) < 1e-9

    def test_comb_identity_exact_rational_oracle(self):
        from fractions import Fraction
        n, q = 9, 4
        total = Fraction(0)
        for k in range(q + 1):
            for j in range(q + 1):
                for m in range(n - q + 1):
                    total += Fraction(
                        math.comb(q, k) * math.comb(q, j) * math.comb(n - q, m) ** 2,
                        math.comb(n, k + m) * math.comb(n, j + m))
        assert total == Fraction((n + 1) ** 2, n - q + 1)
        assert comb_identity_residual(n, q) < 1e-12


class TestTmiEstimates:
    def test_linear_mmm_small(self):
        assert avg_tmi_linear_ps_mmm(1) == pytest.approx(0.25)

    def test_linear_111_exact(self):
        assert avg_tmi_linear_ps_111(12) == pytest.approx(9 * 136 / (4 * 12 * 11 * 10))

    def test_linear_111_matches_entropy_linearity(self):
        # the closed form is 3<S_1> - 3<S_2> + <S_3> by linearity of the mean
        for n in (8, 12, 31):
            want = (3 * avg_linear_entropy_ps(n, 1) - 3 * avg_linear_entropy_ps(n, 2)
                    + avg_linear_entropy_ps(n, 3))
            assert avg_tmi_linear_ps_111(n) == pytest.approx(want, rel=1e-12)

    def test_sign_claims(self):
        for q in range(1, 30):
            assert avg_tmi_vn_ps(q) > 0
        for n, q in [(12, 1), (12, 2), (30, 5), (60, 10)]:
            assert avg_tmi_vn_wishart(q, n) < 0

    def test_blocks_estimate_reduces_to_equal_case(self):
        for n, q in [(12, 2), (24, 4)]:
            assert avg_tmi_vn_wishart_blocks(n, (q, q, q)) == pytest.approx(
                avg_tmi_vn_wishart(q, n), rel=1e-12)


class TestMonteCarlo:
    def test_purity_convergence_sweep(self):
        for n in (8, 12):
            results = mc_purity_sweep(n, samples=4000, seed=n)
            for q, res in results.items():
                want = avg_purity_ps(n, q)
                assert abs(res.mean - want) <= 3 * res.stderr + 1e-12

    def test_sweep_matches_single(self):
        sweep = mc_purity_sweep(10, samples=500, seed=4, qs=[2, 5])
        single = mc_purity(10, 2, 500, seed=4)
        assert sweep[2].mean == pytest.approx(single.mean, rel=1e-12)

    def test_tmi_linear_mean(self):
        res = mc_tmi(12, (1, 1, 1), LINEAR, 20000, seed=13)
        assert abs(res.mean - avg_tmi_linear_ps_111(12)) <= 3 * res.stderr

    def test_fit_alpha_near_two_thirds(self):
        alpha = fit_vn_alpha([(60, 30), (80, 40)], samples=300, seed=2)
        assert 0.55 < alpha < 0.8


class TestFullSpace:
    def test_reduction_matches_kron_oracle(self):
        rng = np.random.default_rng(3)
        single = [None] * 4
        for i in range(4):
            v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            single[i] = v / np.linalg.norm(v)
        psi = single[0]
        for v in single[1:]:
            psi = np.kron(psi, v)
        rho = reduced_density_full(psi, [1, 3], 4)
        want = np.kron(np.outer(single[1], single[1].conj()),
                       np.outer(single[3], single[3].conj()))
        np.testing.assert_allclose(rho, want, atol=1e-12)

    def test_product_state_tmi_zero(self):
        rng = np.random.default_rng(5)
        psi = np.ones(1)
        for _ in range(6):
            v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            psi = np.kron(psi, v / np.linalg.norm(v))
        assert abs(tmi_full_state(psi, 6, (1, 2, 2), VON_NEUMANN)) < 1e-10

    def test_matches_ps_tmi_on_symmetric_state(self):
        # the full-space route and the Dicke-basis route agree on PS states
        from permsym.core import PSState, embed_to_full
        from permsym.measures import tmi as ps_tmi
        rng = np.random.default_rng(7)
        z = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        state = PSState(z / np.linalg.norm(z))
        psi = embed_to_full(state)
        for sizes in [(1, 1, 1), (1, 2, 2)]:
            assert tmi_full_state(psi, 8, sizes, VON_NEUMANN) == pytest.approx(
                ps_tmi(state, *sizes, VON_NEUMANN), abs=1e-9)
