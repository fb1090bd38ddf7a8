import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expfln.dsp import (ContractError, SampleBlock, derive_seed, fir_filter_direct,
                        forward_transform, inverse_transform, is_hermitian, make_rng,
                        overlap_save_correlate, overlap_save_filter, real_part)


def dft_oracle(x):
    n = len(x)
    k = np.arange(n)
    return np.array([np.sum(x * np.exp(-2j * np.pi * f * k / n)) for f in range(n)])


def spectrum_of(taps, M):
    h = np.zeros(2 * M)
    h[:len(taps)] = taps
    return forward_transform(h)


class TestSampleBlock:
    def test_length(self):
        assert len(SampleBlock([1.0, 2.0], 3)) == 2

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            SampleBlock([], 0)

    def test_negative_index_rejected(self):
        with pytest.raises(ContractError):
            SampleBlock([1.0], -1)


class TestForwardTransform:
    def test_zeros(self):
        np.testing.assert_array_equal(forward_transform(np.zeros(8)), np.zeros(8))

    def test_impulse(self):
        x = np.zeros(8)
        x[0] = 1
        np.testing.assert_allclose(forward_transform(x), np.ones(8), atol=1e-15)

    def test_constant_matches_dft_oracle(self):
        x = np.ones(4)
        np.testing.assert_allclose(forward_transform(x), dft_oracle(x), atol=1e-12)
        np.testing.assert_allclose(forward_transform(x), [4, 0, 0, 0], atol=1e-12)

    def test_random_matches_dft_oracle(self):
        x = make_rng(3).normal(size=12)
        np.testing.assert_allclose(forward_transform(x), dft_oracle(x), atol=1e-10)

    def test_odd_length_rejected(self):
        with pytest.raises(ContractError):
            forward_transform(np.zeros(5))

    def test_parseval_factor(self):
        x = make_rng(0).normal(size=64)
        X = forward_transform(x)
        assert np.sum(np.abs(X) ** 2) == pytest.approx(64 * np.sum(x ** 2), rel=1e-9)

    def test_hermitian(self):
        X = forward_transform(make_rng(1).normal(size=16))
        assert is_hermitian(X)
        assert not is_hermitian(X + 1j * np.eye(16)[3])


class TestInverseTransform:
    def test_round_trip(self):
        x = np.array([0.3, -0.7, 0.1, 0.9])
        assert np.max(np.abs(inverse_transform(forward_transform(x)) - x)) < 1e-12

    def test_zero(self):
        np.testing.assert_array_equal(inverse_transform(np.zeros(6, complex)), np.zeros(6))

    def test_constant_bin(self):
        np.testing.assert_allclose(inverse_transform(np.array([4, 0, 0, 0], complex)),
                                   [1, 1, 1, 1], atol=1e-15)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ContractError):
            inverse_transform(np.array([0, 1j, 0, 0]))

    def test_tiny_residue_discarded(self):
        z = np.array([1 + 1e-12j, 2.0])
        np.testing.assert_array_equal(real_part(z), [1.0, 2.0])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 64), st.integers(0, 2 ** 32 - 1))
    def test_round_trip_property(self, M, seed):
        x = make_rng(seed).normal(size=2 * M)
        assert np.max(np.abs(inverse_transform(forward_transform(x)) - x)) < 1e-12


class TestOverlapSaveFilter:
    def test_identity(self):
        prev, cur = np.array([1.0, 2, 3]), np.array([4.0, 5, 6])
        np.testing.assert_allclose(overlap_save_filter(prev, cur, spectrum_of([1], 3)), cur,
                                   atol=1e-14)

    def test_unit_delay(self):
        a, b, c, d = 1.5, -2.0, 0.25, 7.0
        out = overlap_save_filter([a, b], [c, d], spectrum_of([0, 1], 2))
        np.testing.assert_allclose(out, [b, c], atol=1e-14)

    def test_zero(self):
        out = overlap_save_filter(np.zeros(4), np.zeros(4), spectrum_of([1, 2, 3], 4))
        np.testing.assert_array_equal(out, np.zeros(4))

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            overlap_save_filter(np.zeros(3), np.zeros(4), spectrum_of([1], 4))

    @pytest.mark.parametrize("M,N", [(8, 1), (8, 9), (16, 5), (7, 8)])
    def test_matches_direct_over_stream(self, M, N):
        rng = make_rng(M * 100 + N)
        taps = rng.normal(size=N)
        x = rng.normal(size=120 * M)
        ref = fir_filter_direct(x, taps)
        S = spectrum_of(taps, M)
        prev = np.zeros(M)
        worst = 0.0
        for k in range(120):
            cur = x[k * M:(k + 1) * M]
            worst = max(worst, np.max(np.abs(overlap_save_filter(prev, cur, S) - ref[k * M:(k + 1) * M])))
            prev = cur
        assert worst < 1e-10


def brute_correlation(e, hist):
    M = len(e)
    return np.array([sum(e[j] * hist[M + j - l] for j in range(M)) for l in range(M)])


class TestOverlapSaveCorrelate:
    def test_zero_error(self):
        g = forward_transform(make_rng(2).normal(size=8))
        np.testing.assert_allclose(overlap_save_correlate(forward_transform(np.zeros(8)), g),
                                   np.zeros(4), atol=1e-15)

    def test_two_tap_example(self):
        hist = np.array([0.5, -1.0, 2.0, 3.0])    # g(-1), g(0), g(1), g(2)
        E = forward_transform(np.array([0, 0, 1.0, 0]))
        out = overlap_save_correlate(E, forward_transform(hist))
        np.testing.assert_allclose(out, [2.0, -1.0], atol=1e-14)

    def test_autocorrelation_lag0(self):
        rng = make_rng(4)
        e = rng.normal(size=6)
        e /= np.linalg.norm(e)
        hist = np.concatenate([rng.normal(size=6), e])
        out = overlap_save_correlate(forward_transform(np.concatenate([np.zeros(6), e])),
                                     forward_transform(hist))
        assert out[0] == pytest.approx(np.sum(e ** 2), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 32), st.integers(0, 2 ** 32 - 1))
    def test_matches_brute_force(self, M, seed):
        rng = make_rng(seed)
        e, hist = rng.normal(size=M), rng.normal(size=2 * M)
        out = overlap_save_correlate(forward_transform(np.concatenate([np.zeros(M), e])),
                                     forward_transform(hist))
        assert np.max(np.abs(out - brute_correlation(e, hist))) < 1e-10


class TestFirFilterDirect:
    def test_identity(self):
        np.testing.assert_array_equal(fir_filter_direct([3.0, 5, 7], [1.0]), [3, 5, 7])

    def test_delay(self):
        np.testing.assert_array_equal(fir_filter_direct([3.0, 5, 7], [0, 1.0]), [0, 3, 5])

    def test_sum(self):
        np.testing.assert_array_equal(fir_filter_direct([1.0, 1, 1], [1.0, 1]), [1, 2, 2])


class TestRng:
    def test_reproducible(self):
        np.testing.assert_array_equal(make_rng(9).normal(size=5), make_rng(9).normal(size=5))

    def test_derived_seeds_distinct(self):
        assert len({derive_seed(42, t) for t in range(100)}) == 100
