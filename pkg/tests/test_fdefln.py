import numpy as np
import pytest

from expfln.adaptive_td import (ConfigurationError, DivergenceError, block_matrix,
                                block_td_step, td_init)
from expfln.expansion import efln_expand
from expfln.fdefln import (ConstraintViolation, fdefln_block, fdefln_init, fdefln_run,
                           fdefln_weights_time, weight_tails)


def streams(seed, n, scale=1.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-scale, scale, n), rng.normal(size=n)


def compare_with_block_td(M, P, blocks, mu_w, mu_q, q0, seed, kind="EFLN"):
    u, d = streams(seed, M * blocks)
    fd = fdefln_init(M, P, mu_w, mu_q, q0, kind)
    td = td_init(M, P, mu_w, mu_q, q0, kind)
    worst = 0.0
    for k in range(blocks):
        sl = slice(k * M, (k + 1) * M)
        y1, e1 = fdefln_block(fd, u[sl], d[sl])
        y2, e2 = block_td_step(td, u[sl], d[sl])
        worst = max(worst, np.max(np.abs(y1 - y2)), np.max(np.abs(e1 - e2)),
                    np.max(np.abs(fdefln_weights_time(fd) - td.w)), abs(fd.q - td.q))
    return worst, fd, td


class TestInit:
    def test_zero_spectra(self):
        st = fdefln_init(4, 1, .01, .01, 0)
        assert st.w_spec.shape == (3, 8)
        assert not np.any(st.w_spec)

    def test_zero_input_block(self):
        st = fdefln_init(4, 1, .01, .01, 0.0)
        d = np.array([1.0, -2, 3, 0.5])
        y, e = fdefln_block(st, np.zeros(4), d)
        np.testing.assert_array_equal(y, 0)
        np.testing.assert_array_equal(e, d)
        assert st.q == 0.0

    def test_paper_sized_config(self):
        st = fdefln_init(200, 2, 2e-4, 5e-4, 0)
        assert st.w_spec.shape == (5, 400)
        assert (st.mu_w, st.mu_q, st.q) == (2e-4, 5e-4, 0)

    @pytest.mark.parametrize("args", [(0, 1, .1, .1), (4, 0, .1, .1), (4, 1, .1, -.1)])
    def test_rejects(self, args):
        with pytest.raises(ConfigurationError):
            fdefln_init(*args)


class TestBlock:
    def test_first_update_is_correlation(self):
        M = 8
        u, d = streams(1, M)
        st = fdefln_init(M, 2, 0.05, 0.0)
        fdefln_block(st, u, d)
        hist = np.concatenate([np.zeros(M), u])
        corr = np.array([sum(d[j] * hist[M + j - l] for j in range(M)) for l in range(M)])
        np.testing.assert_allclose(fdefln_weights_time(st)[:M], 0.05 * corr, atol=1e-14)

    def test_pure_filtering(self):
        M, P = 6, 2
        rng = np.random.default_rng(2)
        w = rng.normal(size=(5, M))
        st = fdefln_init(M, P, 0.0, 0.0, q0=0.3)
        st.w_spec = np.fft.fft(np.concatenate([w, np.zeros((5, M))], axis=1), axis=1)
        prev = efln_expand(np.zeros(M), 0.3, P)
        for _ in range(4):
            u = rng.uniform(-1, 1, M)
            y, _ = fdefln_block(st, u, np.zeros(M))
            g = efln_expand(u, 0.3, P)
            direct = block_matrix(np.concatenate([prev, g], axis=1)).T @ w.ravel()
            np.testing.assert_allclose(y, direct, atol=1e-12)
            prev = g

    def test_oracle_trajectory(self):
        worst, _, _ = compare_with_block_td(8, 2, 100, 0.01, 0.02, 0.0, seed=3)
        assert worst < 1e-9

    def test_first_weights_equal_block_td(self):
        worst, _, _ = compare_with_block_td(4, 1, 1, 0.1, 0.1, 0.0, seed=4)
        assert worst < 1e-14

    def test_tfln_identity(self):
        M = 8
        u, d = streams(5, 40 * M)
        a = fdefln_init(M, 2, 0.01, 0.0, 0.0, "EFLN")
        b = fdefln_init(M, 2, 0.01, 0.7, 0.0, "TFLN")
        ya, _ = fdefln_run(a, u, d)
        yb, _ = fdefln_run(b, u, d)
        np.testing.assert_array_equal(ya, yb)
        assert b.q == 0.0

    def test_q_ignores_first_channel_weights(self):
        M = 8
        u, d = streams(6, 21 * M)
        a = fdefln_init(M, 2, 0.01, 0.05)
        fdefln_run(a, u[:20 * M], d[:20 * M])
        states = []
        for bump in (0.0, 1.0):
            st = fdefln_init(M, 2, 0.01, 0.05)
            st.q, st.prev_g, st.prev_h = a.q, a.prev_g.copy(), a.prev_h.copy()
            st.w_spec = a.w_spec.copy()
            st.w_spec[0] += bump * np.fft.fft(np.r_[np.random.default_rng(0).normal(size=M),
                                                    np.zeros(M)])
            fdefln_block(st, u[20 * M:], d[20 * M:])
            states.append(st)
        np.testing.assert_allclose(states[0].last_z, states[1].last_z, atol=1e-12)

    def test_divergence(self):
        M = 8
        u, d = streams(7, 400 * M, scale=5.0)
        st = fdefln_init(M, 2, 10.0, 0.0)
        with pytest.raises(DivergenceError):
            fdefln_run(st, u, 100 * d)

    def test_run_requires_whole_blocks(self):
        with pytest.raises(ValueError):
            fdefln_run(fdefln_init(4, 1, .1, .1), np.zeros(6), np.zeros(6))


class TestWeightsTime:
    def test_fresh_zero(self):
        np.testing.assert_array_equal(fdefln_weights_time(fdefln_init(4, 2, .1, .1)),
                                      np.zeros(20))

    def test_tail_constraint_long_run(self):
        M = 16
        u, d = streams(8, 1000 * M)
        st = fdefln_init(M, 2, 5e-3, 5e-3)
        worst = 0.0
        for k in range(1000):
            sl = slice(k * M, (k + 1) * M)
            fdefln_block(st, u[sl], d[sl])
            head, tail = weight_tails(st.w_spec)
            worst = max(worst, np.max(np.abs(tail)))
            total = np.sum(head ** 2) + np.sum(tail ** 2)
            assert np.sum(tail ** 2) <= 1e-18 * total
        assert worst < 1e-9

    def test_violation_raised(self):
        st = fdefln_init(4, 1, .1, .1)
        st.w_spec = np.fft.fft(np.ones((3, 8)), axis=1)
        with pytest.raises(ConstraintViolation):
            fdefln_weights_time(st)
