import numpy as np
import pytest

from expfln.adaptive_td import (ConfigurationError, DivergenceError, block_matrix,
                                block_td_step, efln_lms_run, efln_lms_step, td_init)
from expfln.expansion import efln_expand

from oracles import sample_efln_lms


def random_stream(seed, n):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1, 1, n), rng.normal(size=n)


class TestInit:
    def test_shapes(self):
        st = td_init(8, 2, 0.01, 0.01)
        assert st.w.shape == (40,)
        assert st.weights().shape == (5, 8)

    @pytest.mark.parametrize("args", [(0, 1, .1, .1), (4, 0, .1, .1), (4, 1, -1, .1)])
    def test_rejects_bad(self, args):
        with pytest.raises(ConfigurationError):
            td_init(*args)


class TestSampleLms:
    def test_zero_weights(self):
        st = td_init(4, 2, 0.0, 0.5, q0=0.3)
        y, e = efln_lms_step(st, 0.7, 1.25)
        assert y == 0.0 and e == 1.25
        assert st.q == 0.3

    def test_zero_steps_pure_filter(self):
        st = td_init(3, 1, 0.0, 0.0, q0=0.1)
        st.w[:] = np.random.default_rng(0).normal(size=9)
        w0 = st.w.copy()
        for x in [0.2, -0.4, 0.9]:
            efln_lms_step(st, x, 0.0)
        np.testing.assert_array_equal(st.w, w0)
        assert st.q == 0.1

    def test_hand_evaluation(self):
        st = td_init(2, 1, 0.0, 0.0)
        st.w[:] = 1.0
        efln_lms_step(st, 0.0, 0.0)
        y, _ = efln_lms_step(st, 0.5, 0.0)
        assert y == pytest.approx(2.5, abs=1e-15)

    @pytest.mark.parametrize("M,P", [(1, 1), (4, 2), (7, 3)])
    def test_matches_rebuilt_delay_vector(self, M, P):
        u, d = random_stream(M + P, 300)
        st = td_init(M, P, 0.01, 0.05, q0=0.2)
        y, e = efln_lms_run(st, u, d)
        yr, er, wr, qr = sample_efln_lms(u, d, M, P, 0.01, 0.05, q0=0.2)
        assert np.max(np.abs(y - yr)) < 1e-12
        assert np.max(np.abs(st.w - wr)) < 1e-12
        assert abs(st.q - qr) < 1e-12

    def test_split_runs_equal_one_run(self):
        u, d = random_stream(3, 200)
        a, b = td_init(5, 2, 0.02, 0.02), td_init(5, 2, 0.02, 0.02)
        _, e1 = efln_lms_run(a, u, d)
        e2 = np.concatenate([efln_lms_run(b, u[:77], d[:77])[1], efln_lms_run(b, u[77:], d[77:])[1]])
        np.testing.assert_array_equal(e1, e2)

    def test_tfln_keeps_q_zero(self):
        u, d = random_stream(4, 100)
        st = td_init(4, 2, 0.01, 0.5, kind="TFLN")
        efln_lms_run(st, u, d)
        assert st.q == 0.0

    def test_power_rejected(self):
        with pytest.raises(ConfigurationError):
            efln_lms_run(td_init(4, 1, .1, 0, kind="POWER"), [0.1], [0.1])

    def test_divergence_reports_sample(self):
        u, d = random_stream(5, 2000)
        st = td_init(4, 2, 50.0, 0.0)
        with pytest.raises(DivergenceError) as info:
            efln_lms_run(st, 10 * u, d)
        assert 0 < info.value.index < 2000


class TestBlockMatrix:
    def test_lag_layout(self):
        hist = np.arange(6, dtype=float)[None]      # x(-2) .. x(3), M=3
        G = block_matrix(hist)
        # column j holds x(j), x(j-1), x(j-2)
        np.testing.assert_array_equal(G[:, 0], [3, 2, 1])
        np.testing.assert_array_equal(G[:, 2], [5, 4, 3])


class TestBlockTd:
    def test_zero_weights(self):
        M = 4
        st = td_init(M, 1, 0.1, 0.3, q0=0.2)
        u, d = random_stream(6, M)
        y, e = block_td_step(st, u, d)
        np.testing.assert_array_equal(y, 0)
        np.testing.assert_array_equal(e, d)
        hist = np.concatenate([efln_expand(np.zeros(M), 0.2, 1), efln_expand(u, 0.2, 1)], axis=1)
        np.testing.assert_allclose(st.w, 0.1 * block_matrix(hist) @ d, atol=1e-15)
        assert st.q == 0.2

    def test_zero_steps(self):
        st = td_init(4, 2, 0.0, 0.0, q0=-0.1)
        st.w[:] = 0.3
        for k in range(5):
            u, d = random_stream(k, 4)
            block_td_step(st, u, d)
        assert np.all(st.w == 0.3) and st.q == -0.1

    def test_unit_block_equals_sample_lms(self):
        u, d = random_stream(8, 400)
        a = td_init(1, 2, 0.05, 0.1, q0=0.1)
        b = td_init(1, 2, 0.05, 0.1, q0=0.1)
        _, e_s = efln_lms_run(a, u, d)
        e_b = np.array([block_td_step(b, u[n:n + 1], d[n:n + 1])[1][0] for n in range(400)])
        assert np.max(np.abs(e_s - e_b)) < 1e-12
        assert abs(a.q - b.q) < 1e-12

    def test_noiseless_error_energy_settles(self):
        rng = np.random.default_rng(11)
        M, P = 8, 1
        wbar = rng.normal(size=3 * M) * 0.3
        teacher = td_init(M, P, 0.0, 0.0, q0=-0.4)
        teacher.w[:] = wbar
        st = td_init(M, P, 2e-3, 2e-3)
        energy = []
        for k in range(600):
            u = rng.uniform(-1, 1, M)
            d, _ = block_td_step(teacher, u, np.zeros(M))
            _, e = block_td_step(st, u, d)
            energy.append(np.sum(e ** 2))
        energy = np.array(energy)
        # windowed averages after the transient decrease
        means = energy[100:].reshape(5, 100).mean(axis=1)
        assert np.all(np.diff(means) <= 0)

    def test_length_checked(self):
        with pytest.raises(ValueError):
            block_td_step(td_init(4, 1, .1, .1), np.zeros(3), np.zeros(3))
