"""Time-domain EFLN filters: the sample-wise LMS and its block counterpart.

The block form holds ``w`` and ``q`` fixed over ``M`` samples and builds the
expanded-input matrix ``G(k)`` explicitly. It never touches an FFT, which is
what makes it a useful reference for the frequency-domain code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .expansion import ExpansionConfig, ExpansionKind, derivative, expand


class DivergenceError(RuntimeError):
    def __init__(self, index: int, where: str = "block"):
        super().__init__(f"adaptation diverged at {where} {index}")
        self.index = index
        self.where = where


class ConfigurationError(ValueError):
    pass


def check_finite(e: np.ndarray, index: int, where: str = "block", limit: float = 1e12):
    if not np.all(np.abs(e) <= limit):
        raise DivergenceError(index, where)


@dataclass
class TdState:
    M: int
    config: ExpansionConfig
    mu_w: float
    mu_q: float
    q: float = 0.0
    w: np.ndarray = field(default=None, repr=False)
    # sample-loop delay lines (see _kernels_py)
    xb: np.ndarray = field(default=None, repr=False)
    tb: np.ndarray = field(default=None, repr=False)
    pos: int = 0
    n: int = 0
    # block form: previous block's channels, expanded at the previous q
    prev_g: np.ndarray = field(default=None, repr=False)
    prev_h: np.ndarray = field(default=None, repr=False)
    k: int = 0

    @property
    def P(self) -> int:
        return self.config.order

    @property
    def n_channels(self) -> int:
        return self.config.n_channels

    def weights(self) -> np.ndarray:
        return self.w.reshape(self.n_channels, self.M)


def td_init(M: int, P: int, mu_w: float, mu_q: float, q0: float = 0.0,
            kind: ExpansionKind | str = ExpansionKind.EFLN) -> TdState:
    if M < 1 or P < 1:
        raise ConfigurationError("M and P must be positive")
    if mu_w < 0 or mu_q < 0:
        raise ConfigurationError("step sizes must be non-negative")
    config = ExpansionConfig(P, kind)
    C = config.n_channels
    state = TdState(M=M, config=config, mu_w=float(mu_w), mu_q=float(mu_q), q=float(q0))
    state.w = np.zeros(C * M)
    state.xb = np.zeros(2 * M)
    state.tb = np.zeros((2 * P, 2 * M))
    # cos(0) = 1 for the zero history
    state.tb[1::2] = 1.0
    state.prev_g = expand(np.zeros(M), q0, config)
    state.prev_h = derivative(np.zeros(M), q0, config)
    return state


def _sample_kernel_ok(state: TdState):
    if state.config.kind not in (ExpansionKind.EFLN, ExpansionKind.TFLN):
        raise ConfigurationError("sample-wise filters support EFLN and TFLN expansions")


def efln_lms_run(state: TdState, u, d, backend: str | None = None):
    """Run the sample-wise EFLN-LMS over whole streams; returns ``(y, e)``."""
    _sample_kernel_ok(state)
    u = np.ascontiguousarray(u, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    if u.shape != d.shape:
        raise ValueError("u and d must have the same length")
    mu_q = state.mu_q if state.config.adapts_q else 0.0
    q = state.q if state.config.adapts_q else 0.0
    y = np.zeros(u.size)
    e = np.zeros(u.size)
    q, state.pos, done = kernels.get(backend).efln_lms_run(
        u, d, state.w, state.xb, state.tb, state.pos, q, state.P, state.mu_w, mu_q, y, e)
    state.q = float(q)
    if done < u.size:
        state.n += done
        raise DivergenceError(state.n, "sample")
    state.n += u.size
    return y, e


def efln_lms_step(state: TdState, u_n: float, d_n: float, backend: str | None = None):
    y, e = efln_lms_run(state, [u_n], [d_n], backend)
    return float(y[0]), float(e[0])


def _lag_index(M: int) -> np.ndarray:
    # G_i[l, j] = x_i[M + j - l] for a two-block history x_i
    return M + np.arange(M)[np.newaxis, :] - np.arange(M)[:, np.newaxis]


def block_matrix(history: np.ndarray) -> np.ndarray:
    """Stack the per-channel ``G_i(k)`` of a ``(C, 2M)`` history into ``(C*M, M)``."""
    C, twoM = history.shape
    M = twoM // 2
    return history[:, _lag_index(M)].reshape(C * M, M)


def block_td_step(state: TdState, u_blk, d_blk):
    """One block of the time-domain block EFLN filter; returns ``(y, e)``."""
    u = np.asarray(u_blk, dtype=np.float64)
    d = np.asarray(d_blk, dtype=np.float64)
    M = state.M
    if u.size != M or d.size != M:
        raise ValueError(f"blocks must hold exactly M={M} samples")
    g = expand(u, state.q, state.config)
    h = derivative(u, state.q, state.config)
    G = block_matrix(np.concatenate([state.prev_g, g], axis=1))
    y = G.T @ state.w
    e = d - y
    check_finite(e, state.k)
    w_old = state.w.copy()
    state.w = state.w + state.mu_w * (G @ e)
    if state.config.adapts_q:
        H = block_matrix(np.concatenate([state.prev_h, h], axis=1))
        z = H.T @ w_old
        state.q = state.q + state.mu_q * float(z @ e)
    state.prev_g, state.prev_h = g, h
    state.k += 1
    return y, e
