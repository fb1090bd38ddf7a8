"""Frequency-domain EFLN filter (50% overlap-save, block LMS).

Per block and channel: transform the two-block history of the expanded
input, filter against the zero-padded weight spectrum, correlate the error
back into a time-domain gradient, and re-transform the constrained update.
The exponential factor follows the gradient of the block error energy
through the derivative channels.

All channels are transformed in one batched FFT call along axis 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adaptive_td import ConfigurationError, check_finite
from .dsp import real_part
from .expansion import ExpansionConfig, ExpansionKind, derivative, expand

# Largest tolerated time-domain tail of a weight spectrum.
TAIL_TOL = 1e-9


class ConstraintViolation(RuntimeError):
    pass


@dataclass
class FdeflnState:
    M: int
    config: ExpansionConfig
    mu_w: float
    mu_q: float
    q: float = 0.0
    w_spec: np.ndarray = field(default=None, repr=False)
    prev_g: np.ndarray = field(default=None, repr=False)
    prev_h: np.ndarray = field(default=None, repr=False)
    k: int = 0
    # diagnostics from the most recent block
    last_g_hist: np.ndarray = field(default=None, repr=False)
    last_z: np.ndarray = field(default=None, repr=False)

    @property
    def P(self) -> int:
        return self.config.order

    @property
    def n_channels(self) -> int:
        return self.config.n_channels


def _check_init(M, P, mu_w, mu_q):
    if int(M) != M or M < 1 or int(P) != P or P < 1:
        raise ConfigurationError(f"need integer M >= 1 and P >= 1, got M={M}, P={P}")
    if not (mu_w >= 0 and mu_q >= 0):
        raise ConfigurationError("step sizes must be non-negative")


def fdefln_init(M: int, P: int, mu_w: float, mu_q: float, q0: float = 0.0,
                kind: ExpansionKind | str = ExpansionKind.EFLN) -> FdeflnState:
    _check_init(M, P, mu_w, mu_q)
    config = ExpansionConfig(int(P), kind)
    M = int(M)
    C = config.n_channels
    zero = np.zeros(M)
    return FdeflnState(
        M=M, config=config, mu_w=float(mu_w), mu_q=float(mu_q), q=float(q0),
        w_spec=np.zeros((C, 2 * M), dtype=np.complex128),
        prev_g=expand(zero, q0, config),
        prev_h=derivative(zero, q0, config),
    )


def _blocks(state, u_blk, d_blk):
    u = np.asarray(u_blk, dtype=np.float64)
    d = np.asarray(d_blk, dtype=np.float64)
    if u.shape != (state.M,) or d.shape != (state.M,):
        raise ValueError(f"blocks must hold exactly M={state.M} samples")
    return u, d


def _pad_tail(x: np.ndarray) -> np.ndarray:
    return np.concatenate([x, np.zeros_like(x)], axis=-1)


def fdefln_block(state: FdeflnState, u_blk, d_blk, counter=None):
    """Process one block; returns ``(y, e)`` and advances ``state``."""
    u, d = _blocks(state, u_blk, d_blk)
    M, C = state.M, state.n_channels
    W = state.w_spec

    g = expand(u, state.q, state.config)
    g_hist = np.concatenate([state.prev_g, g], axis=1)
    G = np.fft.fft(g_hist, axis=1)
    y = real_part(np.fft.ifft(G * W, axis=1))[:, M:].sum(axis=0)
    e = d - y
    check_finite(e, state.k)
    E = np.fft.fft(np.concatenate([np.zeros(M), e]))

    phi = real_part(np.fft.ifft(E * np.conj(G), axis=1))[:, :M]
    state.w_spec = W + state.mu_w * np.fft.fft(_pad_tail(phi), axis=1)

    z = None
    if state.config.adapts_q:
        h = derivative(u, state.q, state.config)
        H = np.fft.fft(np.concatenate([state.prev_h, h], axis=1), axis=1)
        z = real_part(np.fft.ifft(H * W, axis=1))[:, M:].sum(axis=0)
        state.q = state.q + state.mu_q * float(z @ e)
        state.prev_h = h

    if counter is not None:
        _count_fdefln(counter, M, C, state.config.adapts_q)

    state.prev_g = g
    state.last_g_hist = g_hist
    state.last_z = z
    state.k += 1
    return y, e


def _count_fdefln(counter, M, C, adapts_q):
    n = 2 * M
    with counter.phase("filtering"):
        counter.fft(n, C)
        counter.cmul(n, C)
        counter.ifft(n, C)
        counter.radd(M * (C - 1))
    with counter.phase("error"):
        counter.radd(M)
        counter.fft(n)
    with counter.phase("weight"):
        counter.cmul(n, C)
        counter.ifft(n, C)
        counter.fft(n, C)
        counter.scale(n, C)
        counter.cadd(n, C)
    if adapts_q:
        with counter.phase("factor"):
            counter.fft(n, C)
            counter.cmul(n, C)
            counter.ifft(n, C)
            counter.radd(M * (C - 1))
            counter.dot(M)
            counter.scale(1)
            counter.radd(1)


def weight_tails(w_spec: np.ndarray):
    """Split inverse-transformed weight spectra into (head, tail) halves."""
    t = real_part(np.fft.ifft(w_spec, axis=-1))
    M = t.shape[-1] // 2
    return t[..., :M], t[..., M:]


def fdefln_weights_time(state) -> np.ndarray:
    """Concatenated time-domain weights ``[w_1; ...; w_C]``."""
    head, tail = weight_tails(state.w_spec)
    resid = float(np.max(np.abs(tail))) if tail.size else 0.0
    if resid > TAIL_TOL:
        raise ConstraintViolation(f"weight spectrum has a time-domain tail of {resid:.3e}")
    return head.reshape(-1)


def fdefln_run(state: FdeflnState, u, d):
    """Run whole streams (length a multiple of M) block by block; returns ``(y, e)``."""
    u = np.asarray(u, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    M = state.M
    if u.size != d.size or u.size % M:
        raise ValueError("stream length must be a common multiple of M")
    y = np.empty_like(u)
    e = np.empty_like(u)
    for b in range(u.size // M):
        sl = slice(b * M, (b + 1) * M)
        y[sl], e[sl] = fdefln_block(state, u[sl], d[sl])
    return y, e
