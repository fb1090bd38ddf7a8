"""Filtered-s controllers for nonlinear active noise control.

The controller's secondary-path model is always linear. An optional
``a * tanh(b * x)`` output stage on :class:`SecondaryPath` only shapes the
simulated acoustic error, never the filtered regressors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .adaptive_td import (ConfigurationError, DivergenceError, TdState,
                          check_finite, td_init)
from .dsp import real_part
from .expansion import ExpansionConfig, ExpansionKind, derivative, expand
from .fdefln import FdeflnState, _blocks, _check_init, _pad_tail


@dataclass
class SecondaryPath:
    taps: np.ndarray
    tanh_gain: float | None = None
    tanh_slope: float | None = None
    _spectra: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=np.float64).copy()
        if self.taps.ndim != 1 or self.taps.size < 1:
            raise ConfigurationError("a secondary path needs at least one tap")
        if (self.tanh_gain is None) != (self.tanh_slope is None):
            raise ConfigurationError("tanh output stage needs both gain and slope")

    @property
    def N(self) -> int:
        return self.taps.size

    @property
    def nonlinear(self) -> bool:
        return self.tanh_gain is not None

    def spectrum(self, M: int) -> np.ndarray:
        """Transform of the taps zero-padded to ``2M`` points."""
        if self.N > M:
            raise ConfigurationError(f"secondary path has {self.N} taps, more than M={M}")
        s = self._spectra.get(M)
        if s is None:
            s = np.fft.fft(np.concatenate([self.taps, np.zeros(2 * M - self.N)]))
            self._spectra[M] = s
        return s

    def output_stage(self, x):
        if not self.nonlinear:
            return x
        return self.tanh_gain * np.tanh(self.tanh_slope * np.asarray(x))

    def flipped(self) -> "SecondaryPath":
        return SecondaryPath(-self.taps, self.tanh_gain, self.tanh_slope)


def impulse_path(N: int = 1) -> SecondaryPath:
    taps = np.zeros(N)
    taps[0] = 1.0
    return SecondaryPath(taps)


# --- time domain ------------------------------------------------------------

@dataclass
class EfslmsState(TdState):
    N: int = 1
    gh: np.ndarray = field(default=None, repr=False)
    hh: np.ndarray = field(default=None, repr=False)
    yb: np.ndarray = field(default=None, repr=False)
    spos: int = 0


def efslms_init(M: int, P: int, N: int, mu_w: float, mu_q: float, q0: float = 0.0,
                kind: ExpansionKind | str = ExpansionKind.EFLN) -> EfslmsState:
    base = td_init(M, P, mu_w, mu_q, q0, kind)
    if N < 1:
        raise ConfigurationError("secondary path length must be positive")
    st = EfslmsState(**{f: getattr(base, f) for f in base.__dataclass_fields__})
    st.N = N
    L = st.w.size
    st.gh = np.zeros((2 * N, L))
    st.hh = np.zeros((2 * N, L))
    st.yb = np.zeros(2 * N)
    # zero history expands to cos(0) = 1 in the cosine rows
    zero_g = expand(np.zeros(M), q0, st.config).ravel()
    st.gh[:] = zero_g
    return st


def efslms_run(state: EfslmsState, path: SecondaryPath, u, d, backend: str | None = None):
    """Sample-wise EFsLMS over whole streams; returns the error stream."""
    if state.config.kind not in (ExpansionKind.EFLN, ExpansionKind.TFLN):
        raise ConfigurationError("sample-wise filters support EFLN and TFLN expansions")
    if path.N != state.N:
        raise ConfigurationError(f"state built for N={state.N}, path has {path.N} taps")
    u = np.ascontiguousarray(u, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    adapts = state.config.adapts_q
    e = np.zeros(u.size)
    q, state.pos, state.spos, done = kernels.get(backend).efslms_run(
        u, d, state.w, state.xb, state.tb, state.pos, state.gh, state.hh, state.yb,
        state.spos, np.ascontiguousarray(path.taps), state.q if adapts else 0.0,
        state.P, state.mu_w, state.mu_q if adapts else 0.0,
        float(path.tanh_gain or 0.0), float(path.tanh_slope or 0.0), path.nonlinear, e)
    state.q = float(q)
    if done < u.size:
        state.n += done
        raise DivergenceError(state.n, "sample")
    state.n += u.size
    return e


def efslms_step(state: EfslmsState, path: SecondaryPath, u_n: float, d_n: float,
                backend: str | None = None) -> float:
    return float(efslms_run(state, path, [u_n], [d_n], backend)[0])


# --- frequency domain -------------------------------------------------------

@dataclass
class FdefslmsState(FdeflnState):
    prev_gf: np.ndarray = field(default=None, repr=False)
    prev_hf: np.ndarray = field(default=None, repr=False)
    prev_y: np.ndarray = field(default=None, repr=False)
    # diagnostics: filtered output y*s of the last block (before any output stage)
    last_ys: np.ndarray = field(default=None, repr=False)


def fdefslms_init(M: int, P: int, mu_w: float, mu_q: float, q0: float = 0.0,
                  kind: ExpansionKind | str = ExpansionKind.EFLN) -> FdefslmsState:
    _check_init(M, P, mu_w, mu_q)
    config = ExpansionConfig(int(P), kind)
    M = int(M)
    C = config.n_channels
    zero = np.zeros(M)
    return FdefslmsState(
        M=M, config=config, mu_w=float(mu_w), mu_q=float(mu_q), q=float(q0),
        w_spec=np.zeros((C, 2 * M), dtype=np.complex128),
        prev_g=expand(zero, q0, config),
        prev_h=derivative(zero, q0, config),
        prev_gf=np.zeros((C, M)),
        prev_hf=np.zeros((C, M)),
        prev_y=np.zeros(M),
    )


def fdefslms_block(state: FdefslmsState, path: SecondaryPath, u_blk, d_blk, counter=None):
    """One block of the frequency-domain filtered-s controller; returns ``e``."""
    u, d = _blocks(state, u_blk, d_blk)
    M, C = state.M, state.n_channels
    S = path.spectrum(M)
    W = state.w_spec

    if state.k == 0:
        # the cold-start history is expand(0) extended into the past, so its
        # filtered copy is that constant times the path's DC gain
        state.prev_gf = float(np.sum(path.taps)) * state.prev_g

    g = expand(u, state.q, state.config)
    g_hist = np.concatenate([state.prev_g, g], axis=1)
    G = np.fft.fft(g_hist, axis=1)
    y = real_part(np.fft.ifft(G * W, axis=1))[:, M:].sum(axis=0)

    ys = real_part(np.fft.ifft(np.fft.fft(np.concatenate([state.prev_y, y])) * S))[M:]
    e = d - path.output_stage(ys)
    check_finite(e, state.k)
    E = np.fft.fft(np.concatenate([np.zeros(M), e]))

    gf = real_part(np.fft.ifft(G * S, axis=1))[:, M:]
    GF = np.fft.fft(np.concatenate([state.prev_gf, gf], axis=1), axis=1)
    phi = real_part(np.fft.ifft(E * np.conj(GF), axis=1))[:, :M]
    state.w_spec = W + state.mu_w * np.fft.fft(_pad_tail(phi), axis=1)

    z = None
    if state.config.adapts_q:
        h = derivative(u, state.q, state.config)
        H = np.fft.fft(np.concatenate([state.prev_h, h], axis=1), axis=1)
        hf = real_part(np.fft.ifft(H * S, axis=1))[:, M:]
        HF = np.fft.fft(np.concatenate([state.prev_hf, hf], axis=1), axis=1)
        z = real_part(np.fft.ifft(HF * W, axis=1))[:, M:].sum(axis=0)
        state.q = state.q + state.mu_q * float(z @ e)
        state.prev_h, state.prev_hf = h, hf

    if counter is not None:
        _count_fdefslms(counter, M, C, state.config.adapts_q)

    state.prev_g, state.prev_gf, state.prev_y = g, gf, y
    state.last_g_hist, state.last_z, state.last_ys = g_hist, z, ys
    state.k += 1
    return e


def filtered_baseline_block(state: FdefslmsState, path: SecondaryPath, u_blk, d_blk,
                            config: ExpansionConfig | None = None, counter=None):
    """Filtered-x / filtered-s baselines (LINEAR, TFLN, POWER) on the same pipeline.

    ``config`` is optional and only checked against the state it was built with.
    """
    if config is not None and config != state.config:
        raise ConfigurationError(f"state was built for {state.config}, not {config}")
    return fdefslms_block(state, path, u_blk, d_blk, counter)


def _count_fdefslms(counter, M, C, adapts_q):
    n = 2 * M
    with counter.phase("filtering"):
        counter.fft(n, C)
        counter.cmul(n, C)
        counter.ifft(n, C)
        counter.radd(M * (C - 1))
    with counter.phase("error"):
        # y*s is done by overlap-save here, not by direct convolution
        counter.fft(n)
        counter.cmul(n)
        counter.ifft(n)
        counter.radd(M)
        counter.fft(n)
    with counter.phase("weight"):
        counter.cmul(n, C)
        counter.ifft(n, C)
        counter.fft(n, C)
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
            counter.fft(n, C)
            counter.cmul(n, C)
            counter.ifft(n, C)
            counter.radd(M * (C - 1))
            counter.dot(M)
            counter.scale(1)
            counter.radd(1)


def fdefslms_run(state: FdefslmsState, path: SecondaryPath, u, d, flip_block: int | None = None):
    """Run whole streams; optionally negate the path before block ``flip_block``."""
    u = np.asarray(u, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    M = state.M
    if u.size != d.size or u.size % M:
        raise ValueError("stream length must be a common multiple of M")
    e = np.empty_like(u)
    for b in range(u.size // M):
        if flip_block is not None and b == flip_block:
            path = path.flipped()
        sl = slice(b * M, (b + 1) * M)
        e[sl] = fdefslms_block(state, path, u[sl], d[sl])
    return e
