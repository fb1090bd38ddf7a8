"""Functional expansions of input blocks.

Channels are returned channel-major, shape ``(C, M)``. For the EFLN family
the row order is ``u, e*sin(pi u), e*cos(pi u), e*sin(2 pi u), ...`` with
``e = exp(-q |u|)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class ExpansionKind(str, enum.Enum):
    EFLN = "EFLN"
    TFLN = "TFLN"
    POWER = "POWER"
    LINEAR = "LINEAR"


@dataclass(frozen=True)
class ExpansionConfig:
    order: int = 1
    kind: ExpansionKind = ExpansionKind.EFLN

    def __post_init__(self):
        object.__setattr__(self, "kind", ExpansionKind(self.kind))
        if self.order < 1:
            raise ValueError("expansion order must be a positive integer")

    @property
    def n_channels(self) -> int:
        if self.kind is ExpansionKind.LINEAR:
            return 1
        return 2 * self.order + 1

    @property
    def adapts_q(self) -> bool:
        return self.kind is ExpansionKind.EFLN


def _trig(u: np.ndarray, P: int) -> np.ndarray:
    out = np.empty((2 * P,) + u.shape)
    for p in range(1, P + 1):
        arg = p * np.pi * u
        out[2 * p - 2] = np.sin(arg)
        out[2 * p - 1] = np.cos(arg)
    return out


def efln_expand(u, q: float, P: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    env = np.exp(-q * np.abs(u))
    g = np.empty((2 * P + 1,) + u.shape)
    g[0] = u
    g[1:] = env * _trig(u, P)
    return g


def efln_derivative(u, q: float, P: int) -> np.ndarray:
    """Element-wise derivative of :func:`efln_expand` with respect to ``q``."""
    u = np.asarray(u, dtype=np.float64)
    a = np.abs(u)
    h = np.empty((2 * P + 1,) + u.shape)
    h[0] = 0.0
    h[1:] = -a * np.exp(-q * a) * _trig(u, P)
    return h


def expand_baseline(u, config: ExpansionConfig) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    kind = config.kind
    if kind is ExpansionKind.EFLN:
        raise ValueError("use efln_expand for the exponential expansion")
    if kind is ExpansionKind.TFLN:
        return efln_expand(u, 0.0, config.order)
    if kind is ExpansionKind.POWER:
        return np.stack([u ** i for i in range(1, 2 * config.order + 2)])
    return u[np.newaxis].copy()


def expand(u, q: float, config: ExpansionConfig) -> np.ndarray:
    if config.kind is ExpansionKind.EFLN:
        return efln_expand(u, q, config.order)
    return expand_baseline(u, config)


def derivative(u, q: float, config: ExpansionConfig) -> np.ndarray:
    if config.kind is ExpansionKind.EFLN:
        return efln_derivative(u, q, config.order)
    u = np.asarray(u, dtype=np.float64)
    return np.zeros((config.n_channels,) + u.shape)
