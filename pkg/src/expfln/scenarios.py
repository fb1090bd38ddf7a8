"""Signal generators, plant models and path fixtures for the experiments."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .dsp import fir_filter_direct
from .expansion import efln_expand


class ScenarioKind(str, enum.Enum):
    IDENT_EFLN = "IDENT_EFLN"
    NSI = "NSI"
    NAEC_SIGMOID = "NAEC_SIGMOID"
    NANC_POLY = "NANC_POLY"
    NANC_CHAOTIC = "NANC_CHAOTIC"


IDEAL_Q = -0.4


# --- generators ---------------------------------------------------------------

def gen_uniform(rng: np.random.Generator, lo: float, hi: float, count: int) -> np.ndarray:
    if not lo < hi:
        raise ValueError("need lo < hi")
    return rng.uniform(lo, hi, count)


def gen_awgn_for_snr(sig, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(sig, dtype=np.float64)
    power = float(np.mean(x ** 2)) if x.size else 0.0
    if power == 0.0:
        raise ValueError("cannot scale noise to a zero-power signal")
    var = power / 10.0 ** (snr_db / 10.0)
    return rng.normal(0.0, np.sqrt(var), x.size)


def noise_variance_for_snr(sig, snr_db: float) -> float:
    return float(np.mean(np.asarray(sig) ** 2)) / 10.0 ** (snr_db / 10.0)


def logistic_raw(count: int, kappa: float = 4.0, u0: float = 0.9) -> np.ndarray:
    """Logistic-map iterates starting at ``u0`` (included as the first sample)."""
    out = np.empty(count)
    x = u0
    for n in range(count):
        out[n] = x
        x = kappa * x * (1.0 - x)
    return out


def gen_logistic(count: int) -> np.ndarray:
    x = logistic_raw(count)
    return x / np.sqrt(np.mean(x ** 2))


# --- plants -------------------------------------------------------------------

def nsi_plant(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    u4 = np.concatenate([np.zeros(4), u])[: u.size]
    return (0.6 * np.sin(np.pi * u) ** 3 - 2.0 / (u ** 3 + 2.0)
            - 0.1 * np.cos(4 * np.pi * u4) + 1.125)


def sigmoid_distortion(gamma, beta: float = 2.0) -> np.ndarray:
    """Asymmetric loudspeaker sigmoid; slope 4 for ``gamma >= 0``, 0.5 below."""
    g = np.asarray(gamma, dtype=np.float64)
    alpha = np.where(g >= 0, 4.0, 0.5)
    return beta / (1.0 + np.exp(-alpha * g)) - 0.5 * beta


def loudspeaker(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    return sigmoid_distortion(1.5 * u - 0.3 * u ** 2)


def nanc_poly_primary(uhat) -> np.ndarray:
    x = np.asarray(uhat, dtype=np.float64)
    x1 = np.concatenate([np.zeros(1), x])[: x.size]
    x2 = np.concatenate([np.zeros(2), x])[: x.size]
    return x2 + 0.8 * x2 ** 2 - 0.4 * x2 ** 3 + x1 ** 4 * x2


def tanh_secondary(x, gain: float = 3.3, slope: float = 0.3) -> np.ndarray:
    return gain * np.tanh(slope * np.asarray(x, dtype=np.float64))


def ident_efln_plant(u, w_bar, q_bar: float, P: int) -> np.ndarray:
    """Output of an EFLN system with fixed weights ``w_bar`` and factor ``q_bar``."""
    u = np.asarray(u, dtype=np.float64)
    w_bar = np.asarray(w_bar, dtype=np.float64)
    C = 2 * P + 1
    if w_bar.size % C:
        raise ValueError(f"weight length {w_bar.size} is not a multiple of {C} channels")
    g = efln_expand(u, q_bar, P)
    taps = w_bar.reshape(C, -1)
    return sum(fir_filter_direct(g[i], taps[i]) for i in range(C))


# --- fixtures -------------------------------------------------------------------

@dataclass(frozen=True)
class PathFixture:
    name: str
    primary: np.ndarray
    secondary: np.ndarray


def _poly(coeffs: dict) -> np.ndarray:
    taps = np.zeros(max(coeffs) + 1)
    for delay, c in coeffs.items():
        taps[delay] = c
    return taps


_FIXTURES = {
    "engine": (
        {9: 0.8, 10: 0.6, 11: -0.2, 12: -0.5, 13: -0.1, 14: 0.4, 15: -0.05},
        {5: 1.0, 6: 2.5, 7: 1.76, 8: 0.15, 9: -0.4825, 10: -0.18625, 11: -0.005,
         12: -0.001875},
    ),
    "chaotic": ({5: 1.0, 6: 0.3, 7: 0.2}, {2: 1.0, 3: 1.5, 4: -1.0}),
}


def path_fixtures(name: str) -> PathFixture:
    """Published path pairs by scenario name ("engine" or "chaotic")."""
    try:
        p, s = _FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown path fixture {name!r}; known: {sorted(_FIXTURES)}") from None
    return PathFixture(name, _poly(p), _poly(s))


def fixture_taps(name: str) -> np.ndarray:
    """Single tap vector by ``<scenario>_P`` or ``<scenario>_S`` name."""
    base, _, which = name.rpartition("_")
    if which not in ("P", "S"):
        raise KeyError(f"unknown tap set {name!r}")
    fx = path_fixtures(base)
    return (fx.primary if which == "P" else fx.secondary).copy()


def decaying_response(rng: np.random.Generator, length: int, decay: float | None = None,
                      norm: float = 1.0) -> np.ndarray:
    """Random impulse response with an exponentially decaying envelope, unit-norm scaled."""
    decay = length / 4.0 if decay is None else decay
    h = rng.normal(size=length) * np.exp(-np.arange(length) / decay)
    return norm * h / np.linalg.norm(h)


def ident_weights(rng: np.random.Generator, M: int, P: int, norm: float = 1.0) -> np.ndarray:
    """Desk-scale stand-in for the long identified FIR: one decaying response per channel."""
    C = 2 * P + 1
    w = np.concatenate([decaying_response(rng, M) for _ in range(C)])
    return norm * w / np.linalg.norm(w)


def engine_standin(rng: np.random.Generator, count: int, fs: float = 8000.0) -> np.ndarray:
    """Band-limited noise (60-600 Hz) at unit power, in place of an engine recording."""
    b, a = sps.butter(4, [60.0, 600.0], btype="bandpass", fs=fs)
    x = sps.lfilter(b, a, rng.normal(size=count + 1000))[1000:]
    return x / np.sqrt(np.mean(x ** 2))


def speech_standin(rng: np.random.Generator, count: int, fs: float = 8000.0) -> np.ndarray:
    """AR(2)-coloured noise in on/off bursts, peak-scaled into (-1, 1)."""
    x = sps.lfilter([1.0], [1.0, -1.3, 0.6], rng.normal(size=count))
    burst = int(0.25 * fs)
    gate = np.repeat(rng.uniform(size=count // burst + 1) > 0.3, burst)[:count]
    env = sps.lfilter([0.01], [1.0, -0.99], gate.astype(float))
    y = x * env
    return 0.95 * y / np.max(np.abs(y))


def room_response(rng: np.random.Generator, length: int = 512) -> np.ndarray:
    h = decaying_response(rng, length, decay=length / 6.0)
    h[0] = 0.0
    return h / np.max(np.abs(h))


def load_signal_csv(path) -> np.ndarray:
    """Read one real value per line; a non-numeric first line is taken as a header."""
    values = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            try:
                values.append(float(row[0]))
            except ValueError:
                if lineno == 0 and not values:
                    continue
                raise ValueError(f"{path}:{lineno + 1}: not a number: {row[0]!r}") from None
    return np.asarray(values)
