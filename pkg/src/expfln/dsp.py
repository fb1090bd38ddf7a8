"""Spectral primitives shared by the block algorithms.

Transforms follow the usual FFT convention: the forward transform is
unnormalized and the inverse carries the ``1/(2M)`` factor, so that
``||fft(x)||**2 == 2M * ||x||**2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Largest imaginary residue tolerated when an inverse transform should be real.
IMAG_TOL = 1e-9


class ContractError(ValueError):
    """Raised when an argument violates a size or symmetry contract."""


@dataclass
class SampleBlock:
    samples: np.ndarray
    block_index: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ContractError("a block needs at least one sample")
        if self.block_index < 0:
            raise ContractError("block index must be non-negative")

    def __len__(self):
        return self.samples.size


def _as_block(x) -> np.ndarray:
    if isinstance(x, SampleBlock):
        return x.samples
    return np.asarray(x, dtype=np.float64)


def forward_transform(block2m) -> np.ndarray:
    x = _as_block(block2m)
    if x.ndim != 1 or x.size < 2 or x.size % 2:
        raise ContractError(f"expected an even-length block of 2M samples, got {x.size}")
    return np.fft.fft(x)


def real_part(z: np.ndarray) -> np.ndarray:
    """Drop the imaginary residue of an analytically real result.

    Works on any array shape. Residue above ``IMAG_TOL`` (scaled by the
    peak real magnitude once that exceeds 1) means a spectrum lost its
    Hermitian symmetry somewhere upstream.
    """
    if not z.size:
        return z.real.copy()
    resid = np.max(np.abs(z.imag))
    if resid > IMAG_TOL and resid > IMAG_TOL * np.max(np.abs(z.real)):
        raise ContractError(f"inverse transform is not real (imag residue {resid:.3e})")
    return z.real.copy()


def inverse_transform(spectrum) -> np.ndarray:
    s = np.asarray(spectrum, dtype=np.complex128)
    if s.ndim != 1 or s.size < 2 or s.size % 2:
        raise ContractError(f"expected a spectrum of 2M bins, got {s.size}")
    return real_part(np.fft.ifft(s))


def is_hermitian(spectrum, tol: float = 1e-12) -> bool:
    s = np.asarray(spectrum)
    mirrored = np.conj(s[(-np.arange(s.size)) % s.size])
    return bool(np.max(np.abs(s - mirrored)) <= tol * max(1.0, np.max(np.abs(s))))


def overlap_save_filter(prev, cur, coeff_spectrum) -> np.ndarray:
    """Filter ``cur`` with the coefficients behind ``coeff_spectrum``.

    ``prev`` supplies the history needed by the first outputs. The result
    matches direct linear convolution for up to ``M + 1`` taps.
    """
    p, c = _as_block(prev), _as_block(cur)
    m = c.size
    if p.size != m:
        raise ContractError("prev and cur blocks differ in length")
    spec = np.asarray(coeff_spectrum)
    if spec.size != 2 * m:
        raise ContractError(f"coefficient spectrum needs {2 * m} bins, got {spec.size}")
    out = inverse_transform(forward_transform(np.concatenate([p, c])) * spec)
    return out[m:]


def overlap_save_correlate(error_spectrum, input_spectrum) -> np.ndarray:
    """Gradient correlation ``sum_j e[j] * x[M + j - l]`` for ``l < M``.

    ``error_spectrum`` is the transform of ``[0; e]`` and ``input_spectrum``
    the transform of the two-block input history ``x``.
    """
    es = np.asarray(error_spectrum)
    xs = np.asarray(input_spectrum)
    if es.size != xs.size or es.size % 2:
        raise ContractError("error and input spectra must both have 2M bins")
    return inverse_transform(es * np.conj(xs))[: es.size // 2]


def fir_filter_direct(signal, taps) -> np.ndarray:
    """Causal direct-form FIR filtering with zero initial state."""
    x = np.asarray(signal, dtype=np.float64)
    h = np.asarray(taps, dtype=np.float64)
    if h.size < 1:
        raise ContractError("an FIR filter needs at least one tap")
    if x.size == 0:
        return x.copy()
    return np.convolve(x, h)[: x.size]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))


def derive_seed(seed: int, trial: int) -> int:
    return int(seed) ^ int(trial)
