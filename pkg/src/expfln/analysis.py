"""Step-size bounds, steady-state EMSE theory and operation counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .opcount import PHASES

UNBOUNDED = math.inf


class InstabilityError(ValueError):
    pass


# --- stability --------------------------------------------------------------

def mu_w_bound(g_spectrum) -> float:
    """Upper bound ``1 / (2 ||g||^2)`` on the weight step for one channel spectrum.

    Returns :data:`UNBOUNDED` for an all-zero spectrum. Callers take the
    minimum over channels and blocks.
    """
    energy = float(np.sum(np.abs(np.asarray(g_spectrum)) ** 2))
    if energy == 0.0:
        return UNBOUNDED
    return 1.0 / (2.0 * energy)


def mu_q_bound(z_channels) -> float:
    """Upper bound ``1 / (2 C max_i ||z_i||^2)`` on the exponential-factor step."""
    z = np.atleast_2d(np.asarray(z_channels, dtype=np.float64))
    peak = float(np.max(np.sum(z ** 2, axis=1)))
    if peak == 0.0:
        return UNBOUNDED
    return 1.0 / (2.0 * z.shape[0] * peak)


# --- steady state -----------------------------------------------------------

@dataclass(frozen=True)
class MomentEstimates:
    trG: float
    trSG: float
    trH: float
    trSH: float
    noise_var: float
    M: int

    def __post_init__(self):
        if self.trG < 0 or self.trH < 0 or self.noise_var < 0:
            raise ValueError("traces and noise variance must be non-negative")


def theoretical_emse(mu_w: float, mu_q: float, m: MomentEstimates) -> float:
    """Closed-form steady-state EMSE (linear scale)."""
    den_w = 2 * m.M - mu_w * m.trSG
    den_q = 2 * m.M - mu_q * m.trSH
    if den_w <= 0 or den_q <= 0:
        raise InstabilityError(
            f"step sizes outside the stability region (denominators {den_w:.4g}, {den_q:.4g})")
    return (mu_w * m.noise_var * m.trG / den_w
            + mu_q * m.noise_var * m.trH / den_q)


def emse_db(value: float) -> float:
    return 10.0 * math.log10(value)


@dataclass
class MomentAccumulator:
    """Running sums for the four traces.

    ``Tr[G^T G] = ||G||_F^2`` and ``Tr[S G^T G] = ||G 1||^2`` with ``S`` all
    ones; with ``z = H^T w`` the weight-dependent pair reduces to ``||z||^2``
    and ``(sum z)^2``.
    """

    M: int
    trG: float = 0.0
    trSG: float = 0.0
    trH: float = 0.0
    trSH: float = 0.0
    blocks: int = 0
    _lags: np.ndarray = field(default=None, repr=False)

    def add_matrices(self, G, H, w):
        G = np.asarray(G, dtype=np.float64)
        z = np.asarray(H, dtype=np.float64).T @ np.asarray(w, dtype=np.float64)
        self.trG += float(np.sum(G ** 2))
        self.trSG += float(np.sum(G.sum(axis=1) ** 2))
        self._add_z(z)

    def add_history(self, g_hist, z):
        """Accumulate from a ``(C, 2M)`` two-block channel history and ``z(k)``.

        Row ``l`` of ``G_i`` is the window ``x_i[M - l : 2M - l]``, so both
        traces come from sliding-window sums.
        """
        x = np.asarray(g_hist, dtype=np.float64)
        M = self.M
        c1 = np.concatenate([np.zeros((x.shape[0], 1)), np.cumsum(x, axis=1)], axis=1)
        c2 = np.concatenate([np.zeros((x.shape[0], 1)), np.cumsum(x ** 2, axis=1)], axis=1)
        lo = M - np.arange(M)
        sums = c1[:, lo + M] - c1[:, lo]
        sq = c2[:, lo + M] - c2[:, lo]
        self.trG += float(np.sum(sq))
        self.trSG += float(np.sum(sums ** 2))
        self._add_z(np.zeros(M) if z is None else np.asarray(z, dtype=np.float64))

    def _add_z(self, z):
        self.trH += float(z @ z)
        self.trSH += float(np.sum(z)) ** 2
        self.blocks += 1

    def merge(self, other: "MomentAccumulator"):
        self.trG += other.trG
        self.trSG += other.trSG
        self.trH += other.trH
        self.trSH += other.trSH
        self.blocks += other.blocks

    def estimates(self, noise_var: float, min_blocks: int = 50) -> MomentEstimates:
        if self.blocks < max(min_blocks, 1):
            raise ValueError(f"need at least {min_blocks} blocks of trace, have {self.blocks}")
        n = self.blocks
        return MomentEstimates(self.trG / n, self.trSG / n, self.trH / n, self.trSH / n,
                               float(noise_var), self.M)


def estimate_moments(trace, noise_var: float, M: int, min_blocks: int = 50) -> MomentEstimates:
    """Sample-mean trace estimates from an iterable of ``(G, H, w)`` block records.

    ``G`` and ``H`` are ``(C*M, M)`` block matrices and ``w`` the weights in
    force for that block. The default ``min_blocks`` asks for ``50 M`` samples.
    """
    acc = MomentAccumulator(M)
    for G, H, w in trace:
        acc.add_matrices(G, H, w)
    return acc.estimates(noise_var, min_blocks)


def simulated_emse(ybar_blocks, y_blocks) -> float:
    """Mean over blocks of ``||ybar(k) - y(k)||^2 / M``."""
    a = np.atleast_2d(np.asarray(ybar_blocks, dtype=np.float64))
    b = np.atleast_2d(np.asarray(y_blocks, dtype=np.float64))
    if a.shape != b.shape:
        raise ValueError("block arrays differ in shape")
    return float(np.mean(np.sum((a - b) ** 2, axis=-1)) / a.shape[-1])


# --- complexity --------------------------------------------------------------

@dataclass(frozen=True)
class OpCounts:
    mults: dict
    adds: dict

    @property
    def total_mults(self) -> int:
        return sum(self.mults[p] for p in PHASES)

    @property
    def total_adds(self) -> int:
        return sum(self.adds[p] for p in PHASES)


ALGORITHMS = ("EFLN", "FDEFLN", "EFsLMS", "FDEFsLMS")


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def op_counts(algo: str, M: int, P: int, N: int | None = None) -> OpCounts:
    """Per-block multiplication and addition counts by phase.

    Time-domain rows are the per-sample counts times ``M``. Frequency-domain
    rows need ``M`` a power of two so that ``log2(2M)`` is exact.
    """
    C = 2 * P + 1
    N = M if N is None else N
    if algo in ("FDEFLN", "FDEFsLMS"):
        if not _is_pow2(M):
            raise ValueError(f"frequency-domain counts need a power-of-two M, got {M}")
        L = M * int(math.log2(2 * M))
    if algo == "EFLN":
        mults = dict(filtering=M * C, error=0, weight=M * C + 1, factor=M * C + 2)
        adds = dict(filtering=M * C - 1, error=1, weight=M * C, factor=M * C)
        mults = {k: v * M for k, v in mults.items()}
        adds = {k: v * M for k, v in adds.items()}
    elif algo == "EFsLMS":
        mults = dict(filtering=M * C, error=N, weight=M * C * (N + 1) + 1,
                     factor=M * C * (N + 1) + 2)
        adds = dict(filtering=M * C - 1, error=N, weight=M * N * C, factor=M * N * C)
        mults = {k: v * M for k, v in mults.items()}
        adds = {k: v * M for k, v in adds.items()}
    elif algo == "FDEFLN":
        mults = dict(filtering=(4 * L + 8 * M) * C, error=2 * L,
                     weight=(4 * L + 10 * M) * C, factor=(4 * L + 8 * M) * C + M + 1)
        adds = dict(filtering=(4 * L + 4 * M) * C + 2 * M * P, error=2 * L + M,
                    weight=(4 * L + 8 * M) * C, factor=(4 * L + 5 * M) * C)
    elif algo == "FDEFsLMS":
        mults = dict(filtering=(4 * L + 8 * M) * C, error=2 * L + M * N,
                     weight=(8 * L + 18 * M) * C, factor=(8 * L + 16 * M) * C + M + 1)
        adds = dict(filtering=(4 * L + 4 * M) * C + 2 * M * P, error=2 * L + M * N,
                    weight=(8 * L + 12 * M) * C, factor=(8 * L + 9 * M) * C)
    else:
        raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")
    return OpCounts(mults, adds)


def table_totals(algo: str, M: int, P: int, N: int | None = None):
    """The table's closed-form totals, written out independently of the phase rows."""
    C = 2 * P + 1
    N = M if N is None else N
    if algo in ("FDEFLN", "FDEFsLMS"):
        lg = int(math.log2(2 * M))
    if algo == "EFLN":
        return 3 * M * M * C + 3 * M, 3 * M * M * C
    if algo == "EFsLMS":
        return (M * M * C * (2 * N + 3) + M * N + 3 * M,
                M * M * C * (2 * N + 1) + M * N - M)
    if algo == "FDEFLN":
        return ((12 * M * lg + 26 * M) * C + 2 * M * lg + M + 1,
                (12 * M * lg + 18 * M) * C + 2 * M * lg)
    if algo == "FDEFsLMS":
        return ((20 * M * lg + 42 * M) * C + 2 * M * lg + M * N + M + 1,
                (20 * M * lg + 25 * M) * C + 2 * M * lg + 2 * M * P + M * N)
    raise ValueError(f"unknown algorithm {algo!r}")


def count_mismatches(algo: str, M: int, P: int, N: int | None, counter) -> dict:
    """Per-phase ``(counted - table)`` differences for an instrumented run of one block."""
    ref = op_counts(algo, M, P, N)
    got = counter.as_dict()
    out = {}
    for p in PHASES:
        dm = got[p][0] - ref.mults[p]
        da = got[p][1] - ref.adds[p]
        if dm or da:
            out[p] = (dm, da)
    return out
