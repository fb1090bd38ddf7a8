"""Operation tallies for the block kernels, using the real-arithmetic cost
model of the published complexity table.

Cost model: an ``n``-point FFT or IFFT costs ``n log2 n`` multiplications
and as many additions; a complex bin product costs 4 and 2; scaling a bin
by a real step size costs one multiplication; adding complex bins costs two
additions per bin.
"""

from __future__ import annotations

import contextlib
import math
from collections import defaultdict

PHASES = ("filtering", "error", "weight", "factor")


class OpCounter:
    def __init__(self):
        self.mults = defaultdict(int)
        self.adds = defaultdict(int)
        self._phase = None

    @contextlib.contextmanager
    def phase(self, name: str):
        prev, self._phase = self._phase, name
        try:
            yield self
        finally:
            self._phase = prev

    def _add(self, mults: int, adds: int):
        if self._phase is None:
            raise RuntimeError("operations must be tallied inside a phase")
        self.mults[self._phase] += mults
        self.adds[self._phase] += adds

    def fft(self, n: int, count: int = 1):
        c = n * int(round(math.log2(n)))
        self._add(c * count, c * count)

    ifft = fft

    def cmul(self, n: int, count: int = 1):
        self._add(4 * n * count, 2 * n * count)

    def scale(self, n: int, count: int = 1):
        self._add(n * count, 0)

    def cadd(self, n: int, count: int = 1):
        self._add(0, 2 * n * count)

    def radd(self, n: int):
        self._add(0, n)

    def dot(self, n: int):
        self._add(n, n - 1)

    def as_dict(self):
        return {p: (self.mults.get(p, 0), self.adds.get(p, 0)) for p in PHASES}
