"""Compare the compiled and pure-Python sample kernels, then block FD vs TD.

    python3 benchmarks/bench_kernels.py [--samples N] [-M M] [-P P]
"""

import argparse
import time

import numpy as np

from expfln import bench, kernels
from expfln.adaptive_td import efln_lms_run, td_init
from expfln.nanc import efslms_init, efslms_run
from expfln.scenarios import fixture_taps
from expfln.nanc import SecondaryPath


def best_of(fn, repeats=3):
    out = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def kernel_times(backend, n, M, P):
    rng = np.random.default_rng(0)
    u, d = rng.uniform(-1, 1, n), rng.normal(size=n)
    path = SecondaryPath(fixture_taps("engine_S"))

    def lms():
        efln_lms_run(td_init(M, P, 1e-4, 1e-4), u, d, backend=backend)

    def fs():
        efslms_run(efslms_init(M, P, path.N, 1e-5, 1e-5), path, u, d, backend=backend)

    return best_of(lms), best_of(fs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=4000)
    ap.add_argument("-M", type=int, default=64)
    ap.add_argument("-P", type=int, default=2)
    args = ap.parse_args()
    n, M, P = args.samples, args.M, args.P

    print(f"sample kernels, {n} samples, M={M}, P={P} (default backend: {kernels.BACKEND})")
    backends = ["python"] + (["compiled"] if kernels.compiled_available() else [])
    res = {b: kernel_times(b, n, M, P) for b in backends}
    for b, (a, f) in res.items():
        print(f"  {b:9s} EFLN-LMS {1e6 * a / n:9.2f} us/sample   EFsLMS {1e6 * f / n:9.2f} us/sample")
    if "compiled" in res:
        (pa, pf), (ca, cf) = res["python"], res["compiled"]
        print(f"  speedup   EFLN-LMS {pa / ca:8.1f}x            EFsLMS {pf / cf:8.1f}x")

    print(f"\nper-block time, median (IQR) over 200 blocks, P={P}")
    for Mb in (64, 256, 512):
        cfg = bench.RunConfig(M=Mb, P=P)
        row = []
        for algo in ("EFLN", "FDEFLN", "EFsLMS", "FDEFsLMS"):
            t = bench.time_per_block(algo, cfg, blocks=200)
            row.append(f"{algo} {t.median_us:8.0f} ({t.iqr_us:5.0f})")
        print(f"  M={Mb:4d}  " + "   ".join(row))


if __name__ == "__main__":
    main()
