"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--points N] [--repeat R]

Also times one end-to-end certification (stage two of the S^5 fixture)
under each backend and checks that both give identical results.
"""
import argparse
import time
import timeit

import numpy as np

from riccicert import kernels
from riccicert.isotopy import certify_path, stage_one_path, stage_two_path
from riccicert.models import s5_fixture


def inputs(npts, rng):
    breaks = np.linspace(0.0, 1.0, 33)
    coeffs = rng.normal(size=(32, 8))
    r = rng.uniform(0.0, 1.0, npts)
    trip = lambda: tuple(rng.uniform(0.5, 1.5, npts) for _ in range(3))
    return breaks, coeffs, r, trip(), trip(), rng.normal(size=npts)


def bench(backend, data, repeat):
    kernels.use_backend(backend)
    breaks, coeffs, r, h, f, v = data
    out = {}
    for name, fn in (("pp_eval", lambda: kernels.pp_eval(breaks, coeffs, r)),
                     ("ricci_dw", lambda: kernels.ricci_dw(h, f, 2, 2)),
                     ("min_reduce", lambda: kernels.min_reduce(v))):
        out[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
    return out


def end_to_end(backend):
    kernels.use_backend(backend)
    g = s5_fixture()
    p2 = stage_two_path(stage_one_path(g).metric_at(1.0))
    t = time.perf_counter()
    cert = certify_path(p2, threads=1)
    return time.perf_counter() - t, cert.to_json()


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--points", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    backends = kernels.available_backends()
    data = inputs(a.points, np.random.default_rng(0))
    res = {b: bench(b, data, a.repeat) for b in backends}
    print(f"{'kernel':<12}" + "".join(f"{b:>12}" for b in backends) + ("   speedup" if len(backends) > 1 else ""))
    for name in res[backends[0]]:
        row = f"{name:<12}" + "".join(f"{res[b][name] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) > 1:
            row += f"   {res['python'][name] / res['compiled'][name]:6.2f}x"
        print(row)
    e2e = {b: end_to_end(b) for b in backends}
    for b in backends:
        print(f"stage-two certification [{b}]: {e2e[b][0]:.2f}s")
    if len(backends) > 1:
        same = e2e["compiled"][1] == e2e["python"][1]
        print("certificates identical across backends:", same)


if __name__ == "__main__":
    main()
