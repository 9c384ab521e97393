"""Compare the compiled projected-gradient kernel with the NumPy fallback.

Times the inner loop alone and a full DFP detection on the reference
scenario. Run with ``python3 benchmarks/bench_kernel.py [--repeats N]``.
"""

import argparse
import time

import numpy as np

from uplink_isac import kernels
from uplink_isac.detectors import HomotopyConfig, dfp_detect
from uplink_isac.projection import build_projectors
from uplink_isac.signal_model import SystemConfig, constellation, synthesize_frame


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def inner_loop_case(rng, K=8, L=16, mr=8):
    h = rng.standard_normal((mr, K)) + 1j * rng.standard_normal((mr, K))
    p = build_projectors(rng.standard_normal((4, L)) + 1j * rng.standard_normal((4, L))).p_perp
    q = np.ascontiguousarray((p.T @ p.conj()))
    a = h.conj().T @ h
    b = h.conj().T @ (rng.standard_normal((mr, L)) + 0j) @ q
    beta = 1 / (2 * np.linalg.norm(h, 2) ** 2)
    return a, q, b, beta


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args(argv)

    backends = ["python"] + (["compiled"] if kernels._pg_kernel is not None else [])
    rng = np.random.default_rng(0)
    a, q, b, beta = inner_loop_case(rng)
    s = 1 / np.sqrt(2)
    cons = constellation("qam4")
    frame = synthesize_frame(SystemConfig(), cons, 0.0, 1.0, np.random.default_rng(1))
    pair = build_projectors(frame.x_r)
    cfg = HomotopyConfig()

    print(f"{'case':<28}{'backend':<10}{'seconds':>12}")
    results = {}
    for backend in backends:
        def inner():
            x = np.zeros((8, 16), complex)
            kernels.pg_inner(a, q, b, x, x.copy(), 1.0, beta, 1000, -s, s, tol=0.0,
                             backend=backend)

        def detect():
            dfp_detect(pair, frame.h_c, frame.y, cons, cfg, backend=backend)

        for name, fn in (("inner loop, 1000 steps", inner), ("DFP detection, 50x50", detect)):
            t = best_of(fn, args.repeats)
            results[(name, backend)] = t
            print(f"{name:<28}{backend:<10}{t:>12.6f}")
    if len(backends) == 2:
        for name in ("inner loop, 1000 steps", "DFP detection, 50x50"):
            print(f"speedup {name}: {results[(name, 'python')] / results[(name, 'compiled')]:.1f}x")


if __name__ == "__main__":
    main()
