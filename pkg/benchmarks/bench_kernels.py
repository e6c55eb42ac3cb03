"""Compare the compiled and pure-numpy paths of the hot transform kernels.

The package picks a backend at import time from the WMX_DISABLE_NUMBA
environment variable; this script times both implementations side by side in
one process and checks they agree to float tolerance. Times are best-of-N
wall clock over many repeats, reported per call.

Run:  python3 benchmarks/bench_kernels.py --size 512 --repeats 50
"""

import argparse
import sys
import time

import numpy as np

from wmx.accel import HAS_NUMBA, backend_name
from wmx.kernels import (dct_matrix, dct2_blocks_jit, dct2_blocks_numpy,
                         haar2_jit, haar2_numpy, idct2_blocks_jit,
                         idct2_blocks_numpy, ihaar2_jit, ihaar2_numpy,
                         to_blocks)


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=512, help="square image side (default 512)")
    ap.add_argument("--block", type=int, default=8, help="DCT block size (default 8)")
    ap.add_argument("--repeats", type=int, default=50, help="timing repeats (default 50)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    plane = rng.uniform(0.0, 255.0, (args.size, args.size))
    blocks = to_blocks(plane, args.block)
    t = dct_matrix(args.block)

    print(f"numba available: {HAS_NUMBA}; active dispatch backend: {backend_name()}")
    print(f"plane {args.size}x{args.size}, block {args.block}, "
          f"{blocks.shape[0]} blocks, best of {args.repeats}\n")

    cases = [
        ("dct2_blocks", lambda: dct2_blocks_numpy(blocks, t), lambda: dct2_blocks_jit(blocks, t)),
        ("idct2_blocks", lambda: idct2_blocks_numpy(blocks, t), lambda: idct2_blocks_jit(blocks, t)),
        ("haar2", lambda: haar2_numpy(plane), lambda: haar2_jit(plane)),
    ]
    ll, lh, hl, hh = haar2_numpy(plane)
    cases.append(("ihaar2", lambda: ihaar2_numpy(ll, lh, hl, hh),
                  lambda: ihaar2_jit(ll, lh, hl, hh)))

    failures = 0
    header = f"{'kernel':<14}{'numpy':>12}{'jit':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, numpy_fn, jit_fn in cases:
        ref, got = numpy_fn(), jit_fn()
        ref = np.stack(ref) if isinstance(ref, tuple) else ref
        got = np.stack(got) if isinstance(got, tuple) else got
        if not np.allclose(ref, got, atol=1e-9):
            print(f"{name:<14} MISMATCH between backends")
            failures += 1
            continue
        jit_fn()  # warm the compile cache before timing
        t_np = best_of(numpy_fn, args.repeats)
        t_jit = best_of(jit_fn, args.repeats)
        print(f"{name:<14}{t_np * 1e3:>10.3f}ms{t_jit * 1e3:>10.3f}ms{t_np / t_jit:>9.2f}x")

    if not HAS_NUMBA:
        print("\nnumba is not installed: the jit column above is the pure-python "
              "fallback of the same loops, expect it to lose")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
