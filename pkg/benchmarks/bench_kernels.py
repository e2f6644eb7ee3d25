"""Time the compiled and numpy kernel backends on the same inputs.

    python benchmarks/bench_kernels.py [--size 256] [--repeat 5]
"""

import argparse
import time

import numpy as np

from pplbp import kernels
from pplbp.descriptor import DescriptorConfig, extract_descriptor
from pplbp.diffusion import assemble_system
from pplbp.grid import GrayImage
from pplbp.lbp import DEFAULT_LBP_SET


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    img = GrayImage(rng.integers(0, 256, size=(args.size, args.size)).astype(float))
    sys = assemble_system(img)
    pcg_args = (-sys.off_x, -sys.off_y, sys.diag, sys.rhs, img.data, 1e-10, 1000)

    rows = []
    for name in kernels.available:
        k = kernels.get(name)
        row = {"backend": name}
        row["pcg"] = best_of(lambda: k.pcg(*pcg_args), args.repeat)
        row["lbp"] = best_of(lambda: [k.lbp_codes(img.data, c.P, c.R) for c in DEFAULT_LBP_SET], args.repeat)
        prev = kernels.BACKEND
        kernels.BACKEND = name
        try:
            small = GrayImage(img.data[:64, :64])
            row["descriptor64"] = best_of(lambda: extract_descriptor(small, DescriptorConfig()), max(1, args.repeat // 2))
        finally:
            kernels.BACKEND = prev
        rows.append(row)

    print(f"image {args.size}x{args.size}, best of {args.repeat}")
    print(f"{'backend':<10}{'pcg step':>12}{'lbp x4':>12}{'desc 64x64':>14}")
    for r in rows:
        print(f"{r['backend']:<10}{r['pcg']:>11.4f}s{r['lbp']:>11.4f}s{r['descriptor64']:>13.4f}s")
    if len(rows) == 2:
        py, cy = rows
        print(
            f"speedup   {py['pcg'] / cy['pcg']:>11.1f}x{py['lbp'] / cy['lbp']:>11.1f}x"
            f"{py['descriptor64'] / cy['descriptor64']:>13.1f}x"
        )


if __name__ == "__main__":
    main()
