"""Time the compiled kernels against the pure-Python fallback.

Both backends must produce identical output for the same seed; the script
checks that before timing. Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from xrdenoise import kernels
from xrdenoise.imagecore import rotate
from xrdenoise.noisegen import NoiseParams, apply_noise


def cases():
    img = np.random.default_rng(0).random((256, 256))
    lam_small = np.full(65_536, 4.0)
    lam_large = np.full(65_536, 75.0)
    return {
        "poisson 65k draws, lambda=4": lambda: kernels.poisson_array(
            lam_small, np.random.default_rng(1)),
        "poisson 65k draws, lambda=75": lambda: kernels.poisson_array(
            lam_large, np.random.default_rng(1)),
        "apply_noise 256x256": lambda: apply_noise(
            img, NoiseParams(100, 10), np.random.default_rng(1)),
        "rotate 256x256 by 7 deg": lambda: rotate(img, 7.0, 0.0),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = kernels.available_backends()
    if len(backends) < 2:
        print(f"only {backends} available; build the extension to compare")
    results = {}
    for name in backends:
        prev = kernels.use_backend(name)
        try:
            for label, fn in cases().items():
                out = fn()
                best = min(timeit.repeat(fn, number=1, repeat=args.repeat))
                results.setdefault(label, {})[name] = (best, out)
        finally:
            kernels.use_backend(prev)

    header = f"{'kernel':32s}" + "".join(f"{b:>12s}" for b in backends) + "   speedup  same"
    print(header)
    print("-" * len(header))
    for label, by in results.items():
        times = [by[b][0] for b in backends]
        line = f"{label:32s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(backends) == 2:
            outs = [by[b][1] for b in backends]
            same = np.array_equal(outs[0], outs[1])
            line += f"  {times[1] / times[0]:7.1f}x  {'yes' if same else 'NO'}"
        print(line)


if __name__ == "__main__":
    main()
