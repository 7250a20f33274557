"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed on both backends with identical inputs; the outputs
are checked to agree before timings are reported.
"""

import argparse
import timeit

import numpy as np

from spurcheck import _fallback, kernels
from spurcheck.dynreg.arima import stationary_cov, transform


def cases(rng):
    x = rng.normal(size=201)
    y = np.round(rng.normal(size=201), 1)
    ar, ma = transform(rng.normal(size=3), 2, 1)
    p0 = stationary_cov(ar, ma)
    data = rng.normal(size=(200, 3))
    xs = np.arange(201.0)
    ys = np.sin(xs / 20) + rng.normal(scale=0.1, size=201)
    return {
        "kendall_counts n=201": ("kendall_counts", (x, y)),
        "arma_filter ARMA(2,1) n=200 m=3": ("arma_filter", (ar, ma, p0, data)),
        "loess n=201 span=0.3": ("loess", (xs, ys, 0.3)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats (best is reported)")
    args = parser.parse_args()
    if "compiled" not in kernels.available_backends():
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    from spurcheck import _kernels

    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'compiled':>12s} {'python':>12s} {'speed-up':>9s}")
    for label, (name, argv) in cases(rng).items():
        fc, fp = getattr(_kernels, name), getattr(_fallback, name)
        a, b = fc(*argv), fp(*argv)
        for u, v in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            np.testing.assert_allclose(u, v, rtol=1e-9, atol=1e-9)
        times = []
        for f in (fc, fp):
            n, _ = timeit.Timer(lambda: f(*argv)).autorange()
            best = min(timeit.Timer(lambda: f(*argv)).repeat(args.repeat, n)) / n
            times.append(best)
        print(f"{label:34s} {times[0] * 1e6:10.1f}us {times[1] * 1e6:10.1f}us {times[1] / times[0]:8.1f}x")


if __name__ == "__main__":
    main()
