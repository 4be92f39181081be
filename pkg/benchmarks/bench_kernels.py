"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot kernels on inputs shaped like a mid-size platform
trial and prints per-call medians plus the speedup. Both backends are
checked for agreement before timing, so this doubles as a smoke test
of backend equivalence on random data.

Usage: python3 benchmarks/bench_kernels.py [--n 40000] [--repeat 30]
"""

import argparse
import time

import numpy as np

from platformrr._kernels import implementations


def _median_time(fn, args, repeat):
    best = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best.append(time.perf_counter() - t0)
    return float(np.median(best))


def make_inputs(n, rng):
    # f_lambda_batch: one stratum covering ~a tenth of the records,
    # with a few hundred event times. Event records must sit exactly on
    # the event-time grid, as they do when the grid comes from the data.
    event_times = np.sort(rng.uniform(0.0, 6.0, 400))
    x = rng.uniform(0.0, 8.0, n)
    delta = (rng.random(n) < 0.3).astype(np.int64)
    in_stratum = (rng.random(n) < 0.1).astype(np.int8)
    ev = (delta == 1) & (in_stratum == 1)
    x[ev] = rng.choice(event_times, int(ev.sum()))
    inv_p2 = rng.uniform(1.0, 50.0, 400)
    cum_f = np.cumsum(rng.uniform(0.0, 1e-3, 400))
    f_args = (x, delta, in_stratum, 6.0, event_times, inv_p2, cum_f)

    # pair_product_sums: influence matrix for ten arms.
    F = rng.standard_normal((n, 10))

    # piecewise_exp_times: five calendar segments.
    seg_start = np.array([0.0, 1.0, 1.5, 2.0, 2.5])
    seg_end = np.array([1.0, 1.5, 2.0, 2.5, 1e9])
    seg_lam = rng.uniform(0.005, 0.05, 5)
    enroll = rng.uniform(0.0, 3.0, n)
    e = rng.exponential(1.0, n)
    p_args = (seg_start, seg_end, seg_lam, enroll, e)

    return f_args, (F,), p_args


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=40000, help="records per kernel call")
    ap.add_argument("--repeat", type=int, default=30, help="timed calls per kernel")
    args = ap.parse_args()

    impls = implementations()
    if "numba" not in impls:
        raise SystemExit("numba backend unavailable; nothing to compare")
    rng = np.random.default_rng(0)
    all_args = make_inputs(args.n, rng)
    names = ("f_lambda_batch", "pair_product_sums", "piecewise_exp_times")

    # warm the JIT and check agreement off the timed path
    for np_fn, nb_fn, a in zip(impls["numpy"], impls["numba"], all_args):
        ref, got = np_fn(*a), nb_fn(*a)
        np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)

    print(f"n={args.n}, repeat={args.repeat}, median seconds per call")
    print(f"{'kernel':<22}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, np_fn, nb_fn, a in zip(names, impls["numpy"], impls["numba"], all_args):
        t_np = _median_time(np_fn, a, args.repeat)
        t_nb = _median_time(nb_fn, a, args.repeat)
        print(f"{name:<22}{t_np:>12.6f}{t_nb:>12.6f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
