"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the hot loops on identical seeds through both backends, checks the
outputs are bit-identical, and prints the speedups.

    python benchmarks/bench_backends.py [--quick]
"""

import argparse
import time

from v2vlab._core import fallback as py

try:
    from v2vlab._core import _speedups as cext
except ImportError:
    cext = None


def timed(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(name, fn_args_builder, quick):
    args = fn_args_builder(quick)
    t_py, out_py = timed(getattr(py, name), *args)
    if cext is None:
        print(f"{name:28s} python {t_py*1e3:9.2f} ms   (compiled core not built)")
        return
    t_c, out_c = timed(getattr(cext, name), *args)
    match = "ok" if _comparable(out_py) == _comparable(out_c) else "MISMATCH"
    print(f"{name:28s} python {t_py*1e3:9.2f} ms   compiled {t_c*1e3:8.2f} ms   "
          f"speedup {t_py/t_c:6.1f}x   bitwise {match}")


def _comparable(out):
    return out


def build_generate(quick):
    n = 2_000_000.0 if not quick else 200_000.0
    return (0.02, n, 25.0, 5.0, 20.0, 30.0)


def build_extents(quick):
    n = 500_000 if not quick else 50_000
    return (0.01, 200.0, n, py.derive_seed(1, 0))


def build_hops(quick):
    n = 200_000 if not quick else 20_000
    return (0.01, 200.0, n, py.derive_seed(2, 0))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    opts = ap.parse_args()
    quick = opts.quick

    print("backend benchmark (best of 3)\n")

    # generate_road needs a fresh rng per call; wrap to rebuild it
    def gen_py(*a):
        return py.generate_road(*a, py.Rng(99))

    def gen_c(*a):
        return cext.generate_road(*a, cext.Rng(99))

    a = build_generate(quick)
    t_py, r_py = timed(gen_py, *a)
    if cext is not None:
        t_c, r_c = timed(gen_c, *a)
        match = "ok" if r_py == r_c else "MISMATCH"
        print(f"{'generate_road':28s} python {t_py*1e3:9.2f} ms   compiled {t_c*1e3:8.2f} ms   "
              f"speedup {t_py/t_c:6.1f}x   bitwise {match}")
        pos = r_c[0]
    else:
        print(f"{'generate_road':28s} python {t_py*1e3:9.2f} ms")
        pos = r_py[0]

    def walk_args(_quick):
        return (pos, 200.0, 0.002, 0.0005)

    bench("walk_components", walk_args, quick)
    bench("sample_component_extents", build_extents, quick)
    bench("sample_hop_distances", build_hops, quick)

    hybrid_args = (0.01, 10000.0, 25.0, 5.0, 20.0, 30.0, 0.25, 200.0, 10000.0,
                   0, 4.0, 1, 60.0, 0.5,
                   0.002, 0.0005, 0.2, 0.0, 0.05, 0.01, 0.1)
    reps = 60 if quick else 300

    def hybrid_many(mod):
        outs = []
        for i in range(reps):
            outs.append(mod.run_hybrid(*hybrid_args, mod.derive_seed(3, i), False))
        return outs

    t_py, o_py = timed(hybrid_many, py, repeat=1)
    if cext is not None:
        t_c, o_c = timed(hybrid_many, cext, repeat=1)
        match = "ok" if o_py == o_c else "MISMATCH"
        print(f"{'run_hybrid (backtrack)':28s} python {t_py*1e3:9.2f} ms   compiled {t_c*1e3:8.2f} ms   "
              f"speedup {t_py/t_c:6.1f}x   bitwise {match}")
    else:
        print(f"{'run_hybrid (backtrack)':28s} python {t_py*1e3:9.2f} ms")


if __name__ == "__main__":
    main()
