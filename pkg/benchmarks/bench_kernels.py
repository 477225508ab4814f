"""Benchmark the compiled kernel backend against the numpy fallback.

Runs the batch tensor kernels and the assembly scatter at sizes matching a
refined 2D coupled run (per-level cofactor updates and load scatters happen
inside every fixed-point iteration). Usage: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from fsicavity.kernels import _numpy_backend

try:
    from fsicavity.kernels import _compiled
except ImportError:
    _compiled = None


def timeit(fn, *args, repeat=7):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench(name, numpy_fn, compiled_fn, args):
    t_np = timeit(numpy_fn, *args)
    if compiled_fn is None:
        print(f"{name:28s} numpy {t_np * 1e3:8.3f} ms   (compiled backend unavailable)")
        return
    t_c = timeit(compiled_fn, *args)
    a = numpy_fn(*args)
    b = compiled_fn(*args)
    same = np.array_equal(np.asarray(a), np.asarray(b))
    print(
        f"{name:28s} numpy {t_np * 1e3:8.3f} ms   compiled {t_c * 1e3:8.3f} ms"
        f"   speedup {t_np / t_c:5.2f}x   bitwise_equal={same}"
    )


def main():
    rng = np.random.default_rng(0)
    print("batch size 200000 (nodes x time levels of a refined 2D run)\n")
    for d in (2, 3):
        F = rng.normal(size=(200000, d, d)) + 3.0 * np.eye(d)
        bench(
            f"batch_cofactor d={d}",
            _numpy_backend.batch_cofactor,
            _compiled.batch_cofactor if _compiled else None,
            (F,),
        )
        bench(
            f"batch_det d={d}",
            _numpy_backend.batch_det,
            _compiled.batch_det if _compiled else None,
            (F,),
        )

    ncells, nl = 40000, 12
    rows = rng.integers(0, 60000, size=(ncells, nl))
    vals = rng.normal(size=(ncells, nl))

    def scat_np(rows, vals):
        out = np.zeros(60000)
        return _numpy_backend.scatter_add(out, rows, vals)

    def scat_c(rows, vals):
        out = np.zeros(60000)
        return _compiled.scatter_add(out, rows, vals)

    bench("scatter_add 40000x12", scat_np, scat_c if _compiled else None, (rows, vals))


if __name__ == "__main__":
    main()
