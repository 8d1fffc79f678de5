"""Compare the compiled kernel backend against the pure-numpy fallback.

Two measurements:

1. Per-kernel micro-benchmarks on representative grids, with a bitwise
   equality check between the two implementations on every input (the
   fallback is contractually an exact floating-point twin).
2. An end-to-end trajectory timed once per backend, each in a fresh
   subprocess so the import-time backend selection (CROSSFV_PURE_PYTHON)
   takes effect.

Usage:
    python3 benchmarks/bench_backends.py            # kernels + end to end
    python3 benchmarks/bench_backends.py --kernels-only
"""

import argparse
import os
import subprocess
import sys
import tempfile
import time

import numpy as np

from crossfv import _core_numpy

try:
    from crossfv import _core
except ImportError:
    _core = None

END_TO_END_CONFIG = """\
[grid]
dimension = 2
half_length = 1.0
cells_per_axis = 96

[time]
t_final = 0.02

[model]
nu = 0.01
nbar1 = 1.0
slope1 = 0.3
nbar2 = 1.0
slope2 = 0.3
anisotropy = smooth-varying
anisotropy_base = 1.0
anisotropy_amplitude = 0.2

[initial]
preset = gauss-bump
center1 = 0.0, 0.0
width1 = 0.5
amplitude1 = 0.5
center2 = 0.3, -0.2
width2 = 0.4
amplitude2 = 0.3
"""


def _time(fn, repeats):
    # One warm-up call, then the best of `repeats` timings.
    fn()
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _kernel_cases(n1d, n2d, rng):
    u1 = rng.random(n1d) + 0.5
    f1 = rng.standard_normal(n1d + 1)
    v1 = rng.standard_normal(n1d + 1)
    a1 = rng.random(n1d + 1) + 0.5
    u2 = rng.random((n2d, n2d)) + 0.5
    fx = rng.standard_normal((n2d, n2d + 1))
    fy = rng.standard_normal((n2d + 1, n2d))
    ax = rng.random((n2d, n2d + 1)) + 0.5
    ay = rng.random((n2d + 1, n2d)) + 0.5
    axy = rng.standard_normal((n2d, n2d)) * 0.2
    dx = 2.0 / n1d

    def out1():
        return np.empty(n1d + 1)

    def cell1():
        return np.empty(n1d)

    def outs2():
        return np.empty((n2d, n2d + 1)), np.empty((n2d + 1, n2d))

    return [
        ("grad_1d", f"n={n1d}",
         lambda k: k.grad_1d(u1, dx, True, out1())),
        ("div_1d", f"n={n1d}",
         lambda k: k.div_1d(f1, dx, cell1())),
        ("upwind_1d", f"n={n1d}",
         lambda k: k.upwind_1d(u1, v1, True, out1())),
        ("apply_tensor_1d", f"n={n1d}",
         lambda k: k.apply_tensor_1d(a1, f1, out1())),
        ("grad_2d", f"n={n2d}^2",
         lambda k: k.grad_2d(u2, dx, True, *outs2())),
        ("div_2d", f"n={n2d}^2",
         lambda k: k.div_2d(fx, fy, dx, np.empty((n2d, n2d)))),
        ("upwind_2d", f"n={n2d}^2",
         lambda k: k.upwind_2d(u2, fx, fy, True, *outs2())),
        ("apply_tensor_2d", f"n={n2d}^2",
         lambda k: k.apply_tensor_2d(ax, ay, axy, fx, fy, True, *outs2())),
    ]


def _call_and_collect(case, module):
    """Run one kernel case and return its output arrays for comparison."""
    _, _, runner = case
    result = runner(module)
    if isinstance(result, tuple):
        return result
    return (result,)


def run_kernel_bench(n1d, n2d, repeats):
    rng = np.random.default_rng(20240817)
    cases = _kernel_cases(n1d, n2d, rng)

    print(f"kernel micro-benchmarks (1D n={n1d}, 2D n={n2d}^2, "
          f"best of {repeats})")
    header = f"{'kernel':<18} {'size':<9} {'numpy':>10} "
    if _core is not None:
        header += f"{'compiled':>10} {'speedup':>8}"
    print(header)

    for case in cases:
        name, size, runner = case
        t_np = _time(lambda: runner(_core_numpy), repeats)
        line = f"{name:<18} {size:<9} {t_np * 1e6:>8.1f}us "
        if _core is not None:
            got_np = _call_and_collect(case, _core_numpy)
            got_c = _call_and_collect(case, _core)
            for a, b in zip(got_np, got_c):
                if not np.array_equal(a, b):
                    raise AssertionError(
                        f"{name}: backends disagree bitwise")
            t_c = _time(lambda: runner(_core), repeats)
            line += f"{t_c * 1e6:>8.1f}us {t_np / t_c:>7.2f}x"
        print(line)

    if _core is None:
        print("compiled backend unavailable; timed the fallback only")
    else:
        print("bitwise equality between backends: OK")


def run_end_to_end():
    if _core is None:
        print("end-to-end comparison skipped (no compiled backend)")
        return
    print("\nend-to-end trajectory (96^2 cells, nu = 0.01, one run each)")
    with tempfile.TemporaryDirectory() as tmp:
        cfg_path = os.path.join(tmp, "bench.ini")
        with open(cfg_path, "w", encoding="utf-8") as fh:
            fh.write(END_TO_END_CONFIG)
        for label, pure in (("compiled", ""), ("numpy", "1")):
            env = dict(os.environ)
            if pure:
                env["CROSSFV_PURE_PYTHON"] = pure
            else:
                env.pop("CROSSFV_PURE_PYTHON", None)
            code = ("import sys, time, crossfv\n"
                    "assert crossfv.BACKEND == sys.argv[2], crossfv.BACKEND\n"
                    "start = time.perf_counter()\n"
                    "rc = crossfv.main(['run', sys.argv[1],\n"
                    "                   '--out', sys.argv[3]])\n"
                    "elapsed = time.perf_counter() - start\n"
                    "assert rc == 0\n"
                    "print(f'{elapsed:.3f}')\n")
            out_dir = os.path.join(tmp, label)
            proc = subprocess.run(
                [sys.executable, "-c", code, cfg_path, label, out_dir],
                capture_output=True, text=True, env=env)
            if proc.returncode != 0:
                sys.stderr.write(proc.stderr)
                raise SystemExit(f"{label} run failed")
            elapsed = proc.stdout.strip().splitlines()[-1]
            print(f"  {label:<9} {elapsed}s")
        with open(os.path.join(tmp, "compiled", "diagnostics.csv"),
                  "rb") as fh:
            compiled_bytes = fh.read()
        with open(os.path.join(tmp, "numpy", "diagnostics.csv"),
                  "rb") as fh:
            numpy_bytes = fh.read()
        if compiled_bytes != numpy_bytes:
            raise AssertionError("backends produced different diagnostics")
        print("  diagnostics.csv byte-identical across backends: OK")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cells-1d", type=int, default=4096)
    parser.add_argument("--cells-2d", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--kernels-only", action="store_true")
    args = parser.parse_args(argv)

    run_kernel_bench(args.cells_1d, args.cells_2d, args.repeats)
    if not args.kernels_only:
        run_end_to_end()
    return 0


if __name__ == "__main__":
    sys.exit(main())
