"""Compare the compiled and numpy kernel backends on one frame of work.

    python benchmarks/bench_kernels.py [--bins 257] [--dim 4] [--repeat 200]

Prints the median time per call for each kernel and backend, the speedup,
and the largest difference between the two backends' outputs. A final row
times one full online pass (all six estimators) over a short scene.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from rtfkit import _pykernels

try:
    from rtfkit import _ckernels
except ImportError:
    _ckernels = None


def random_pd(rng, K, D):
    A = rng.standard_normal((K, D, D)) + 1j * rng.standard_normal((K, D, D))
    return A.conj().transpose(0, 2, 1) @ A + np.eye(D)


def cases(rng, K, D):
    Ry, Rn = random_pd(rng, K, D), random_pd(rng, K, D)
    Y = rng.standard_normal((K, D)) + 1j * rng.standard_normal((K, D))
    V = np.ones((K, D), complex) / np.sqrt(D)
    A = Ry - Rn

    def rank1(m):
        R = Ry.copy()
        m.rank1_update(R, Y, 0.9)
        return R

    return {
        "rank1_update": rank1,
        "principal_vectors": lambda m: m.principal_vectors(Ry),
        "cw_vectors": lambda m: m.cw_vectors(Ry, Rn),
        "pm_step": lambda m: m.pm_step(A, V),
        "pm_cw_step": lambda m: m.pm_cw_step(Ry, Rn, V),
        "mvdr": lambda m: m.mvdr(Rn, Y, 1e-6),
    }


def _max_diff(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    out = 0.0
    for x, y in zip(a, b):
        x, y = np.asarray(x), np.asarray(y)
        if x.dtype == bool:
            out = max(out, float(np.sum(x != y)))
        elif x.ndim == 2 and np.iscomplexobj(x):
            # eigenvectors are defined up to a phase; compare projectors
            px = np.einsum("ki,kj->kij", x, x.conj())
            py = np.einsum("ki,kj->kij", y, y.conj())
            out = max(out, float(np.abs(px - py).max()))
        else:
            out = max(out, float(np.abs(x - y).max()))
    return out


def median_time(fn, repeat):
    times = timeit.repeat(fn, number=1, repeat=repeat)
    return float(np.median(times))


def online_pass(backend):
    """Seconds for one online pass in a fresh interpreter using ``backend``."""
    env = dict(os.environ)
    env["RTFKIT_PURE_PYTHON"] = "1" if backend == "python" else "0"
    code = (
        "import time\n"
        "from rtfkit import pipeline, scenegen, estimators\n"
        "from rtfkit.spectral import StftConfig\n"
        "s = StftConfig()\n"
        "sc = pipeline.synthetic_scene(scenegen.SceneSpec(duration=5.0), s)\n"
        "t = time.perf_counter()\n"
        "pipeline.evaluate_point(sc, 0.0, 0.1, 0.5, estimators.ESTIMATORS, s, 1e-6)\n"
        "print(time.perf_counter() - t)\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                         capture_output=True, text=True)
    return float(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--bins", type=int, default=257)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--repeat", type=int, default=200)
    p.add_argument("--no-online", action="store_true", help="skip the full online pass")
    args = p.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels are not built; reinstall the package")
        return 1
    rng = np.random.default_rng(0)
    print(f"bins={args.bins} dim={args.dim} repeat={args.repeat}")
    print(f"{'kernel':<18} {'numpy [us]':>11} {'cython [us]':>12} {'speedup':>8} {'max diff':>9}")
    for name, call in cases(rng, args.bins, args.dim).items():
        tp = median_time(lambda: call(_pykernels), args.repeat)
        tc = median_time(lambda: call(_ckernels), args.repeat)
        diff = _max_diff(call(_pykernels), call(_ckernels))
        print(f"{name:<18} {tp * 1e6:11.1f} {tc * 1e6:12.1f} {tp / tc:8.1f} {diff:9.1e}")
    if not args.no_online:
        tp, tc = online_pass("python"), online_pass("cython")
        print(f"{'online pass 5 s':<18} {tp * 1e3:9.0f}ms {tc * 1e3:10.0f}ms {tp / tc:8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
