"""Time the numba kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--nodes 6] [--repeat 5]

The first numba call (compilation) is timed separately and excluded from the
steady-state figures.
"""

import argparse
import time

import numpy as np

from qnet_privacy import _kernels as K
from qnet_privacy.noise import amplitude_damping


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, default=6)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not importable")

    rng = np.random.default_rng(args.seed)
    rows = []

    # qutrit factors: the erasure-embedded register size
    n, nodes = 3, args.nodes
    dim = n**nodes
    mat = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    kraus = np.zeros((2, 3, 3), dtype=complex)
    kraus[:, :2, :2] = np.asarray(amplitude_damping(0.3).kraus)
    left, right = n ** (nodes // 2), n ** (nodes - nodes // 2 - 1)
    args_k = (mat, kraus, left, n, right)
    t0 = time.perf_counter()
    ref = K.apply_local_kraus_numba(*args_k)
    compile_k = time.perf_counter() - t0
    err = float(np.max(np.abs(ref - K.apply_local_kraus_numpy(*args_k))))
    rows.append((f"apply_local_kraus dim={dim}", best_of(lambda: K.apply_local_kraus_numpy(*args_k), args.repeat),
                 best_of(lambda: K.apply_local_kraus_numba(*args_k), args.repeat), compile_k, err))

    m = 2**8
    evals = np.sort(rng.uniform(0, 1, m))
    evals[:10] = 0.0
    d = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    d = d + d.conj().T
    cut = 1e-10 * evals[-1]
    t0 = time.perf_counter()
    ref = K.sld_eigenbasis_numba(evals, d, cut)
    compile_s = time.perf_counter() - t0
    err = float(np.max(np.abs(ref - K.sld_eigenbasis_numpy(evals, d, cut))))
    rows.append((f"sld_eigenbasis dim={m}", best_of(lambda: K.sld_eigenbasis_numpy(evals, d, cut), args.repeat),
                 best_of(lambda: K.sld_eigenbasis_numba(evals, d, cut), args.repeat), compile_s, err))

    print(f"{'kernel':<30}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'compile [s]':>13}{'max diff':>11}")
    for name, tn, tb, tc, e in rows:
        print(f"{name:<30}{tn:>12.4f}{tb:>12.4f}{tn / tb:>10.2f}{tc:>13.2f}{e:>11.1e}")


if __name__ == "__main__":
    main()
