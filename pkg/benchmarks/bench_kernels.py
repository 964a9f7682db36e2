"""Time the numba and numpy flavours of each hot kernel on representative sizes.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from eitmemory import _kernels as K
from eitmemory.fidelity_engine import difference_distribution
from eitmemory.fock_states import make_coherent
from eitmemory.pulse_profiles import gaussian_pulse


def best_of(fn, args, repeat):
    fn(*args)  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    prof = gaussian_pulse(1000.0, 1.0, 4001)
    det = rng.normal(1.0, 0.1, (256, 1000))
    cpl = np.abs(rng.normal(1.0, 0.05, (256, 1000)))
    yield ("exact_unit_phases 256x1000 atoms, 4001 grid",
           K.nb_exact_unit_phases, K.np_exact_unit_phases,
           (det, cpl, 1000.0, 50.0, 1.0, prof.waveform, prof.quadrature_weights()))

    probs = np.ascontiguousarray(make_coherent(4.0).probabilities)
    phases = rng.normal(-50.0, 0.5, 100_000)
    yield ("overlap_squared 1e5 phases", K.nb_overlap_squared, K.np_overlap_squared,
           (probs, phases))

    _, A = difference_distribution(make_coherent(2.0).probabilities)
    dists = np.tile(A, (3, 1))
    offsets = np.full(3, -(A.size // 2), dtype=np.float64)
    q = np.full((3, 3), 0.005) + 0.005 * np.eye(3)
    yield (f"quadratic_form_sum k=3, width {A.size}", K.nb_quadratic_form_sum,
           K.np_quadratic_form_sum, (dists, offsets, 0.3, q, False))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"numba available: {K.HAVE_NUMBA}; default backend: {K.backend()}")
    print(f"{'kernel':48s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'ratio':>7s}")
    for name, nb, npf, fargs in cases():
        a = best_of(nb, fargs, args.repeat)
        b = best_of(npf, fargs, args.repeat)
        print(f"{name:48s} {a * 1e3:11.2f} {b * 1e3:11.2f} {b / a:7.2f}")


if __name__ == "__main__":
    main()
