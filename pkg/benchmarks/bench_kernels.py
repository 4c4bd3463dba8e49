"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py --qubits 4 8 10 12 --repeat 200

Prints microseconds per call for each kernel and backend and checks that
both backends give the same result.
"""

import argparse
import timeit

import numpy as np

from tiqc.gates import ms_phase_table, rot_1q
from tiqc.kernels import get_backend


def _cases(n, rng):
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi /= np.linalg.norm(psi)
    u = rot_1q(0.3, 1.1)
    angles = rng.normal(size=n)
    table = ms_phase_table(np.pi / 2, n)
    mask = (1 << n) - 1
    q = n // 2
    return {
        "apply_1q": (psi, lambda k, v: k.apply_1q(v, u, q, n)),
        "apply_z_phases": (psi, lambda k, v: k.apply_z_phases(v, angles, n)),
        "apply_popcount_phase": (psi, lambda k, v: k.apply_popcount_phase(v, table, mask)),
        "excited_population": (psi, lambda k, v: k.excited_population(v, q, n)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[4, 6, 8, 10, 12])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    try:
        cy = get_backend("cython")
    except ImportError:
        cy = None
        print("compiled backend not available; timing the numpy fallback only")
    py = get_backend("python")
    rng = np.random.default_rng(args.seed)

    print(f"{'kernel':<22}{'n':>4}{'python us':>12}{'cython us':>12}{'speedup':>9}  match")
    for n in args.qubits:
        for name, (psi, call) in _cases(n, rng).items():
            results, times = {}, {}
            for label, mod in (("python", py), ("cython", cy)):
                if mod is None:
                    continue
                v = psi.copy()
                out = call(mod, v)
                results[label] = out if out is not None else v.copy()
                work = psi.copy()
                t = timeit.timeit(lambda: call(mod, work), number=args.repeat)
                times[label] = 1e6 * t / args.repeat
            match = "-"
            if len(results) == 2:
                match = "ok" if np.allclose(results["python"], results["cython"], atol=1e-12) else "MISMATCH"
            tc = times.get("cython")
            speed = f"{times['python'] / tc:8.1f}x" if tc else "      -"
            tcs = f"{tc:12.2f}" if tc else f"{'-':>12}"
            print(f"{name:<22}{n:>4}{times['python']:12.2f}{tcs}{speed}  {match}")


if __name__ == "__main__":
    main()
