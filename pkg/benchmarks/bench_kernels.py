"""Compare the compiled and NumPy kernel backends.

    python benchmarks/bench_kernels.py [--resamples 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from construct_forge import _kernels
from construct_forge.inference import bootstrap
from construct_forge.model_spec import builtin_model
from construct_forge.panel_data import dedupe, item_matrix
from construct_forge.panel_gen import builtin_planted, generate_synthetic
from construct_forge.pls_engine import FitOptions, Structure, estimate_from_corr


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resamples", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    spec = builtin_model("study1")
    panel, _ = dedupe(generate_synthetic(builtin_planted("study1", spec), spec, 400, 7))
    X, _ = item_matrix(panel)
    counts = np.bincount(np.random.default_rng(0).integers(0, len(X), len(X)), minlength=len(X))
    structure = Structure.from_spec(spec)
    options = FitOptions()

    backends = _kernels.available_backends()
    print(f"panel {X.shape[0]}x{X.shape[1]}, default backend: {_kernels.BACKEND}")
    results = {}
    for name, kern in sorted(backends.items()):
        R, _ = kern.weighted_corr(X, counts)
        t_corr = best_of(lambda: [kern.weighted_corr(X, counts) for _ in range(200)], args.repeat) / 200
        t_fit = best_of(lambda: [estimate_from_corr(R, spec, options, structure, name) for _ in range(200)],
                        args.repeat) / 200
        t_boot = best_of(lambda: bootstrap(panel, resamples=args.resamples, seed=1, workers=args.workers,
                                           backend=name), args.repeat)
        results[name] = (t_corr, t_fit, t_boot)
        print(f"{name:>8}: weighted_corr {t_corr * 1e6:8.1f} us  fit {t_fit * 1e6:8.1f} us  "
              f"bootstrap B={args.resamples} {t_boot:6.2f} s")
    if len(results) == 2:
        speed = [p / c for p, c in zip(results["python"], results["cython"])]
        print(f" speedup: weighted_corr x{speed[0]:.1f}  fit x{speed[1]:.1f}  bootstrap x{speed[2]:.1f}")


if __name__ == "__main__":
    main()
