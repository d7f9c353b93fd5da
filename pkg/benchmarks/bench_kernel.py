"""Compare the compiled and pure-Python activation kernels.

    python benchmarks/bench_kernel.py [--runs 50] [--side 31] [--level 5]
"""
import argparse
import time

from plsagent.abm import SimConfig, kernels, run
from plsagent.probmap import AttributeScores


def time_backend(backend, config, n_runs):
    t0 = time.perf_counter()
    rates = [run(config, run_index=i, backend=backend).diffusion_rate for i in range(n_runs)]
    return time.perf_counter() - t0, rates


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--side", type=int, default=31)
    ap.add_argument("--level", type=float, default=5.0)
    args = ap.parse_args()
    config = SimConfig(grid_side=args.side, scores=AttributeScores.uniform(args.level))

    backends = ["python"] + (["cython"] if kernels._ckernel is not None else [])
    results = {}
    for b in backends:
        elapsed, rates = time_backend(b, config, args.runs)
        results[b] = rates
        print(f"{b:>7}: {elapsed:8.3f} s total, {1e3 * elapsed / args.runs:8.3f} ms/run")
    if len(results) == 2:
        same = results["python"] == results["cython"]
        print(f"identical results: {same}")
    else:
        print("compiled kernel not available; build with `pip install -e . --no-build-isolation`")


if __name__ == "__main__":
    main()
