"""Compare the compiled kernels against the numpy fallback.

Each backend runs in its own interpreter (``GPLAB_BACKEND=python`` selects
the fallback), so module-level selection is exercised exactly as in normal
use.  Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, timeit
import numpy as np
import gplab
from gplab import _backend, combinatorics as comb, estimates as est

k = _backend.kernels
repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
rho, mu = rng.uniform(0, 10, 20000), rng.uniform(-1, 1, 20000)
nodes, weights = rng.normal(size=(20000, 3)), rng.uniform(size=20000)
sing, exps = rng.normal(size=(2, 3)), np.array([1.5, 1.0])
maps = np.array([m.values for m in comb.enumerate_maps(7)], dtype=np.int64)
plane = est.SurfaceSpec.plane((0.0, 0.0, 1.0), 0.3)

cases = {
    "prop_case1_vec (20k pts)": lambda: k.prop_case1_vec(rho, mu, -2.0, 1.0),
    "prop_case2_vec (20k pts)": lambda: k.prop_case2_vec(rho, mu, -2.0, 1.0),
    "chart_sum (20k nodes)": lambda: k.chart_sum(nodes, weights, sing, exps, 0, 2),
    "reduce_maps (n=7, 5040 maps)": lambda: k.reduce_maps(maps),
    "proposition_integral (tau=-5)": lambda: est.proposition_integral(-5.0, (0.0, 0.0, 1.0)),
    "surface_integral (plane)": lambda: est.surface_integral(plane, (1.0, 0.0, 0.0), 1.5, 1.0),
}
out = {name: min(timeit.repeat(fn, number=1, repeat=repeat)) for name, fn in cases.items()}
print(json.dumps({"backend": gplab.BACKEND, "times": out}))
"""


def measure(backend: str, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("GPLAB_BACKEND", None)
    if backend == "python":
        env["GPLAB_BACKEND"] = "python"
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", type=str, default=None, help="write raw timings here")
    args = parser.parse_args(argv)

    fast = measure("compiled", args.repeat)
    slow = measure("python", args.repeat)
    if fast["backend"] != "compiled":
        print("compiled extension unavailable; both runs used the fallback", file=sys.stderr)
    width = max(map(len, fast["times"]))
    print(f"{'case':<{width}}  {'compiled s':>11}  {'python s':>10}  {'speedup':>8}")
    for name, t_fast in fast["times"].items():
        t_slow = slow["times"][name]
        print(f"{name:<{width}}  {t_fast:11.4f}  {t_slow:10.4f}  {t_slow / t_fast:7.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"compiled": fast, "python": slow}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
