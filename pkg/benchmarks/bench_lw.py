"""Benchmark the likelihood-weighting kernels: numba @njit vs pure numpy.

Runs the full kettle scenario-1 network (29 nodes, mixed 2..250-state spaces)
and a small beta-binomial chain.  Both paths consume identical pre-drawn
uniforms and must produce identical samples; the benchmark verifies that
before timing.

Usage:
    python benchmarks/bench_lw.py [--samples 200000] [--repeats 3]

``RISKBN_PURE_NUMPY=1`` only changes the default kernel selection inside the
package; this benchmark always times both implementations explicitly.
"""

import argparse
import time

import numpy as np

from riskbn import infer, model
from riskbn._kernels import HAS_NUMBA, lw_numba, lw_numpy


def build_cases():
    cases = {}
    cfg = model.load_scenario(_kettle_doc())
    spec = model.build_product_risk_bn(cfg)
    compiled = infer.compile_model(spec, model.scenario_binning(cfg))
    cases["kettle_s1 (29 nodes)"] = (compiled, model.scenario_evidence(cfg))

    frag = model.build_testing_fragment(2000)
    compiled_frag = infer.compile_model(frag, model.testing_fragment_binning(2000))
    cases["testing fragment (5 nodes)"] = (compiled_frag, {"hazards_observed": infer.Point(1)})
    return cases


def _kettle_doc():
    from importlib import resources
    import json

    with resources.files("riskbn.scenarios").joinpath("kettle_s1.json").open() as fh:
        return json.load(fh)


def time_kernel(kernel, pack, u, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernel(pack, u)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not HAS_NUMBA:
        print("numba unavailable (or disabled): timing the numpy path only")

    rng = np.random.default_rng(0)
    for name, (compiled, evidence) in build_cases().items():
        pack = infer._pack(compiled, evidence)
        u = rng.random((args.samples, pack.n_nodes))

        if HAS_NUMBA:
            s_nb, w_nb = lw_numba(pack, u)  # includes JIT warm-up on first call
        s_np, w_np = lw_numpy(pack, u)
        if HAS_NUMBA:
            assert np.array_equal(s_nb, s_np) and np.array_equal(w_nb, w_np), "kernel outputs diverge"

        t_np = time_kernel(lw_numpy, pack, u, args.repeats)
        line = f"{name:28s} samples={args.samples:>8d}  numpy {t_np*1e3:8.1f} ms"
        if HAS_NUMBA:
            t_nb = time_kernel(lw_numba, pack, u, args.repeats)
            line += f"  numba {t_nb*1e3:8.1f} ms  speedup x{t_np / t_nb:.1f}"
        print(line)


if __name__ == "__main__":
    main()
