import subprocess
import sys

import numpy as np
import pytest

from riskbn import _kernels, infer
from riskbn.discretize import BinningConfig
from riskbn.graph import (
    BetaCpd,
    BinomialCpd,
    Continuous,
    Count,
    DeterministicCpd,
    ModelSpec,
    NodeSpec,
    add_edge,
    add_node,
    const,
    ref,
)


@pytest.fixture(scope="module")
def packed():
    m = ModelSpec()
    m = add_node(m, NodeSpec("p", Continuous(0.0, 1.0), BetaCpd(1.0, 1.0)))
    m = add_node(m, NodeSpec("n", Count(500), DeterministicCpd(const(500))))
    m = add_node(m, NodeSpec("s", Count(500), BinomialCpd(ref("n"), ref("p"))))
    m = add_edge(m, "p", "s")
    m = add_edge(m, "n", "s")
    compiled = infer.compile_model(m, BinningConfig(overrides={"n": {"focus": (500, 500)}}))
    return infer._pack(compiled, {"s": infer.Point(3)})


def test_numpy_and_numba_paths_agree_bitwise(packed):
    rng = np.random.default_rng(123)
    u = rng.random((5000, packed.n_nodes))
    states_np, logw_np = _kernels.lw_numpy(packed, u)
    states_nb, logw_nb = _kernels.lw_numba(packed, u)
    assert np.array_equal(states_np, states_nb)
    assert np.array_equal(logw_np, logw_nb)


def test_soft_evidence_paths_agree(packed):
    m = ModelSpec()
    m = add_node(m, NodeSpec("p", Continuous(0.0, 1.0), BetaCpd(2.0, 5.0)))
    compiled = infer.compile_model(m)
    pack = infer._pack(compiled, {"p": infer.Interval(0.01, 0.2)})
    rng = np.random.default_rng(9)
    u = rng.random((4000, 1))
    s_np, w_np = _kernels.lw_numpy(pack, u)
    s_nb, w_nb = _kernels.lw_numba(pack, u)
    assert np.array_equal(s_np, s_nb)
    assert np.array_equal(w_np, w_nb)


def test_env_flag_selects_numpy_path():
    code = (
        "import os; os.environ['RISKBN_PURE_NUMPY'] = '1'; "
        "import riskbn._kernels as k; "
        "assert k.lw_run is k.lw_numpy; assert not k.HAS_NUMBA or True; print('numpy path')"
    )
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "numpy path" in out.stdout


def test_default_path_uses_numba_when_available():
    if _kernels.PURE_NUMPY:
        pytest.skip("RISKBN_PURE_NUMPY set in this environment")
    assert _kernels.HAS_NUMBA
    assert _kernels.lw_run is _kernels.lw_numba
