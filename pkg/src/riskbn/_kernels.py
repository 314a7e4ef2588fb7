"""Hot sampling kernels: numba-jitted loop with a pure-numpy fallback.

Set ``RISKBN_PURE_NUMPY=1`` to force the numpy path (e.g. on platforms where
numba is unavailable or for benchmarking).  Both paths consume the same
pre-drawn uniforms and produce bit-identical samples and log-weights: the
cumulative sums and dot products are evaluated in the same sequential order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

PURE_NUMPY = os.environ.get("RISKBN_PURE_NUMPY", "").strip().lower() in {"1", "true", "yes"}

try:  # pragma: no cover - exercised implicitly
    if PURE_NUMPY:
        raise ImportError("numba disabled by RISKBN_PURE_NUMPY")
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return deco


_CHUNK = 8192

EV_NONE = 0
EV_HARD = 1
EV_SOFT = 2


@dataclass
class ModelPack:
    """Flattened network for the sampling kernels (nodes in topological order)."""

    child_card: np.ndarray  # (n,) int64
    cpt_flat: np.ndarray  # concatenated row-major (combo, child) tables
    cpt_off: np.ndarray  # (n+1,) offsets into cpt_flat
    par_list: np.ndarray  # concatenated parent positions
    par_off: np.ndarray  # (n+1,)
    par_stride: np.ndarray  # aligned with par_list
    ev_kind: np.ndarray  # (n,) int64
    ev_state: np.ndarray  # (n,) int64
    ev_ind: np.ndarray  # concatenated soft-evidence indicators
    ev_ind_off: np.ndarray  # (n+1,)

    @property
    def n_nodes(self) -> int:
        return len(self.child_card)


def lw_numpy(pack: ModelPack, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Likelihood weighting, vectorized across samples in chunks."""
    n_samples, n_nodes = u.shape
    states = np.zeros((n_samples, n_nodes), dtype=np.int64)
    logw = np.zeros(n_samples, dtype=np.float64)

    tables = []
    for i in range(n_nodes):
        card = int(pack.child_card[i])
        flat = pack.cpt_flat[pack.cpt_off[i] : pack.cpt_off[i + 1]]
        tables.append(flat.reshape(-1, card))

    for start in range(0, n_samples, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n_samples))
        s_states = states[sl]
        s_logw = logw[sl]
        s_u = u[sl]
        for i in range(n_nodes):
            card = int(pack.child_card[i])
            lo, hi = pack.par_off[i], pack.par_off[i + 1]
            if hi > lo:
                combo = (s_states[:, pack.par_list[lo:hi]] * pack.par_stride[lo:hi]).sum(axis=1)
            else:
                combo = np.zeros(len(s_logw), dtype=np.int64)
            rows = tables[i][combo]
            kind = int(pack.ev_kind[i])
            if kind == EV_HARD:
                k = int(pack.ev_state[i])
                w = rows[:, k]
                with np.errstate(divide="ignore"):
                    s_logw += np.where(w > 0, np.log(w), -np.inf)
                s_states[:, i] = k
            elif kind == EV_SOFT:
                ind = pack.ev_ind[pack.ev_ind_off[i] : pack.ev_ind_off[i] + card]
                cum = np.cumsum(rows * ind, axis=1)
                m = cum[:, -1]
                with np.errstate(divide="ignore"):
                    s_logw += np.where(m > 0, np.log(m), -np.inf)
                uu = s_u[:, i] * m
                # smallest k with uu < cum[k] == count of cum[k] <= uu
                s_states[:, i] = np.minimum((cum <= uu[:, None]).sum(axis=1), card - 1)
            else:
                cum = np.cumsum(rows, axis=1)
                uu = s_u[:, i]
                s_states[:, i] = np.minimum((cum <= uu[:, None]).sum(axis=1), card - 1)
    return states, logw


@njit(cache=True)
def _lw_loop(
    u,
    child_card,
    cpt_flat,
    cpt_off,
    par_list,
    par_off,
    par_stride,
    ev_kind,
    ev_state,
    ev_ind,
    ev_ind_off,
    states,
    logw,
):  # pragma: no cover - compiled
    n_samples, n_nodes = u.shape
    for s in range(n_samples):
        w = 0.0
        for i in range(n_nodes):
            card = child_card[i]
            combo = 0
            for j in range(par_off[i], par_off[i + 1]):
                combo += states[s, par_list[j]] * par_stride[j]
            base = cpt_off[i] + combo * card
            kind = ev_kind[i]
            if kind == 1:
                k = ev_state[i]
                states[s, i] = k
                pk = cpt_flat[base + k]
                if pk > 0.0:
                    w += np.log(pk)
                else:
                    w = -np.inf
            elif kind == 2:
                m = 0.0
                for k in range(card):
                    m += cpt_flat[base + k] * ev_ind[ev_ind_off[i] + k]
                if m > 0.0:
                    w += np.log(m)
                else:
                    w = -np.inf
                uu = u[s, i] * m
                acc = 0.0
                pick = card - 1
                for k in range(card):
                    acc += cpt_flat[base + k] * ev_ind[ev_ind_off[i] + k]
                    if uu < acc:
                        pick = k
                        break
                states[s, i] = pick
            else:
                uu = u[s, i]
                acc = 0.0
                pick = card - 1
                for k in range(card):
                    acc += cpt_flat[base + k]
                    if uu < acc:
                        pick = k
                        break
                states[s, i] = pick
        logw[s] = w


def lw_numba(pack: ModelPack, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n_samples, n_nodes = u.shape
    states = np.zeros((n_samples, n_nodes), dtype=np.int64)
    logw = np.zeros(n_samples, dtype=np.float64)
    _lw_loop(
        u,
        pack.child_card,
        pack.cpt_flat,
        pack.cpt_off,
        pack.par_list,
        pack.par_off,
        pack.par_stride,
        pack.ev_kind,
        pack.ev_state,
        pack.ev_ind,
        pack.ev_ind_off,
        states,
        logw,
    )
    return states, logw


if HAS_NUMBA and not PURE_NUMPY:
    lw_run = lw_numba
else:
    lw_run = lw_numpy
