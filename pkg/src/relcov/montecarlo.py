"""Per-location Monte Carlo driver.

Every location owns a random stream derived from ``(master_seed, *stream_key, index)``,
so results do not depend on how locations are split across workers.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .channel import ChannelParams
from .scenario import Deployment, ResourceConfig, make_rng
from .sinr import LinkTrace, link_budget, simulate_trace

log = logging.getLogger(__name__)

Reducer = Callable[[LinkTrace], object]


def _run_chunk(points, indices, deployment, config, params, n_trials, master_seed,
               stream_key, reducer):
    budget = link_budget(points, deployment, config, params)
    out = []
    for row, idx in enumerate(indices):
        rng = make_rng(master_seed, *stream_key, int(idx))
        out.append(reducer(simulate_trace(budget, row, params, n_trials, rng)))
    return out


def run_points(points, deployment: Deployment, config: ResourceConfig, params: ChannelParams,
               n_trials: int, master_seed: int, reducer: Reducer,
               stream_key: Sequence[int] = (0,), workers: int = 1,
               chunk_size: int = 256, indices=None) -> list:
    """Simulate a trace at every point and apply ``reducer``; results follow point order.

    ``indices`` (defaults to ``range(len(points))``) are the stream indices of the
    points, so a subset of a grid reproduces the full-grid traces of those points.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    idx = np.arange(len(pts)) if indices is None else np.asarray(indices, dtype=np.int64)
    key = tuple(int(k) for k in stream_key)
    chunks = [(pts[i:i + chunk_size], idx[i:i + chunk_size]) for i in range(0, len(pts), chunk_size)]
    args = (deployment, config, params, n_trials, master_seed, key, reducer)
    if workers <= 1 or len(chunks) <= 1:
        results = [_run_chunk(p, i, *args) for p, i in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, p, i, *args) for p, i in chunks]
            results = [f.result() for f in futures]
    return [r for chunk in results for r in chunk]


class SuccessCounter:
    """Counts trials whose SINR reaches each threshold, for a fixed noise power."""

    def __init__(self, thresholds, noise_w: float = 0.0):
        self.thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
        self.noise_w = float(noise_w)

    def __call__(self, trace: LinkTrace) -> np.ndarray:
        sinr = trace.sinr(self.noise_w)
        return np.array([np.count_nonzero(sinr >= t) for t in self.thresholds], dtype=np.int64)
