"""Compiled inner loop of the link-level Monte Carlo.

The kernel draws from a ``numpy.random.Generator`` passed in by the caller, so a
point's trace depends only on the seed of that generator.
"""

import math

import numpy as np
from numba import njit

FADING_CODES = {"rayleigh-rician": 0, "rayleigh": 1, "none": 2}
MODE_CODES = {"ergodic": 0, "static": 1, "static-blockage": 2}
ASSOC_CODES = {"expected": 0, "strongest": 1}

_DB_TO_NEPER = -math.log(10.0) / 10.0


@njit(cache=True)
def _fading(gen, is_los, fading_code, a, b):
    if fading_code == 2:
        return 1.0
    if fading_code == 1 or not is_los:
        return gen.standard_exponential()
    x = gen.standard_normal()
    y = gen.standard_normal()
    return (a + b * x) ** 2 + (b * y) ** 2


@njit(cache=True)
def link_powers(gen, mean_los, mean_nlos, p_los, sigma_los, sigma_nlos,
                fading_code, k_factor, mode_code, assoc_code, expected_serving,
                signal_out, interf_out):
    """Fill per-trial serving and aggregate-interference powers; return the serving index.

    ``mean_los``/``mean_nlos`` are the per-AP received powers in watts without
    shadowing or fading.
    """
    n_ap = mean_los.shape[0]
    n_trials = signal_out.shape[0]
    a = math.sqrt(k_factor / (k_factor + 1.0))
    b = math.sqrt(0.5 / (k_factor + 1.0))

    los = np.zeros(n_ap, dtype=np.bool_)
    base = np.empty(n_ap)
    sigma = np.empty(n_ap)
    if mode_code != 0:
        for j in range(n_ap):
            los[j] = gen.random() < p_los[j]
            base[j] = mean_los[j] if los[j] else mean_nlos[j]
            sigma[j] = sigma_los if los[j] else sigma_nlos
        if mode_code == 1:
            for j in range(n_ap):
                base[j] *= math.exp(_DB_TO_NEPER * sigma[j] * gen.standard_normal())

    serving = expected_serving
    if assoc_code == 1:
        serving = 0
        for j in range(1, n_ap):
            if base[j] > base[serving]:
                serving = j

    for t in range(n_trials):
        s = 0.0
        interf = 0.0
        for j in range(n_ap):
            if mode_code == 0:
                is_los = gen.random() < p_los[j]
                m = mean_los[j] if is_los else mean_nlos[j]
                sg = sigma_los if is_los else sigma_nlos
                p = m * math.exp(_DB_TO_NEPER * sg * gen.standard_normal())
            elif mode_code == 2:
                is_los = los[j]
                p = base[j] * math.exp(_DB_TO_NEPER * sigma[j] * gen.standard_normal())
            else:
                is_los = los[j]
                p = base[j]
            p *= _fading(gen, is_los, fading_code, a, b)
            if j == serving:
                s = p
            else:
                interf += p
        signal_out[t] = s
        interf_out[t] = interf
    return serving
