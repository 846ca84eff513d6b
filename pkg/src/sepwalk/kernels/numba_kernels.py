"""Compiled simulation kernels; one path per prange iteration."""

import numpy as np
from numba import njit, prange

from . import STATUS_CENSORED, STATUS_HORIZON, STATUS_STOPPED

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
COIN_SALT = np.uint64(0xD1B54A32D192ED03)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
S32 = np.uint64(32)
ONE = np.uint64(1)
TO_UNIT = 2.0 ** -53


@njit(inline="always")
def _mix64(z):
    z = z ^ (z >> S30)
    z = z * MIX1
    z = z ^ (z >> S27)
    z = z * MIX2
    return z ^ (z >> S31)


@njit(inline="always")
def _uniform(key, ctr):
    z = _mix64(key + (ctr + ONE) * GAMMA)
    return np.float64(z >> S11) * TO_UNIT


@njit(inline="always")
def _path_key(base, p):
    return _mix64(base + np.uint64(p + 1) * GAMMA)


@njit(parallel=True, cache=True)
def markov_paths(seed, paths, lo, r, max_steps):
    base = _mix64(np.uint64(seed))
    final = np.zeros(paths, np.int64)
    tau = np.zeros(paths, np.int64)
    maxs = np.zeros(paths, np.int64)
    status = np.full(paths, STATUS_STOPPED, np.int8)
    size = r.size
    for p in prange(paths):
        key = _path_key(base, p)
        s = 0
        top = 0
        t = 0
        while True:
            j = s - lo
            if j < 0 or j >= size:
                status[p] = STATUS_HORIZON
                break
            if _uniform(key, np.uint64(2 * t)) < r[j]:
                break
            if t >= max_steps:
                status[p] = STATUS_CENSORED
                break
            if _uniform(key, np.uint64(2 * t + 1)) < 0.5:
                s += 1
            else:
                s -= 1
            if s > top:
                top = s
            t += 1
        final[p] = s
        tau[p] = t
        maxs[p] = top
    return final, tau, maxs, status


@njit(parallel=True, cache=True)
def ay_paths(seed, paths, offsets, xs, rhos, xbar, max_steps):
    base = _mix64(np.uint64(seed))
    final = np.zeros(paths, np.int64)
    tau = np.zeros(paths, np.int64)
    maxs = np.zeros(paths, np.int64)
    status = np.full(paths, STATUS_STOPPED, np.int8)
    n_levels = offsets.size - 1
    for p in prange(paths):
        key = _path_key(base, p)
        coin_key = _mix64(key ^ COIN_SALT)
        s = 0
        n = 0
        k = 0
        t = 0
        while True:
            if xbar >= 0 and s == xbar:
                break
            if n >= n_levels:
                status[p] = STATUS_HORIZON
                break
            off = offsets[n]
            # levels are distinct integers and steps are +-1, so at most one
            # new level can be touched per step
            if k < offsets[n + 1] - off and s <= xs[off + k]:
                ctr = (np.uint64(n) << S32) + np.uint64(k)
                if _uniform(coin_key, ctr) < rhos[off + k]:
                    break
                k += 1
            if t >= max_steps:
                status[p] = STATUS_CENSORED
                break
            if _uniform(key, np.uint64(t)) < 0.5:
                s += 1
            else:
                s -= 1
            if s > n:
                n = s
                k = 0
            t += 1
        final[p] = s
        tau[p] = t
        maxs[p] = n
    return final, tau, maxs, status
