"""Pure-numpy simulation kernels, vectorized over the paths still running.

All active paths share the same clock, so each loop iteration advances
every running path by one step.
"""

import numpy as np

from . import STATUS_CENSORED, STATUS_HORIZON, STATUS_STOPPED
from .rng import COIN_SALT, LEVEL_SHIFT, mix64, path_keys, uniform


def _outputs(paths):
    return (np.zeros(paths, np.int64), np.zeros(paths, np.int64),
            np.zeros(paths, np.int64), np.full(paths, STATUS_STOPPED, np.int8))


def markov_paths(seed, paths, lo, r, max_steps):
    """Walks stopped by a fresh coin with stop probability ``r[s - lo]`` per visit."""
    keys = path_keys(seed, paths)
    final, tau, maxs, status = _outputs(paths)
    active = np.arange(paths)
    s = np.zeros(paths, np.int64)
    t = 0
    while active.size:
        j = s[active] - lo
        out = (j < 0) | (j >= r.size)
        if out.any():
            done = active[out]
            status[done] = STATUS_HORIZON
            tau[done] = t
            active, j = active[~out], j[~out]
        stop = uniform(keys[active], 2 * t) < r[j]
        tau[active[stop]] = t
        active = active[~stop]
        if t >= max_steps:
            status[active] = STATUS_CENSORED
            tau[active] = t
            break
        up = uniform(keys[active], 2 * t + 1) < 0.5
        s[active] += np.where(up, 1, -1)
        maxs[active] = np.maximum(maxs[active], s[active])
        t += 1
    final[:] = s
    return final, tau, maxs, status


def ay_paths(seed, paths, offsets, xs, rhos, xbar, max_steps):
    """Walks under a drawdown schedule; one memoized coin per (maximum, level)."""
    keys = path_keys(seed, paths)
    coin_keys = mix64(keys ^ COIN_SALT)
    final, tau, maxs, status = _outputs(paths)
    n_levels = offsets.size - 1
    active = np.arange(paths)
    s = np.zeros(paths, np.int64)
    n = np.zeros(paths, np.int64)
    k = np.zeros(paths, np.int64)
    t = 0
    while active.size:
        sa = s[active]
        if xbar >= 0:
            hit = sa == xbar
            tau[active[hit]] = t
            active = active[~hit]
        na = n[active]
        beyond = na >= n_levels
        if beyond.any():
            status[active[beyond]] = STATUS_HORIZON
            tau[active[beyond]] = t
            active, na = active[~beyond], na[~beyond]
        ka = k[active]
        off = offsets[na]
        pos = np.minimum(off + ka, xs.size - 1)
        need = (ka < offsets[na + 1] - off) & (s[active] <= xs[pos])
        if need.any():
            who = active[need]
            ctr = (na[need].astype(np.uint64) << LEVEL_SHIFT) + ka[need].astype(np.uint64)
            stop = uniform(coin_keys[who], ctr) < rhos[pos[need]]
            tau[who[stop]] = t
            k[who[~stop]] += 1
            keep = np.ones(active.size, bool)
            keep[np.flatnonzero(need)[stop]] = False
            active = active[keep]
        if t >= max_steps:
            status[active] = STATUS_CENSORED
            tau[active] = t
            break
        up = uniform(keys[active], t) < 0.5
        s[active] += np.where(up, 1, -1)
        new_max = s[active] > n[active]
        grow = active[new_max]
        n[grow] = s[grow]
        k[grow] = 0
        t += 1
    final[:] = s
    maxs[:] = n
    return final, tau, maxs, status
