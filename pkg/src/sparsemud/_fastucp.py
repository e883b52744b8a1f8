"""Compiled decoding kernel. Replays the exact splitmix64 stream of ucp.SplitMix64."""

from __future__ import annotations

import numpy as np
from numba import njit, uint64, int64

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True, inline="always")
def _next64(state):
    state = state + _GAMMA
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True, inline="always")
def _randbelow(state, n):
    # mask with the next power of two and reject, mirroring SplitMix64.randbelow
    m = uint64(n - 1)
    mask = m
    mask |= mask >> uint64(1)
    mask |= mask >> uint64(2)
    mask |= mask >> uint64(4)
    mask |= mask >> uint64(8)
    mask |= mask >> uint64(16)
    mask |= mask >> uint64(32)
    while True:
        state, z = _next64(state)
        r = z & mask
        if r < uint64(n):
            return state, int64(r)


@njit(cache=True, nogil=True)
def ucp_kernel(chip_ptr, chip_users, chip_signs, user_ptr, user_chips, user_signs,
               y0, seed, truth):
    M = len(chip_ptr) - 1
    K = len(user_ptr) - 1
    have_truth = len(truth) == K

    y = y0.copy()
    degree = np.empty(M, dtype=np.int64)
    retired = np.zeros(M, dtype=np.bool_)
    assignment = np.zeros(K, dtype=np.int8)

    # unit clause records, one slot per variable
    cl_sign = np.zeros(K, dtype=np.int8)
    cl_mult = np.zeros(K, dtype=np.int64)
    cl_contra = np.zeros(K, dtype=np.bool_)
    rep_list = np.empty(K, dtype=np.int64)
    rep_pos = np.full(K, -1, dtype=np.int64)
    rep_count = 0

    ua_list = np.arange(K, dtype=np.int64)
    ua_pos = np.arange(K, dtype=np.int64)
    ua_count = K

    contra_events = 0
    stall_step = int64(-1)
    contra_step = int64(-1)
    guesses = 0
    errors = 0

    tr_clause = np.zeros(K + 1, dtype=np.int64)
    tr_guess = np.zeros(K + 1, dtype=np.int64)
    tr_contra = np.zeros(K + 1, dtype=np.int64)
    tr_err = np.zeros(K + 1, dtype=np.int64)

    # initial scan: extremal chips force every incident user
    for c in range(M):
        d = chip_ptr[c + 1] - chip_ptr[c]
        degree[c] = d
        if d == 0:
            retired[c] = True
            continue
        ay = y[c] if y[c] >= 0 else -y[c]
        if ay == d:
            ysign = np.int8(1) if y[c] > 0 else np.int8(-1)
            for f in range(chip_ptr[c], chip_ptr[c + 1]):
                j = chip_users[f]
                s = np.int8(chip_signs[f] * ysign)
                if cl_sign[j] == 0:
                    cl_sign[j] = s
                    cl_mult[j] = 1
                    rep_pos[j] = rep_count
                    rep_list[rep_count] = j
                    rep_count += 1
                elif cl_sign[j] == s:
                    cl_mult[j] += 1
                else:
                    contra_events += 1
                    cl_contra[j] = True
            retired[c] = True
    if contra_events > 0:
        contra_step = int64(0)
    tr_clause[0] = rep_count
    tr_contra[0] = contra_events

    state = seed
    for X in range(1, K + 1):
        if rep_count > 0:
            state, idx = _randbelow(state, rep_count)
            k = rep_list[idx]
            v = cl_sign[k]
        else:
            if stall_step < 0:
                stall_step = X - 1
            guesses += 1
            state, idx = _randbelow(state, ua_count)
            k = ua_list[idx]
            state, z = _next64(state)
            v = np.int8(1) if z & uint64(1) else np.int8(-1)

        # assign and drop k from both index sets
        assignment[k] = v
        pos = ua_pos[k]
        last = ua_list[ua_count - 1]
        ua_count -= 1
        if last != k:
            ua_list[pos] = last
            ua_pos[last] = pos
        if rep_pos[k] >= 0:
            pos = rep_pos[k]
            last = rep_list[rep_count - 1]
            rep_count -= 1
            if last != k:
                rep_list[pos] = last
                rep_pos[last] = pos
            rep_pos[k] = -1

        for e in range(user_ptr[k], user_ptr[k + 1]):
            c = user_chips[e]
            if retired[c]:
                continue
            y[c] -= user_signs[e] * v
            degree[c] -= 1
            if degree[c] == 0:
                retired[c] = True
            else:
                ay = y[c] if y[c] >= 0 else -y[c]
                if ay == degree[c]:
                    ysign = np.int8(1) if y[c] > 0 else np.int8(-1)
                    for f in range(chip_ptr[c], chip_ptr[c + 1]):
                        j = chip_users[f]
                        if assignment[j] != 0:
                            continue
                        s = np.int8(chip_signs[f] * ysign)
                        if cl_sign[j] == 0:
                            cl_sign[j] = s
                            cl_mult[j] = 1
                            cl_contra[j] = False
                            rep_pos[j] = rep_count
                            rep_list[rep_count] = j
                            rep_count += 1
                        elif cl_sign[j] == s:
                            cl_mult[j] += 1
                        else:
                            contra_events += 1
                            cl_contra[j] = True
                            if contra_step < 0:
                                contra_step = X
                    retired[c] = True

        if have_truth and v != truth[k]:
            errors += 1
        tr_clause[X] = rep_count
        tr_guess[X] = guesses
        tr_contra[X] = contra_events
        tr_err[X] = errors

    return (assignment, stall_step, contra_step, int64(guesses),
            int64(contra_events), tr_clause, tr_guess, tr_contra, tr_err)
