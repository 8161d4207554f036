"""Compiled per-sample SGD steps and the lock-free worker loop.

Workers share ``U``, ``w`` and ``b`` and write to them without
synchronisation.  Every function here releases the GIL, so plain Python
threads give real parallelism.
"""
import math

import numba
import numpy as np

from .sampling import alias_draw, next_below, next_double

NETWORK = 0
TASK = 1

OK = 0
NON_FINITE = 1
EXHAUSTED = 2

MAX_REJECTIONS = 100
LR_FLOOR = 1e-4


@numba.njit(cache=True, nogil=True, inline="always")
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@numba.njit(cache=True, nogil=True, inline="always")
def _log_sigmoid(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@numba.njit(cache=True, nogil=True)
def task_step(U, w, x_ptr, x_idx, inst, a, a_neg, lr, lam, margin, vt, vp, diff):
    """One hinge-loss SGD step; returns the pre-update loss."""
    D = U.shape[1]
    T = w.shape[0]
    for d in range(D):
        vp[d] = 0.0
    for t in range(T):
        s = x_ptr[inst * T + t]
        e = x_ptr[inst * T + t + 1]
        for d in range(D):
            vt[t, d] = 0.0
        if e > s:
            for q in range(s, e):
                n = x_idx[q]
                for d in range(D):
                    vt[t, d] += U[n, d]
            inv = 1.0 / (e - s)
            for d in range(D):
                vt[t, d] *= inv
                vp[d] += w[t] * vt[t, d]
    f_pos = 0.0
    f_neg = 0.0
    for d in range(D):
        f_pos += U[a, d] * vp[d]
        f_neg += U[a_neg, d] * vp[d]
        diff[d] = U[a_neg, d] - U[a, d]
    loss = f_neg - f_pos + margin
    active = 1.0 if loss > 0 else 0.0
    shrink = 2.0 * lam
    for d in range(D):
        U[a, d] += lr * (active * vp[d] - shrink * U[a, d])
        U[a_neg, d] += lr * (-active * vp[d] - shrink * U[a_neg, d])
    for t in range(T):
        s = x_ptr[inst * T + t]
        e = x_ptr[inst * T + t + 1]
        if e == s:
            continue
        coef = active * w[t] / (e - s)
        for q in range(s, e):
            n = x_idx[q]
            for d in range(D):
                U[n, d] += lr * (-coef * diff[d] - shrink * U[n, d])
    if active > 0:
        for t in range(T):
            if x_ptr[inst * T + t + 1] > x_ptr[inst * T + t]:
                gw = 0.0
                for d in range(D):
                    gw += diff[d] * vt[t, d]
                w[t] -= lr * gw
    return loss if loss > 0 else 0.0


@numba.njit(cache=True, nogil=True)
def net_step(U, b, r, i, j, negs, lr, lam, ui, gi, sig):
    """One negative-sampling SGD step; returns the pre-update -log-likelihood."""
    D = U.shape[1]
    K = negs.shape[0]
    s = b[r]
    for d in range(D):
        ui[d] = U[i, d]
        s += ui[d] * U[j, d]
    g_pos = 1.0 - _sigmoid(s)
    logp = _log_sigmoid(s)
    g_b = g_pos
    for d in range(D):
        gi[d] = g_pos * U[j, d]
    for k in range(K):
        n = negs[k]
        sk = b[r]
        for d in range(D):
            sk += ui[d] * U[n, d]
        sig[k] = _sigmoid(sk)
        logp += _log_sigmoid(-sk)
        g_b -= sig[k]
        for d in range(D):
            gi[d] -= sig[k] * U[n, d]
    shrink = 2.0 * lam
    for d in range(D):
        U[j, d] += lr * (g_pos * ui[d] - shrink * U[j, d])
    for k in range(K):
        n = negs[k]
        for d in range(D):
            U[n, d] += lr * (-sig[k] * ui[d] - shrink * U[n, d])
    for d in range(D):
        U[i, d] += lr * (gi[d] - shrink * U[i, d])
    b[r] += lr * g_b
    return -logp


@numba.njit(cache=True, nogil=True)
def _is_author(a_ptr, a_idx, inst, node):
    for q in range(a_ptr[inst], a_ptr[inst + 1]):
        if a_idx[q] == node:
            return True
    return False


@numba.njit(cache=True, nogil=True)
def run_worker(tid, quota, batch, omega, total, lr0, lam, margin, k_neg,
               U, w, b,
               x_ptr, x_idx, a_ptr, a_idx, an_prob, an_alias, an_support,
               e_ptr, e_src, e_dst, e_prob, e_alias,
               z_ptr, z_support, z_prob, z_alias,
               state, progress, counts, log_task, log_loss, log_len, status):
    """Process ``quota`` samples in task-homogeneous mini-batches."""
    D = U.shape[1]
    T = w.shape[0]
    n_inst = a_ptr.shape[0] - 1
    n_paths = e_ptr.shape[0] - 1
    vt = np.empty((T, D))
    vp = np.empty(D)
    diff = np.empty(D)
    ui = np.empty(D)
    gi = np.empty(D)
    sig = np.empty(k_neg)
    negs = np.empty(k_neg, np.int64)
    done = 0
    nb = 0
    while done < quota:
        m = min(batch, quota - done)
        seen = 0
        for t in range(progress.shape[0]):
            seen += progress[t]
        lr = lr0 * max(LR_FLOOR, 1.0 - seen / total)
        task = NETWORK if next_double(state) < omega else TASK
        loss_sum = 0.0
        if task == NETWORK:
            for _ in range(m):
                r = next_below(state, n_paths)
                e0 = e_ptr[r]
                e = e0 + alias_draw(e_prob[e0:e_ptr[r + 1]], e_alias[e0:e_ptr[r + 1]], state)
                z0 = z_ptr[r]
                z1 = z_ptr[r + 1]
                for q in range(k_neg):
                    negs[q] = z_support[z0 + alias_draw(z_prob[z0:z1], z_alias[z0:z1], state)]
                loss_sum += net_step(U, b, r, e_src[e], e_dst[e], negs, lr, lam, ui, gi, sig)
        else:
            for _ in range(m):
                inst = next_below(state, n_inst)
                a0 = a_ptr[inst]
                a = a_idx[a0 + next_below(state, a_ptr[inst + 1] - a0)]
                a_neg = -1
                for _try in range(MAX_REJECTIONS):
                    cand = an_support[alias_draw(an_prob, an_alias, state)]
                    if not _is_author(a_ptr, a_idx, inst, cand):
                        a_neg = cand
                        break
                if a_neg < 0:
                    status[0] = EXHAUSTED
                    log_len[tid] = nb
                    return
                loss_sum += task_step(U, w, x_ptr, x_idx, inst, a, a_neg, lr, lam, margin,
                                      vt, vp, diff)
        if not np.isfinite(loss_sum):
            status[0] = NON_FINITE
            log_len[tid] = nb
            return
        counts[tid, task] += m
        done += m
        progress[tid] = done
        log_task[tid, nb] = task
        log_loss[tid, nb] = loss_sum / m
        nb += 1
    log_len[tid] = nb
