"""Compiled inner loops.

The Python observers and the fused loops call the same per-step functions, so
both paths produce bit-identical numbers.
"""
import numpy as np
from numba import njit

OPTS = dict(cache=True, nogil=True)


@njit(**OPTS)
def apply_pair(x, is_regular, i, j):
    """One gossip update on at most two coordinates. Returns how many changed."""
    if i == j:
        return 0
    ri = is_regular[i]
    rj = is_regular[j]
    if not ri and not rj:
        return 0
    mid = 0.5 * (x[i] + x[j])
    if ri:
        x[i] = mid
    if rj:
        x[j] = mid
    return 1


@njit(**OPTS)
def apply_pairs(x, is_regular, first, second):
    for k in range(first.shape[0]):
        apply_pair(x, is_regular, first[k], second[k])


@njit(**OPTS)
def average_update(t, s, xr):
    """s(t) = t/(t+1) s(t-1) + 1/(t+1) x(t)."""
    a = t / (t + 1.0)
    b = 1.0 / (t + 1.0)
    for k in range(s.shape[0]):
        s[k] = a * s[k] + b * xr[k]


@njit(**OPTS)
def apply_pairs_averaging(x, is_regular, regular, first, second, t0, s):
    """Apply pairs and fold every post-update regular state into the running mean."""
    nr = regular.shape[0]
    xr = np.empty(nr)
    for k in range(first.shape[0]):
        apply_pair(x, is_regular, first[k], second[k])
        for q in range(nr):
            xr[q] = x[regular[q]]
        average_update(t0 + k + 1, s, xr)


@njit(**OPTS)
def estimator_terms(s, xs, lab_r, lab_s):
    """Plug-in quantities of the weight estimator for a given labeling.

    Returns (beta1, beta2, g, n1, n2, nr1).
    """
    nr1 = 0
    sum_r1 = 0.0
    sum_r2 = 0.0
    for k in range(s.shape[0]):
        if lab_r[k] == 1:
            nr1 += 1
            sum_r1 += s[k]
        else:
            sum_r2 += s[k]
    ns1 = 0
    sum_s1 = 0.0
    sum_s2 = 0.0
    for k in range(xs.shape[0]):
        if lab_s[k] == 1:
            ns1 += 1
            sum_s1 += xs[k]
        else:
            sum_s2 += xs[k]
    n1 = nr1 + ns1
    n2 = s.shape[0] + xs.shape[0] - n1
    if nr1 == 0 or n1 == 0 or n2 == 0:
        return 0.0, 0.0, 0.0, n1, n2, nr1
    cross = 2.0 * n1 * n2
    sq = float(n1 * n1 + n2 * n2)
    beta1 = ns1 / nr1 * sum_r1 - sum_s1
    beta2 = n2 / nr1 * sum_r1 - sum_r2 - sum_s2
    g = beta1 - sq / cross * beta2
    return beta1, beta2, g, n1, n2, nr1


@njit(**OPTS)
def classify(s, anchor_pos, lab_r, lab_s):
    """Label 1 above the mean running average, 2 otherwise; stubborn agents copy their anchor."""
    nr = s.shape[0]
    total = 0.0
    for k in range(nr):
        total += s[k]
    mean = total / nr
    for k in range(nr):
        lab_r[k] = 1 if s[k] > mean else 2
    for k in range(lab_s.shape[0]):
        lab_s[k] = lab_r[anchor_pos[k]]


@njit(**OPTS)
def detector_iteration(t, s, xr, xs, anchor_pos, lab_r, lab_s, est):
    """One full iteration (t >= 1) of the online detector.

    est holds [w_s_hat, w_d_hat, skipped_updates, n1_hat, n2_hat].
    Returns True if the parameter step was taken.
    """
    average_update(t, s, xr)
    classify(s, anchor_pos, lab_r, lab_s)
    beta1, beta2, g, n1, n2, nr1 = estimator_terms(s, xs, lab_r, lab_s)
    est[3] = n1
    est[4] = n2
    if nr1 == 0 or n1 == 0 or n2 == 0:
        est[2] += 1.0
        return False
    cross = 2.0 * n1 * n2
    sq = float(n1 * n1 + n2 * n2)
    sgn = 0.0
    if g > 0.0:
        sgn = 1.0
    elif g < 0.0:
        sgn = -1.0
    ws = est[0]
    w_tilde = ws - sgn * (g * ws + beta2 / cross) / t
    if abs(w_tilde) < 2.0:
        ws = w_tilde
    else:
        ws = 0.5
    est[0] = ws
    est[1] = (1.0 - sq * ws) / cross
    return True


@njit(**OPTS)
def partition_accuracy(lab_r, lab_s, truth_r, truth_s):
    n = lab_r.shape[0] + lab_s.shape[0]
    hits = 0
    for k in range(lab_r.shape[0]):
        if lab_r[k] == truth_r[k]:
            hits += 1
    for k in range(lab_s.shape[0]):
        if lab_s[k] == truth_s[k]:
            hits += 1
    return max(hits, n - hits) / n


@njit(**OPTS)
def detect_chunk(x, is_regular, regular, first, second, t0,
                 s, xs, anchor_pos, lab_r, lab_s, est,
                 truth_r, truth_s, log_every, tracking,
                 log_t, log_acc, log_ws, log_wd, log_changed):
    """Simulate a block of steps with the detector observing every post-update state.

    tracking holds [last step with a wrong partition, last step with any label
    change, label changes since the last log row, first step with a correct
    partition or -1]. Rows are written to the
    log arrays every ``log_every`` steps; the number of rows is returned.
    """
    nr = regular.shape[0]
    ns = lab_s.shape[0]
    xr = np.empty(nr)
    prev_r = lab_r.copy()
    prev_s = lab_s.copy()
    rows = 0
    for k in range(first.shape[0]):
        t = t0 + k + 1
        apply_pair(x, is_regular, first[k], second[k])
        for q in range(nr):
            xr[q] = x[regular[q]]
        detector_iteration(t, s, xr, xs, anchor_pos, lab_r, lab_s, est)
        changed = 0
        for q in range(nr):
            if lab_r[q] != prev_r[q]:
                changed += 1
                prev_r[q] = lab_r[q]
        for q in range(ns):
            if lab_s[q] != prev_s[q]:
                changed += 1
                prev_s[q] = lab_s[q]
        if changed > 0:
            tracking[1] = t
            tracking[2] += changed
        acc = partition_accuracy(lab_r, lab_s, truth_r, truth_s)
        if acc < 1.0:
            tracking[0] = t
        elif tracking[3] < 0:
            tracking[3] = t
        if log_every > 0 and t % log_every == 0:
            log_t[rows] = t
            log_acc[rows] = acc
            log_ws[rows] = est[0]
            log_wd[rows] = est[1]
            log_changed[rows] = tracking[2]
            tracking[2] = 0
            rows += 1
    return rows


@njit(**OPTS)
def apply_pairs_summing(x, is_regular, regular, first, second, acc):
    """Apply pairs and add every post-update regular state into ``acc``."""
    nr = regular.shape[0]
    for k in range(first.shape[0]):
        apply_pair(x, is_regular, first[k], second[k])
        for q in range(nr):
            acc[q] += x[regular[q]]
