# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled split-search and SMO kernels; see ``_kernels_py`` for the reference."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

cdef double TAU = 1e-12


def gini_split(const double[:, :] X, const cnp.intp_t[:] feats, const double[:] y, const double[:] w,
               const cnp.intp_t[:, :] order, double tot_w, double tot_pos, double min_leaf):
    cdef Py_ssize_t m = order.shape[0], k = order.shape[1]
    cdef Py_ssize_t c, p, f, best_col = -1, best_pos = -1
    cdef double best_cost = INFINITY
    cdef double wl, l1, l0, wr, r1, r0, cost, wi
    if m < 2:
        return best_col, best_pos, best_cost
    for c in range(k):
        f = feats[c]
        wl = 0.0
        l1 = 0.0
        for p in range(m - 1):
            wi = w[order[p, c]]
            wl = wl + wi
            l1 = l1 + wi * y[order[p, c]]
            wr = tot_w - wl
            if wl < min_leaf or wr < min_leaf:
                continue
            if not (X[order[p, c], f] < X[order[p + 1, c], f]):
                continue
            l0 = wl - l1
            r1 = tot_pos - l1
            r0 = wr - r1
            cost = (wl - (l1 * l1 + l0 * l0) / wl) + (wr - (r1 * r1 + r0 * r0) / wr)
            if cost < best_cost:
                best_cost = cost
                best_col = c
                best_pos = p
    return best_col, best_pos, best_cost


def newton_split(const double[:, :] X, const cnp.intp_t[:] feats, const double[:] g, const double[:] h,
                 const cnp.intp_t[:, :] order, double gtot, double htot, double lam,
                 double min_child_weight, double min_leaf):
    cdef Py_ssize_t m = order.shape[0], k = order.shape[1]
    cdef Py_ssize_t c, p, f, best_col = -1, best_pos = -1
    cdef double best_gain = -INFINITY
    cdef double GL, HL, GR, HR, gain, nl, parent
    if m < 2:
        return best_col, best_pos, best_gain
    parent = gtot * gtot / (htot + lam)
    for c in range(k):
        f = feats[c]
        GL = 0.0
        HL = 0.0
        for p in range(m - 1):
            GL = GL + g[order[p, c]]
            HL = HL + h[order[p, c]]
            nl = <double>(p + 1)
            if nl < min_leaf or (m - nl) < min_leaf:
                continue
            if not (X[order[p, c], f] < X[order[p + 1, c], f]):
                continue
            GR = gtot - GL
            HR = htot - HL
            if not (HL >= min_child_weight and HR >= min_child_weight):
                continue
            gain = (GL * GL / (HL + lam) + GR * GR / (HR + lam)) - parent
            if gain > best_gain:
                best_gain = gain
                best_col = c
                best_pos = p
    return best_col, best_pos, best_gain


cdef inline void _pair_update(double* ai, double* aj, double Gi, double Gj, double yi, double yj,
                              double Kii, double Kjj, double Qij, double C) noexcept nogil:
    cdef double quad, delta, diff, s
    if yi != yj:
        quad = Kii + Kjj + 2.0 * Qij
        if quad <= 0:
            quad = TAU
        delta = (-Gi - Gj) / quad
        diff = ai[0] - aj[0]
        ai[0] += delta
        aj[0] += delta
        if diff > 0:
            if aj[0] < 0:
                aj[0] = 0.0
                ai[0] = diff
        else:
            if ai[0] < 0:
                ai[0] = 0.0
                aj[0] = -diff
        if diff > 0:
            if ai[0] > C:
                ai[0] = C
                aj[0] = C - diff
        else:
            if aj[0] > C:
                aj[0] = C
                ai[0] = C + diff
    else:
        quad = Kii + Kjj - 2.0 * Qij
        if quad <= 0:
            quad = TAU
        delta = (Gi - Gj) / quad
        s = ai[0] + aj[0]
        ai[0] -= delta
        aj[0] += delta
        if s > C:
            if ai[0] > C:
                ai[0] = C
                aj[0] = s - C
        else:
            if aj[0] < 0:
                aj[0] = 0.0
                ai[0] = s
        if s > C:
            if aj[0] > C:
                aj[0] = C
                ai[0] = s - C
        else:
            if ai[0] < 0:
                ai[0] = 0.0
                aj[0] = s


def smo(const double[:, :] Q, const double[:] K_diag, const double[:] y, double C,
        double eps, long max_iter):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t t, i, j
    cdef long it = 0
    cdef double gmax, gmin, f, b, a, obj, best_obj, ai, aj, ai_old, aj_old, dai, daj
    cdef bint is_up, is_low
    alpha_arr = np.zeros(n)
    G_arr = -np.ones(n)
    cdef double[:] alpha = alpha_arr
    cdef double[:] G = G_arr
    with nogil:
        while it < max_iter:
            i = -1
            gmax = -INFINITY
            gmin = INFINITY
            for t in range(n):
                f = -(y[t] * G[t])
                is_up = (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0)
                is_low = (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C)
                if is_up and (i < 0 or f > gmax):
                    gmax = f
                    i = t
                if is_low and f < gmin:
                    gmin = f
            if i < 0 or gmin == INFINITY:
                break
            if gmax - gmin < eps:
                break
            j = -1
            best_obj = INFINITY
            for t in range(n):
                is_low = (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C)
                if not is_low:
                    continue
                f = -(y[t] * G[t])
                b = gmax - f
                if not (b > 0):
                    continue
                a = K_diag[i] + K_diag[t] - (2.0 * (y[i] * y[t])) * Q[i, t]
                if not (a > 0):
                    a = TAU
                obj = -(b * b) / a
                if obj < best_obj:
                    best_obj = obj
                    j = t
            if j < 0:
                break
            it += 1
            ai_old = alpha[i]
            aj_old = alpha[j]
            ai = ai_old
            aj = aj_old
            _pair_update(&ai, &aj, G[i], G[j], y[i], y[j], K_diag[i], K_diag[j], Q[i, j], C)
            alpha[i] = ai
            alpha[j] = aj
            dai = ai - ai_old
            daj = aj - aj_old
            for t in range(n):
                G[t] += Q[i, t] * dai + Q[j, t] * daj
    return alpha_arr, G_arr, it
