"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Both implementations evaluate the same floating-point expressions in the
same order, so they return bit-identical results.
"""
import numpy as np


def gini_split(X, feats, y, w, order, tot_w, tot_pos, min_leaf):
    """Best weighted-Gini split of one node.

    Parameters
    ----------
    X : (n, d) float array, the full training matrix
    feats : (k,) int array of candidate feature columns
    y, w : (n,) float arrays of 0/1 labels and sample weights
    order : (m, k) int array
        Node sample indices (into ``X``) sorted by each candidate feature.
    tot_w, tot_pos : float
        Node weight and positive-class weight.
    min_leaf : float
        Minimum child weight.

    Returns
    -------
    col, pos, cost
        Column of ``feats``, last sorted position that goes left, and the
        summed child impurity ``sum_child (W - sum_c W_c^2 / W)``; ``col == -1``
        when no valid split exists.
    """
    m, k = order.shape
    best_col, best_pos, best_cost = -1, -1, np.inf
    if m < 2:
        return best_col, best_pos, best_cost
    for c in range(k):
        o = order[:, c]
        v = X[o, feats[c]]
        wl = np.cumsum(w[o])[:-1]
        l1 = np.cumsum(w[o] * y[o])[:-1]
        l0 = wl - l1
        wr = tot_w - wl
        r1 = tot_pos - l1
        r0 = wr - r1
        valid = (wl >= min_leaf) & (wr >= min_leaf) & (v[:-1] < v[1:])
        if not valid.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            cost = (wl - (l1 * l1 + l0 * l0) / wl) + (wr - (r1 * r1 + r0 * r0) / wr)
        cost = np.where(valid, cost, np.inf)
        p = int(np.argmin(cost))
        if cost[p] < best_cost:
            best_col, best_pos, best_cost = c, p, float(cost[p])
    return best_col, best_pos, best_cost


def newton_split(X, feats, g, h, order, gtot, htot, lam, min_child_weight, min_leaf):
    """Best second-order (gradient/hessian) split; returns ``col, pos, gain``."""
    m, k = order.shape
    best_col, best_pos, best_gain = -1, -1, -np.inf
    if m < 2:
        return best_col, best_pos, best_gain
    nl = np.arange(1, m, dtype=np.float64)
    ok_size = (nl >= min_leaf) & ((m - nl) >= min_leaf)
    parent = gtot * gtot / (htot + lam)
    for c in range(k):
        o = order[:, c]
        v = X[o, feats[c]]
        GL = np.cumsum(g[o])[:-1]
        HL = np.cumsum(h[o])[:-1]
        GR = gtot - GL
        HR = htot - HL
        gain = (GL * GL / (HL + lam) + GR * GR / (HR + lam)) - parent
        valid = ok_size & (v[:-1] < v[1:]) & (HL >= min_child_weight) & (HR >= min_child_weight)
        if not valid.any():
            continue
        gain = np.where(valid, gain, -np.inf)
        p = int(np.argmax(gain))
        if gain[p] > best_gain:
            best_col, best_pos, best_gain = c, p, float(gain[p])
    return best_col, best_pos, best_gain


TAU = 1e-12


def smo(Q, K_diag, y, C, eps, max_iter):
    """Dual C-SVM by sequential minimal optimization with second-order pair selection.

    Solves ``min 0.5 a'Qa - sum(a)`` subject to ``0 <= a <= C`` and
    ``y'a = 0`` where ``Q = (y y') * K``.

    Returns
    -------
    alpha, grad, n_iter
    """
    n = len(y)
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    while it < max_iter:
        f = -(y * G)
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        fu = np.where(up, f, -np.inf)
        i = int(np.argmax(fu))
        gmax = fu[i]
        gmin = float(np.min(np.where(low, f, np.inf)))
        if gmax - gmin < eps:
            break
        b = gmax - f
        a = K_diag[i] + K_diag - 2.0 * (y[i] * y) * Q[i]
        a = np.where(a > 0, a, TAU)
        obj = np.where(low & (b > 0), -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        if not np.isfinite(obj[j]):
            break
        it += 1
        ai_old, aj_old = alpha[i], alpha[j]
        Qi, Qj = Q[i], Q[j]
        ai, aj = _pair_update(alpha[i], alpha[j], G[i], G[j], y[i], y[j],
                              K_diag[i], K_diag[j], Qi[j], C)
        alpha[i], alpha[j] = ai, aj
        dai = ai - ai_old
        daj = aj - aj_old
        G += Qi * dai + Qj * daj
    return alpha, G, it


def _pair_update(ai, aj, Gi, Gj, yi, yj, Kii, Kjj, Qij, C):
    if yi != yj:
        quad = Kii + Kjj + 2.0 * Qij
        if quad <= 0:
            quad = TAU
        delta = (-Gi - Gj) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj = 0.0
                ai = diff
        else:
            if ai < 0:
                ai = 0.0
                aj = -diff
        if diff > 0:
            if ai > C:
                ai = C
                aj = C - diff
        else:
            if aj > C:
                aj = C
                ai = C + diff
    else:
        quad = Kii + Kjj - 2.0 * Qij
        if quad <= 0:
            quad = TAU
        delta = (Gi - Gj) / quad
        s = ai + aj
        ai -= delta
        aj += delta
        if s > C:
            if ai > C:
                ai = C
                aj = s - C
        else:
            if aj < 0:
                aj = 0.0
                ai = s
        if s > C:
            if aj > C:
                aj = C
                ai = s - C
        else:
            if ai < 0:
                ai = 0.0
                aj = s
    return ai, aj
