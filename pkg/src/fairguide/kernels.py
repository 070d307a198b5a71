"""Full-batch gradient-descent training loops.

This is the hot path: the simulation driver refits student and teacher
models hundreds of times per run. Each kernel exists twice with the
same contract:

    train_gd_numpy  vectorized numpy
    train_gd_numba  loop-style twin compiled with @njit

``train_gd`` dispatches to whichever one ``fairguide.backends`` chose.

Objective (full batch, n examples, width d):

    mean BCE(p_i, y_i) + l2 * ||w||^2 + penalty_weight * gap^2

where p_i = sigmoid(w.x_i + b), the bias is unregularized, and
gap = mean(p | z=1) - mean(p | z=0). The penalty block is skipped
entirely when penalty_weight == 0, so a plain fit and a fair fit with
zero penalty run byte-identical arithmetic.

Probabilities are clamped to [1e-12, 1-1e-12] inside the loss only;
gradients use the raw sigmoid output. If an epoch would increase the
objective the step is halved and stays halved for the rest of the fit.
"""

import numpy as np

from .backends import ACTIVE_BACKEND

PCLIP = 1e-12
GRAD_TOL = 1e-10
STEP_FLOOR = 1e-18


def train_gd_numpy(X, y, z, lr, epochs, l2, penalty_weight):
    """Vectorized trainer. Returns (w, b, objective_trace)."""
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    step = lr
    pw = penalty_weight
    z1 = z.astype(bool)
    z0 = ~z1
    n1 = int(z1.sum())
    n0 = n - n1

    def forward(w, b):
        s = X @ w + b
        p = np.empty_like(s)
        pos = s >= 0
        p[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
        e = np.exp(s[~pos])
        p[~pos] = e / (1.0 + e)
        return p

    def objective(w, b, p):
        pc = np.clip(p, PCLIP, 1.0 - PCLIP)
        obj = -np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
        obj += l2 * np.dot(w, w)
        if pw > 0.0:
            gap = p[z1].mean() - p[z0].mean()
            obj += pw * gap * gap
        return obj

    trace = np.empty(epochs + 1)
    p = forward(w, b)
    obj = objective(w, b, p)
    trace[0] = obj

    used = 0
    for e in range(epochs):
        r = p - y
        gw = X.T @ r / n + 2.0 * l2 * w
        gb = r.mean()
        if pw > 0.0:
            gap = p[z1].mean() - p[z0].mean()
            s = p * (1.0 - p)
            gap_w = X[z1].T @ s[z1] / n1 - X[z0].T @ s[z0] / n0
            gap_b = s[z1].mean() - s[z0].mean()
            gw += pw * 2.0 * gap * gap_w
            gb += pw * 2.0 * gap * gap_b
        if max(np.abs(gw).max(), abs(gb)) < GRAD_TOL:
            break

        w2 = w - step * gw
        b2 = b - step * gb
        p2 = forward(w2, b2)
        obj2 = objective(w2, b2, p2)
        while obj2 > obj and step > STEP_FLOOR:
            step *= 0.5
            w2 = w - step * gw
            b2 = b - step * gb
            p2 = forward(w2, b2)
            obj2 = objective(w2, b2, p2)
        if obj2 > obj:
            break
        w, b, p, obj = w2, b2, p2, obj2
        used = e + 1
        trace[used] = obj

    return w, b, trace[: used + 1]


def _train_gd_loop(X, y, z, lr, epochs, l2, penalty_weight):
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    step = lr
    pw = penalty_weight
    n1 = 0
    for i in range(n):
        if z[i] > 0.5:
            n1 += 1
    n0 = n - n1

    p = np.empty(n)
    p2 = np.empty(n)
    gw = np.empty(d)
    gap_w = np.empty(d)
    w2 = np.empty(d)
    trace = np.empty(epochs + 1)

    def _forward(wv, bv, out):
        for i in range(n):
            s = bv
            for j in range(d):
                s += X[i, j] * wv[j]
            if s >= 0.0:
                out[i] = 1.0 / (1.0 + np.exp(-s))
            else:
                e = np.exp(s)
                out[i] = e / (1.0 + e)

    def _objective(wv, pv):
        acc = 0.0
        for i in range(n):
            pc = pv[i]
            if pc < PCLIP:
                pc = PCLIP
            elif pc > 1.0 - PCLIP:
                pc = 1.0 - PCLIP
            acc += -(y[i] * np.log(pc) + (1.0 - y[i]) * np.log(1.0 - pc))
        obj = acc / n
        ww = 0.0
        for j in range(d):
            ww += wv[j] * wv[j]
        obj += l2 * ww
        if pw > 0.0:
            m1 = 0.0
            m0 = 0.0
            for i in range(n):
                if z[i] > 0.5:
                    m1 += pv[i]
                else:
                    m0 += pv[i]
            gap = m1 / n1 - m0 / n0
            obj += pw * gap * gap
        return obj

    _forward(w, b, p)
    obj = _objective(w, p)
    trace[0] = obj

    used = 0
    for e in range(epochs):
        for j in range(d):
            gw[j] = 0.0
        gb = 0.0
        for i in range(n):
            r = p[i] - y[i]
            for j in range(d):
                gw[j] += r * X[i, j]
            gb += r
        for j in range(d):
            gw[j] = gw[j] / n + 2.0 * l2 * w[j]
        gb /= n
        if pw > 0.0:
            m1 = 0.0
            m0 = 0.0
            for j in range(d):
                gap_w[j] = 0.0
            gap_b1 = 0.0
            gap_b0 = 0.0
            for i in range(n):
                s = p[i] * (1.0 - p[i])
                if z[i] > 0.5:
                    m1 += p[i]
                    gap_b1 += s
                    for j in range(d):
                        gap_w[j] += s * X[i, j] / n1
                else:
                    m0 += p[i]
                    gap_b0 += s
                    for j in range(d):
                        gap_w[j] -= s * X[i, j] / n0
            gap = m1 / n1 - m0 / n0
            for j in range(d):
                gw[j] += pw * 2.0 * gap * gap_w[j]
            gb += pw * 2.0 * gap * (gap_b1 / n1 - gap_b0 / n0)

        gmax = abs(gb)
        for j in range(d):
            if abs(gw[j]) > gmax:
                gmax = abs(gw[j])
        if gmax < GRAD_TOL:
            break

        for j in range(d):
            w2[j] = w[j] - step * gw[j]
        b2 = b - step * gb
        _forward(w2, b2, p2)
        obj2 = _objective(w2, p2)
        while obj2 > obj and step > STEP_FLOOR:
            step *= 0.5
            for j in range(d):
                w2[j] = w[j] - step * gw[j]
            b2 = b - step * gb
            _forward(w2, b2, p2)
            obj2 = _objective(w2, p2)
        if obj2 > obj:
            break
        for j in range(d):
            w[j] = w2[j]
        b = b2
        for i in range(n):
            p[i] = p2[i]
        obj = obj2
        used = e + 1
        trace[used] = obj

    return w, b, trace[: used + 1]


try:
    from numba import njit

    train_gd_numba = njit(cache=True)(_train_gd_loop)
except ImportError:  # pragma: no cover - exercised via FAIRGUIDE_BACKEND
    train_gd_numba = None


def train_gd(X, y, z, lr, epochs, l2, penalty_weight=0.0):
    """Train on the active backend. Inputs are float64 arrays;
    z holds 0/1 group flags (ignored when penalty_weight == 0)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if ACTIVE_BACKEND == "numba":
        return train_gd_numba(
            X, y, z, float(lr), int(epochs), float(l2), float(penalty_weight)
        )
    return train_gd_numpy(
        X, y, z, float(lr), int(epochs), float(l2), float(penalty_weight)
    )
