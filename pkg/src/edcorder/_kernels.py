"""Compiled inner loops for the BEKK covariance recursion.

Parameter coordinates used here are the *free* coordinates: vech(C)
followed by vec(A_l) / vec(B_l) blocks in packing order. Each coordinate is
described by (kind, lag, row, col) with kind 0 = C, 1 = A, 2 = B.
"""

import numpy as np
from numba import njit

DET_FLOOR = 1e-300
COND_CAP = 1e12

OK = 0
SINGULAR = 1


@njit(cache=True, inline="always")
def _cholesky(H, t, L):
    m = L.shape[0]
    for j in range(m):
        s = H[t, j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return False
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, m):
            s = H[t, i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / L[j, j]
        for i in range(j):
            L[i, j] = 0.0
    return True


@njit(cache=True, inline="always")
def _chol_inverse(L, Linv, Hinv):
    m = L.shape[0]
    # Linv lower triangular, Hinv = Linv' Linv
    for i in range(m):
        Linv[i, i] = 1.0 / L[i, i]
        for j in range(i):
            s = 0.0
            for k in range(j, i):
                s -= L[i, k] * Linv[k, j]
            Linv[i, j] = s / L[i, i]
    for i in range(m):
        for j in range(m):
            s = 0.0
            for k in range(max(i, j), m):
                s += Linv[k, i] * Linv[k, j]
            Hinv[i, j] = s


@njit(cache=True)
def _sandwich_add(out, M, X):
    """out += M X M'"""
    m = M.shape[0]
    for i in range(m):
        for j in range(m):
            s = 0.0
            for p in range(m):
                mip = M[i, p]
                if mip == 0.0:
                    continue
                for q in range(m):
                    s += mip * X[p, q] * M[j, q]
            out[i, j] += s


@njit(cache=True)
def filter_loglik(C, A, B, x, H0, dH0_is_dC, n_cond, kind, lag, row, col, want_grad):
    """Run the recursion; return (loglik, free gradient, status).

    H_t = H0 for t < n_cond (n_cond >= max lag) and those observations are
    conditioned on. When ``dH0_is_dC`` the pre-sample derivative is dC,
    otherwise zero.
    """
    n, m = x.shape
    k2 = A.shape[0]
    k1 = B.shape[0]
    d = kind.shape[0]
    nd = d if want_grad else 0

    H = np.empty((n, m, m))
    dH = np.zeros((n, nd, m, m))
    L = np.zeros((m, m))
    Hinv = np.zeros((m, m))
    Linv = np.zeros((m, m))
    u = np.zeros(m)
    grad = np.zeros(d)
    Ax = np.zeros((k2 + 1, m))
    v = np.zeros(m)
    ll = 0.0

    for t in range(n):
        if t < n_cond:
            for i in range(m):
                for j in range(m):
                    H[t, i, j] = H0[i, j]
            if want_grad and dH0_is_dC:
                for k in range(d):
                    if kind[k] == 0:
                        r = row[k]
                        c = col[k]
                        dH[t, k, r, c] += 1.0
                        if r != c:
                            dH[t, k, c, r] += 1.0
            continue
        for i in range(m):
            for j in range(m):
                H[t, i, j] = C[i, j]
        for l in range(1, k2 + 1):
            for i in range(m):
                s = 0.0
                for j in range(m):
                    s += A[l - 1, i, j] * x[t - l, j]
                Ax[l, i] = s
            for i in range(m):
                for j in range(m):
                    H[t, i, j] += Ax[l, i] * Ax[l, j]
        for l in range(1, k1 + 1):
            for i in range(m):
                for j in range(m):
                    s = 0.0
                    for p in range(m):
                        for q in range(m):
                            s += B[l - 1, i, p] * H[t - l, p, q] * B[l - 1, j, q]
                    H[t, i, j] += s

        if want_grad:
            for k in range(d):
                r = row[k]
                c = col[k]
                lg = lag[k]
                kd = kind[k]
                if kd == 0:
                    dH[t, k, r, c] += 1.0
                    if r != c:
                        dH[t, k, c, r] += 1.0
                elif kd == 1:
                    xc = x[t - lg, c]
                    for p in range(m):
                        dH[t, k, r, p] += xc * Ax[lg, p]
                        dH[t, k, p, r] += xc * Ax[lg, p]
                else:
                    # v = B_lg H_{t-lg}[:, c]
                    for p in range(m):
                        s = 0.0
                        for q in range(m):
                            s += B[lg - 1, p, q] * H[t - lg, q, c]
                        v[p] = s
                    for p in range(m):
                        dH[t, k, r, p] += v[p]
                        dH[t, k, p, r] += v[p]
                for l in range(1, k1 + 1):
                    for i in range(m):
                        for j in range(m):
                            s = 0.0
                            for p in range(m):
                                for q in range(m):
                                    s += B[l - 1, i, p] * dH[t - l, k, p, q] * B[l - 1, j, q]
                            dH[t, k, i, j] += s

        if not _cholesky(H, t, L):
            return -np.inf, grad, SINGULAR
        logdet = 0.0
        lmin = L[0, 0]
        lmax = L[0, 0]
        for i in range(m):
            logdet += 2.0 * np.log(L[i, i])
            lmin = min(lmin, L[i, i])
            lmax = max(lmax, L[i, i])
        # cheap conditioning proxy from the Cholesky diagonal
        if logdet < np.log(DET_FLOOR) or (lmax / lmin) ** 2 > COND_CAP:
            return -np.inf, grad, SINGULAR
        _chol_inverse(L, Linv, Hinv)
        quad = 0.0
        for i in range(m):
            s = 0.0
            for j in range(m):
                s += Hinv[i, j] * x[t, j]
            u[i] = s
            quad += s * x[t, i]
        ll += -0.5 * quad - 0.5 * logdet

        if want_grad:
            for k in range(d):
                a = 0.0
                b = 0.0
                for i in range(m):
                    for j in range(m):
                        a += u[i] * dH[t, k, i, j] * u[j]
                        b += Hinv[j, i] * dH[t, k, i, j]
                grad[k] += 0.5 * (a - b)

    return ll, grad, OK


@njit(cache=True)
def simulate_path(C, A, B, eps):
    """x_t = H_t^{1/2} eps_t, with H_t = C and x_t = C^{1/2} eps_t before the max lag."""
    n, m = eps.shape
    k2 = A.shape[0]
    k1 = B.shape[0]
    kbar = max(k1, k2)
    H = np.empty((n, m, m))
    x = np.empty((n, m))
    Ax = np.zeros(m)
    for t in range(n):
        Ht = H[t]
        Ht[:, :] = C
        if t >= kbar:
            for l in range(1, k2 + 1):
                al = A[l - 1]
                xl = x[t - l]
                for i in range(m):
                    s = 0.0
                    for j in range(m):
                        s += al[i, j] * xl[j]
                    Ax[i] = s
                for i in range(m):
                    for j in range(m):
                        Ht[i, j] += Ax[i] * Ax[j]
            for l in range(1, k1 + 1):
                _sandwich_add(Ht, B[l - 1], H[t - l])
        if m == 1:
            x[t, 0] = np.sqrt(Ht[0, 0]) * eps[t, 0]
        else:
            Hs = 0.5 * (Ht + Ht.T)
            w, V = np.linalg.eigh(Hs)
            for i in range(m):
                if w[i] < 0.0:
                    w[i] = 0.0
            # symmetric root V diag(sqrt w) V' applied to eps_t
            z = V.T @ eps[t].copy()
            for i in range(m):
                z[i] *= np.sqrt(w[i])
            xt = V @ z
            for i in range(m):
                x[t, i] = xt[i]
    return x, H
