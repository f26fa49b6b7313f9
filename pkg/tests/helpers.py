"""Random parameter generators and numerical derivatives shared by the tests."""

import math

import numpy as np

from edcorder.bekk import BekkParams, log_likelihood

from oracles import random_spd


def random_params(rng, m, k1, k2, rho=0.9):
    """Random stationary parameters with spectral radius about ``rho``."""
    C = random_spd(m, rng) * 0.2
    A = rng.standard_normal((k2, m, m)) * 0.3
    B = rng.standard_normal((k1, m, m)) * 0.3
    for l in range(k1):
        B[l] += 0.5 * np.eye(m)
    p = BekkParams(C, A, B)
    r = p.stationarity_margin()
    if r > rho:
        s = math.sqrt(rho / r)
        p = BekkParams(C, A * s, B * s)
    return p


def fd_score(p, x, n_cond, rel=1e-5):
    """Central differences of the log-likelihood in the packed coordinates."""
    theta = p.pack()
    g = np.empty_like(theta)
    for i in range(theta.size):
        h = rel * max(abs(theta[i]), 1e-2)
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        f = lambda t: log_likelihood(BekkParams.unpack(t, p.m, p.k1, p.k2), x, n_cond=n_cond)
        g[i] = (f(up) - f(dn)) / (2 * h)
    return g
