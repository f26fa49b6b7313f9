"""BEKK-GARCH(k1, k2) model: parameters, recursion, simulation, likelihood and score.

Conventions
-----------
``k1`` counts the GARCH lags (the ``B`` matrices acting on past covariances)
and ``k2`` the ARCH lags (the ``A`` matrices acting on past observations),
so the conditional covariance is

    H_t = C + sum_{l<=k2} A_l x_{t-l} x_{t-l}' A_l' + sum_{l<=k1} B_l H_{t-l} B_l'.

The packed parameter vector is ``(vec C, vec A_1, vec B_1, ..., vec A_kbar,
vec B_kbar)`` with absent lags skipped, so its length is m^2 (1 + k1 + k2).
Because ``C`` is symmetric its strictly upper entries are redundant; the
unpacked ``C`` is the symmetric part of the packed block, and the optimizer
works on the "free" coordinates ``(vech C, vec A_1, vec B_1, ...)``.
"""

import csv
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _kernels
from .matrix import duplication_matrix, is_positive_definite, spectral_radius, vec, vech, unvech


class NonStationaryError(ValueError):
    pass


@dataclass(frozen=True)
class BekkOrder:
    k1: int
    k2: int
    m: int = 1
    N: int = 1

    def __post_init__(self):
        if self.k1 < 0 or self.k2 < 0:
            raise ValueError(f"lag counts must be nonnegative, got ({self.k1}, {self.k2})")
        if self.m < 1:
            raise ValueError(f"dimension must be >= 1, got {self.m}")
        if self.N != 1:
            raise NotImplementedError("only N = 1 inner summands are supported")

    @property
    def kbar(self):
        return max(self.k1, self.k2)

    @property
    def gamma(self):
        return self.m * self.m * (1 + self.k1 + self.k2)

    @property
    def n_free(self):
        return self.m * (self.m + 1) // 2 + self.m * self.m * (self.k1 + self.k2)

    @property
    def lattice(self):
        return (self.k1, self.k2)


def _block_sequence(k1, k2):
    """[('A', 1), ('B', 1), ('A', 2), ...] in packing order."""
    seq = []
    for l in range(1, max(k1, k2) + 1):
        if l <= k2:
            seq.append(("A", l))
        if l <= k1:
            seq.append(("B", l))
    return seq


@lru_cache(maxsize=None)
def free_layout(m, k1, k2):
    """Per free coordinate: (kind, lag, row, col) as int arrays for the kernel."""
    kind, lag, row, col = [], [], [], []
    for j in range(m):
        for i in range(j, m):
            kind.append(0), lag.append(0), row.append(i), col.append(j)
    for name, l in _block_sequence(k1, k2):
        for c in range(m):
            for r in range(m):
                kind.append(1 if name == "A" else 2), lag.append(l), row.append(r), col.append(c)
    arrs = tuple(np.array(a, dtype=np.int64) for a in (kind, lag, row, col))
    for a in arrs:
        a.setflags(write=False)
    return arrs


@dataclass(frozen=True)
class BekkParams:
    """``C`` (m x m, symmetric PD), ``A`` (k2, m, m) and ``B`` (k1, m, m)."""

    C: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        m = C.shape[0]
        if C.shape != (m, m):
            raise ValueError(f"C must be square, got {C.shape}")
        A = np.asarray(self.A, dtype=float).reshape(-1, m, m)
        B = np.asarray(self.B, dtype=float).reshape(-1, m, m)
        C = 0.5 * (C + C.T)
        for a in (C, A, B):
            a.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def m(self):
        return self.C.shape[0]

    @property
    def k1(self):
        return self.B.shape[0]

    @property
    def k2(self):
        return self.A.shape[0]

    @property
    def order(self):
        return BekkOrder(self.k1, self.k2, self.m)

    @classmethod
    def scalar(cls, c, a=(), b=()):
        """Univariate parameters from ``c`` and the lag coefficients (not squared)."""
        return cls(np.array([[c]]), np.reshape(np.asarray(a, float), (-1, 1, 1)),
                   np.reshape(np.asarray(b, float), (-1, 1, 1)))

    # -- packing -----------------------------------------------------------

    def pack(self):
        parts = [vec(self.C)]
        for name, l in _block_sequence(self.k1, self.k2):
            parts.append(vec(self.A[l - 1] if name == "A" else self.B[l - 1]))
        return np.concatenate(parts)

    @classmethod
    def unpack(cls, theta, m, k1, k2):
        theta = np.asarray(theta, dtype=float).ravel()
        order = BekkOrder(k1, k2, m)
        if theta.size != order.gamma:
            raise ValueError(f"expected {order.gamma} parameters, got {theta.size}")
        mm = m * m
        C = theta[:mm].reshape((m, m), order="F")
        A = np.zeros((k2, m, m))
        B = np.zeros((k1, m, m))
        pos = mm
        for name, l in _block_sequence(k1, k2):
            blk = theta[pos:pos + mm].reshape((m, m), order="F")
            (A if name == "A" else B)[l - 1] = blk
            pos += mm
        return cls(C, A, B)

    def free(self):
        parts = [vech(self.C)]
        for name, l in _block_sequence(self.k1, self.k2):
            parts.append(vec(self.A[l - 1] if name == "A" else self.B[l - 1]))
        return np.concatenate(parts)

    @classmethod
    def from_free(cls, phi, m, k1, k2):
        phi = np.asarray(phi, dtype=float).ravel()
        nc = m * (m + 1) // 2
        C = unvech(phi[:nc])
        theta = np.concatenate([vec(C), phi[nc:]])
        return cls.unpack(theta, m, k1, k2)

    # -- structure ---------------------------------------------------------

    def embed(self, k1, k2):
        """Zero-pad to a larger order (nesting)."""
        if k1 < self.k1 or k2 < self.k2:
            raise ValueError(f"cannot embed order ({self.k1}, {self.k2}) into ({k1}, {k2})")
        m = self.m
        A = np.zeros((k2, m, m))
        B = np.zeros((k1, m, m))
        A[:self.k2] = self.A
        B[:self.k1] = self.B
        return BekkParams(self.C, A, B)

    def normalized(self):
        """Flip signs so the first diagonal entry of every A_l, B_l is >= 0."""
        A = np.array(self.A)
        B = np.array(self.B)
        for M in (A, B):
            for l in range(M.shape[0]):
                if M[l, 0, 0] < 0:
                    M[l] = -M[l]
        return BekkParams(self.C, A, B)

    def companion_sum(self):
        """sum_l D+ (A_l kron A_l) D + sum_l D+ (B_l kron B_l) D."""
        D, Dp = duplication_matrix(self.m)
        S = np.zeros((D.shape[1], D.shape[1]))
        for M in list(self.A) + list(self.B):
            S += Dp @ np.kron(M, M) @ D
        return S

    def stationarity_margin(self):
        if self.m == 1:
            return float(np.sum(self.A ** 2) + np.sum(self.B ** 2))
        return spectral_radius(self.companion_sum())

    def is_stationary(self):
        rho = self.stationarity_margin()
        return rho < 1.0, rho

    def to_dict(self):
        return {"m": self.m, "k1": self.k1, "k2": self.k2, "theta": self.pack().tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls.unpack(d["theta"], int(d["m"]), int(d["k1"]), int(d["k2"]))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


def is_stationary(params: BekkParams):
    """(stationary?, spectral radius) for the geometric-ergodicity condition."""
    return params.is_stationary()


def h_next(params: BekkParams, lagged_x, lagged_h):
    """One step of the recursion.

    ``lagged_x[l-1]`` is x_{t-l} (k2 entries) and ``lagged_h[l-1]`` is
    H_{t-l} (k1 entries).
    """
    m = params.m
    lagged_x = np.asarray(lagged_x, dtype=float).reshape(-1, m)
    lagged_h = np.asarray(lagged_h, dtype=float).reshape(-1, m, m)
    if lagged_x.shape[0] != params.k2 or lagged_h.shape[0] != params.k1:
        raise ValueError(f"need {params.k2} lagged observations and {params.k1} lagged covariances")
    H = np.array(params.C)
    for A, x in zip(params.A, lagged_x):
        ax = A @ x
        H += np.outer(ax, ax)
    for B, Hl in zip(params.B, lagged_h):
        H += B @ Hl @ B.T
    return 0.5 * (H + H.T)


# -- data ------------------------------------------------------------------------

@dataclass(frozen=True)
class PathSample:
    x: np.ndarray
    seed: Optional[int] = None
    burn_in: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError(f"observations must be an (n, m) array, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("observations must be finite")
        x = np.ascontiguousarray(x)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    def __len__(self):
        return self.x.shape[0]

    @property
    def m(self):
        return self.x.shape[1]

    def prefix(self, n):
        return PathSample(self.x[:n], self.seed, self.burn_in)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(self.m)])
            for row in self.x:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if not all(h == f"x{i + 1}" for i, h in enumerate(header)):
            raise ValueError(f"unexpected header {header}")
        return cls(np.array([[float(v) for v in r] for r in body if r]))


def simulate(params: BekkParams, n, seed, burn_in=500):
    """Draw a path of length ``n`` after discarding ``burn_in`` steps.

    Innovations come from a Philox generator keyed by ``seed``, drawn in
    time order, so a path is a prefix of any longer path with the same seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ok, rho = params.is_stationary()
    if not ok:
        raise NonStationaryError(f"parameters are not stationary (spectral radius {rho:.4f})")
    if not is_positive_definite(params.C):
        raise ValueError("C must be positive definite")
    rng = np.random.Generator(np.random.Philox(seed))
    eps = rng.standard_normal((burn_in + n, params.m))
    x, _ = _kernels.simulate_path(np.ascontiguousarray(params.C), np.ascontiguousarray(params.A),
                                  np.ascontiguousarray(params.B), eps)
    return PathSample(x[burn_in:], seed=seed, burn_in=burn_in)


# -- likelihood --------------------------------------------------------------------

def _x(data):
    return data.x if isinstance(data, PathSample) else PathSample(data).x


def _presample(params, x, init):
    if init == "C":
        return params.C, True
    if init == "sample":
        return x.T @ x / x.shape[0], False
    raise ValueError(f"unknown pre-sample initialization {init!r}")


def _run(params, x, want_grad, init, n_cond):
    if x.shape[1] != params.m:
        raise ValueError(f"data dimension {x.shape[1]} != model dimension {params.m}")
    kbar = params.order.kbar
    n_cond = kbar if n_cond is None else int(n_cond)
    if n_cond < kbar:
        raise ValueError(f"must condition on at least {kbar} observations, got {n_cond}")
    if x.shape[0] <= n_cond:
        raise ValueError(f"need more than {n_cond} observations")
    H0, tied = _presample(params, x, init)
    kind, lag, row, col = free_layout(params.m, params.k1, params.k2)
    return _kernels.filter_loglik(np.ascontiguousarray(params.C), np.ascontiguousarray(params.A),
                                  np.ascontiguousarray(params.B), x, np.ascontiguousarray(H0), tied,
                                  n_cond, kind, lag, row, col, want_grad)


def log_likelihood(params: BekkParams, data, init="C", n_cond=None):
    """Sum of l_t = -x'H^{-1}x/2 - log det(H)/2 over t > n_cond.

    The first ``n_cond`` observations (default: the maximum lag) are
    conditioned on and H_t = C there. Candidates compared against each other
    should share ``n_cond``; zero-padding lags then leaves the value
    unchanged. Returns ``-inf`` when some H_t is numerically singular.
    """
    ll, _, _ = _run(params, _x(data), False, init, n_cond)
    return float(ll)


def loglik_and_free_score(params: BekkParams, data, init="C", n_cond=None):
    """(log-likelihood, gradient in free coordinates, ok flag)."""
    ll, g, status = _run(params, _x(data), True, init, n_cond)
    return float(ll), g, status == _kernels.OK


def free_to_full_gradient(g_free, m, k1, k2):
    """Chain rule from free coordinates to the packed vector.

    Packed C entries (i, j) and (j, i) each move the symmetric C by half.
    """
    nc = m * (m + 1) // 2
    gC = unvech(g_free[:nc])
    gC = np.where(np.eye(m, dtype=bool), gC, 0.5 * gC)
    return np.concatenate([vec(gC), g_free[nc:]])


def score(params: BekkParams, data, init="C", n_cond=None):
    """Analytic gradient of the log-likelihood w.r.t. the packed vector (length gamma)."""
    ll, g, ok = loglik_and_free_score(params, data, init, n_cond)
    if not ok:
        raise FloatingPointError("conditional covariance became numerically singular")
    return free_to_full_gradient(g, params.m, params.k1, params.k2)


def conditional_covariances(params: BekkParams, data, n_cond=None):
    """H_t path with the pre-sample set to C (for inspection and tests)."""
    x = _x(data)
    n_cond = params.order.kbar if n_cond is None else n_cond
    out = np.empty((x.shape[0], params.m, params.m))
    for t in range(x.shape[0]):
        if t < n_cond:
            out[t] = params.C
        else:
            out[t] = h_next(params, x[t - params.k2:t][::-1], out[t - params.k1:t][::-1])
    return out
