"""Finite-alphabet Markov chains of order k as a nested model family.

A context of length k, (x_{t-k}, ..., x_{t-1}), is encoded as the base-s
integer with x_{t-1} as the least significant digit, so transition matrices
have shape (s**k, s). Fitting is closed form and conditions on the first k
symbols.
"""

import csv
from dataclasses import dataclass

import numpy as np
from numba import njit

from .nested import FitOutcome, NestedModelFamily, as_order

MAX_ALPHABET = 8


@dataclass(frozen=True)
class MarkovSpec:
    """Transition probabilities ``P[context, symbol]`` of an order-k chain."""

    P: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        s = P.shape[1]
        if not 2 <= s <= MAX_ALPHABET:
            raise ValueError(f"alphabet size must be in [2, {MAX_ALPHABET}], got {s}")
        k = round(np.log(P.shape[0]) / np.log(s))
        if s ** k != P.shape[0]:
            raise ValueError(f"{P.shape[0]} rows is not a power of the alphabet size {s}")
        if np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError("each row must be a probability vector")
        P = P.copy()
        P.setflags(write=False)
        object.__setattr__(self, "P", P)

    @property
    def alphabet(self):
        return self.P.shape[1]

    @property
    def order(self):
        return round(np.log(self.P.shape[0]) / np.log(self.alphabet))

    @property
    def gamma(self):
        return markov_gamma(self.order, self.alphabet)

    def embed(self, k):
        """The same chain written as an order-k chain (k >= current order)."""
        s, r = self.alphabet, self.order
        if k < r:
            raise ValueError(f"cannot write an order-{r} chain with order {k}")
        codes = np.arange(s ** k) % (s ** r)
        return MarkovSpec(self.P[codes])

    def to_dict(self):
        return {"alphabet": self.alphabet, "order": self.order, "transitions": self.P.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["transitions"], dtype=float))


def markov_gamma(k, s):
    return s ** k * (s - 1)


@njit(cache=True)
def _simulate(P, k, s, init, u):
    n = u.shape[0]
    out = np.empty(n, dtype=np.int64)
    nctx = s ** k
    code = 0
    for t in range(n):
        if t < k:
            a = init[t]
        else:
            a = s - 1
            acc = 0.0
            for j in range(s):
                acc += P[code, j]
                if u[t] < acc:
                    a = j
                    break
        out[t] = a
        if k > 0:
            code = (code * s + a) % nctx
    return out


def markov_simulate(spec: MarkovSpec, n, seed):
    """Length-n path; the first k symbols are uniform over the alphabet."""
    rng = np.random.Generator(np.random.Philox(seed))
    k, s = spec.order, spec.alphabet
    init = rng.integers(0, s, size=k)
    u = rng.random(n)
    return _simulate(np.ascontiguousarray(spec.P), k, s, init.astype(np.int64), u)


def _codes(x, k, s):
    n = x.size
    code = np.zeros(n - k, dtype=np.int64)
    for j in range(k):
        code = code * s + x[j:n - k + j]
    return code


def transition_counts(x, k, s):
    """Counts N[context, symbol] over positions k+1..n."""
    x = np.asarray(x, dtype=np.int64)
    if x.size <= k:
        raise ValueError(f"need more than {k} symbols")
    idx = _codes(x, k, s) * s + x[k:]
    return np.bincount(idx, minlength=s ** k * s).reshape(s ** k, s)


def markov_fit(x, k, s=None):
    """Closed-form MLE: returns (P_hat, maximised log-likelihood).

    Contexts that never occur get a uniform row; they add nothing to the
    likelihood.
    """
    x = np.asarray(x, dtype=np.int64)
    s = int(x.max()) + 1 if s is None else int(s)
    s = max(s, 2)
    if x.min() < 0 or x.max() >= s:
        raise ValueError(f"symbols must lie in [0, {s})")
    N = transition_counts(x, k, s).astype(float)
    rows = N.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        P = np.where(rows > 0, N / rows, 1.0 / s)
        terms = np.where(N > 0, N * np.log(np.where(N > 0, N, 1.0) / np.where(rows > 0, rows, 1.0)), 0.0)
    return P, float(terms.sum())


def markov_loglik(x, spec: MarkovSpec):
    """Conditional log-likelihood of ``x`` under ``spec`` (first k symbols given)."""
    k, s = spec.order, spec.alphabet
    N = transition_counts(x, k, s)
    with np.errstate(divide="ignore"):
        logP = np.log(spec.P)
    if np.any((N > 0) & (spec.P == 0)):
        return -np.inf
    return float(np.sum(N[N > 0] * logP[N > 0]))


class MarkovFamily(NestedModelFamily):
    """Order-k chains on a fixed alphabet (one-dimensional lattice)."""

    q = 1

    def __init__(self, alphabet=2):
        if not 2 <= alphabet <= MAX_ALPHABET:
            raise ValueError(f"alphabet size must be in [2, {MAX_ALPHABET}]")
        self.alphabet = int(alphabet)

    def gamma(self, k):
        (k,) = as_order(k)
        return markov_gamma(k, self.alphabet)

    def fit(self, data, k, seed=None):
        (k,) = as_order(k)
        P, ll = markov_fit(data, k, self.alphabet)
        return FitOutcome((k,), ll, P, "exact")

    def simulate(self, theta, n, seed):
        spec = theta if isinstance(theta, MarkovSpec) else MarkovSpec(theta)
        return markov_simulate(spec, n, seed)

    def order_of(self, theta):
        spec = theta if isinstance(theta, MarkovSpec) else MarkovSpec(theta)
        return (spec.order,)

    def loglik(self, data, theta, k=None, n_cond=None):
        spec = theta if isinstance(theta, MarkovSpec) else MarkovSpec(theta)
        return markov_loglik(data, spec)


def write_sequence_csv(x, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["symbol"])
        for a in np.asarray(x, dtype=np.int64):
            w.writerow([int(a)])


def read_sequence_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    body = rows[1:] if rows and not rows[0][0].lstrip("-").isdigit() else rows
    return np.array([int(r[0]) for r in body if r], dtype=np.int64)
