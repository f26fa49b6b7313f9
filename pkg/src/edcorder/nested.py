"""Order lattice, penalty sequences and EDC order selection.

A candidate order is a tuple of nonnegative integers compared componentwise.
For each candidate ``k`` the criterion is ``-log L(k) + c_n * gamma(k)`` and
the selected order is the minimiser, ties going to the smaller parameter
count and then to the lexicographically smaller order.
"""

import enum
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Sequence

import numpy as np


class Relation(enum.Enum):
    EQUAL = "equal"
    LESS_EQUAL = "less-equal"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"


class SelectionError(RuntimeError):
    """Raised when no candidate order produced a usable fit."""


def as_order(k) -> tuple:
    if isinstance(k, (int, np.integer)):
        k = (int(k),)
    k = tuple(int(c) for c in k)
    if not k:
        raise ValueError("an order needs at least one coordinate")
    if any(c < 0 for c in k):
        raise ValueError(f"order coordinates must be nonnegative, got {k}")
    return k


def compare(k, p) -> Relation:
    """Componentwise relation of ``k`` to ``p``."""
    k, p = as_order(k), as_order(p)
    if len(k) != len(p):
        raise ValueError(f"cannot compare orders of different dimension: {k} vs {p}")
    if k == p:
        return Relation.EQUAL
    if all(a <= b for a, b in zip(k, p)):
        return Relation.LESS_EQUAL
    if all(a >= b for a, b in zip(k, p)):
        return Relation.GREATER
    return Relation.INCOMPARABLE


def leq(k, p) -> bool:
    return compare(k, p) in (Relation.EQUAL, Relation.LESS_EQUAL)


def candidates_up_to(K) -> list:
    """All orders ``k <= K`` in lexicographic order."""
    K = as_order(K)
    return [tuple(c) for c in itertools.product(*(range(b + 1) for b in K))]


# -- penalties ---------------------------------------------------------------

_E_E = math.exp(math.e)


def classify_penalty(alpha, beta, delta=0.0, epsilon=0.0) -> str:
    """Strong-consistency class of ``c_n = alpha n^beta (log n)^delta (loglog n)^epsilon``.

    Returns ``"consistent"`` when c_n / n -> 0 and c_n / loglog n -> inf,
    decided on the exponents. Boundary cases of exact loglog order are
    classified ``"not-consistent"``.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    sublinear = beta < 1 or (beta == 1 and (delta < 0 or (delta == 0 and epsilon < 0)))
    beats_loglog = beta > 0 or (beta == 0 and (delta > 0 or (delta == 0 and epsilon > 1)))
    return "consistent" if (sublinear and beats_loglog) else "not-consistent"


@dataclass(frozen=True)
class PenaltyRule:
    """Penalty sequence ``c_n = alpha * n^beta * (log n)^delta * (loglog n)^epsilon``.

    The loglog factor is evaluated at ``max(n, e^e)`` so that c_n stays
    positive for every n >= 2; the asymptotic class is unaffected.
    """

    alpha: float
    beta: float = 0.0
    delta: float = 0.0
    epsilon: float = 0.0
    name: str = ""

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"penalty scale must be positive, got {self.alpha}")
        if not self.name:
            object.__setattr__(self, "name", self._default_name())

    def _default_name(self):
        if (self.alpha, self.beta, self.delta, self.epsilon) == (0.5, 0, 1, 0):
            return "bic"
        if (self.beta, self.delta, self.epsilon) == (0, 0, 0):
            return f"constant({self.alpha:g})"
        return f"powerlog({self.alpha:g},{self.beta:g},{self.delta:g},{self.epsilon:g})"

    @classmethod
    def bic(cls):
        return cls(0.5, 0.0, 1.0, 0.0, name="bic")

    @classmethod
    def aic(cls):
        # -2 log L + 2 gamma, halved
        return cls(1.0, name="aic")

    @classmethod
    def constant(cls, value):
        return cls(float(value))

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind", "powerlog").lower()
        if kind == "bic":
            return cls.bic()
        if kind == "aic":
            return cls.aic()
        if kind == "constant":
            return cls.constant(d["value"])
        if kind == "powerlog":
            return cls(float(d["alpha"]), float(d.get("beta", 0)), float(d.get("delta", 0)),
                       float(d.get("epsilon", 0)), name=d.get("name", ""))
        raise ValueError(f"unknown penalty kind {kind!r}")

    def to_dict(self):
        return {"kind": "powerlog", "alpha": self.alpha, "beta": self.beta,
                "delta": self.delta, "epsilon": self.epsilon, "name": self.name}

    @property
    def consistency(self):
        return classify_penalty(self.alpha, self.beta, self.delta, self.epsilon)

    def __call__(self, n):
        if n < 2:
            raise ValueError(f"penalty undefined for n < 2 (got {n})")
        c = self.alpha
        if self.beta:
            c *= n ** self.beta
        if self.delta:
            c *= math.log(n) ** self.delta
        if self.epsilon:
            c *= math.log(math.log(max(n, _E_E))) ** self.epsilon
        return c


def edc_score(loglik, n, k, rule, gamma):
    """``-loglik + c_n * gamma(k)``; ``gamma`` is a callable or an already computed count."""
    g = gamma(k) if callable(gamma) else gamma
    return -loglik + rule(n) * g


# -- model families ------------------------------------------------------------

@dataclass
class FitOutcome:
    """What a family returns for one candidate order."""

    order: tuple
    loglik: float
    theta: Optional[np.ndarray] = None
    status: str = "converged"
    info: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status != "failed" and math.isfinite(self.loglik)


class NestedModelFamily:
    """Interface for a class of partially nested models.

    Subclasses define ``q``, ``gamma``, ``fit``, ``simulate`` and
    ``sample_size``. ``fit_candidates`` may be overridden to share work
    between candidate fits (e.g. warm starts).
    """

    q: int = 1

    def gamma(self, k) -> int:
        raise NotImplementedError

    def fit(self, data, k, seed=None) -> FitOutcome:
        raise NotImplementedError

    def simulate(self, theta, n, seed):
        raise NotImplementedError

    def sample_size(self, data) -> int:
        return len(data)

    def fit_candidates(self, data, orders, seed=None) -> list:
        return [self.fit(data, k, seed=seed) for k in orders]


# -- selection -------------------------------------------------------------------

@dataclass
class CandidateRecord:
    order: tuple
    loglik: float
    gamma: int
    c_n: float
    score: float
    status: str


@dataclass
class SelectionReport:
    n: int
    penalty: str
    candidates: list
    chosen: tuple
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def record(self, k):
        k = as_order(k)
        for c in self.candidates:
            if c.order == k:
                return c
        raise KeyError(k)

    def to_dict(self):
        d = asdict(self)
        d["chosen"] = list(self.chosen)
        for c in d["candidates"]:
            c["order"] = list(c["order"])
            for key in ("loglik", "score"):
                if not math.isfinite(c[key]):
                    c[key] = None
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _tie_key(rec):
    return (rec.score, rec.gamma, rec.order)


def select_from_fits(fits: Sequence[FitOutcome], n, rule, gamma, seed=None, meta=None):
    """Score already-fitted candidates and pick the EDC minimiser."""
    c_n = rule(n)
    records = []
    for f in fits:
        g = int(gamma(f.order))
        score = -f.loglik + c_n * g if f.ok else math.inf
        records.append(CandidateRecord(tuple(f.order), float(f.loglik) if f.ok else math.nan,
                                       g, c_n, float(score), f.status))
    usable = [r for r in records if math.isfinite(r.score)]
    if not usable:
        raise SelectionError("no candidate order produced a usable fit")
    chosen = min(usable, key=_tie_key).order
    return SelectionReport(n=int(n), penalty=rule.name, candidates=records, chosen=chosen,
                           seed=seed, meta=dict(meta or {}))


def select_order(family: NestedModelFamily, data, K, rule: PenaltyRule, seed=None) -> SelectionReport:
    """Fit every candidate ``k <= K`` and return the EDC selection report."""
    K = as_order(K)
    if len(K) != family.q:
        raise ValueError(f"search bound {K} does not match lattice dimension {family.q}")
    orders = candidates_up_to(K)
    fits = family.fit_candidates(data, orders, seed=seed)
    return select_from_fits(fits, family.sample_size(data), rule, family.gamma, seed=seed)


def report_from_dict(d: dict[str, Any]) -> SelectionReport:
    cands = [CandidateRecord(tuple(c["order"]), math.nan if c["loglik"] is None else c["loglik"],
                             c["gamma"], c["c_n"], math.inf if c["score"] is None else c["score"],
                             c["status"]) for c in d["candidates"]]
    return SelectionReport(n=d["n"], penalty=d["penalty"], candidates=cands,
                           chosen=tuple(d["chosen"]), seed=d.get("seed"), meta=d.get("meta", {}))
