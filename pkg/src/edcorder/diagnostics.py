"""Traces over growing sample sizes for the assumptions behind EDC consistency.

Every trace simulates one path per seed at the largest grid size and uses its
prefixes for the smaller sizes, so each seed follows a single realisation as
n grows. Fits go through ``family.fit_candidates`` on all orders below the
componentwise maximum of the orders involved, the same call
``select_order`` makes.
"""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .nested import as_order, candidates_up_to, compare, Relation

DEFAULT_GRID = (500, 1000, 2000, 4000, 8000)


@dataclass
class DiagnosticTrace:
    statistic: str
    n_grid: np.ndarray
    seeds: list
    values: np.ndarray
    status: np.ndarray
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n_grid = np.asarray(self.n_grid, dtype=int)
        if np.any(np.diff(self.n_grid) <= 0):
            raise ValueError("the n grid must be strictly increasing")

    def median(self):
        return np.array([np.nanmedian(row) if np.any(np.isfinite(row)) else math.nan
                         for row in self.values])

    def spread(self):
        """Per grid point (min, median, max) over seeds, ignoring failures."""
        out = []
        for row in self.values:
            ok = row[np.isfinite(row)]
            out.append((ok.min(), np.median(ok), ok.max()) if ok.size else (math.nan,) * 3)
        return np.array(out)

    def rows(self):
        for i, n in enumerate(self.n_grid):
            for j, seed in enumerate(self.seeds):
                yield self.statistic, int(n), int(seed), float(self.values[i, j]), str(self.status[i, j])

    def to_csv(self, path, append=False):
        with open(path, "a" if append else "w", newline="") as fh:
            w = csv.writer(fh)
            if not append:
                w.writerow(["statistic", "n", "seed", "value", "status"])
            for stat, n, seed, value, status in self.rows():
                w.writerow([stat, n, seed, repr(value), status])


def _prefix(data, n):
    if hasattr(data, "prefix"):
        return data.prefix(n)
    return data[:n]


def _loglog(n):
    return math.log(math.log(n))


def _join(*orders):
    return tuple(max(c) for c in zip(*(as_order(k) for k in orders)))


def _fit_pair(family, data, orders, seed):
    """Log-likelihoods (and estimates) of ``orders`` from one fit_candidates call."""
    grid = candidates_up_to(_join(*orders))
    fits = {f.order: f for f in family.fit_candidates(data, grid, seed=seed)}
    return [fits[as_order(k)] for k in orders]


def _run_columns(column_fn, seeds, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(column_fn, seeds))
    return [column_fn(s) for s in seeds]


def _assemble(statistic, n_grid, seeds, columns, extra_keys=()):
    g, S = len(n_grid), len(seeds)
    values = np.full((g, S), math.nan)
    status = np.empty((g, S), dtype=object)
    extras = {key: np.full((g, S), math.nan) for key in extra_keys}
    for j, col in enumerate(columns):
        for i, cell in enumerate(col):
            values[i, j] = cell["value"]
            status[i, j] = cell["status"]
            for key in extra_keys:
                extras[key][i, j] = cell.get(key, math.nan)
    return DiagnosticTrace(statistic, np.asarray(n_grid), list(seeds), values, status, extras)


def _failed(exc):
    return {"value": math.nan, "status": f"failed: {type(exc).__name__}"}


# -- normalised observed information -------------------------------------------------

def _hessian_column(seed, family, theta_true, k, n_grid):
    data = family.simulate(theta_true, max(n_grid), seed)
    cells = []
    prev = None
    for n in n_grid:
        d = _prefix(data, n)
        try:
            (f,) = family.fit_candidates(d, [k], seed=seed)
            if not f.ok:
                raise FloatingPointError(f.status)
            A = -family.hessian(d, f.theta, k) / n
            lam = float(np.linalg.eigvalsh(A)[0])
            step = math.nan if prev is None else float(np.linalg.norm(A - prev))
            cells.append({"value": lam, "status": "ok", "frobenius_step": step,
                          "entry_00": float(A[0, 0])})
            prev = A
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            cells.append(_failed(exc))
            prev = None
    return cells


def hessian_trace(family, theta_true, k, n_grid=DEFAULT_GRID, seeds=range(10), workers=1):
    """-(Hessian of log L at the fitted parameters)/n per grid point.

    ``values`` holds the smallest eigenvalue; ``extras["frobenius_step"]`` the
    Frobenius distance to the previous grid point of the same seed and
    ``extras["entry_00"]`` the leading entry (the whole matrix for m = 1,
    order (0, 0)).
    """
    k = as_order(k)
    r = family.order_of(theta_true)
    if compare(k, r) not in (Relation.EQUAL, Relation.GREATER):
        raise ValueError(f"order {k} does not dominate the true order {r}")
    fn = partial(_hessian_column, family=family, theta_true=theta_true, k=k, n_grid=tuple(n_grid))
    cols = _run_columns(fn, list(seeds), workers)
    return _assemble("hessian_min_eig", n_grid, list(seeds), cols, ("frobenius_step", "entry_00"))


# -- score at the true parameter on the iterated-logarithm scale ---------------------

def _score_column(seed, family, theta_true, k, n_grid):
    data = family.simulate(theta_true, max(n_grid), seed)
    theta_k = family.embed(theta_true, k)
    cells = []
    for n in n_grid:
        try:
            g = family.score(_prefix(data, n), theta_k, k)
            cells.append({"value": float(np.linalg.norm(g) / math.sqrt(2 * n * _loglog(n))),
                          "status": "ok"})
        except (ValueError, FloatingPointError) as exc:
            cells.append(_failed(exc))
    return cells


def score_lil_trace(family, theta_true, k, n_grid=DEFAULT_GRID, seeds=range(10), workers=1):
    """||score(theta_true)|| / sqrt(2 n loglog n); ``extras["grid_max"]`` repeats each seed's max."""
    k = as_order(k)
    fn = partial(_score_column, family=family, theta_true=theta_true, k=k, n_grid=tuple(n_grid))
    cols = _run_columns(fn, list(seeds), workers)
    tr = _assemble("score_lil", n_grid, list(seeds), cols)
    tr.extras["grid_max"] = np.broadcast_to(np.nanmax(tr.values, axis=0), tr.values.shape).copy()
    return tr


# -- likelihood gaps for under- and over-fitted orders ----------------------------

def _gap_column(seed, family, theta_true, k, n_grid, scale):
    r = family.order_of(theta_true)
    data = family.simulate(theta_true, max(n_grid), seed)
    cells = []
    for n in n_grid:
        d = _prefix(data, n)
        try:
            if as_order(k) == r:
                cells.append({"value": 0.0, "status": "ok"})
                continue
            fr, fk = _fit_pair(family, d, [r, k], seed)
            if not (fr.ok and fk.ok):
                raise FloatingPointError("fit failed")
            denom = n if scale == "n" else _loglog(n)
            sign = 1.0 if scale == "n" else -1.0
            cells.append({"value": sign * (fr.loglik - fk.loglik) / denom, "status": "ok"})
        except (ValueError, FloatingPointError) as exc:
            cells.append(_failed(exc))
    return cells


def underfit_gap_trace(family, theta_true, k, n_grid=DEFAULT_GRID, seeds=range(10), workers=1):
    """(log L_r(hat theta_r) - log L_k(hat theta_k)) / n for an order k not >= r."""
    k = as_order(k)
    r = family.order_of(theta_true)
    if k != r and compare(k, r) in (Relation.GREATER,):
        raise ValueError(f"order {k} dominates the true order {r}; use overfit_gap_trace")
    fn = partial(_gap_column, family=family, theta_true=theta_true, k=k, n_grid=tuple(n_grid),
                 scale="n")
    return _assemble("underfit_gap", n_grid, list(seeds), _run_columns(fn, list(seeds), workers))


def overfit_gap_trace(family, theta_true, k, n_grid=DEFAULT_GRID, seeds=range(10), workers=1):
    """(log L_k(hat theta_k) - log L_r(hat theta_r)) / loglog n for an order k > r."""
    k = as_order(k)
    r = family.order_of(theta_true)
    if compare(k, r) is not Relation.GREATER:
        raise ValueError(f"order {k} must strictly dominate the true order {r}")
    fn = partial(_gap_column, family=family, theta_true=theta_true, k=k, n_grid=tuple(n_grid),
                 scale="loglog")
    return _assemble("overfit_gap", n_grid, list(seeds), _run_columns(fn, list(seeds), workers))
