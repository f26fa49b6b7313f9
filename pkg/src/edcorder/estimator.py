"""Constrained maximum-likelihood fitting of BEKK parameters.

The feasible set is

    C positive definite, det C > c_floor,
    spectral radius of the companion sum < rho_max,
    every free coordinate within +-entry_bound,

handled with a logarithmic barrier on the first two constraints and step
rejection for the rest. Each barrier stage is minimised with BFGS on the
per-observation negative log-likelihood; a short Newton polish with a
finite-difference Hessian of the analytic score finishes each start.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .bekk import BekkOrder, BekkParams, PathSample, loglik_and_free_score, free_to_full_gradient
from .nested import FitOutcome, NestedModelFamily, as_order, leq


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 300
    gtol: float = 1e-6
    n_starts: int = 5
    start_scale: float = 0.5
    rho_max: float = 0.999
    c_floor: float = 1e-10
    entry_bound: float = 1e3
    barrier: tuple = (1e-4, 1e-6, 1e-8)
    newton_steps: int = 20
    seed: int = 0
    init: str = "C"

    def __post_init__(self):
        if not self.rho_max < 1:
            raise ValueError("rho_max must be < 1")
        if self.n_starts < 1:
            raise ValueError("need at least one start")
        object.__setattr__(self, "barrier", tuple(float(b) for b in self.barrier))

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: (tuple(v) if k == "barrier" else v) for k, v in d.items()})

    def to_dict(self):
        d = asdict(self)
        d["barrier"] = list(self.barrier)
        return d


@dataclass
class FitResult:
    order: tuple
    m: int
    theta: np.ndarray
    loglik: float
    status: str
    grad_norm: float
    best_start: int
    iterations: int
    starts: list = field(default_factory=list)

    @property
    def params(self):
        return BekkParams.unpack(self.theta, self.m, *self.order)

    @property
    def ok(self):
        return self.status != "failed" and math.isfinite(self.loglik)

    def to_dict(self):
        return {"order": list(self.order), "m": self.m, "theta": [float(v) for v in self.theta],
                "loglik": self.loglik if math.isfinite(self.loglik) else None,
                "status": self.status, "grad_norm": self.grad_norm, "best_start": self.best_start,
                "iterations": self.iterations}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def outcome(self):
        return FitOutcome(self.order, self.loglik, self.theta, self.status,
                          {"grad_norm": self.grad_norm, "best_start": self.best_start,
                           "iterations": self.iterations})


class _Problem:
    """Barrier objective over free coordinates for one (data, order)."""

    def __init__(self, x, order: BekkOrder, options: FitOptions, n_cond):
        self.x = x
        self.order = order
        self.opt = options
        self.n_cond = n_cond
        self.n_eff = x.shape[0] - n_cond
        self.nc = order.m * (order.m + 1) // 2

    def params(self, phi):
        o = self.order
        return BekkParams.from_free(phi, o.m, o.k1, o.k2)

    def rho_and_grad(self, p, phi):
        m = self.order.m
        rho = p.stationarity_margin()
        g = np.zeros_like(phi)
        if m == 1:
            g[self.nc:] = 2.0 * phi[self.nc:]
            return rho, g
        h = 1e-7
        for i in range(self.nc, phi.size):
            e = np.zeros_like(phi)
            e[i] = h
            g[i] = (self.params(phi + e).stationarity_margin()
                    - self.params(phi - e).stationarity_margin()) / (2 * h)
        return rho, g

    def constraints(self, phi):
        """(ok, detC, rho, p) with ok False outside the hard feasible set."""
        if not np.all(np.isfinite(phi)) or np.max(np.abs(phi)) > self.opt.entry_bound:
            return False, None, None, None
        p = self.params(phi)
        try:
            np.linalg.cholesky(p.C)
        except np.linalg.LinAlgError:
            return False, None, None, p
        detC = float(np.linalg.det(p.C))
        rho = p.stationarity_margin()
        if not (detC > self.opt.c_floor and rho < self.opt.rho_max):
            return False, detC, rho, p
        return True, detC, rho, p

    def loglik(self, phi, want_grad=True):
        ok, _, _, p = self.constraints(phi)
        if not ok:
            return -math.inf, None
        ll, g, fine = loglik_and_free_score(p, self.x, self.opt.init, self.n_cond)
        if not fine or not math.isfinite(ll):
            return -math.inf, None
        return ll, g

    def objective(self, phi, mu):
        """Barrier objective and gradient (both per observation)."""
        ok, detC, rho, p = self.constraints(phi)
        if not ok:
            return math.inf, None
        ll, g, fine = loglik_and_free_score(p, self.x, self.opt.init, self.n_cond)
        if not fine or not math.isfinite(ll):
            return math.inf, None
        f = -ll / self.n_eff
        grad = -g / self.n_eff
        if mu > 0:
            slack_r = self.opt.rho_max - rho
            slack_c = detC - self.opt.c_floor
            f -= mu * (math.log(slack_r) + math.log(slack_c))
            _, grho = self.rho_and_grad(p, phi)
            Cinv = np.linalg.inv(p.C)
            gdet = np.zeros_like(phi)
            k = 0
            m = self.order.m
            for j in range(m):
                for i in range(j, m):
                    gdet[k] = detC * Cinv[i, j] * (1.0 if i == j else 2.0)
                    k += 1
            grad = grad + mu * grho / slack_r - mu * gdet / slack_c
        return f, grad


def _bfgs(problem, phi, mu, max_iter, gtol):
    """Minimise the barrier objective; returns (phi, f, converged, iterations)."""
    f, g = problem.objective(phi, mu)
    if not math.isfinite(f):
        return phi, f, False, 0
    d = phi.size
    Hinv = np.eye(d)
    scaled = False
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) <= gtol:
            return phi, f, True, it - 1
        p = -Hinv @ g
        slope = float(g @ p)
        if slope >= 0:
            Hinv = np.eye(d)
            p = -g
            slope = float(g @ p)
        step = 1.0
        # keep the first trial step modest in parameter space
        pmax = np.max(np.abs(p))
        if pmax > 0.5:
            step = 0.5 / pmax
        accepted = False
        for _ in range(50):
            trial = phi + step * p
            ft, gt = problem.objective(trial, mu)
            if math.isfinite(ft) and ft <= f + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return phi, f, np.max(np.abs(g)) <= 10 * gtol, it
        s = trial - phi
        y = gt - g
        sy = float(s @ y)
        if sy > 1e-14:
            if not scaled:
                Hinv = np.eye(d) * (sy / float(y @ y))
                scaled = True
            rho = 1.0 / sy
            V = np.eye(d) - rho * np.outer(s, y)
            Hinv = V @ Hinv @ V.T + rho * np.outer(s, s)
        phi, f, g = trial, ft, gt
    return phi, f, np.max(np.abs(g)) <= gtol, max_iter


def _fd_hessian(problem, phi):
    """Central differences of the analytic score; None if a probe is infeasible."""
    d = phi.size
    Hs = np.empty((d, d))
    for i in range(d):
        h = 1e-5 * max(abs(phi[i]), 1e-2)
        e = np.zeros(d)
        e[i] = h
        _, gp = problem.loglik(phi + e)
        _, gm = problem.loglik(phi - e)
        if gp is None or gm is None:
            return None
        Hs[:, i] = (gp - gm) / (2 * h)
    return 0.5 * (Hs + Hs.T)


def _newton_polish(problem, phi, steps):
    """Newton ascent on the barrier-free log-likelihood with an FD Hessian.

    Hessian eigenvalues are replaced by -|lambda| ("saddle-free" Newton), so
    directions of positive curvature are climbed rather than descended.
    Near a zero lag block the score vanishes linearly in the block, and each
    such step roughly doubles the block until the curvature turns negative.
    """
    ll, g = problem.loglik(phi)
    if not math.isfinite(ll):
        return phi, ll
    for _ in range(steps):
        Hs = _fd_hessian(problem, phi)
        if Hs is None:
            return phi, ll
        w, V = np.linalg.eigh(Hs)
        scale = np.maximum(np.abs(w), 1e-10 * max(np.abs(w).max(), 1e-300))
        delta = V @ ((V.T @ g) / scale)
        step = 1.0
        improved = False
        for _ in range(20):
            trial = phi + step * delta
            lt, gt = problem.loglik(trial)
            if math.isfinite(lt) and lt > ll:
                improved = True
                break
            step *= 0.5
        if not improved:
            return phi, ll
        gain = lt - ll
        phi, ll, g = trial, lt, gt
        if gain < 1e-12 * max(1.0, abs(ll)):
            break
    return phi, ll


def _start_points(x, order: BekkOrder, options: FitOptions, rng):
    """Random feasible starts: C from the sample covariance, diagonal A/B."""
    m = order.m
    S = x.T @ x / x.shape[0]
    S = 0.5 * (S + S.T) + 1e-8 * np.trace(S) / m * np.eye(m)
    nlag = order.k1 + order.k2
    n = options.n_starts if nlag > 0 else 1
    starts = []
    for _ in range(n):
        A = np.zeros((order.k2, m, m))
        B = np.zeros((order.k1, m, m))
        if nlag:
            hi = options.start_scale / math.sqrt(nlag)
            for M in (A, B):
                for l in range(M.shape[0]):
                    M[l] = np.diag(rng.uniform(0.0, hi, m))
        starts.append(BekkParams(S, A, B))
    return starts


def _escape_saddle(problem, phi, ll):
    """A better point along a direction of positive curvature, or None.

    Lag coefficients enter the likelihood through products such as b*b, so
    a zero lag block is always a stationary point; when the likelihood
    still increases in that block, the point is a saddle that a gradient
    method approaches but cannot leave once the gradient is below tolerance.
    """
    Hs = _fd_hessian(problem, phi)
    if Hs is None:
        return None
    w, V = np.linalg.eigh(Hs)
    if not w[-1] > 1e-8 * max(np.abs(w).max(), 1.0):
        return None
    best = None
    for t in (0.3, 0.1, 0.03, 0.01):
        for sign in (1.0, -1.0):
            trial = phi + sign * t * V[:, -1]
            lt, _ = problem.loglik(trial, want_grad=False)
            if math.isfinite(lt) and lt > ll + 1e-9 * max(1.0, abs(ll)) and (best is None or lt > best[1]):
                best = (trial, lt)
        if best is not None:
            return best[0]
    return None


def _run_start(problem, phi0, options, max_escapes=2):
    phi = np.array(phi0, dtype=float)
    iters = 0
    converged = False
    for mu in options.barrier:
        phi, f, converged, it = _bfgs(problem, phi, mu, options.max_iter, options.gtol)
        iters += it
        if not math.isfinite(f):
            return phi, -math.inf, "failed", iters
    phi, ll = _newton_polish(problem, phi, options.newton_steps)
    for _ in range(max_escapes):
        out = _escape_saddle(problem, phi, ll)
        if out is None:
            break
        cand, f, conv, it = _bfgs(problem, out, options.barrier[-1], options.max_iter, options.gtol)
        iters += it
        if not math.isfinite(f):
            break
        cand, lc = _newton_polish(problem, cand, options.newton_steps)
        if not lc > ll:
            break
        phi, ll, converged = cand, lc, conv
    status = "converged" if converged else "max_iter"
    return phi, ll, status, iters


def _data_x(data):
    return data.x if isinstance(data, PathSample) else PathSample(data).x


def fit(data, order, options: Optional[FitOptions] = None, warm_starts=(), anchors=(),
        seed=None, n_cond=None) -> FitResult:
    """Best-of-starts constrained MLE for one order.

    ``order`` is a ``BekkOrder`` or a lattice point ``(k1, k2)`` (then the
    dimension is taken from the data). ``warm_starts`` are extra
    ``BekkParams`` of this order optimized before the random starts.
    ``anchors`` are only evaluated: the returned log-likelihood is never below
    that of a feasible anchor or warm start. ``n_cond`` observations are
    conditioned on (default: the order's maximum lag).
    """
    options = options or FitOptions()
    x = _data_x(data)
    if not isinstance(order, BekkOrder):
        k1, k2 = as_order(order)
        order = BekkOrder(k1, k2, x.shape[1])
    n_cond = order.kbar if n_cond is None else int(n_cond)
    if n_cond < order.kbar:
        raise ValueError(f"must condition on at least {order.kbar} observations")
    if x.shape[0] <= n_cond + order.gamma:
        raise ValueError(f"{x.shape[0]} observations are too few for order {order.lattice}")
    problem = _Problem(x, order, options, n_cond)
    seed = options.seed if seed is None else seed
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(order.k1, order.k2)))
    starts = list(warm_starts) + _start_points(x, order, options, rng)

    best = None
    records = []
    for idx, p0 in enumerate(starts):
        phi0 = p0.free()
        ll0, _ = problem.loglik(phi0, want_grad=False)
        phi, ll, status, iters = _run_start(problem, phi0, options)
        if idx < len(warm_starts) and math.isfinite(ll0) and not ll >= ll0:
            phi, ll, status = phi0, ll0, "warm-start"
        records.append({"start": idx, "loglik": ll if math.isfinite(ll) else None,
                        "status": status, "iterations": iters})
        if math.isfinite(ll) and (best is None or ll > best[1]):
            best = (phi, ll, status, idx, iters)

    for p0 in anchors:
        phi0 = p0.free()
        ll0, _ = problem.loglik(phi0, want_grad=False)
        records.append({"start": "anchor", "loglik": ll0 if math.isfinite(ll0) else None,
                        "status": "anchor", "iterations": 0})
        if math.isfinite(ll0) and (best is None or ll0 > best[1]):
            best = (phi0, ll0, "warm-start", -1, 0)

    if best is None:
        zeros = np.zeros(order.gamma)
        return FitResult(order.lattice, order.m, zeros, -math.inf, "failed", math.inf, -1,
                         sum(r["iterations"] for r in records), records)
    phi, ll, status, idx, iters = best
    p = problem.params(phi).normalized()
    _, g_free, _ = loglik_and_free_score(p, x, options.init, n_cond)
    gnorm = float(np.max(np.abs(g_free))) / problem.n_eff
    # an embedded smaller-order optimum is itself a stationary point of this
    # order, so the status follows the gradient test whichever start won
    if status in ("max_iter", "warm-start") and gnorm <= 10 * options.gtol:
        status = "converged"
    return FitResult(order.lattice, order.m, p.pack(), float(ll), status, gnorm, idx, iters, records)


def _perturbed_embedding(params: BekkParams, order: BekkOrder, options: FitOptions, eps=0.1):
    """Zero-padded embedding with new lags nudged off the zero saddle."""
    base = params.embed(order.k1, order.k2)
    m = order.m
    A = np.array(base.A)
    B = np.array(base.B)
    for M, k_old in ((A, params.k2), (B, params.k1)):
        for l in range(k_old, M.shape[0]):
            M[l] = eps * np.eye(m)
    cand = BekkParams(base.C, A, B)
    while cand.stationarity_margin() >= options.rho_max and eps > 1e-6:
        eps *= 0.5
        for M, k_old in ((A, params.k2), (B, params.k1)):
            for l in range(k_old, M.shape[0]):
                M[l] = eps * np.eye(m)
        cand = BekkParams(base.C, A, B)
    return base, cand


def profile_fit_sequence(data, orders, options: Optional[FitOptions] = None, seed=None,
                         n_cond=None):
    """Fit each order, warm-starting from the best already-fitted smaller order.

    Orders are fitted smallest first (by coordinate sum, then
    lexicographically) so that every order sees all its fitted predecessors,
    and results come back in the order given. Random starts are keyed by
    order, so the output does not depend on how ``orders`` is arranged. All
    fits condition on the same ``n_cond`` observations (default: the largest
    maximum lag in ``orders``), which makes the likelihoods exactly nested.
    """
    options = options or FitOptions()
    x = _data_x(data)
    m = x.shape[1]
    orders = [as_order(k) for k in orders]
    if n_cond is None:
        n_cond = max(max(k) for k in orders)
    done = {}
    for k in sorted(set(orders), key=lambda k: (sum(k), k)):
        order = BekkOrder(k[0], k[1], m)
        preds = [r for kk, r in done.items() if kk != k and leq(kk, k) and r.ok]
        warm, anchors = [], []
        if preds:
            best = max(preds, key=lambda r: (r.loglik, [-c for c in r.order]))
            base, nudged = _perturbed_embedding(best.params, order, options)
            warm, anchors = [nudged], [base]
        try:
            res = fit(x, order, options, warm_starts=warm, anchors=anchors, seed=seed,
                      n_cond=n_cond)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            res = FitResult(order.lattice, m, np.zeros(order.gamma), -math.inf, "failed",
                            math.inf, -1, 0, [{"error": str(exc)}])
        done[k] = res
    return [done[k] for k in orders]


class BekkFamily(NestedModelFamily):
    """BEKK-GARCH models on the (k1, k2) lattice for a fixed dimension."""

    q = 2

    def __init__(self, m=1, options: Optional[FitOptions] = None):
        self.m = int(m)
        self.options = options or FitOptions()

    def gamma(self, k):
        k1, k2 = as_order(k)
        return BekkOrder(k1, k2, self.m).gamma

    def sample_size(self, data):
        return len(_data_x(data))

    def fit(self, data, k, seed=None):
        return self.fit_candidates(data, [k], seed=seed)[0]

    def fit_candidates(self, data, orders, seed=None):
        return [r.outcome() for r in profile_fit_sequence(data, orders, self.options, seed=seed)]

    def simulate(self, theta, n, seed, burn_in=500):
        from .bekk import simulate
        return simulate(self._params(theta), n, seed, burn_in=burn_in)

    def _params(self, theta, k=None):
        if isinstance(theta, BekkParams):
            return theta
        if k is None:
            raise ValueError("a packed parameter vector needs its order (k1, k2)")
        k1, k2 = as_order(k)
        return BekkParams.unpack(theta, self.m, k1, k2)

    def order_of(self, theta):
        return self._params(theta).order.lattice

    def embed(self, theta, k):
        k1, k2 = as_order(k)
        return self._params(theta).embed(k1, k2)

    def loglik(self, data, theta, k=None, n_cond=None):
        from .bekk import log_likelihood
        return log_likelihood(self._params(theta, k), data, self.options.init, n_cond)

    def score(self, data, theta, k=None, n_cond=None):
        from .bekk import score
        return score(self._params(theta, k), data, self.options.init, n_cond)

    def hessian(self, data, theta, k=None, n_cond=None, rel_step=1e-4):
        """Central-difference Hessian of log L in free (identifiable) coordinates."""
        p = self._params(theta, k)
        x = _data_x(data)
        phi = p.free()
        d = phi.size
        Hs = np.empty((d, d))
        for i in range(d):
            h = rel_step * max(abs(phi[i]), 1e-2)
            e = np.zeros(d)
            e[i] = h
            _, gp, ok1 = loglik_and_free_score(BekkParams.from_free(phi + e, p.m, p.k1, p.k2), x,
                                               self.options.init, n_cond)
            _, gm, ok2 = loglik_and_free_score(BekkParams.from_free(phi - e, p.m, p.k1, p.k2), x,
                                               self.options.init, n_cond)
            if not (ok1 and ok2):
                raise FloatingPointError("Hessian probe left the feasible region")
            Hs[:, i] = (gp - gm) / (2 * h)
        return 0.5 * (Hs + Hs.T)


__all__ = ["FitOptions", "FitResult", "fit", "profile_fit_sequence", "BekkFamily",
           "free_to_full_gradient"]
