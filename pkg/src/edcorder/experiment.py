"""Seeded Monte Carlo replication of order selection over (penalty, n) grids.

Randomness is keyed, not sequential: the data of replication ``rep`` at
sample size ``n`` come from ``SeedSequence(master_seed, spawn_key=(0, n, rep))``
and its fits from ``spawn_key=(1, n, rep)`` (the estimator further keys its
random starts by candidate order). Outputs therefore do not depend on the
number of workers or on completion order.
"""

import csv
import json
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bekk import BekkParams
from .estimator import BekkFamily, FitOptions
from .markov import MarkovFamily, MarkovSpec
from .nested import PenaltyRule, SelectionError, as_order, candidates_up_to, select_from_fits

FAILED = "failed"


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid experiment config: " + "; ".join(self.problems))


def derive_seed(master_seed, *keys):
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def package_version():
    from . import __version__
    return __version__


@dataclass
class ExperimentConfig:
    family: str
    truth: dict
    K: tuple
    penalties: list
    n_grid: list
    replications: int
    master_seed: int = 0
    output_dir: str = "experiment-out"
    workers: int = 1
    acknowledge_b5: bool = False
    fit_options: dict = field(default_factory=dict)
    burn_in: int = 500

    @classmethod
    def from_dict(cls, d):
        problems = []
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(d) - known)
        if unknown:
            problems.append(f"unknown fields: {', '.join(unknown)}")
        for req in ("family", "truth", "K", "penalties", "n_grid", "replications"):
            if req not in d:
                problems.append(f"{req}: required")
        if problems:
            raise ConfigError(problems)
        cfg = cls(**{k: v for k, v in d.items() if k in known})
        cfg.K = tuple(cfg.K) if not isinstance(cfg.K, int) else (cfg.K,)
        cfg.n_grid = list(cfg.n_grid)
        cfg.validate()
        return cfg

    def to_dict(self):
        return {"family": self.family, "truth": self.truth, "K": list(self.K),
                "penalties": self.penalties, "n_grid": list(self.n_grid),
                "replications": self.replications, "master_seed": self.master_seed,
                "output_dir": self.output_dir, "workers": self.workers,
                "acknowledge_b5": self.acknowledge_b5, "fit_options": self.fit_options,
                "burn_in": self.burn_in}

    def validate(self):
        problems = []
        if self.family not in ("bekk", "markov"):
            problems.append(f"family: expected 'bekk' or 'markov', got {self.family!r}")
        if not isinstance(self.replications, int) or self.replications < 1:
            problems.append("replications: must be an integer >= 1")
        try:
            as_order(self.K)
        except (TypeError, ValueError) as exc:
            problems.append(f"K: {exc}")
        if not self.n_grid or any(not isinstance(n, int) or n < 2 for n in self.n_grid):
            problems.append("n_grid: must be a non-empty list of integers >= 2")
        if not self.penalties:
            problems.append("penalties: at least one penalty rule is required")
        for i, p in enumerate(self.penalties):
            try:
                PenaltyRule.from_dict(p)
            except (KeyError, TypeError, ValueError) as exc:
                problems.append(f"penalties[{i}]: {exc}")
        if not isinstance(self.workers, int) or self.workers < 1:
            problems.append("workers: must be an integer >= 1")
        if not problems:
            try:
                fam = self.make_family()
                truth = self.make_truth()
                if len(as_order(self.K)) != fam.q:
                    problems.append(f"K: needs {fam.q} coordinates")
                if self.family == "bekk":
                    ok, rho = truth.is_stationary()
                    if not ok:
                        problems.append(f"truth: not stationary (spectral radius {rho:.4f})")
            except (KeyError, TypeError, ValueError) as exc:
                problems.append(f"truth/fit_options: {exc}")
        if problems:
            raise ConfigError(problems)

    def make_family(self):
        if self.family == "bekk":
            return BekkFamily(int(self.truth["m"]), FitOptions.from_dict(self.fit_options))
        return MarkovFamily(len(self.truth["transitions"][0]))

    def make_truth(self):
        if self.family == "bekk":
            return BekkParams.from_dict(self.truth)
        return MarkovSpec.from_dict(self.truth)

    def rules(self):
        return [PenaltyRule.from_dict(p) for p in self.penalties]


def _replicate(unit, config):
    """One (n, replication) cell: simulate, fit all candidates, select under each rule."""
    n, rep = unit
    family = config.make_family()
    truth = config.make_truth()
    data_seed = derive_seed(config.master_seed, 0, n, rep)
    fit_seed = derive_seed(config.master_seed, 1, n, rep)
    if config.family == "bekk":
        data = family.simulate(truth, n, data_seed, burn_in=config.burn_in)
    else:
        data = family.simulate(truth, n, data_seed)
    fits = family.fit_candidates(data, candidates_up_to(config.K), seed=fit_seed)
    out = []
    for rule in config.rules():
        meta = {"replication": rep, "data_seed": data_seed}
        try:
            rep_dict = select_from_fits(fits, family.sample_size(data), rule, family.gamma,
                                        seed=fit_seed, meta=meta).to_dict()
        except SelectionError as exc:
            rep_dict = {"n": n, "penalty": rule.name, "chosen": None, "seed": fit_seed,
                        "meta": meta, "error": str(exc),
                        "candidates": [{"order": list(f.order), "status": f.status} for f in fits]}
        out.append(rep_dict)
    return out


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reports: list
    table: list

    def frequency(self, penalty, n, order):
        key = _order_label(order) if order != FAILED else FAILED
        for row in self.table:
            if row["penalty"] == penalty and row["n"] == n and row["order"] == key:
                return row["frequency"]
        raise KeyError((penalty, n, order))


def _order_label(k):
    return "(" + ",".join(str(c) for c in as_order(k)) + ")"


def _frequency_table(config, reports):
    orders = candidates_up_to(config.K)
    table = []
    for rule in config.rules():
        for n in config.n_grid:
            chosen = [r["chosen"] for r in reports if r["penalty"] == rule.name and r["n"] == n]
            counts = Counter(FAILED if c is None else tuple(c) for c in chosen)
            total = len(chosen)
            for k in orders:
                table.append({"penalty": rule.name, "n": n, "order": _order_label(k),
                              "frequency": counts.get(k, 0) / total})
            if counts.get(FAILED):
                table.append({"penalty": rule.name, "n": n, "order": FAILED,
                              "frequency": counts[FAILED] / total})
    return table


def check_output_dir(path):
    probe = os.path.join(path, ".write-probe")
    try:
        os.makedirs(path, exist_ok=True)
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        raise ConfigError([f"output_dir: not writable ({exc})"]) from exc


def run_experiment(config: ExperimentConfig, workers=None) -> ExperimentResult:
    """Run every (n, replication) unit and tabulate selection frequencies."""
    workers = config.workers if workers is None else workers
    units = [(n, rep) for n in config.n_grid for rep in range(config.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_replicate, units, [config] * len(units)))
    else:
        chunks = [_replicate(u, config) for u in units]
    reports = [r for chunk in chunks for r in chunk]
    # reports stay in (n, replication, penalty) order whatever the worker count
    return ExperimentResult(config, reports, _frequency_table(config, reports))


# where and how fast a run executes do not change its results, so they stay out of the manifest
_RUN_LOCAL = ("output_dir", "workers")


def manifest(config: ExperimentConfig):
    echo = {k: v for k, v in config.to_dict().items() if k not in _RUN_LOCAL}
    return {"config": echo, "library": "edcorder", "version": package_version(),
            "master_seed": config.master_seed}


def emit_report(result: ExperimentResult, output_dir=None):
    """Write frequency.csv, reports.jsonl and manifest.json; returns their paths."""
    out = output_dir or result.config.output_dir
    check_output_dir(out)
    paths = {name: os.path.join(out, name)
             for name in ("frequency.csv", "reports.jsonl", "manifest.json")}
    with open(paths["frequency.csv"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["penalty", "n", "order", "frequency"])
        for row in result.table:
            w.writerow([row["penalty"], row["n"], row["order"], repr(float(row["frequency"]))])
    with open(paths["reports.jsonl"], "w") as fh:
        for r in result.reports:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    with open(paths["manifest.json"], "w") as fh:
        json.dump(manifest(result.config), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return paths


def config_from_manifest(path):
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh)["config"])


def load_config(path):
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def frequencies_are_distributions(table, tol=1e-12):
    sums = Counter()
    for row in table:
        sums[(row["penalty"], row["n"])] += row["frequency"]
    return all(math.isclose(v, 1.0, abs_tol=tol) for v in sums.values())
