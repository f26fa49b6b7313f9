"""Experiment configurations shared by the acceptance suite and its pilots."""

# order-2 binary chain; rows are P(. | context), context code = 2*x[t-2] + x[t-1].
# Contexts that differ only in the older symbol differ by 0.3 in P(1 | context).
ORDER2_CHAIN = {"transitions": [[0.95, 0.05], [0.35, 0.65], [0.65, 0.35], [0.05, 0.95]]}

MARKOV_TREND = {
    "family": "markov", "truth": ORDER2_CHAIN, "K": [4], "penalties": [{"kind": "bic"}],
    "n_grid": [500, 2000, 8000], "replications": 200, "master_seed": 20240501,
}

BEKK_TREND = {
    "family": "bekk", "truth": {"m": 1, "k1": 1, "k2": 1, "theta": [0.1, 0.3, 0.6]},
    "K": [2, 2], "penalties": [{"kind": "bic"}], "n_grid": [1000, 4000], "replications": 100,
    "master_seed": 20240601, "acknowledge_b5": True, "fit_options": {"n_starts": 2},
}

ORDER0_CHAIN = {"transitions": [[0.3, 0.7]]}


def penalty_contrast(batch):
    """One 200-replication batch of the constant-penalty versus BIC contrast."""
    return {
        "family": "markov", "truth": ORDER0_CHAIN, "K": [3],
        "penalties": [{"kind": "constant", "value": 1.0}, {"kind": "bic"}],
        "n_grid": [8000], "replications": 200, "master_seed": 7000 + batch,
    }
