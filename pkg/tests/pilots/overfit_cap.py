"""Pilot for the cap on the BEKK overfit statistic.

Traces (log L_(2,1) - log L_(1,1)) / log log n on the default grid for 20
seeds of the scalar model (c, a, b) = (0.1, 0.3, 0.6) and fixes the cap at
twice the largest observed value, rounded up to one decimal. Writes
tests/golden/overfit_cap.json.

    python3 tests/pilots/overfit_cap.py
"""

import json
import math
import os

import numpy as np

from edcorder.bekk import BekkParams
from edcorder.diagnostics import DEFAULT_GRID, overfit_gap_trace
from edcorder.estimator import BekkFamily, FitOptions

HERE = os.path.dirname(os.path.abspath(__file__))
TRUTH = (0.1, 0.3, 0.6)
SEEDS = range(20)


def main():
    fam = BekkFamily(1, FitOptions(n_starts=2))
    tr = overfit_gap_trace(fam, BekkParams.scalar(TRUTH[0], [TRUTH[1]], [TRUTH[2]]), (2, 1),
                           n_grid=DEFAULT_GRID, seeds=SEEDS)
    observed = float(np.nanmax(tr.values))
    out = {"truth": TRUTH, "order": [2, 1], "n_grid": list(DEFAULT_GRID), "seeds": list(SEEDS),
           "values": tr.values.tolist(), "status": tr.status.tolist(),
           "observed_max": observed, "cap": math.ceil(20 * observed) / 10}
    with open(os.path.join(os.path.dirname(HERE), "golden", "overfit_cap.json"), "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print("median per n:", np.round(tr.median(), 4), "max", observed, "cap", out["cap"])


if __name__ == "__main__":
    main()
