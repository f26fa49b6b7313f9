"""Traces of the quantities behind consistency, over a growing n grid.

Run with ``python3 demos/assumption_traces.py``; it takes about a minute.
"""

# %%
import numpy as np

from edcorder import BekkFamily, BekkParams, MarkovFamily, MarkovSpec
from edcorder.diagnostics import hessian_trace, overfit_gap_trace, underfit_gap_trace

grid = (500, 1000, 2000, 4000)

# %%
# Underfitting costs a fixed amount per observation: the gap divided by n
# settles at a positive constant.
chain = MarkovSpec([[0.9, 0.1], [0.2, 0.8]])
under = underfit_gap_trace(MarkovFamily(2), chain, (0,), n_grid=grid, seeds=range(20))
print("underfit gap / n, median over seeds:", np.round(under.median(), 4))

# %%
# Overfitting gains only O(log log n): the gain divided by log log n stays bounded.
iid = MarkovSpec([[0.3, 0.7]])
over = overfit_gap_trace(MarkovFamily(2), iid, (1,), n_grid=grid, seeds=range(400))
print("overfit gain / loglog n, median:     ", np.round(over.median(), 4))

# %%
# The normalised observed information at the fit stays positive definite;
# for i.i.d. N(0, c) data it tends to 1 / (2 c^2).
c = 0.5
info = hessian_trace(BekkFamily(1), BekkParams.scalar(c), (0, 0), n_grid=grid, seeds=range(5))
print("information per observation, median: ", np.round(info.median(), 4), " limit", 1 / (2 * c * c))
garch = hessian_trace(BekkFamily(1), BekkParams.scalar(0.1, [0.3], [0.6]), (1, 1),
                      n_grid=grid, seeds=range(3))
print("BEKK(1,1) smallest eigenvalue, min:  ", np.round(garch.spread()[:, 0], 5))
