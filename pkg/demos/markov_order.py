"""Choosing the order of a binary Markov chain with penalised likelihood.

Run with ``python3 demos/markov_order.py``; it finishes in a few seconds.
"""

# %%
import numpy as np

from edcorder import MarkovFamily, MarkovSpec, PenaltyRule, select_order

# An order-2 chain: P(next | x[t-2], x[t-1]), contexts coded 2*x[t-2] + x[t-1].
truth = MarkovSpec([[0.95, 0.05], [0.35, 0.65], [0.65, 0.35], [0.05, 0.95]])
family = MarkovFamily(alphabet=2)
print("true order:", family.order_of(truth), " parameters:", truth.gamma)

# %%
# One path, every order 0..4 fitted in closed form, scored under BIC and AIC.
x = family.simulate(truth, 2000, seed=1)
for rule in (PenaltyRule.bic(), PenaltyRule.aic()):
    rep = select_order(family, x, 4, rule)
    print(f"\n{rule.name}: c_n = {rule(len(x)):.3f}, chosen order {rep.chosen}")
    print(f"{'k':>3} {'gamma':>6} {'log L':>12} {'EDC':>12}")
    for c in rep.candidates:
        print(f"{c.order[0]:>3} {c.gamma:>6} {c.loglik:>12.3f} {c.score:>12.3f}")

# %%
# Selection frequency of the true order as n grows (50 paths per n).
for n in (250, 1000, 4000):
    hits = np.mean([select_order(family, family.simulate(truth, n, seed=s), 4,
                                 PenaltyRule.bic()).chosen == (2,) for s in range(50)])
    print(f"n={n:5d}: BIC picks order 2 in {hits:.0%} of paths")
