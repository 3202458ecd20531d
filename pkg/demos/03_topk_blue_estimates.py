"""Noisy top-k with gaps, and the BLUE post-processing win.

Select the top k counting queries with half the budget, measure them with
the other half, then fold the free gaps into the measurements.  For
monotonic counting queries the mean squared error drops by (k-1)/(2k),
i.e. 45% at k=10; one-sided exponential selection noise reaches 60%.
"""

import numpy as np

from gapdp import BlueInput, Laplace, QuerySet, SeededSource, blue_topk, gap_topk, sample

rng = np.random.default_rng(0)
n, k, eps = 60, 10, 0.7
true = np.sort(rng.integers(1_000, 200_000, size=n))[::-1].astype(float)
queries = QuerySet(tuple(true), monotonic=True)

for noise, lam in (("laplace", 1.0), ("exponential", 0.5)):
    meas_kind = Laplace(2.0 * k / eps)
    sq_alpha = sq_beta = 0.0
    trials = 4000
    for trial in range(trials):
        src = SeededSource(trial)
        # Counting queries: running at parameter eps costs only eps/2.
        selection = gap_topk(queries, k, eps, noise, src)
        alphas = [true[j] + sample(meas_kind, src) for j in selection.indices]
        betas = blue_topk(BlueInput(tuple(alphas), selection.gaps[: k - 1], lam))
        for j, alpha, beta in zip(selection.indices, alphas, betas):
            sq_alpha += (alpha - true[j]) ** 2
            sq_beta += (beta - true[j]) ** 2
    reduction = 100.0 * (1.0 - sq_beta / sq_alpha)
    theory = 100.0 * (1.0 - (1.0 + lam * k) / (k + lam * k))
    print(f"{noise:12s} lam={lam}: MSE reduction {reduction:5.1f}%  (theory {theory:.1f}%)")

print("\nOne seeded run in detail (laplace):")
src = SeededSource(42)
selection = gap_topk(queries, k, eps, "laplace", src)
meas_kind = Laplace(2.0 * k / eps)
alphas = [true[j] + sample(meas_kind, src) for j in selection.indices]
betas = blue_topk(BlueInput(tuple(alphas), selection.gaps[: k - 1], 1.0))
print(f"{'rank':>4} {'index':>5} {'true':>10} {'measured':>10} {'blue':>10}")
for rank, (j, alpha, beta) in enumerate(zip(selection.indices, alphas, betas), start=1):
    print(f"{rank:>4} {j:>5} {true[j]:>10.0f} {alpha:>10.0f} {beta:>10.0f}")
