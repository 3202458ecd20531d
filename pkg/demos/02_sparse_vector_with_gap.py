"""Sparse vector with free gaps: classic scan, adaptive scan, and confidence.

The scan reports which queries clear a noisy threshold.  Releasing the noisy
margin (gap) costs nothing extra, and the adaptive variant answers
far-above-threshold queries at half cost, stretching the same budget over
more answers.
"""

from gapdp import (
    QuerySet,
    SeededSource,
    SvtConfig,
    adaptive_svt,
    gap_svt,
    lower_confidence_t,
    theta_optimal,
)

values = tuple(float(v) for v in (812, 1190, 410, 1003, 120, 950, 660, 1500, 77, 905))
queries = QuerySet(values, monotonic=True)  # counting queries
threshold = 900.0
eps, k = 0.7, 3
theta = theta_optimal(k, branch="middle", monotonic=True)
print(f"threshold {threshold}, eps {eps}, k {k}, theta {theta:.3f}\n")

cfg = SvtConfig(epsilon=eps, k=k, threshold=threshold, theta=theta, monotonic=True)
result = gap_svt(queries, cfg, SeededSource(7))
print("== gap-SVT scan ==")
for item in result.items:
    if item.above:
        estimate = item.gap + threshold
        print(
            f"query {item.index}: ABOVE, gap {item.gap:8.2f} -> estimate {estimate:8.2f}"
            f" (true {values[item.index]:.0f}), charged {item.budget_used:.4f}"
        )
    else:
        print(f"query {item.index}: below")
print(f"budget: consumed {result.ledger.consumed:.4f} of {eps}, remaining {result.ledger.remaining:.4f}")

# A 95% lower bound on how far the true answer sits above the threshold:
# the gap randomness is query noise minus threshold noise.
t95 = lower_confidence_t(0.95, cfg.eps0, cfg.eps1)
first = result.above_items()[0]
print(f"\nwith 95% confidence, query {first.index} is at least "
      f"{first.gap - t95:.1f} above the threshold (t95 = {t95:.1f})")

print("\n== adaptive scan at the same budget ==")
acfg = SvtConfig(
    epsilon=eps, k=k, threshold=threshold, theta=theta, monotonic=True, adaptive=True
)
aresult = adaptive_svt(queries, acfg, SeededSource(7))
for item in aresult.above_items():
    print(f"query {item.index}: {item.branch:6s} branch, gap {item.gap:8.2f}, "
          f"charged {item.budget_used:.4f}")
print(f"answers: {len(aresult.above_items())} vs {len(result.above_items())} classic; "
      f"remaining budget {aresult.ledger.remaining:.4f}")
