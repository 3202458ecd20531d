"""Monte-Carlo privacy auditing of mechanisms on adjacent inputs.

The auditor runs a mechanism many times on each of two adjacent inputs,
discretizes the outputs (selected-index structure kept exact, each released
gap rounded to a bin width) and reports the largest absolute log-ratio of
smoothed bin frequencies.  For a correct epsilon-DP mechanism every binned
event satisfies |log ratio| <= epsilon, so an estimate materially above
epsilon falsifies the implementation.  The auditor proves nothing: it is a
falsification tool, and ``flagged`` marks an exceedance beyond the sampling
slack (three binomial standard errors of the worst bin's log-ratio).

Trials are independent, so the per-input histograms may be sharded across
workers and merged by summing counts; the reference implementation runs
them sequentially off one seeded stream per input.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import singledispatch
from typing import Callable, Optional

from .expmech import ExpMechResult
from .hybrid import HybridResult
from .noise import RandomSource, SeededSource
from .queries import QuerySet
from .svt import SvtResult
from .topk import TopKResult

__all__ = [
    "AuditConfig",
    "AuditError",
    "AuditReport",
    "as_audit_output",
    "estimate_epsilon",
    "tie_probability_bound",
]

Mechanism = Callable[[QuerySet, RandomSource], object]

# Offset separating the two input streams; any fixed constant works.
_STREAM_OFFSET = 0x9E3779B97F4A7C15


class AuditError(RuntimeError):
    """The audit could not produce a usable estimate."""


@dataclass(frozen=True)
class AuditConfig:
    """Trials per input, gap discretization, and bin-count qualification."""

    trials: int = 1_000_000
    bin_width: float = 0.5
    min_count: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.trials < 10_000:
            raise ValueError("audit needs at least 10^4 trials per input")
        if not self.bin_width > 0.0:
            raise ValueError("bin_width must be > 0")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass(frozen=True)
class AuditReport:
    """Empirical privacy-loss estimate from one adjacent input pair."""

    eps_hat: float
    bins: int
    trials: int
    slack: float
    eps_claimed: Optional[float] = None
    flagged: bool = False
    mechanism: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "mechanism": self.mechanism,
                "eps_claimed": self.eps_claimed,
                "eps_hat": self.eps_hat,
                "trials": self.trials,
                "bins": self.bins,
                "flagged": self.flagged,
            }
        )


@singledispatch
def as_audit_output(result) -> tuple[tuple, tuple[float, ...]]:
    """Split a mechanism result into (discrete structure, released reals)."""
    raise TypeError(f"no audit output adapter for {type(result).__name__}")


@as_audit_output.register
def _(result: tuple):
    discrete, reals = result
    return tuple(discrete), tuple(reals)


@as_audit_output.register
def _(result: SvtResult):
    tags = []
    gaps = []
    for item in result.items:
        if not item.above:
            tags.append(0)
        else:
            tags.append(1 if item.branch == "middle" else 2)
            gaps.append(item.gap)
    return tuple(tags), tuple(gaps)


@as_audit_output.register
def _(result: TopKResult):
    return result.indices, result.gaps


@as_audit_output.register
def _(result: HybridResult):
    return tuple(index for index, _ in result.pairs), tuple(
        gap for _, gap in result.pairs
    )


@as_audit_output.register
def _(result: ExpMechResult):
    return (result.selected,), (result.gap,)


def _histogram(
    mech: Mechanism, data: QuerySet, src: RandomSource, cfg: AuditConfig
) -> dict:
    counts: dict = {}
    width = cfg.bin_width
    for _ in range(cfg.trials):
        discrete, reals = as_audit_output(mech(data, src))
        key = (discrete, tuple(math.floor(g / width) for g in reals))
        counts[key] = counts.get(key, 0) + 1
    return counts


def estimate_epsilon(
    mech: Mechanism,
    d: QuerySet,
    d_prime: QuerySet,
    cfg: AuditConfig,
    eps_claimed: Optional[float] = None,
    mechanism: str = "",
) -> AuditReport:
    """Estimate the privacy loss of ``mech`` between two adjacent inputs.

    Runs ``cfg.trials`` independent executions per input (each input on its
    own seeded stream), bins the outputs, Laplace-smooths the counts (+1) and
    takes the largest |log frequency ratio| over bins whose raw count reaches
    ``cfg.min_count`` on both sides.  The two-sided ratio makes the estimate
    symmetric in (d, d_prime) up to Monte-Carlo error.

    Raises :class:`AuditError` when no bin qualifies (increase trials or the
    bin width).
    """
    counts_d = _histogram(mech, d, SeededSource(cfg.seed), cfg)
    counts_dp = _histogram(
        mech, d_prime, SeededSource(cfg.seed + _STREAM_OFFSET), cfg
    )
    n = cfg.trials
    eps_hat = -1.0
    worst = None
    qualified = 0
    for key in counts_d.keys() | counts_dp.keys():
        c1 = counts_d.get(key, 0)
        c2 = counts_dp.get(key, 0)
        if c1 < cfg.min_count or c2 < cfg.min_count:
            continue
        qualified += 1
        ratio = abs(
            math.log((c1 + 1.0) / (n + 1.0)) - math.log((c2 + 1.0) / (n + 1.0))
        )
        if ratio > eps_hat:
            eps_hat = ratio
            worst = (c1, c2)
    if worst is None:
        raise AuditError(
            "no output bin reached the count threshold on both inputs; "
            "increase trials or bin width"
        )
    slack = 3.0 * math.sqrt(1.0 / worst[0] + 1.0 / worst[1])
    flagged = eps_claimed is not None and eps_hat > eps_claimed + slack
    return AuditReport(
        eps_hat=eps_hat,
        bins=qualified,
        trials=n,
        slack=slack,
        eps_claimed=eps_claimed,
        flagged=flagged,
        mechanism=mechanism,
    )


def tie_probability_bound(eps: float, gamma: float, n: int) -> float:
    """Upper bound on a noisy tie among n queries under base-gamma noise.

    Ties void the continuous-noise analysis of the selection mechanisms;
    with noise discretized to multiples of gamma the failure probability is
    at most eps * gamma * n^2 (capped at 1).
    """
    if eps < 0.0 or gamma < 0.0 or n < 0:
        raise ValueError("eps, gamma and n must be nonnegative")
    return min(1.0, eps * gamma * n * n)
