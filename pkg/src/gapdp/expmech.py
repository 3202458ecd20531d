"""Exponential mechanism with a free noisy utility gap.

Two implementations with identical joint output law:

* :func:`exp_mech_gumbel` adds i.i.d. Gumbel(0) noise to the scaled scores
  ``x_i = eps * mu_i / (2 * sensitivity)`` and returns the arg-max together
  with the noisy margin over the runner-up (the Gumbel-max construction).
* :func:`exp_mech_blackbox_gap` treats the selector as a black box: it draws
  the winner from the categorical softmax law, then samples the gap
  independently from Logistic(x_s - logsumexp of the other scores)
  conditioned on being positive.

The second form matters because production samplers for the categorical step
can be arbitrary; any selector can be wrapped and still release the gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .noise import Gumbel, RandomSource, sample, sample_logistic_nonneg

__all__ = [
    "ExpMechResult",
    "UtilityTable",
    "categorical_softmax_selector",
    "exp_mech_blackbox_gap",
    "exp_mech_gumbel",
    "log_sum_exp_excluding",
]

Selector = Callable[[Sequence[float], RandomSource], int]


@dataclass(frozen=True)
class UtilityTable:
    """Utility scores for a finite outcome set, with sensitivity and budget."""

    scores: tuple[float, ...]
    sensitivity: float
    epsilon: float

    def __post_init__(self):
        vals = tuple(float(v) for v in self.scores)
        if len(vals) < 2:
            raise ValueError("need at least two outcomes for a gap")
        if not self.sensitivity > 0.0:
            raise ValueError("sensitivity must be > 0")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be > 0")
        object.__setattr__(self, "scores", vals)
        for x in self.scaled_scores():
            if not math.isfinite(x):
                raise ValueError(f"scaled score {x} is not finite")

    def scaled_scores(self) -> tuple[float, ...]:
        """x_i = epsilon * score_i / (2 * sensitivity); the only scale used."""
        factor = self.epsilon / (2.0 * self.sensitivity)
        return tuple(factor * v for v in self.scores)


@dataclass(frozen=True)
class ExpMechResult:
    selected: int
    gap: float


def log_sum_exp_excluding(scores: Sequence[float], s: int) -> float:
    """log of sum(exp(scores[i])) over i != s, max-subtracted for stability."""
    n = len(scores)
    if n < 2:
        raise ValueError("need at least two scores")
    if not 0 <= s < n:
        raise IndexError(f"index {s} out of range for {n} scores")
    rest = [scores[i] for i in range(n) if i != s]
    m = max(rest)
    return m + math.log(sum(math.exp(v - m) for v in rest))


def exp_mech_gumbel(u: UtilityTable, src: RandomSource) -> ExpMechResult:
    """Gumbel-max exponential mechanism, returning winner and runner-up gap.

    The selection marginal equals the softmax over scaled scores, and the
    noisy maximum is Gumbel-distributed with location logsumexp(x).
    """
    best = -math.inf
    second = -math.inf
    best_index = 0
    for i, x in enumerate(u.scaled_scores()):
        noisy = x + sample(Gumbel(0.0), src)
        if noisy > best:
            second = best
            best = noisy
            best_index = i
        elif noisy > second:
            second = noisy
    return ExpMechResult(best_index, best - second)


def categorical_softmax_selector(scaled: Sequence[float], src: RandomSource) -> int:
    """Inverse-CDF draw from the softmax over the scaled scores."""
    m = max(scaled)
    weights = [math.exp(x - m) for x in scaled]
    total = sum(weights)
    u = src.uniform() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return len(weights) - 1


def exp_mech_blackbox_gap(
    u: UtilityTable,
    src: RandomSource,
    selector: Optional[Selector] = None,
) -> ExpMechResult:
    """Black-box exponential mechanism with an independently sampled gap.

    ``selector`` may be any sampler of the categorical exponential-mechanism
    law over the scaled scores (defaults to the inverse-CDF softmax draw).
    The gap is then a positive-conditioned logistic draw at location
    x_s - log(sum of exp(x_i) over i != s), which reproduces the joint
    distribution of the Gumbel-max construction.
    """
    scaled = u.scaled_scores()
    choose = selector if selector is not None else categorical_softmax_selector
    s = choose(scaled, src)
    location = scaled[s] - log_sum_exp_excluding(scaled, s)
    return ExpMechResult(s, sample_logistic_nonneg(location, src))
