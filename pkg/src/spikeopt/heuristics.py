"""Spike machinery: threshold schedules, firing predicates, and spike-triggered rules.

The firing predicate decides, per dimension, whether the state takes a
perturbation jump instead of a plain dynamics step. Perturbation rules range
from blind resets to differential-evolution mutations over the encoded best
states of the unit, the population, and the neighbourhood.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

__all__ = [
    "THRESHOLD_VARIANTS",
    "CONDITION_VARIANTS",
    "RULE_VARIANTS",
    "DIRECTIONAL_TARGETS",
    "ThresholdRule",
    "SpikeCondition",
    "SpikeRule",
    "SpikeContext",
    "threshold",
    "phi_s",
    "phi",
    "apply_spike_rule",
    "binomial_crossover",
]

THRESHOLD_VARIANTS = ("fixed", "global_self_gap", "ref_self_gap")
CONDITION_VARIANTS = ("abs_threshold", "weighted_minkowski", "shrinking_ball", "disc")
RULE_VARIANTS = (
    "random_reset",
    "fixed_reset",
    "directional",
    "de_current_to_best",
    "de_rand",
)
DIRECTIONAL_TARGETS = ("self_best", "global_best", "blend")


@dataclass(frozen=True)
class ThresholdRule:
    """Base threshold, either fixed or scaled by a best-position gap."""

    variant: str = "fixed"
    alpha_thr: float = 1.0

    def __post_init__(self):
        if self.variant not in THRESHOLD_VARIANTS:
            raise ValueError(f"unknown threshold variant {self.variant!r}")
        if self.alpha_thr <= 0.0:
            raise ValueError("alpha_thr must be positive")


def threshold(
    rule: ThresholdRule,
    g_j: np.ndarray | float,
    p_j: np.ndarray | float,
    x_ref_j: np.ndarray | float,
) -> np.ndarray | float:
    """Per-dimension firing threshold."""
    if rule.variant == "fixed":
        shape = np.broadcast_shapes(np.shape(g_j), np.shape(p_j))
        return rule.alpha_thr if shape == () else np.full(shape, rule.alpha_thr)
    if rule.variant == "global_self_gap":
        return rule.alpha_thr * np.abs(np.asarray(g_j, dtype=float) - p_j)
    return rule.alpha_thr * np.abs(np.asarray(x_ref_j, dtype=float) - p_j)


@dataclass(frozen=True)
class SpikeCondition:
    """Self-firing predicate over the encoded state.

    ``abs_threshold`` fires on |v1| >= theta (inclusive); ``weighted_minkowski``
    on a strict q-norm exceedance; ``shrinking_ball`` inside a tolerance that
    tightens as 1/(1+t); ``disc`` inside an attractor disc for contracting
    linear cores and outside a repeller disc for expanding ones.
    """

    variant: str = "abs_threshold"
    q: float = 2.0
    weights: Optional[np.ndarray] = None
    epsilon_spk: float = 1.0
    theta_attractor: float = 0.5
    theta_repeller: float = 1.5

    def __post_init__(self):
        if self.variant not in CONDITION_VARIANTS:
            raise ValueError(f"unknown spike condition {self.variant!r}")
        if self.variant == "weighted_minkowski":
            if self.q < 1.0:
                raise ValueError("q must be >= 1")
            w = (
                np.full(2, 1.0 / np.sqrt(2.0))
                if self.weights is None
                else np.asarray(self.weights, dtype=float)
            )
            if w.shape != (2,) or np.any(w < 0.0) or np.any(w > 1.0):
                raise ValueError("weights must be two entries in [0, 1]")
            if abs(np.linalg.norm(w) - 1.0) > 1e-9:
                raise ValueError("weights must form a unit vector")
            object.__setattr__(self, "weights", w)
        if self.variant == "shrinking_ball" and self.epsilon_spk <= 0.0:
            raise ValueError("epsilon_spk must be positive")
        if self.variant == "disc" and not (0.0 < self.theta_attractor < self.theta_repeller):
            raise ValueError("need 0 < theta_attractor < theta_repeller")


def phi_s(
    cond: SpikeCondition,
    v: np.ndarray,
    t: int,
    theta: np.ndarray | float,
    model_trace: Optional[float] = None,
) -> np.ndarray | bool:
    """Self-spiking predicate; broadcasts over leading axes of ``v``."""
    v = np.asarray(v, dtype=float)
    if cond.variant == "abs_threshold":
        out = np.abs(v[..., 0]) >= theta
    elif cond.variant == "weighted_minkowski":
        weighted = cond.weights * v
        if cond.q == 2.0:
            out = np.sqrt(np.sum(weighted * weighted, axis=-1)) > theta
        else:
            out = np.sum(np.abs(weighted) ** cond.q, axis=-1) ** (1.0 / cond.q) > theta
    elif cond.variant == "shrinking_ball":
        out = np.linalg.norm(v, axis=-1) < cond.epsilon_spk / (1.0 + t)
    else:  # disc
        if model_trace is None:
            raise ValueError("disc condition needs the linear model trace")
        norm = np.linalg.norm(v, axis=-1)
        if model_trace <= 0.0:
            out = norm <= cond.theta_attractor
        else:
            out = norm >= cond.theta_repeller
    return bool(out) if np.ndim(out) == 0 else out


def phi(
    cond: SpikeCondition,
    v: np.ndarray,
    t: int,
    theta: np.ndarray | float,
    activation_j: np.ndarray | bool,
    model_trace: Optional[float] = None,
) -> np.ndarray | bool:
    """Full firing predicate: self condition OR neighbour-induced activation."""
    return phi_s(cond, v, t, theta, model_trace) | np.asarray(activation_j, dtype=bool)


@dataclass(frozen=True)
class SpikeRule:
    """Spike-triggered perturbation, with optional binomial crossover on top.

    ``p_cr`` of ``None`` disables the crossover; a value in [0, 1] masks each
    component of the rule output, keeping the new value with probability
    ``p_cr`` and the pre-spike value otherwise.
    """

    variant: str = "fixed_reset"
    sigma: float = 0.5
    alpha_d: float = 1.0
    target: str = "global_best"
    F: float = 0.5
    p_cr: Optional[float] = None

    def __post_init__(self):
        if self.variant not in RULE_VARIANTS:
            raise ValueError(f"unknown spike rule {self.variant!r}")
        if self.sigma < 0.0:
            raise ValueError("sigma must be non-negative")
        if self.alpha_d <= 0.0:
            raise ValueError("alpha_d must be positive")
        if self.target not in DIRECTIONAL_TARGETS:
            raise ValueError(f"unknown directional target {self.target!r}")
        if not 0.0 <= self.F <= 2.0:
            raise ValueError("F must lie in [0, 2]")
        if self.p_cr is not None and not 0.0 <= self.p_cr <= 1.0:
            raise ValueError("p_cr must lie in [0, 1]")


@dataclass
class SpikeContext:
    """Encoded best states visible to the rule, plus the unit's random stream.

    ``distinct_count`` lets the caller supply the number of distinct neighbour
    states when it already knows it; left as ``None`` it is counted here.
    """

    v_self_best: np.ndarray
    v_global_best: np.ndarray
    neighbour_best_states: np.ndarray  # (m, 2)
    rng: np.random.Generator
    events: Optional[List[str]] = field(default=None)
    distinct_count: Optional[int] = None

    def warn(self, message: str) -> None:
        if self.events is not None:
            self.events.append(message)


def _distinct_rows(states: np.ndarray) -> int:
    return np.unique(np.asarray(states, dtype=float), axis=0).shape[0]


def _too_few_distinct(nb: np.ndarray, needed: int, ctx: SpikeContext) -> bool:
    if nb.shape[0] < needed:
        return True
    count = ctx.distinct_count if ctx.distinct_count is not None else _distinct_rows(nb)
    return count < needed


def _sample_distinct(rng: np.random.Generator, m: int, k: int) -> np.ndarray:
    """k distinct indices in [0, m); rejection is cheaper than choice for small k."""
    while True:
        idx = rng.integers(0, m, size=k)
        if len({int(i) for i in idx}) == k:
            return idx


def _fixed_reset(v_self_best: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    noise = rng.normal(0.0, sigma, size=2) if sigma > 0.0 else 0.0
    return np.asarray(v_self_best, dtype=float) + noise


def apply_spike_rule(rule: SpikeRule, v: np.ndarray, ctx: SpikeContext) -> np.ndarray:
    """Apply the configured perturbation to one encoded state.

    Differential variants sample donor indices without replacement from the
    neighbourhood best states; when those hold too few distinct entries the
    rule degrades to a fixed reset with sigma = 0.1 and logs a warning event.
    """
    v = np.asarray(v, dtype=float)
    nb = np.asarray(ctx.neighbour_best_states, dtype=float)

    if rule.variant == "random_reset":
        out = ctx.rng.standard_normal(2)
    elif rule.variant == "fixed_reset":
        out = _fixed_reset(ctx.v_self_best, rule.sigma, ctx.rng)
    elif rule.variant == "directional":
        if rule.target == "self_best":
            v_target = np.asarray(ctx.v_self_best, dtype=float)
        elif rule.target == "global_best":
            v_target = np.asarray(ctx.v_global_best, dtype=float)
        else:
            v_target = 0.5 * (
                np.asarray(ctx.v_self_best, dtype=float)
                + np.asarray(ctx.v_global_best, dtype=float)
            )
        noise = ctx.rng.normal(0.0, rule.sigma, size=2) if rule.sigma > 0.0 else 0.0
        out = v + rule.alpha_d * (v_target - v) + noise
    elif rule.variant == "de_current_to_best":
        if _too_few_distinct(nb, 2, ctx):
            ctx.warn("de_current_to_best: fewer than 2 distinct neighbour states")
            out = _fixed_reset(ctx.v_self_best, 0.1, ctx.rng)
        else:
            r1, r2 = _sample_distinct(ctx.rng, nb.shape[0], 2)
            out = (
                v
                + rule.F * (np.asarray(ctx.v_global_best, dtype=float) - v)
                + rule.F * (nb[r1] - nb[r2])
            )
    else:  # de_rand
        if _too_few_distinct(nb, 3, ctx):
            ctx.warn("de_rand: fewer than 3 distinct neighbour states")
            out = _fixed_reset(ctx.v_self_best, 0.1, ctx.rng)
        else:
            r1, r2, r3 = _sample_distinct(ctx.rng, nb.shape[0], 3)
            out = v + rule.F * (nb[r1] - v) + rule.F * (nb[r2] - nb[r3])

    if rule.p_cr is not None:
        out = binomial_crossover(out, v, rule.p_cr, ctx.rng)
    return out


def binomial_crossover(
    v_new: np.ndarray,
    v_old: np.ndarray,
    p_cr: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Componentwise mix: keep the new value with probability ``p_cr``."""
    keep_new = rng.uniform(size=np.shape(v_new)) < p_cr
    return np.where(keep_new, v_new, v_old)
