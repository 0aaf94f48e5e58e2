"""Per-slate probability scoring and exact reward aggregation.

A :class:`SlateScorer` maps a slate to one (exposure, click) probability
pair per position slot. Reward aggregation turns those probabilities into
the three per-item terms and their total:

* monetization  ``V = p_clk * p_exp * s``  for CPA pricing,
  ``V = p_exp * s``  otherwise
* engagement    ``N = p_exp * p_clk * n``
* penalty       ``P = d * p_exp``
* total         ``R = sum(V + N - P)``  accumulated position-ascending

Organic items route through the non-CPA branch with ``s = 0`` and carry
``d = 0``, so only their engagement term survives. A multi-slot ad
contributes exactly once, at its start slot.

The bundled :class:`ReferenceScorer` is a deterministic stand-in for a
trained model: logistic in the item features, with a position decay and an
additive adjacency term for the kinds of the immediately preceding and
following items, so reward is genuinely list-dependent.
"""

from __future__ import annotations

import json
import math
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .domain import CandidatePool, Item, ItemKind, Pricing, Slate

__all__ = [
    "ItemScores",
    "RewardBreakdown",
    "SlateScorer",
    "ScorerConfig",
    "ReferenceScorer",
    "reference_scorer",
    "aggregate_reward",
    "score_slate",
    "DimensionMismatch",
    "LengthMismatch",
    "scorer_config_to_record",
    "scorer_config_from_record",
    "load_scorer_config",
]

SCORER_SCHEMA = "scorer/1"


class DimensionMismatch(Exception):
    """Scorer weights and pool feature vectors disagree on length."""


class LengthMismatch(Exception):
    """Score list and slate length disagree."""


@dataclass(frozen=True, slots=True)
class ItemScores:
    """Exposure and click probabilities for one position slot."""

    p_exp: float
    p_clk: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_exp <= 1.0 and 0.0 <= self.p_clk <= 1.0):
            raise ValueError(
                f"probabilities must lie in [0, 1], got ({self.p_exp}, {self.p_clk})"
            )


@dataclass(frozen=True, slots=True)
class RewardBreakdown:
    """Per-slot reward terms and their total.

    Continuation slots of a multi-slot ad hold zeros in all three term
    tuples; the ad's contribution sits at its start slot.
    """

    monetization: tuple[float, ...]
    engagement: tuple[float, ...]
    penalty: tuple[float, ...]
    total: float

    def contribution(self, index: int) -> float:
        return (
            self.monetization[index] + self.engagement[index] - self.penalty[index]
        )

    def value_and_engagement(self) -> float:
        """Total with all penalties dropped; the optimistic part of a bound."""
        return sum(v + n for v, n in zip(self.monetization, self.engagement))


def _logistic(x: float) -> float:
    if x >= 0.0:
        z = math.exp(-x)
        return 1.0 / (1.0 + z)
    z = math.exp(x)
    return z / (1.0 + z)


class SlateScorer(ABC):
    """Deterministic per-slate probability model with an evaluation counter.

    ``score`` returns one :class:`ItemScores` per position slot and counts
    one evaluation per call; the counter is the cost unit every benchmark
    reports. Instances are otherwise immutable and identical inputs must
    yield identical outputs. The counter is not synchronized: give each
    concurrent decode session its own scorer instance.
    """

    def __init__(self) -> None:
        self.evaluations = 0

    def score(self, slate: Slate, pool: CandidatePool) -> tuple[ItemScores, ...]:
        self.evaluations += 1
        return self._scores(slate, pool)

    @abstractmethod
    def _scores(self, slate: Slate, pool: CandidatePool) -> tuple[ItemScores, ...]:
        ...

    def max_item_scores(
        self, item: Item, position: int, pool: CandidatePool
    ) -> ItemScores:
        """Upper envelope of the probabilities this scorer can ever emit for
        ``item`` at ``position``, over all slate contexts.

        The default is the trivial envelope. Subclasses should tighten it;
        the decoder's reward bounds are admissible only when this dominates
        every achievable score.
        """
        return ItemScores(1.0, 1.0)

    def reset_evaluations(self) -> None:
        self.evaluations = 0


@dataclass(frozen=True, slots=True)
class ScorerConfig:
    """Parameters of the reference scorer.

    Sign restrictions (decays and organic adjacency non-negative, ad
    adjacency non-positive) guarantee that inserting an ad into a slate can
    never raise the probabilities of the items already on it: every slot an
    incumbent can move to is further down, and every neighbor change swaps
    in an ad-kind coefficient. The decoder's optimistic completion bounds
    rely on exactly this monotonicity.
    """

    feature_dim: int
    exp_weights: tuple[float, ...]
    clk_weights: tuple[float, ...]
    exp_bias: float = 0.0
    clk_bias: float = 0.0
    exp_position_decay: float = 0.0
    clk_position_decay: float = 0.0
    exp_organic_adjacency: float = 0.0
    clk_organic_adjacency: float = 0.0
    exp_ad_adjacency: float = 0.0
    clk_ad_adjacency: float = 0.0

    def __post_init__(self) -> None:
        for name in ("exp_weights", "clk_weights"):
            value = getattr(self, name)
            if not isinstance(value, tuple):
                object.__setattr__(self, name, tuple(value))
        if len(self.exp_weights) != self.feature_dim:
            raise DimensionMismatch(
                f"exp_weights has length {len(self.exp_weights)}, "
                f"feature_dim is {self.feature_dim}"
            )
        if len(self.clk_weights) != self.feature_dim:
            raise DimensionMismatch(
                f"clk_weights has length {len(self.clk_weights)}, "
                f"feature_dim is {self.feature_dim}"
            )
        if self.exp_position_decay < 0 or self.clk_position_decay < 0:
            raise ValueError("position decays must be non-negative")
        if self.exp_organic_adjacency < 0 or self.clk_organic_adjacency < 0:
            raise ValueError("organic adjacency coefficients must be non-negative")
        if self.exp_ad_adjacency > 0 or self.clk_ad_adjacency > 0:
            raise ValueError("ad adjacency coefficients must be non-positive")

    @classmethod
    def from_seed(cls, seed: int, feature_dim: int) -> "ScorerConfig":
        """Draw a reproducible configuration within the admissible ranges.

        The draw order below is part of the contract: changing it changes
        every seeded config and breaks pinned fixtures.
        """
        rng = random.Random(f"scorer-config:{seed}")
        exp_weights = tuple(rng.uniform(-1.0, 1.0) for _ in range(feature_dim))
        clk_weights = tuple(rng.uniform(-1.0, 1.0) for _ in range(feature_dim))
        return cls(
            feature_dim=feature_dim,
            exp_weights=exp_weights,
            clk_weights=clk_weights,
            exp_bias=rng.uniform(-0.5, 0.5),
            clk_bias=rng.uniform(-0.5, 0.5),
            exp_position_decay=rng.uniform(0.0, 0.25),
            clk_position_decay=rng.uniform(0.0, 0.25),
            exp_organic_adjacency=rng.uniform(0.0, 0.4),
            clk_organic_adjacency=rng.uniform(0.0, 0.4),
            exp_ad_adjacency=rng.uniform(-0.4, 0.0),
            clk_ad_adjacency=rng.uniform(-0.4, 0.0),
        )


class ReferenceScorer(SlateScorer):
    """Deterministic logistic scorer with position decay and local context.

    For the item in slot ``i`` (1-based), each channel's logit is

        bias + weights . features - decay * (i - 1)
             + adjacency(kind of slot i-1) + adjacency(kind of slot i+1)

    where adjacency is the organic coefficient for an organic neighbor, the
    ad coefficient for any ad neighbor, and 0 past either page edge.
    """

    def __init__(self, config: ScorerConfig) -> None:
        super().__init__()
        self.config = config

    def _adjacency(self, kind: ItemKind | None, organic: float, ad: float) -> float:
        if kind is None:
            return 0.0
        if kind is ItemKind.ORGANIC:
            return organic
        return ad

    def _scores(self, slate: Slate, pool: CandidatePool) -> tuple[ItemScores, ...]:
        cfg = self.config
        if pool.feature_dim != cfg.feature_dim:
            raise DimensionMismatch(
                f"pool feature_dim {pool.feature_dim} != scorer feature_dim "
                f"{cfg.feature_dim}"
            )
        items = slate.items
        n = len(items)
        out: list[ItemScores] = []
        for i, item in enumerate(items):
            prev_kind = items[i - 1].kind if i > 0 else None
            next_kind = items[i + 1].kind if i + 1 < n else None
            exp_logit = cfg.exp_bias - cfg.exp_position_decay * i
            clk_logit = cfg.clk_bias - cfg.clk_position_decay * i
            for w, f in zip(cfg.exp_weights, item.features):
                exp_logit += w * f
            for w, f in zip(cfg.clk_weights, item.features):
                clk_logit += w * f
            exp_logit += self._adjacency(
                prev_kind, cfg.exp_organic_adjacency, cfg.exp_ad_adjacency
            )
            exp_logit += self._adjacency(
                next_kind, cfg.exp_organic_adjacency, cfg.exp_ad_adjacency
            )
            clk_logit += self._adjacency(
                prev_kind, cfg.clk_organic_adjacency, cfg.clk_ad_adjacency
            )
            clk_logit += self._adjacency(
                next_kind, cfg.clk_organic_adjacency, cfg.clk_ad_adjacency
            )
            out.append(ItemScores(_logistic(exp_logit), _logistic(clk_logit)))
        return tuple(out)

    def max_item_scores(
        self, item: Item, position: int, pool: CandidatePool
    ) -> ItemScores:
        cfg = self.config
        if pool.feature_dim != cfg.feature_dim:
            raise DimensionMismatch(
                f"pool feature_dim {pool.feature_dim} != scorer feature_dim "
                f"{cfg.feature_dim}"
            )
        exp_adj = max(0.0, cfg.exp_organic_adjacency, cfg.exp_ad_adjacency)
        clk_adj = max(0.0, cfg.clk_organic_adjacency, cfg.clk_ad_adjacency)
        exp_logit = cfg.exp_bias - cfg.exp_position_decay * (position - 1) + 2.0 * exp_adj
        clk_logit = cfg.clk_bias - cfg.clk_position_decay * (position - 1) + 2.0 * clk_adj
        for w, f in zip(cfg.exp_weights, item.features):
            exp_logit += w * f
        for w, f in zip(cfg.clk_weights, item.features):
            clk_logit += w * f
        return ItemScores(_logistic(exp_logit), _logistic(clk_logit))


def reference_scorer(config: ScorerConfig) -> ReferenceScorer:
    return ReferenceScorer(config)


def aggregate_reward(
    slate: Slate, scores: tuple[ItemScores, ...], pool: CandidatePool
) -> RewardBreakdown:
    """Exact reward terms for a scored slate.

    ``scores`` must hold one entry per position slot. Accumulation is
    position-ascending so totals are bit-stable across runs.
    """
    items = slate.items
    if len(scores) != len(items):
        raise LengthMismatch(
            f"{len(scores)} score entries for a slate of {len(items)} slots"
        )
    for item in items:
        if item.id not in pool.item_ids:
            raise ValueError(f"slate item {item.id!r} is not in the pool")
    n_slots = len(items)
    monetization = [0.0] * n_slots
    engagement = [0.0] * n_slots
    penalty = [0.0] * n_slots
    seen: set[str] = set()
    total = 0.0
    for i, item in enumerate(items):
        if item.id in seen:
            continue
        seen.add(item.id)
        sc = scores[i]
        if item.pricing is Pricing.CPA:
            v = sc.p_clk * sc.p_exp * item.bid_value
        else:
            v = sc.p_exp * item.bid_value
        e = sc.p_exp * sc.p_clk * item.engagement_value
        p = item.penalty_coeff * sc.p_exp
        monetization[i] = v
        engagement[i] = e
        penalty[i] = p
        total += v + e - p
    return RewardBreakdown(
        tuple(monetization), tuple(engagement), tuple(penalty), total
    )


def score_slate(
    slate: Slate, pool: CandidatePool, scorer: SlateScorer
) -> tuple[RewardBreakdown, tuple[ItemScores, ...]]:
    """Score a slate and aggregate its reward; exactly one evaluation."""
    scores = scorer.score(slate, pool)
    return aggregate_reward(slate, scores, pool), scores


def scorer_config_to_record(config: ScorerConfig) -> dict:
    record: dict = {"schema": SCORER_SCHEMA}
    for f in fields(ScorerConfig):
        value = getattr(config, f.name)
        record[f.name] = list(value) if isinstance(value, tuple) else value
    return record


def scorer_config_from_record(record: dict) -> ScorerConfig:
    """Build a config from a parsed record.

    Two forms are accepted: ``{"seed": ..., "feature_dim": ...}`` draws the
    seeded configuration, optionally overridden field by field; explicit
    weight vectors skip the draw entirely.
    """
    schema = record.get("schema", SCORER_SCHEMA)
    if schema != SCORER_SCHEMA:
        raise ValueError(f"unsupported scorer schema {schema!r}")
    body = {k: v for k, v in record.items() if k not in ("schema", "seed")}
    if "feature_dim" not in body:
        raise ValueError("scorer config needs feature_dim")
    for name in ("exp_weights", "clk_weights"):
        if name in body:
            body[name] = tuple(body[name])
    if "seed" in record:
        config = ScorerConfig.from_seed(int(record["seed"]), int(body["feature_dim"]))
        overrides = {k: v for k, v in body.items() if k != "feature_dim"}
        return replace(config, **overrides) if overrides else config
    return ScorerConfig(**body)


def load_scorer_config(path: str | Path) -> ScorerConfig:
    with open(path, encoding="utf-8") as handle:
        return scorer_config_from_record(json.load(handle))
