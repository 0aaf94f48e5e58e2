"""Hard-constraint feasibility checking and feasible-set enumeration.

``check`` reports every rule a slate violates; an empty report means the
slate is feasible. ``enumerate_feasible`` streams the entire feasible set in
a deterministic order (ascending ad count, then lexicographic by ad id tuple
and position tuple), and ``count_feasible`` tallies it per ad count.

Infeasibility is data, not an error: these functions never raise on a
rule-breaking slate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations, product
from typing import Iterator

from .domain import (
    CandidatePool,
    Item,
    ItemKind,
    RuleSet,
    Slate,
    SlateError,
    insert_ad,
    organic_page,
)

__all__ = [
    "ViolationKind",
    "Violation",
    "EnumerationStats",
    "FeasibleCount",
    "check",
    "enumerate_feasible",
    "count_feasible",
]


class ViolationKind(Enum):
    LOAD_EXCEEDED = "load_exceeded"
    SPACING_VIOLATED = "spacing_violated"
    POSITION_OUT_OF_BOUNDS = "position_out_of_bounds"
    LARGE_AD_RULE_BROKEN = "large_ad_rule_broken"
    FREQUENCY_CAP_HIT = "frequency_cap_hit"


@dataclass(frozen=True, slots=True)
class Violation:
    kind: ViolationKind
    detail: str


@dataclass
class EnumerationStats:
    """Counters for candidates a generator built but discarded.

    ``structurally_invalid`` counts assignments that cannot form a dense page
    at all (overlapping spans, slots past the reachable prefix);
    ``rule_violations`` counts well-formed slates rejected by ``check``.
    """

    generated: int = 0
    structurally_invalid: int = 0
    rule_violations: int = 0

    @property
    def discarded(self) -> int:
        return self.structurally_invalid + self.rule_violations


@dataclass(frozen=True, slots=True)
class FeasibleCount:
    """Feasible-set size, decomposed by exact ad count (index = k)."""

    total: int
    per_k: tuple[int, ...]


def check(slate: Slate, rules: RuleSet, pool: CandidatePool) -> list[Violation]:
    """Return every violated constraint; an empty list means feasible.

    Checks, in order: ad load, pairwise spacing, position bounds, large-ad
    structure, user frequency cap.
    """
    violations: list[Violation] = []
    placements = slate.placements()

    if len(placements) > rules.max_ads:
        violations.append(
            Violation(
                ViolationKind.LOAD_EXCEEDED,
                f"{len(placements)} ads on slate, cap is {rules.max_ads}",
            )
        )

    for a, b in combinations(placements, 2):
        # Placements never overlap, so one interval lies strictly after the other.
        gap = b.start - a.end if b.start > a.end else a.start - b.end
        if gap < rules.min_spacing:
            violations.append(
                Violation(
                    ViolationKind.SPACING_VIOLATED,
                    f"ads {a.item.id!r} and {b.item.id!r} are {gap} apart, "
                    f"minimum spacing is {rules.min_spacing}",
                )
            )

    for p in placements:
        if p.start < rules.min_pos or p.end > rules.max_pos:
            violations.append(
                Violation(
                    ViolationKind.POSITION_OUT_OF_BOUNDS,
                    f"ad {p.item.id!r} occupies [{p.start}, {p.end}], allowed "
                    f"slots are [{rules.min_pos}, {rules.max_pos}]",
                )
            )

    for p in placements:
        if p.item.kind is not ItemKind.LARGE_AD:
            continue
        occupied = p.end - p.start + 1
        if occupied != rules.large_ad_span:
            violations.append(
                Violation(
                    ViolationKind.LARGE_AD_RULE_BROKEN,
                    f"large ad {p.item.id!r} occupies {occupied} slots, "
                    f"required span is {rules.large_ad_span}",
                )
            )
        if p.start not in rules.large_ad_start_positions:
            violations.append(
                Violation(
                    ViolationKind.LARGE_AD_RULE_BROKEN,
                    f"large ad {p.item.id!r} starts at {p.start}, allowed starts "
                    f"are {sorted(rules.large_ad_start_positions)}",
                )
            )

    if placements and pool.user_exposure_count >= rules.user_frequency_cap:
        violations.append(
            Violation(
                ViolationKind.FREQUENCY_CAP_HIT,
                f"user exposure count {pool.user_exposure_count} reached cap "
                f"{rules.user_frequency_cap}, no ads allowed",
            )
        )

    return violations


def _place_ads(
    page: Slate,
    ads: tuple[Item, ...],
    starts: tuple[int, ...],
    rules: RuleSet,
) -> Slate | None:
    """Build the slate whose ads sit exactly at the given start positions.

    Ads are inserted highest start first; each earlier (lower) insertion then
    shifts the already-placed ads down into their final slots, so the
    insertion point is the target start minus the total span still to be
    inserted below it. Returns None when the assignment is unreachable
    (overlap, slot past the dense prefix, or an ad truncated away).
    """
    order = sorted(zip(ads, starts), key=lambda pair: pair[1], reverse=True)
    slate = page
    for i, (ad, start) in enumerate(order):
        span_below = sum(rules.span_of(other) for other, _ in order[i + 1 :])
        position = start - span_below
        if position < 1:
            return None
        try:
            slate = insert_ad(slate, ad, position, rules.page_size, rules.span_of(ad))
        except SlateError:
            return None
    placed = {p.item.id: (p.start, p.end) for p in slate.placements()}
    for ad, start in zip(ads, starts):
        if placed.get(ad.id) != (start, start + rules.span_of(ad) - 1):
            return None
    return slate


def enumerate_feasible(
    pool: CandidatePool,
    rules: RuleSet,
    stats: EnumerationStats | None = None,
) -> Iterator[Slate]:
    """Yield every feasible slate exactly once, in canonical order.

    Order: ascending ad count; within a count, ads ascending by id tuple and
    start positions ascending by assignment tuple. Two runs over the same
    inputs yield the same sequence. Pass ``stats`` to observe how many
    generated assignments were discarded before feasibility.
    """
    page = organic_page(pool, rules.page_size)
    if stats is not None:
        stats.generated += 1
    yield page

    budget = rules.effective_max_ads(pool.user_exposure_count)
    candidates = pool.ad_candidates()
    for k in range(1, min(budget, len(candidates)) + 1):
        for combo in combinations(candidates, k):
            ranges = [
                range(1, rules.page_size - rules.span_of(ad) + 2) for ad in combo
            ]
            for starts in product(*ranges):
                if stats is not None:
                    stats.generated += 1
                slate = _place_ads(page, combo, starts, rules)
                if slate is None:
                    if stats is not None:
                        stats.structurally_invalid += 1
                    continue
                if check(slate, rules, pool):
                    if stats is not None:
                        stats.rule_violations += 1
                    continue
                yield slate


def count_feasible(pool: CandidatePool, rules: RuleSet) -> FeasibleCount:
    """Size of the feasible set, split by exact ad count (k = 0..max_ads)."""
    per_k = [0] * (rules.max_ads + 1)
    total = 0
    for slate in enumerate_feasible(pool, rules):
        per_k[slate.ad_count()] += 1
        total += 1
    return FeasibleCount(total, tuple(per_k))
