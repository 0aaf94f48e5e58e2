"""Core data model for ad-insertion slate reranking.

Items, candidate pools, business rule sets, and the immutable page (slate)
that the decoder optimizes over. Everything here is a value type: operations
return new slates and never mutate their inputs, so pools, rules, and slates
can be shared freely across concurrent decode sessions.

Positions are 1-based throughout. A slate is a dense page: position ``i``
holds the item at ``items[i - 1]``, with no gaps. A multi-slot ad appears
once per occupied slot, always contiguously.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

__all__ = [
    "ItemKind",
    "Pricing",
    "Item",
    "CandidatePool",
    "RuleSet",
    "AdPlacement",
    "Slate",
    "SlateError",
    "PositionOutOfRange",
    "DuplicateItem",
    "organic_item",
    "ad_item",
    "large_ad_item",
    "organic_page",
    "insert_ad",
    "derive_ad_positions",
]


class ItemKind(Enum):
    ORGANIC = "organic"
    AD = "ad"
    LARGE_AD = "large_ad"

    @property
    def is_ad(self) -> bool:
        return self is not ItemKind.ORGANIC


class Pricing(Enum):
    """How an ad realizes its bid: per click-through (CPA) or per exposure (CPM)."""

    CPA = "cpa"
    CPM = "cpm"


class SlateError(Exception):
    """Base class for slate construction failures."""


class PositionOutOfRange(SlateError):
    """Requested insertion slot does not exist or would overflow the page."""


class DuplicateItem(SlateError):
    """The item to insert is already on the slate."""


@dataclass(frozen=True, slots=True)
class Item:
    """One candidate: organic content or an advertisement.

    ``bid_value`` is the monetization coefficient, ``engagement_value`` the
    engagement benefit coefficient, and ``penalty_coeff`` the exposure
    penalty coefficient. Organic items carry engagement only, so their bid
    and penalty coefficients are forced to zero.
    """

    id: str
    kind: ItemKind
    pricing: Pricing
    bid_value: float
    engagement_value: float
    penalty_coeff: float
    features: tuple[float, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.features, tuple):
            object.__setattr__(self, "features", tuple(self.features))
        if self.bid_value < 0 or self.engagement_value < 0 or self.penalty_coeff < 0:
            raise ValueError(
                f"item {self.id!r}: bid_value, engagement_value and penalty_coeff "
                "must be non-negative"
            )
        if self.kind is ItemKind.ORGANIC and (
            self.bid_value != 0 or self.penalty_coeff != 0
        ):
            raise ValueError(
                f"organic item {self.id!r} must have zero bid_value and penalty_coeff"
            )


def organic_item(
    item_id: str, engagement_value: float, features: tuple[float, ...] = ()
) -> Item:
    return Item(
        id=item_id,
        kind=ItemKind.ORGANIC,
        pricing=Pricing.CPM,
        bid_value=0.0,
        engagement_value=engagement_value,
        penalty_coeff=0.0,
        features=tuple(features),
    )


def ad_item(
    item_id: str,
    pricing: Pricing,
    bid_value: float,
    engagement_value: float = 0.0,
    penalty_coeff: float = 0.0,
    features: tuple[float, ...] = (),
) -> Item:
    return Item(
        id=item_id,
        kind=ItemKind.AD,
        pricing=pricing,
        bid_value=bid_value,
        engagement_value=engagement_value,
        penalty_coeff=penalty_coeff,
        features=tuple(features),
    )


def large_ad_item(
    item_id: str,
    pricing: Pricing,
    bid_value: float,
    engagement_value: float = 0.0,
    penalty_coeff: float = 0.0,
    features: tuple[float, ...] = (),
) -> Item:
    return Item(
        id=item_id,
        kind=ItemKind.LARGE_AD,
        pricing=pricing,
        bid_value=bid_value,
        engagement_value=engagement_value,
        penalty_coeff=penalty_coeff,
        features=tuple(features),
    )


@dataclass(frozen=True, slots=True)
class CandidatePool:
    """All candidates for one request, plus the user's prior ad exposure count.

    ``organic`` is the upstream-ranked natural list; its order is authoritative
    and never changed by any operation in this package.
    """

    organic: tuple[Item, ...]
    ads: tuple[Item, ...]
    large_ads: tuple[Item, ...]
    feature_dim: int
    user_exposure_count: int = 0
    item_ids: frozenset[str] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        for name in ("organic", "ads", "large_ads"):
            value = getattr(self, name)
            if not isinstance(value, tuple):
                object.__setattr__(self, name, tuple(value))
        if len(self.organic) < 1:
            raise ValueError("candidate pool needs at least one organic item")
        if self.feature_dim < 0:
            raise ValueError("feature_dim must be non-negative")
        if self.user_exposure_count < 0:
            raise ValueError("user_exposure_count must be non-negative")
        expected = {
            "organic": ItemKind.ORGANIC,
            "ads": ItemKind.AD,
            "large_ads": ItemKind.LARGE_AD,
        }
        ids: set[str] = set()
        for name, kind in expected.items():
            for item in getattr(self, name):
                if item.kind is not kind:
                    raise ValueError(
                        f"item {item.id!r} has kind {item.kind.value}, "
                        f"expected {kind.value} in {name}"
                    )
                if len(item.features) != self.feature_dim:
                    raise ValueError(
                        f"item {item.id!r} has {len(item.features)} features, "
                        f"pool declares {self.feature_dim}"
                    )
                if item.id in ids:
                    raise ValueError(f"duplicate item id {item.id!r} in pool")
                ids.add(item.id)
        object.__setattr__(self, "item_ids", frozenset(ids))

    def ad_candidates(self) -> tuple[Item, ...]:
        """Every insertable ad, regular and large, sorted by id."""
        return tuple(sorted(self.ads + self.large_ads, key=lambda item: item.id))


@dataclass(frozen=True, slots=True)
class RuleSet:
    """Hard business constraints on a slate.

    ``max_ads`` caps the number of ads per page, ``min_spacing`` is the
    minimum positional gap between the occupied slots of any two ads, and
    ``min_pos``/``max_pos`` bound every slot an ad may occupy (1-based,
    inclusive). A large ad occupies ``large_ad_span`` consecutive slots and
    may only start at a position in ``large_ad_start_positions``. When the
    user's exposure count reaches ``user_frequency_cap``, the ad budget for
    the page is forced to zero.
    """

    page_size: int
    max_ads: int
    min_spacing: int
    min_pos: int
    max_pos: int
    large_ad_span: int = 1
    large_ad_start_positions: frozenset[int] = frozenset()
    user_frequency_cap: int = 2**31

    def __post_init__(self) -> None:
        if not isinstance(self.large_ad_start_positions, frozenset):
            object.__setattr__(
                self, "large_ad_start_positions", frozenset(self.large_ad_start_positions)
            )
        if self.page_size < 1:
            raise ValueError("page_size must be positive")
        if self.max_ads < 0:
            raise ValueError("max_ads must be non-negative")
        if self.min_spacing < 1:
            raise ValueError("min_spacing must be at least 1")
        if not (1 <= self.min_pos <= self.max_pos <= self.page_size):
            raise ValueError(
                f"need 1 <= min_pos <= max_pos <= page_size, got "
                f"[{self.min_pos}, {self.max_pos}] with page_size {self.page_size}"
            )
        if not (1 <= self.large_ad_span <= self.page_size):
            raise ValueError("large_ad_span must be in [1, page_size]")
        if self.user_frequency_cap < 0:
            raise ValueError("user_frequency_cap must be non-negative")

    def span_of(self, item: Item) -> int:
        """Slots the item occupies on a page."""
        return self.large_ad_span if item.kind is ItemKind.LARGE_AD else 1

    def effective_max_ads(self, user_exposure_count: int) -> int:
        """Ad budget after frequency control, 0 once the cap is reached."""
        if user_exposure_count >= self.user_frequency_cap:
            return 0
        return self.max_ads


@dataclass(frozen=True, slots=True)
class AdPlacement:
    """One ad on a slate: occupied slots are ``start..end`` inclusive."""

    start: int
    end: int
    item: Item


def derive_ad_positions(items: tuple[Item, ...]) -> tuple[int, ...]:
    """All 1-based slots occupied by ads, multi-slot ads contributing each slot."""
    return tuple(i + 1 for i, item in enumerate(items) if item.kind.is_ad)


@dataclass(frozen=True)
class Slate:
    """An ordered page of items; the unit of feasibility and reward.

    ``items[i]`` occupies position ``i + 1``. A multi-slot ad is repeated
    once per occupied slot. ``ad_positions`` is derived at construction and
    always re-derivable from ``items`` via :func:`derive_ad_positions`.
    """

    items: tuple[Item, ...]
    ad_positions: tuple[int, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not isinstance(self.items, tuple):
            object.__setattr__(self, "items", tuple(self.items))
        last_slot: dict[str, int] = {}
        for slot, item in enumerate(self.items, start=1):
            prior = last_slot.get(item.id)
            if prior is not None:
                if item.kind is not ItemKind.LARGE_AD:
                    raise ValueError(
                        f"item {item.id!r} appears twice but is not a large ad"
                    )
                if prior != slot - 1:
                    raise ValueError(
                        f"large ad {item.id!r} occupies non-contiguous slots"
                    )
            last_slot[item.id] = slot
        object.__setattr__(self, "ad_positions", derive_ad_positions(self.items))

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item_id: str) -> bool:
        return any(item.id == item_id for item in self.items)

    def placements(self) -> tuple[AdPlacement, ...]:
        """Distinct ads in position order, with their occupied slot ranges."""
        out: list[AdPlacement] = []
        for slot, item in enumerate(self.items, start=1):
            if not item.kind.is_ad:
                continue
            if out and out[-1].item.id == item.id:
                out[-1] = AdPlacement(out[-1].start, slot, item)
            else:
                out.append(AdPlacement(slot, slot, item))
        return tuple(out)

    def ad_count(self) -> int:
        return len(self.placements())

    def ad_signature(self) -> tuple[int, tuple[str, ...], tuple[int, ...]]:
        """Deterministic identity of the slate's ad assignment.

        Returns (ad count, ad ids sorted, start positions in that id order);
        the decoder's tie-break orders slates by this key.
        """
        placements = sorted(self.placements(), key=lambda p: p.item.id)
        return (
            len(placements),
            tuple(p.item.id for p in placements),
            tuple(p.start for p in placements),
        )

    def organic_ids(self) -> tuple[str, ...]:
        return tuple(item.id for item in self.items if not item.kind.is_ad)


def organic_page(pool: CandidatePool, page_size: int) -> Slate:
    """The no-ad slate: the natural list truncated to the page size."""
    return Slate(pool.organic[:page_size])


def insert_ad(
    base: Slate, ad: Item, position: int, page_size: int, span: int = 1
) -> Slate:
    """Insert an ad so it occupies ``position .. position + span - 1``.

    Items at and below ``position`` shift down by ``span``; anything pushed
    past ``page_size`` is truncated. The base slate is unmodified.

    Raises :class:`PositionOutOfRange` if the slot does not exist on the base
    page or the full span would not fit within ``page_size``, and
    :class:`DuplicateItem` if the ad is already on the slate.
    """
    if not ad.kind.is_ad:
        raise ValueError(f"cannot insert non-ad item {ad.id!r}")
    if span < 1:
        raise ValueError("span must be at least 1")
    if ad.id in base:
        raise DuplicateItem(f"item {ad.id!r} is already on the slate")
    if position < 1 or position > len(base) + 1:
        raise PositionOutOfRange(
            f"position {position} not in [1, {len(base) + 1}]"
        )
    if position + span - 1 > page_size:
        raise PositionOutOfRange(
            f"span of {span} starting at {position} overflows page of {page_size}"
        )
    head = base.items[: position - 1]
    tail = base.items[position - 1 :]
    return Slate((head + (ad,) * span + tail)[:page_size])
