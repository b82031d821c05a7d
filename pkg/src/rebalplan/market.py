"""Static market description: securities, quotes, fees, discrete distributions.

Everything here is immutable after construction and safe to share across
solver workers. Prices are per unit of a security; a security is tradable
exactly on the closed window [issue_time, issue_time + maturity] and is
worthless outside it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal

from .errors import (
    BadNormalizationError,
    FeeMissingError,
    InactiveSecurityError,
    NegativeWeightError,
    NonpositivePriceError,
    QuoteMissingError,
)


@dataclass(frozen=True)
class TimeGrid:
    """Ordered decision times t_1 < t_2 < ... < t_f (abstract integer ticks).

    The final point is the horizon end: no trading happens there. A single
    point grid is the degenerate no-decision instance; scenario files are
    required to carry at least two points.
    """

    points: tuple[int, ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("time grid needs at least one point")
        if any(b <= a for a, b in zip(self.points, self.points[1:])):
            raise ValueError(f"time grid must be strictly increasing: {self.points}")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def end(self) -> int:
        """The horizon end T (last grid point)."""
        return self.points[-1]

    def index_of(self, t: int) -> int:
        try:
            return self.points.index(t)
        except ValueError:
            raise ValueError(f"time {t} is not on the grid {self.points}") from None


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite list of (value, probability) outcomes.

    Used for prices and, in expected mode, for per-broker fees. Weights must
    sum to exactly 1 in fixed point; this is checked by
    :func:`validate_distribution`, not here.
    """

    outcomes: tuple[tuple[Decimal, Decimal], ...]

    def __len__(self) -> int:
        return len(self.outcomes)

    def weight_sum(self) -> Decimal:
        total = Decimal(0)
        for _, weight in self.outcomes:
            total += weight
        return total


@dataclass(frozen=True)
class Security:
    """One instrument type with its circulation window and price series.

    ``quotes`` and ``distributions`` are keyed by grid time; at most one of
    the two may carry an entry for a given time.
    """

    security_id: str
    issue_time: int
    maturity: int
    quotes: dict[int, Decimal] = field(default_factory=dict)
    distributions: dict[int, DiscreteDistribution] = field(default_factory=dict)

    @property
    def window_end(self) -> int:
        return self.issue_time + self.maturity


@dataclass(frozen=True)
class Broker:
    """Per-unit fees one brokerage charges, keyed by (security id, time).

    A fee entry is either a plain decimal or a :class:`DiscreteDistribution`
    of fees (expected mode only).
    """

    broker_id: str
    fees: dict[tuple[str, int], Decimal | DiscreteDistribution] = field(default_factory=dict)


@dataclass(frozen=True)
class FeeTable:
    """All brokers' fee quotes; queries take the cheapest broker per deal."""

    brokers: tuple[Broker, ...]

    def quotes_for(self, security_id: str, t: int) -> list[Decimal]:
        """Scalar fees quoted by any broker for this (security, time)."""
        fees = []
        for broker in self.brokers:
            fee = broker.fees.get((security_id, t))
            if isinstance(fee, Decimal):
                fees.append(fee)
        return fees


@dataclass(frozen=True)
class Market:
    """A time grid plus securities, indexed for lookup."""

    grid: TimeGrid
    securities: tuple[Security, ...]

    def __post_init__(self):
        by_id = {}
        for sec in self.securities:
            if sec.security_id in by_id:
                raise ValueError(f"duplicate security id {sec.security_id!r}")
            by_id[sec.security_id] = sec
        object.__setattr__(self, "_by_id", by_id)

    def security(self, security_id: str) -> Security:
        return self._by_id[security_id]

    def active_securities(self, t: int) -> list[Security]:
        """Securities in circulation at ``t``, in id order."""
        return sorted(
            (s for s in self.securities if is_active(s, t)),
            key=lambda s: s.security_id,
        )

    def price(self, security_id: str, t: int) -> Decimal:
        return price_at(self.security(security_id), t)


def is_active(security: Security, t: int) -> bool:
    """True iff ``t`` lies in the closed circulation window of the security."""
    return security.issue_time <= t <= security.window_end


def price_at(security: Security, t: int) -> Decimal:
    """Quoted price of an active security; never a stand-in for inactive ones.

    Callers valuing a portfolio must treat securities outside their window as
    worth zero instead of asking for a price.
    """
    if not is_active(security, t):
        raise InactiveSecurityError(security.security_id, t)
    quote = security.quotes.get(t)
    if quote is None:
        raise QuoteMissingError(security.security_id, t)
    return quote


def effective_fee(security: Security, t: int, fees: FeeTable) -> Decimal:
    """Cheapest per-unit fee across brokers for trading the security at ``t``."""
    if not is_active(security, t):
        raise InactiveSecurityError(security.security_id, t)
    quotes = fees.quotes_for(security.security_id, t)
    if not quotes:
        raise FeeMissingError(security.security_id, t)
    return min(quotes)


def validate_distribution(dist: DiscreteDistribution) -> None:
    """Check a price distribution: positive prices, weights ≥ 0 summing to 1.

    The sum check is exact in fixed point; no tolerance is applied.
    """
    if len(dist) < 1:
        raise BadNormalizationError(Decimal(0))
    for price, weight in dist.outcomes:
        if price <= 0:
            raise NonpositivePriceError(price)
        if weight < 0:
            raise NegativeWeightError(weight)
    total = dist.weight_sum()
    if total != 1:
        raise BadNormalizationError(total)
