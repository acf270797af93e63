"""Dates with year/month/day precision, as carried by knowledge-base time qualifiers.

Wikidata time values look like ``{"time": "+2023-07-00T00:00:00Z", "precision": 10}``
where precision 9 = year, 10 = month, 11 = day. Coarser precisions (decade and up)
are useless for month-granularity cutoff comparisons and are rejected by the parser;
finer ones are clamped to day. Unset fields are stored as None, so ``2023-07`` sorts
and compares through its earliest/latest concrete instants.
"""

from __future__ import annotations

import calendar
import re
from dataclasses import dataclass
from datetime import date, datetime, timezone

PRECISION_YEAR = "year"
PRECISION_MONTH = "month"
PRECISION_DAY = "day"

_WIKIDATA_TIME_RE = re.compile(r"^([+-])(\d{1,16})-(\d{2})-(\d{2})T")
_ISO_PREFIX_RE = re.compile(r"^(\d{4})(?:-(\d{2}))?(?:-(\d{2}))?$")


@dataclass(frozen=True, slots=True)
class FuzzyDate:
    """A date known down to year, month, or day precision."""

    year: int
    month: int | None = None
    day: int | None = None

    def __post_init__(self):
        if not 1 <= self.year <= 9999:
            raise ValueError(f"year out of range: {self.year}")
        if self.day is not None and self.month is None:
            raise ValueError("day set without month")
        if self.month is not None and not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")
        if self.day is not None:
            date(self.year, self.month, self.day)  # validates calendar day

    @property
    def precision(self) -> str:
        if self.day is not None:
            return PRECISION_DAY
        if self.month is not None:
            return PRECISION_MONTH
        return PRECISION_YEAR

    def earliest(self) -> date:
        """First concrete day this fuzzy date could denote."""
        return date(self.year, self.month or 1, self.day or 1)

    def latest(self) -> date:
        """Last concrete day this fuzzy date could denote."""
        if self.day is not None:
            return date(self.year, self.month, self.day)
        if self.month is not None:
            last = calendar.monthrange(self.year, self.month)[1]
            return date(self.year, self.month, last)
        return date(self.year, 12, 31)

    def earliest_instant(self) -> datetime:
        """UTC midnight of earliest(), for comparisons against revision timestamps."""
        d = self.earliest()
        return datetime(d.year, d.month, d.day, tzinfo=timezone.utc)

    def isoformat(self) -> str:
        if self.day is not None:
            return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"
        if self.month is not None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}"

    def __str__(self) -> str:
        return self.isoformat()

    @classmethod
    def parse(cls, text: str) -> "FuzzyDate":
        """Parse ``2023``, ``2023-07``, or ``2023-07-15``."""
        m = _ISO_PREFIX_RE.match(text.strip())
        if not m:
            raise ValueError(f"not a fuzzy date: {text!r}")
        year, month, day = m.groups()
        return cls(int(year), int(month) if month else None, int(day) if day else None)

    @classmethod
    def from_date(cls, d: date) -> "FuzzyDate":
        return cls(d.year, d.month, d.day)


def from_wikidata_time(time_str: str, precision: int) -> FuzzyDate | None:
    """Map a Wikidata time value to a FuzzyDate.

    Returns None for values we cannot anchor to a month-comparable date:
    coarser than year precision, BCE years, zero months/days where the claimed
    precision requires them, and malformed strings.
    """
    if precision < 9:
        return None
    m = _WIKIDATA_TIME_RE.match(time_str or "")
    if not m:
        return None
    sign, year_s, month_s, day_s = m.groups()
    if sign == "-":
        return None
    year, month, day = int(year_s), int(month_s), int(day_s)
    try:
        if precision == 9:
            return FuzzyDate(year)
        if precision == 10:
            return FuzzyDate(year, month)
        # precision 11 (day) and finer: the date part is still exact to the day
        return FuzzyDate(year, month, day)
    except ValueError:
        return None


def add_months(d: date, months: int) -> date:
    """Shift a date by whole months, clamping the day to the target month's length."""
    total = d.year * 12 + (d.month - 1) + months
    year, month = divmod(total, 12)
    month += 1
    day = min(d.day, calendar.monthrange(year, month)[1])
    return date(year, month, day)
