"""Candidate-date recognition.

Every substring of a document that can be read as a day/month/year date is a
candidate answer. Two surface forms are recognised:

* numeric: ``D<sep>M<sep>Y`` with ``sep`` one of ``/ . -`` (both separators
  identical), day 1-31, month 1-12 and a 2- or 4-digit year;
* textual: ``[the] 5th of May[,] 1998`` style phrases, with full month names or
  three-letter abbreviations.

Two-digit years above 25 belong to the 1900s, the rest to the 2000s. Anything
that is not a real calendar day is dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date

__all__ = [
    "CanonicalDate",
    "DateMatch",
    "CandidateSet",
    "extract_candidates",
    "resolve_two_digit_year",
    "normalize_textual_date",
    "parse_strict_ddmmyyyy",
    "MONTHS",
]

MIN_YEAR = 1000
MAX_YEAR = 2999
TWO_DIGIT_PIVOT = 25

MONTHS: dict[str, int] = {}
for _number, _name in enumerate(
    [
        "january", "february", "march", "april", "may", "june",
        "july", "august", "september", "october", "november", "december",
    ],
    start=1,
):
    MONTHS[_name] = _number
    MONTHS[_name[:3]] = _number


@dataclass(frozen=True, order=True)
class CanonicalDate:
    """A validated Gregorian calendar day, rendered as DD/MM/YYYY."""

    # field order gives chronological ordering
    year: int
    month: int
    day: int

    def __post_init__(self) -> None:
        if not MIN_YEAR <= self.year <= MAX_YEAR:
            raise ValueError(f"year {self.year} outside {MIN_YEAR}-{MAX_YEAR}")
        # datetime.date does the leap-year and month-length checks
        date(self.year, self.month, self.day)

    @classmethod
    def of(cls, day: int, month: int, year: int) -> CanonicalDate:
        return cls(year=year, month=month, day=day)

    @classmethod
    def parse(cls, text: str) -> CanonicalDate:
        """Strict DD/MM/YYYY parse that raises instead of returning None."""
        parsed = parse_strict_ddmmyyyy(text)
        if parsed is None:
            raise ValueError(f"not a valid DD/MM/YYYY date: {text!r}")
        return parsed

    def render(self) -> str:
        return f"{self.day:02d}/{self.month:02d}/{self.year:04d}"

    def to_date(self) -> date:
        return date(self.year, self.month, self.day)

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class DateMatch:
    date: CanonicalDate
    span_start: int
    span_end: int
    surface: str

    def __post_init__(self) -> None:
        if self.span_start >= self.span_end:
            raise ValueError("empty span")


@dataclass(frozen=True)
class CandidateSet:
    """All date matches found in a text, in order of appearance."""

    matches: tuple[DateMatch, ...] = ()
    distinct_dates: frozenset[CanonicalDate] = field(default=frozenset())

    @classmethod
    def from_matches(cls, matches) -> CandidateSet:
        matches = tuple(matches)
        return cls(matches, frozenset(m.date for m in matches))

    def __contains__(self, item: object) -> bool:
        return item in self.distinct_dates

    def __len__(self) -> int:
        return len(self.distinct_dates)

    def __bool__(self) -> bool:
        return bool(self.distinct_dates)


def resolve_two_digit_year(yy: int) -> int:
    """Map a two-digit year onto 1926-1999 or 2000-2025."""
    if not 0 <= yy <= 99:
        raise ValueError(f"two-digit year out of range: {yy}")
    return 1900 + yy if yy > TWO_DIGIT_PIVOT else 2000 + yy


def _build_date(day: int, month: int, year_token: str) -> CanonicalDate | None:
    if len(year_token) == 2:
        year = resolve_two_digit_year(int(year_token))
    elif len(year_token) == 4:
        year = int(year_token)
    else:
        return None
    try:
        return CanonicalDate(year=year, month=month, day=day)
    except ValueError:
        return None


# Lookahead wrapper so finditer reports a candidate at every start offset,
# including ones that overlap an earlier (possibly invalid) candidate.
_NUMERIC = re.compile(
    r"(?=(?<![0-9])(?P<all>(?P<d>[0-9]{1,2})(?P<sep>[/.\-])(?P<m>[0-9]{1,2})(?P=sep)(?P<y>[0-9]{4}|[0-9]{2}))(?![0-9]))"
)

_MONTH_ALTERNATION = "|".join(sorted(MONTHS, key=len, reverse=True))
_TEXTUAL_BODY = (
    r"(?:the\s+)?(?P<d>[0-9]{1,2})(?:st|nd|rd|th)?\s+of\s+"
    rf"(?P<mon>{_MONTH_ALTERNATION})\b\.?\s*,?\s*(?P<y>[0-9]{{4}}|[0-9]{{2}})(?![0-9])"
)
_TEXTUAL = re.compile(rf"(?=(?<![\w])(?P<all>{_TEXTUAL_BODY}))", re.IGNORECASE)
_TEXTUAL_FULL = re.compile(rf"\s*{_TEXTUAL_BODY}\s*", re.IGNORECASE)

_STRICT = re.compile(r"\s*([0-9]{1,2})/([0-9]{1,2})/([0-9]{4}|[0-9]{2})\s*")


def _numeric_matches(text: str):
    for m in _NUMERIC.finditer(text):
        found = _build_date(int(m["d"]), int(m["m"]), m["y"])
        if found is not None:
            yield DateMatch(found, m.start("all"), m.end("all"), m["all"])


def _textual_matches(text: str):
    for m in _TEXTUAL.finditer(text):
        found = _build_date(int(m["d"]), MONTHS[m["mon"].lower()], m["y"])
        if found is not None:
            yield DateMatch(found, m.start("all"), m.end("all"), m["all"])


def extract_candidates(text: str) -> CandidateSet:
    """Find every non-overlapping date in ``text``.

    Overlaps are resolved left to right; at a given start offset the longest
    valid match wins.

    >>> sorted(map(str, extract_candidates("the 5th of May, 1998").distinct_dates))
    ['05/05/1998']
    >>> len(extract_candidates("12/06-98"))
    0
    """
    found = sorted(
        [*_numeric_matches(text), *_textual_matches(text)],
        key=lambda m: (m.span_start, -(m.span_end - m.span_start)),
    )
    chosen: list[DateMatch] = []
    cursor = 0
    for match in found:
        if match.span_start >= cursor:
            chosen.append(match)
            cursor = match.span_end
    return CandidateSet.from_matches(chosen)


def normalize_textual_date(surface: str) -> CanonicalDate | None:
    """Convert a phrase like ``11th of Jun 62`` to a date, or None."""
    m = _TEXTUAL_FULL.fullmatch(surface)
    if m is None:
        return None
    return _build_date(int(m["d"]), MONTHS[m["mon"].lower()], m["y"])


def parse_strict_ddmmyyyy(s: str) -> CanonicalDate | None:
    """Parse ``D/M/Y`` with slash separators only; surrounding blanks allowed."""
    m = _STRICT.fullmatch(s)
    if m is None:
        return None
    return _build_date(int(m[1]), int(m[2]), m[3])
