"""
Finding candidate dates in a letter
===================================

Every date written in a document is a candidate answer. Numeric dates
(day first, one separator) and written-out dates are both recognised and
normalised to DD/MM/YYYY.
"""

from lmchain import extract_candidates, resolve_two_digit_year

letter = """Dear Dr Smith,
I saw Mrs Jones (born the 5th of May, 1998) in clinic on 12/03/2024.
Her brother, 11th of Jun 62, attended on 14.03.24.
Please ignore the reference 01/02-1990 and the impossible 31/02/2020."""

# each match keeps its span and the text it was read from
cands = extract_candidates(letter)
for m in cands.matches:
    print(f"{m.surface!r:28} -> {m.date}  (chars {m.span_start}-{m.span_end})")

# mixed separators and impossible days are not candidates
print("distinct dates:", sorted(str(d) for d in cands.distinct_dates))

# two-digit years pivot at 25
for yy in (25, 26, 62, 99):
    print(f"'{yy:02d}' -> {resolve_two_digit_year(yy)}")
