"""Density extraction from radiology report text.

Matches the canonical category wording (fifth-edition phrasing, plus the
widely used short forms) and explicit letter statements, case-insensitively.
Exactly one category must match: none raises NoDensityMatch, phrases from
two or more categories raise AmbiguousDensity.
"""

from __future__ import annotations

import re

from ..errors import AmbiguousDensity, NoDensityMatch
from ..studies import DensityCategory

# Canonical category phrases.  Variants within one category are fine;
# only cross-category conflicts are ambiguous.
_PHRASES = {
    DensityCategory.A: [
        r"almost\s+entirely\s+fatty",
        r"breasts\s+are\s+almost\s+entirely\s+fat\b",
    ],
    DensityCategory.B: [
        r"scattered\s+areas\s+of\s+fibroglandular\s+density",
        r"scattered\s+fibroglandular\s+densit(?:y|ies)",
    ],
    DensityCategory.C: [
        r"heterogeneously\s+dense",
    ],
    DensityCategory.D: [
        r"extremely\s+dense",
    ],
}

# Letter forms such as "density category: c" or "BI-RADS density B".
_LETTER = re.compile(
    r"(?:bi-?rads\s+)?density(?:\s+category)?\s*[:\-]?\s*[\(\[]?([a-d])[\)\]]?(?![a-z0-9])",
    re.IGNORECASE,
)

_COMPILED = {
    cat: [re.compile(p, re.IGNORECASE) for p in patterns]
    for cat, patterns in _PHRASES.items()
}


def parse_density_report(text: str) -> DensityCategory:
    """The single density category stated in the report text."""
    found: set[DensityCategory] = set()
    for cat, patterns in _COMPILED.items():
        if any(p.search(text) for p in patterns):
            found.add(cat)
    for match in _LETTER.finditer(text):
        found.add(DensityCategory(match.group(1).upper()))
    if not found:
        raise NoDensityMatch("no canonical density phrase found")
    if len(found) > 1:
        names = ", ".join(sorted(c.value for c in found))
        raise AmbiguousDensity(f"conflicting density phrases: {names}")
    return found.pop()
