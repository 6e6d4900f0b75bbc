import pytest

from tomokit.errors import AmbiguousDensity, NoDensityMatch
from tomokit.ingest import parse_density_report
from tomokit.studies import DensityCategory

CANONICAL = {
    "The breasts are almost entirely fatty.": DensityCategory.A,
    "There are scattered areas of fibroglandular density.": DensityCategory.B,
    "The breasts are heterogeneously dense, which may obscure small masses.": DensityCategory.C,
    "The breasts are extremely dense, which lowers the sensitivity of mammography.": DensityCategory.D,
}


@pytest.mark.parametrize("text,expected", CANONICAL.items())
def test_canonical_fifth_edition_phrases(text, expected):
    assert parse_density_report(text) == expected


def test_case_insensitive():
    assert parse_density_report("BREASTS ARE HETEROGENEOUSLY DENSE") == DensityCategory.C


def test_short_form_scattered_densities():
    assert parse_density_report("scattered fibroglandular densities") == DensityCategory.B


def test_letter_forms():
    assert parse_density_report("BI-RADS density category C.") == DensityCategory.C
    assert parse_density_report("breast density: b") == DensityCategory.B
    assert parse_density_report("Density (a) noted.") == DensityCategory.A


def test_conflicting_phrases_ambiguous():
    with pytest.raises(AmbiguousDensity):
        parse_density_report(
            "Right breast almost entirely fatty; left breast extremely dense."
        )


def test_same_category_twice_is_not_ambiguous():
    text = "heterogeneously dense. IMPRESSION: breasts are heterogeneously dense."
    assert parse_density_report(text) == DensityCategory.C


def test_no_match_raises():
    with pytest.raises(NoDensityMatch):
        parse_density_report("Unremarkable screening exam.")


def test_phrase_and_matching_letter_agree():
    text = "The breasts are extremely dense. Density category D."
    assert parse_density_report(text) == DensityCategory.D


def test_phrase_and_conflicting_letter_is_ambiguous():
    text = "The breasts are extremely dense. Density category B."
    with pytest.raises(AmbiguousDensity):
        parse_density_report(text)
