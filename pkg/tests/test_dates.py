from datetime import date

import pytest
from hypothesis import given
from hypothesis import strategies as st

from freshbench.dates import FuzzyDate, add_months, from_wikidata_time


def test_precision_derived_from_fields():
    assert FuzzyDate(2023).precision == "year"
    assert FuzzyDate(2023, 7).precision == "month"
    assert FuzzyDate(2023, 7, 15).precision == "day"


def test_earliest_latest_projections():
    assert FuzzyDate(2023).earliest() == date(2023, 1, 1)
    assert FuzzyDate(2023).latest() == date(2023, 12, 31)
    assert FuzzyDate(2023, 2).latest() == date(2023, 2, 28)
    assert FuzzyDate(2024, 2).latest() == date(2024, 2, 29)
    assert FuzzyDate(2023, 7, 15).earliest() == FuzzyDate(2023, 7, 15).latest()


def test_invalid_fields_rejected():
    with pytest.raises(ValueError):
        FuzzyDate(2023, None, 5)
    with pytest.raises(ValueError):
        FuzzyDate(2023, 13)
    with pytest.raises(ValueError):
        FuzzyDate(2023, 2, 30)
    with pytest.raises(ValueError):
        FuzzyDate(0)


def test_parse_and_isoformat_round_trip():
    for text in ("2023", "2023-07", "2023-07-15"):
        assert FuzzyDate.parse(text).isoformat() == text
    with pytest.raises(ValueError):
        FuzzyDate.parse("not-a-date")


@pytest.mark.parametrize(
    "time_str,precision,expected",
    [
        ("+2023-07-15T00:00:00Z", 11, FuzzyDate(2023, 7, 15)),
        ("+2023-07-00T00:00:00Z", 10, FuzzyDate(2023, 7)),
        ("+2023-00-00T00:00:00Z", 9, FuzzyDate(2023)),
        ("+2020-00-00T00:00:00Z", 8, None),  # decade precision dropped
        ("-0044-03-15T00:00:00Z", 11, None),  # BCE unsupported
        ("+2023-00-00T00:00:00Z", 10, None),  # month claimed but zero
        ("garbage", 11, None),
    ],
)
def test_wikidata_time_mapping(time_str, precision, expected):
    assert from_wikidata_time(time_str, precision) == expected


def test_finer_than_day_clamped_to_day():
    assert from_wikidata_time("+2023-07-15T13:45:00Z", 14) == FuzzyDate(2023, 7, 15)


@given(
    year=st.integers(min_value=1, max_value=9999),
    month=st.one_of(st.none(), st.integers(min_value=1, max_value=12)),
    day_seed=st.integers(min_value=1, max_value=28),
    with_day=st.booleans(),
)
def test_earliest_never_exceeds_latest(year, month, day_seed, with_day):
    day = day_seed if (month is not None and with_day) else None
    d = FuzzyDate(year, month, day)
    assert d.earliest() <= d.latest()


@given(st.dates(min_value=date(1900, 1, 1), max_value=date(2100, 1, 1)),
       st.integers(min_value=0, max_value=48))
def test_add_months_keeps_day_when_possible(start, months):
    shifted = add_months(start, months)
    assert (shifted.year * 12 + shifted.month) - (start.year * 12 + start.month) == months
    assert shifted.day <= start.day


def test_add_months_clamps_to_month_length():
    assert add_months(date(2023, 1, 31), 1) == date(2023, 2, 28)
    assert add_months(date(2023, 11, 30), 3) == date(2024, 2, 29)
