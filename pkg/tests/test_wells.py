import pytest
from hypothesis import given, strategies as st

from scopefleet.protocol import WellId, ALL_WELLS


def test_exactly_24_wells():
    assert len(ALL_WELLS) == 24
    assert len(set(ALL_WELLS)) == 24


def test_parse_and_str_roundtrip():
    for well in ALL_WELLS:
        assert WellId.parse(str(well)) == well


@pytest.mark.parametrize("bad", ["E1", "A7", "A0", "a1", "", "A", "11", "AA1"])
def test_invalid_wells_rejected(bad):
    with pytest.raises(ValueError):
        WellId.parse(bad)


def test_row_major_order():
    assert [str(w) for w in ALL_WELLS[:7]] == ["A1", "A2", "A3", "A4", "A5", "A6", "B1"]
    assert str(ALL_WELLS[-1]) == "D6"


@given(st.permutations(list(ALL_WELLS)))
def test_sorting_any_permutation_is_row_major(shuffled):
    assert tuple(sorted(shuffled)) == ALL_WELLS
