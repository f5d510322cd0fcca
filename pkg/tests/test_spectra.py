import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hausspec.errors import InconclusiveError, PreconditionError, ResourceLimitError
from hausspec.spectra import (
    GapSequence,
    RationalSubgroupSpec,
    SpectrumTarget,
    build_filtration,
    line_logindex_closedform,
    line_logindex_oracle,
    line_logindex_printed,
    random_line,
    require_conclusive,
    spectrum_scan,
    standard_samples,
    z_line_transversality,
)

HALF = SpectrumTarget.parse("0,1/2,1", 3)
THIRDS = SpectrumTarget.parse("0,1/3,1/2,1", 3)


def test_target_validation():
    assert SpectrumTarget.parse("0,1", 3).n == 2
    for bad in ("1/2,1", "0,1/2", "0,1/2,1/3,1"):
        with pytest.raises(PreconditionError):
            SpectrumTarget.parse(bad, 3)
    with pytest.raises(PreconditionError):
        SpectrumTarget.parse("0,1", 6)


def test_gap_sequences():
    assert [GapSequence().e(i) for i in range(4)] == [2, 4, 16, 256]
    assert [GapSequence("custom", base=4).e(i) for i in range(3)] == [1, 4, 16]
    with pytest.raises(PreconditionError):
        GapSequence("custom", values=(1, 2, 3, 4)).check_window(3)  # ratios rise
    with pytest.raises(PreconditionError):
        GapSequence("custom", values=(1, 2)).e(5)
    assert GapSequence.from_dict({"mode": "tower"}) == GapSequence()


def test_tower_index_data():
    F = build_filtration(HALF, GapSequence(), 3)
    assert [d.t for d in F.indices] == [2, 6, 0]
    assert F.data(2).log_index == 20
    assert [F.residue_class(i) for i in (1, 2, 3, 4)] == [1, 2, 3, 1]


def test_z2_small_index_both_routes():
    F = build_filtration(HALF, GapSequence(), 3)
    z2 = RationalSubgroupSpec.z_line(2, 3)
    assert line_logindex_closedform(z2, F, 2) == (8, 20) == line_logindex_oracle(z2, F, 2)


def test_z2_tower_ratio_near_half():
    F = build_filtration(HALF, GapSequence(), 11)
    num, den = line_logindex_closedform(RationalSubgroupSpec.z_line(2, 3), F, 11)
    assert F.residue_class(11) == 2 and F.data(11).j == 3
    assert abs(Fraction(num, den) - Fraction(1, 2)) < Fraction(1, 10**6)


def test_oracle_capped_for_tower_sizes():
    F = build_filtration(HALF, GapSequence(), 6)
    with pytest.raises(ResourceLimitError):
        F.lattice(6)


@pytest.fixture(scope="module")
def custom_filtration():
    return build_filtration(HALF, GapSequence("custom", base=4), 6)


def test_closed_form_matches_oracle_on_standard_samples(custom_filtration):
    F = custom_filtration
    for H in standard_samples(HALF, 3) + [RationalSubgroupSpec("yline", 0, 9)]:
        for i in range(1, F.i_max + 1):
            assert line_logindex_closedform(H, F, i) == line_logindex_oracle(H, F, i)


lines = st.builds(
    RationalSubgroupSpec.from_vector,
    st.integers(1, 3**4),
    st.fractions(min_value=-50, max_value=50, max_denominator=20).filter(lambda b: b.denominator % 3),
    st.just(3),
)


@given(lines, st.integers(1, 6))
def test_closed_form_matches_oracle_random_lines(custom_filtration, H, i):
    assert line_logindex_closedform(H, custom_filtration, i) == line_logindex_oracle(H, custom_filtration, i)


def test_printed_branch_agrees_except_clamp():
    F = build_filtration(HALF, GapSequence("custom", base=4), 8)
    z1 = RationalSubgroupSpec.z_line(1, 3)
    z2 = RationalSubgroupSpec.z_line(2, 3)
    differ = [i for i in range(1, 9) if line_logindex_printed(z1, F, i) != line_logindex_closedform(z1, F, i)]
    # on I_1 with xi_1 = 0 the printed branch drops below e(i-1); the order never can
    assert differ == [1, 4, 7]
    assert all(line_logindex_printed(z2, F, i) == line_logindex_closedform(z2, F, i) for i in range(1, 9))


def test_transversality():
    for k in range(1, 5):
        for l in range(1, 5):
            if k != l:
                assert z_line_transversality(k, l, 3) == min(k, l)


def test_line_outside_lattice_rejected(custom_filtration):
    with pytest.raises(PreconditionError):
        line_logindex_closedform(RationalSubgroupSpec("line", 0, Fraction(1, 3)), custom_filtration, 1)
    with pytest.raises(PreconditionError):
        RationalSubgroupSpec.from_vector(Fraction(1, 3), 1, 3)


def test_scan_values_half():
    F = build_filtration(HALF, GapSequence(), 9)
    rng = random.Random(5)
    rep = spectrum_scan(F, standard_samples(HALF, 3) + [random_line(rng, 3) for _ in range(20)])
    assert rep.values == [0, Fraction(1, 2), 1]
    assert rep.inconclusive == 0
    assert [v.value for v in rep.verdicts[:4]] == [0, 1, 0, Fraction(1, 2)]
    assert all(v.value == 1 for v in rep.verdicts[4:])
    require_conclusive(rep)


def test_scan_window_too_short():
    F = build_filtration(HALF, GapSequence(), 5)
    with pytest.raises(PreconditionError):
        spectrum_scan(F, standard_samples(HALF, 3))


def test_scan_flags_unsettled_sample():
    # with only the first two cycles of a slow custom gap the z_2 tail has not settled within 1/1000
    F = build_filtration(HALF, GapSequence("custom", base=4), 6)
    rep = spectrum_scan(F, [RationalSubgroupSpec.z_line(2, 3)])
    assert rep.inconclusive == 1
    with pytest.raises(InconclusiveError):
        require_conclusive(rep)


def test_scan_report_serialisation():
    F = build_filtration(THIRDS, GapSequence(), 8)
    rep = spectrum_scan(F, standard_samples(THIRDS, 3))
    assert rep.to_json() == spectrum_scan(F, standard_samples(THIRDS, 3)).to_json()
    assert rep.to_csv().splitlines()[0] == "sample,class,i,numerator,denominator,ratio"
