from fractions import Fraction

import pytest

from app.core.exceptions import (
    GradingError,
    InputFormatError,
    InvarianceError,
    MembershipError,
    PolyballError,
    ShapeMismatchError,
)
from app.core.linalg import RationalMatrix
from app.models import PolyballTuple
from app.models.polyball import Grading
from app.services import polyball_service
from tests.utils import (
    create_commuting_pair,
    create_nilpotent_pair,
    create_nilpotent_tuple,
    create_scalar_tuple,
    create_shape,
    data_path,
)


@pytest.fixture
def nilpotent():
    return create_nilpotent_tuple()[0]


def test_nilpotent_defect(nilpotent):
    assert polyball_service.is_in_polyball(nilpotent).member
    data = polyball_service.defect_data(nilpotent)
    assert data.delta == RationalMatrix.diagonal([Fraction(3, 4), 1])
    assert data.delta_rank == 2


def test_membership_failure_carries_witness():
    T = create_scalar_tuple([[1, 1]])
    result = polyball_service.is_in_polyball(T)
    assert not result.member
    assert result.p == (1,)
    assert result.value == -1
    with pytest.raises(MembershipError) as exc:
        polyball_service.require_membership(T)
    assert exc.value.p == (1,)


def test_rows_must_commute():
    a = [[0, 1], [0, 0]]
    b = [[0, 0], [1, 0]]
    with pytest.raises(PolyballError):
        PolyballTuple.from_rows(create_shape(1, 1), 2, [[a], [b]])


def test_berezin_gram_of_scalar_contraction():
    T = create_scalar_tuple([["1/2"]])
    assert polyball_service.berezin_gram(T, (1,)).to_list() == [[Fraction(15, 16)]]
    assert polyball_service.power_numerator(T, (1,)).to_list() == [[Fraction(15, 16)]]


@pytest.mark.parametrize("factory", [lambda: create_nilpotent_tuple()[0], create_commuting_pair])
def test_exact_identities(factory):
    T = factory()
    q = (3,) * T.shape.k
    for check in (
        polyball_service.kpk_check,
        polyball_service.telescoping_check,
        polyball_service.range_identity_check,
        polyball_service.psd_chain_check,
    ):
        report = check(T, q)
        assert report.passed, report.first_failure()


def test_kpk_report_lists_every_truncation(nilpotent):
    report = polyball_service.kpk_check(nilpotent, (3,))
    assert [r.q for r in report.records] == [[0], [1], [2], [3]]


def test_span_dim_of_nilpotent(nilpotent):
    data = polyball_service.defect_data(nilpotent)
    assert polyball_service.span_dim(nilpotent, data.defect_basis, (0,)) == 2
    assert polyball_service.span_dim(nilpotent, [[0, 1]], (0,)) == 1
    assert polyball_service.span_dim(nilpotent, [[0, 1]], (1,)) == 2


def test_ampliation_and_direct_sum(nilpotent):
    amp = polyball_service.ampliation([nilpotent, create_scalar_tuple([["1/2", 0]])])
    assert amp.shape.n == (2, 2)
    assert amp.dim == 2
    assert polyball_service.ampliation_defect_check([nilpotent, nilpotent]).passed
    total = polyball_service.direct_sum(nilpotent, nilpotent)
    assert total.dim == 4
    assert polyball_service.defect_data(total).delta_rank == 4


def test_purity_of_nilpotent(nilpotent):
    report = polyball_service.is_pure(nilpotent, Fraction(1, 10**6), 8)
    assert report.decayed
    assert report.traces[1][:2] == [Fraction(1, 4), 0]


def test_grading_split(nilpotent):
    grading = create_nilpotent_tuple()[1]
    polyball_service.check_grading(nilpotent, grading)
    split = polyball_service.grading_split(nilpotent, grading)
    assert split.c == (0,)
    assert split.d == (1,)
    assert split.h0_basis == [0]
    assert split.restricted.dim == 1
    assert split.restricted_in_polyball
    assert polyball_service.grading_commutation_check(nilpotent, grading).passed


def test_wrong_grading_is_rejected(nilpotent):
    with pytest.raises(GradingError):
        polyball_service.check_grading(nilpotent, Grading(((0,), (1,))))
    with pytest.raises(InputFormatError):
        polyball_service.check_grading(nilpotent, Grading(((0,),)))


def test_invariant_subspaces(nilpotent):
    P = polyball_service.require_invariant(nilpotent, [[1, 0]])
    assert P == RationalMatrix.diagonal([1, 0])
    polyball_service.require_invariant(nilpotent, [[0, 1]], co=True)
    with pytest.raises(InvarianceError):
        polyball_service.require_invariant(nilpotent, [[0, 1]])


def test_tuple_file_round_trip(nilpotent):
    T, grading = polyball_service.load_tuple(data_path("nilpotent.json"))
    assert T == nilpotent
    assert grading == create_nilpotent_tuple()[1]
    again, _ = polyball_service.tuple_from_file(polyball_service.tuple_to_file(T, grading))
    assert again == T


def test_missing_tuple_file(tmp_path):
    with pytest.raises(InputFormatError):
        polyball_service.load_tuple(tmp_path / "absent.json")


def test_phi_and_defect_maps(nilpotent):
    I = nilpotent.identity()
    assert polyball_service.phi_apply(nilpotent, 1, I) == RationalMatrix.diagonal([Fraction(1, 4), 0])
    assert polyball_service.defect_map(nilpotent, (0,)) == I
    assert polyball_service.defect_map(nilpotent, (1,)) == RationalMatrix.diagonal([Fraction(3, 4), 1])
    with pytest.raises(ShapeMismatchError):
        polyball_service.defect_map(nilpotent, (2,))


def test_zero_diagonal_defect_is_not_a_member():
    # Φ(I) = diag(1, 2), so the defect at p = (1,) is diag(0, -1)
    T = PolyballTuple.from_rows(create_shape(2), 2, [[[[1, 0], [0, 1]], [[0, 0], [0, 1]]]])
    result = polyball_service.is_in_polyball(T)
    assert not result.member
    assert result.p == (1,)
    assert result.value == -1
    with pytest.raises(MembershipError):
        polyball_service.require_membership(T)


def test_purity_needs_a_positive_power(nilpotent):
    with pytest.raises(InputFormatError):
        polyball_service.is_pure(nilpotent, max_power=0)


def test_purity_defaults_come_from_settings(nilpotent):
    report = polyball_service.is_pure(nilpotent)
    assert report.max_power == 12
    assert report.tol == Fraction(1, 10**6)
    assert report.verdict == "pure up to max_power=12"


def test_psd_chain_carries_purity_diagnostic(nilpotent):
    report = polyball_service.psd_chain_check(nilpotent, (2,))
    purity = [r for r in report.records if r.name == "purity"]
    assert len(purity) == 1
    assert purity[0].passed
    assert purity[0].detail == "pure up to max_power=12"
    assert purity[0].witness == {"1": ["1/4", "0/1"]}


def test_purity_is_diagnostic_only():
    # a scalar row that never decays still passes the chain
    T = create_scalar_tuple([["1/2", "1/2"]])
    report = polyball_service.psd_chain_check(T, (2,))
    purity = next(r for r in report.records if r.name == "purity")
    assert purity.passed
    assert purity.detail == "not decayed"


@pytest.fixture
def nilpotent_pair():
    return create_nilpotent_pair()


def test_nilpotent_pair_defect(nilpotent_pair):
    T, _ = nilpotent_pair
    I = T.identity()
    assert polyball_service.phi_apply(T, 1, I) == RationalMatrix.diagonal([Fraction(1, 2), 0])
    assert polyball_service.defect_map(T, (0,)) == I
    assert polyball_service.defect_map(T, (1,)) == RationalMatrix.diagonal([Fraction(1, 2), 1])
    assert polyball_service.is_in_polyball(T).member


def test_nilpotent_pair_gram_is_identity_at_first_level(nilpotent_pair):
    T, _ = nilpotent_pair
    assert polyball_service.berezin_gram(T, (1,)) == T.identity()
    assert polyball_service.power_numerator(T, (1,)) == T.identity()


def test_nilpotent_pair_purity(nilpotent_pair):
    T, _ = nilpotent_pair
    report = polyball_service.is_pure(T, Fraction(1, 10**6), 8)
    assert report.traces[1] == [Fraction(1, 2), 0]
    assert report.decayed


def test_nilpotent_pair_grading_split(nilpotent_pair):
    T, grading = nilpotent_pair
    split = polyball_service.grading_split(T, grading)
    assert split.c == (0,)
    assert split.d == (1,)
    assert split.h0_basis == [0]
    assert polyball_service.grading_commutation_check(T, grading).passed
