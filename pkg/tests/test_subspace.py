from fractions import Fraction

import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from app.core.exceptions import HypothesisError, NotHomogeneousError
from app.models import ComplementTensorSubspace, FockVector, FullSubspace, GeneratedSubspace
from app.services import fock_service, subspace_service
from tests.utils import create_shape, create_vector, data_path

ONE = create_shape(2)
TWO = create_shape(2, 2)


@pytest.fixture
def ends_in_one():
    return subspace_service.suffix_subspace(2, [(1,)])


@pytest.fixture
def rotated():
    return subspace_service.load_subspace(data_path("beurling_rotated.json"))


def test_suffix_subspace_dimensions(ends_in_one):
    assert [ends_in_one.block_dim((s,)) for s in range(4)] == [0, 1, 2, 4]
    assert ends_in_one.dim_leq_sub((3,)) == 7
    assert ends_in_one.block_trace((3,)) == 4


def test_suffix_subspace_projection(ends_in_one):
    inside = FockVector.basis_vector(ONE, ((2, 1),))
    outside = FockVector.basis_vector(ONE, ((1, 2),))
    assert ends_in_one.project_block((2,), inside) == inside
    assert ends_in_one.project_block((2,), outside).is_zero()
    assert ends_in_one.contains(inside + FockVector.basis_vector(ONE, ((1,),)))


def test_rotated_generator_projection(rotated):
    e1 = FockVector.basis_vector(ONE, ((1,),))
    expected = create_vector(ONE, {((1,),): "9/25", ((2,),): "12/25"})
    assert rotated.block_dim((1,)) == 1
    assert rotated.block_dim((3,)) == 4
    assert rotated.project_block((1,), e1) == expected
    assert rotated.block_trace((2,)) == 2


def test_non_homogeneous_generator_is_rejected():
    with pytest.raises(NotHomogeneousError):
        subspace_service.load_subspace(data_path("mixed_degree.json"))
    with pytest.raises(NotHomogeneousError):
        GeneratedSubspace(ONE, 1, [FockVector.zero(ONE)])


def test_invariance_of_generated_subspaces(rotated):
    assert subspace_service.check_invariance(rotated, (3,)).passed
    pair = subspace_service.load_subspace(data_path("diagonal_pair.json"))
    assert subspace_service.check_invariance(pair, (2, 2)).passed


def test_defect_of_suffix_subspace(ends_in_one):
    assert subspace_service.defect_rank(ends_in_one) == 1
    assert subspace_service.defect_trace(ends_in_one) == 1
    assert subspace_service.defect_block(ends_in_one, (1,)).to_list() == [[1, 0], [0, 0]]
    assert subspace_service.beurling_certificate(ends_in_one).beurling


def test_defect_of_full_space_is_vacuum_projection():
    M = FullSubspace(TWO, 1)
    assert subspace_service.defect_block(M, (0, 0)).to_list() == [[1]]
    assert subspace_service.defect_rank(M) == 1


def test_non_beurling_subspace_has_negative_defect():
    M = subspace_service.from_generators(
        TWO,
        1,
        [FockVector.basis_vector(TWO, ((1,), ())), FockVector.basis_vector(TWO, ((), (1,)))],
    )
    cert = subspace_service.beurling_certificate(M)
    assert not cert.beurling
    assert cert.block == (1, 1)
    assert cert.certificate.witness_value < 0
    with pytest.raises(HypothesisError):
        subspace_service.restriction_data(M)


def test_restriction_rank_of_beurling_subspace(rotated):
    data = subspace_service.restriction_data(rotated)
    for q in range(4):
        assert subspace_service.restriction_rank(data, (q,)) == fock_service.dim_leq(ONE, (q,))
        assert subspace_service.restriction_trace(rotated, (q,)) == fock_service.dim_leq(ONE, (q,))


def test_beurling_decomposition_holds():
    psi = create_vector(ONE, {((1,),): "3/5", ((2,),): "4/5"})
    report = subspace_service.beurling_verify([psi], (4,))
    assert report.passed
    assert {r.name for r in report.records} == {"isometry", "reconstruction", "defect"}


def test_beurling_decomposition_two_symbols():
    psis = [FockVector.basis_vector(ONE, ((1,),)), FockVector.basis_vector(ONE, ((2, 2),))]
    assert subspace_service.beurling_verify(psis, (3,)).passed


def test_beurling_isometry_failure_reports_inner_product():
    psi = create_vector(ONE, {((),): "3/5", ((1,),): "4/5"})
    report = subspace_service.beurling_verify([psi], (4,))
    assert not report.passed
    failure = report.first_failure()
    assert failure.name == "isometry"
    assert failure.witness["value"] == "12/25"


def test_complement_tensor_dimensions():
    M = ComplementTensorSubspace(
        [subspace_service.suffix_subspace(2, [(1,)]), subspace_service.zero_subspace(ONE)]
    )
    # complement at level (1, 1) is 1 * 2 of 4 basis vectors
    assert M.block_dim((1, 1)) == 2
    assert M.block_dim((0, 3)) == 0
    assert M.block_trace((2, 1)) == 4
    swapped = M.permuted((1, 0))
    assert swapped.block_dim((1, 2)) == M.block_dim((2, 1))


def test_complement_tensor_projection_matches_dimensions():
    M = ComplementTensorSubspace(
        [subspace_service.suffix_subspace(2, [(1,)]), subspace_service.suffix_subspace(2, [(2,)])]
    )
    basis = M.block_basis((1, 1))
    assert len(basis) == M.block_dim((1, 1)) == 3
    v = FockVector.basis_vector(TWO, ((2,), (1,)))
    assert M.project_block((1, 1), v).is_zero()


def test_complement_tensor_file():
    M = subspace_service.load_subspace(data_path("m_half.json"))
    assert isinstance(M, ComplementTensorSubspace)
    assert M.shape.n == (2,)
    assert M.block_dim((2,)) == 2


def test_numeric_mode_is_labelled_approximate():
    shape, r, gens = subspace_service.load_generators(data_path("mixed_degree.json"))
    report = subspace_service.numeric_mode_trace(gens, (1,), (3,), shape, r)
    assert report.approximate is True
    assert [e.cutoff for e in report.entries] == [[1], [2], [3]]
    assert all(0 <= e.value <= 3 + 1e-9 for e in report.entries)


def test_trace_leq_sums_blocks(ends_in_one):
    assert subspace_service.trace_leq(ends_in_one, (2,)) == Fraction(3)


def test_defect_apply_on_suffix_subspace(ends_in_one):
    e1 = FockVector.basis_vector(ONE, ((1,),))
    assert subspace_service.defect_apply(ends_in_one, e1, (1,)) == e1
    assert subspace_service.defect_apply(ends_in_one, FockVector.basis_vector(ONE, ((2,),)), (1,)).is_zero()
    assert subspace_service.defect_apply(ends_in_one, FockVector.basis_vector(ONE, ((2, 1),)), (2,)).is_zero()


BLOCK_CASES = [
    (lambda: subspace_service.load_subspace(data_path("beurling_rotated.json")), (2,)),
    (lambda: subspace_service.suffix_subspace(2, [(1,)]), (2,)),
    (lambda: subspace_service.load_subspace(data_path("diagonal_pair.json")), (1, 1)),
    (
        lambda: ComplementTensorSubspace(
            [subspace_service.suffix_subspace(2, [(1,)]), subspace_service.suffix_subspace(2, [(2,)])]
        ),
        (1, 1),
    ),
]

block_coords = st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=5), min_size=4, max_size=4)


@pytest.mark.parametrize("factory, s", BLOCK_CASES)
@hyp_settings(max_examples=25, deadline=None)
@given(block_coords, block_coords)
def test_project_block_is_an_orthogonal_projection(factory, s, x, y):
    M = factory()
    u = fock_service.from_block_coords(M.shape, 1, s, x)
    v = fock_service.from_block_coords(M.shape, 1, s, y)
    pu = M.project_block(s, u)
    assert M.project_block(s, pu) == pu
    assert fock_service.inner_product(pu, v) == fock_service.inner_product(u, M.project_block(s, v))


def test_numeric_mode_grows_with_the_cutoff():
    gen = create_vector(ONE, {((),): 1, ((1,),): 1})
    report = subspace_service.numeric_mode_trace([gen], (2,), (10,))
    values = [e.value for e in report.entries]
    assert [e.cutoff for e in report.entries] == [[c] for c in range(2, 11)]
    assert report.monotone
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))
    assert values[-1] <= fock_service.dim_leq(ONE, (2,)) + 1e-9


@pytest.mark.parametrize(
    "gens, q",
    [
        ([FockVector.basis_vector(ONE, ((1,),))], (2,)),
        ([create_vector(ONE, {((1,),): "3/5", ((2,),): "4/5"})], (3,)),
        ([FockVector.basis_vector(TWO, ((1,), (1,))), FockVector.basis_vector(TWO, ((2,), (2,)))], (1, 2)),
    ],
)
def test_numeric_mode_agrees_with_exact_trace_on_graded_generators(gens, q):
    exact = subspace_service.trace_leq(subspace_service.from_generators(gens[0].shape, 1, gens), q)
    cutoff = tuple(x + 1 for x in q)
    report = subspace_service.numeric_mode_trace(gens, q, cutoff)
    assert abs(report.entries[-1].value - float(exact)) < 1e-9


def test_beurling_decomposition_of_the_letters():
    psis = [FockVector.basis_vector(ONE, ((1,),)), FockVector.basis_vector(ONE, ((2,),))]
    assert subspace_service.beurling_verify(psis, (3,)).passed
    M = subspace_service.from_generators(ONE, 1, psis)
    assert subspace_service.defect_rank(M) == 2
    data = subspace_service.restriction_data(M)
    # M is everything but the vacuum; its restriction has two wandering generators
    for q in range(3):
        assert subspace_service.restriction_rank(data, (q,)) == 2 * fock_service.dim_leq(ONE, (q,))
