from fractions import Fraction

import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from app.core.exceptions import InputFormatError, ShapeMismatchError
from app.models import FockVector
from app.schemas.files import FockVectorFile
from app.services import fock_service
from tests.utils import create_shape, create_vector

SHAPE = create_shape(2, 2)

word = st.lists(st.integers(min_value=1, max_value=2), max_size=3).map(tuple)
multiword = st.tuples(word, word)
coeff = st.fractions(min_value=-3, max_value=3, max_denominator=7)


@st.composite
def fock_vectors(draw):
    terms = draw(st.dictionaries(multiword, coeff, max_size=6))
    return FockVector(SHAPE, 1, {(w, 1): c for w, c in terms.items()})


def test_dimensions():
    assert fock_service.dim_level(SHAPE, (2, 1)) == 8
    assert fock_service.dim_leq(SHAPE, (1, 1)) == 9
    assert fock_service.dim_leq(create_shape(3), (2,)) == 13
    assert len(fock_service.enumerate_basis(SHAPE, (1, 2))) == 8


def test_words_are_lexicographic():
    assert fock_service.enumerate_words(2, 2) == ((1, 1), (1, 2), (2, 1), (2, 2))


def test_left_and_right_creation():
    shape = create_shape(2)
    v = FockVector.vacuum(shape)
    left = fock_service.apply_left_creation(1, 2, fock_service.apply_left_creation(1, 1, v))
    right = fock_service.apply_right_creation(1, 2, fock_service.apply_right_creation(1, 1, v))
    assert left == FockVector.basis_vector(shape, ((2, 1),))
    assert right == FockVector.basis_vector(shape, ((1, 2),))


def test_out_of_range_letter_is_rejected():
    with pytest.raises(ShapeMismatchError):
        fock_service.apply_left_creation(1, 3, FockVector.vacuum(SHAPE))
    with pytest.raises(ShapeMismatchError):
        create_vector(create_shape(2), {((3,),): 1})


@hyp_settings(max_examples=40, deadline=None)
@given(fock_vectors(), fock_vectors())
def test_creation_operators_are_isometries(u, v):
    for i in (1, 2):
        for j in (1, 2):
            su = fock_service.apply_left_creation(i, j, u)
            sv = fock_service.apply_left_creation(i, j, v)
            assert fock_service.inner_product(su, sv) == fock_service.inner_product(u, v)


@hyp_settings(max_examples=40, deadline=None)
@given(fock_vectors())
def test_annihilation_inverts_creation(v):
    for i in (1, 2):
        assert fock_service.apply_left_annihilation(i, 1, fock_service.apply_left_creation(i, 1, v)) == v
        assert fock_service.apply_left_annihilation(i, 2, fock_service.apply_left_creation(i, 1, v)).is_zero()


@hyp_settings(max_examples=40, deadline=None)
@given(fock_vectors(), st.integers(1, 2), st.integers(1, 2))
def test_creation_in_different_factors_commutes(v, j, l):
    a = fock_service.apply_left_creation(1, j, fock_service.apply_left_creation(2, l, v))
    b = fock_service.apply_left_creation(2, l, fock_service.apply_left_creation(1, j, v))
    assert a == b


def test_right_multiplier_on_vacuum_returns_symbol():
    psi = create_vector(SHAPE, {((1,), ()): "3/5", ((2,), ()): "4/5"})
    assert fock_service.right_multiplier(psi, FockVector.vacuum(SHAPE)) == psi
    image = fock_service.right_multiplier(psi, FockVector.basis_vector(SHAPE, ((2,), (1,))))
    assert image == create_vector(SHAPE, {((2, 1), (1,)): "3/5", ((2, 2), (1,)): "4/5"})


def test_right_multiplier_adjoint_is_adjoint():
    psi = create_vector(SHAPE, {((1,), ()): "3/5", ((2,), ()): "4/5"})
    v = create_vector(SHAPE, {((2,), (1,)): 1, ((1,), ()): 2})
    xi = create_vector(SHAPE, {((2, 1), (1,)): 5, ((1, 2), ()): -1, ((2,), ()): 3})
    lhs = fock_service.inner_product(fock_service.right_multiplier(psi, v), xi)
    rhs = fock_service.inner_product(v, fock_service.right_multiplier_adjoint(psi, xi))
    assert lhs == rhs


def test_poly_calculus_sides():
    shape = create_shape(2)
    p = create_vector(shape, {((1,),): 2})
    v = FockVector.basis_vector(shape, ((2,),))
    assert fock_service.poly_calculus(p, "left", v) == create_vector(shape, {((1, 2),): 2})
    assert fock_service.poly_calculus(p, "right", v) == create_vector(shape, {((2, 1),): 2})
    with pytest.raises(InputFormatError):
        fock_service.poly_calculus(p, "middle", v)


def test_block_coordinates_are_multiword_major():
    v = create_vector(SHAPE, {(((1,), (2,)), 2): 7}, mult_dim=2)
    coords = fock_service.to_block_coords(v, (1, 1))
    # (1),(2) is the second multiword of the block, multiplicity index 2
    assert coords.index(Fraction(7)) == 1 * 2 + 1
    assert fock_service.from_block_coords(SHAPE, 2, (1, 1), coords) == v


def test_strip_prefix_groups_heads():
    v = create_vector(create_shape(2), {((1, 2),): 1, ((1, 1),): 2, ((2, 2),): 3})
    groups = fock_service.strip_prefix((1,), v)
    assert list(groups) == [((1,),), ((2,),)]
    assert groups[((1,),)] == create_vector(create_shape(2), {((2,),): 1, ((1,),): 2})


def test_permute_vector_swaps_factors():
    shape = create_shape(2, 3)
    v = create_vector(shape, {((1,), (3,)): 1})
    w = fock_service.permute_vector(v, (1, 0))
    assert w.shape.n == (3, 2)
    assert w == create_vector(create_shape(3, 2), {((3,), (1,)): 1})


def test_vector_file_needs_shape():
    with pytest.raises(InputFormatError):
        fock_service.vector_from_file(FockVectorFile(terms=[]))


def test_dumped_vector_parses_back():
    v = create_vector(SHAPE, {((1,), (2, 1)): "-2/3", ((), ()): 1})
    assert fock_service.vector_from_file(FockVectorFile.model_validate_json(fock_service.dump_vector(v))) == v
