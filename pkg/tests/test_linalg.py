from fractions import Fraction

import pytest

from app.core.linalg import (
    RationalMatrix,
    format_rational,
    kron,
    ldl_psd,
    orthogonal_projector,
    parse_rational,
    quadratic_form,
)


def test_parse_and_format_rational():
    assert parse_rational("3/6") == Fraction(1, 2)
    assert parse_rational(4) == 4
    assert format_rational(Fraction(2)) == "2/1"
    assert format_rational(Fraction(-3, 4)) == "-3/4"
    with pytest.raises(ValueError):
        parse_rational("0.5")


def test_rank_and_row_basis():
    m = RationalMatrix.from_rows([[1, 2], [2, 4]], 2)
    assert m.rank() == 1
    assert m.row_basis() == [[1, 2]]
    assert RationalMatrix.identity(3).rank() == 3
    assert RationalMatrix.zeros(0).rank() == 0


def test_kron_dimensions_and_values():
    a = RationalMatrix.from_rows([[1, 2]], 2)
    b = RationalMatrix.identity(2)
    k = kron(a, b)
    assert k.shape == (2, 4)
    assert k.to_list() == [[1, 0, 2, 0], [0, 1, 0, 2]]


def test_orthogonal_projector_is_rational():
    P = orthogonal_projector([[1, 1]], 2)
    half = Fraction(1, 2)
    assert P.to_list() == [[half, half], [half, half]]
    assert P @ P == P


def test_ldl_psd_accepts_semidefinite():
    cert = ldl_psd(RationalMatrix.from_rows([[1, 1], [1, 1]], 2))
    assert cert.psd
    assert cert.rank == 1


@pytest.mark.parametrize(
    "rows",
    [
        [[1, 0], [0, -1]],
        [[0, 1], [1, 0]],
        [[1, 2], [2, 1]],
        [[2, 1, 0], [1, 2, 3], [0, 3, 1]],
        [[0, 0], [0, -1]],
        [[0, 0, 0], [0, 0, 0], [0, 0, -2]],
        [[0, 0, 0], [0, 1, 0], [0, 0, -3]],
        [[0, 0, 0], [0, 0, 1], [0, 1, 0]],
    ],
)
def test_ldl_psd_witness_is_negative(rows):
    a = RationalMatrix.from_rows(rows, len(rows))
    cert = ldl_psd(a)
    assert not cert.psd
    assert cert.witness_value < 0
    assert quadratic_form(a, cert.witness) == cert.witness_value


@pytest.mark.parametrize("rows", [[[0, 0], [0, 0]], [[0, 0], [0, 1]], [[1, 0, 0], [0, 0, 0], [0, 0, 2]]])
def test_ldl_psd_zero_pivot_still_semidefinite(rows):
    cert = ldl_psd(RationalMatrix.from_rows(rows, len(rows)))
    assert cert.psd
    assert cert.witness is None


def test_ldl_psd_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        ldl_psd(RationalMatrix.from_rows([[1, 1], [0, 1]], 2))
