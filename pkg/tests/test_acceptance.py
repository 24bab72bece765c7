import random

import pytest

from app.core.exceptions import InputFormatError
from app.services import polyball_service, suite_service
from tests.utils import create_nilpotent_pair, data_path

SUITES = [
    "universal-model",
    "range",
    "kpk",
    "oracle-triangle",
    "inequality",
    "gbc",
    "algebra",
    "perturbation",
    "beurling",
]


@pytest.mark.integration
@pytest.mark.parametrize("name", SUITES)
def test_suite_passes(name):
    report = suite_service.run_suites([name], workers=2)
    assert report.passed, report.failures()[0].first_failure() if report.failures() else None
    assert report.reports[0].records


def test_random_suite_members_lie_in_the_polyball():
    tuples = suite_service.random_suite(size=6, seed=11)
    assert len(tuples) == 6
    assert all(polyball_service.is_in_polyball(T).member for T in tuples)


@pytest.mark.parametrize("seed", [1, 5, 9])
def test_coupled_random_pairs_lie_in_the_polyball(seed):
    rng = random.Random(seed)
    T = suite_service.random_commuting_tuple(rng, 2, 3)
    assert T.shape.n == (2, 2)
    assert T.commutation_failure() is None
    assert polyball_service.is_in_polyball(T).member
    assert polyball_service.kpk_check(T, (2, 2)).passed


def test_suites_are_seeded():
    a = suite_service.run_suites(["kpk", "inequality"], seed=3, size=4)
    b = suite_service.run_suites(["kpk", "inequality"], seed=3, size=4)
    assert a.model_dump_json() == b.model_dump_json()
    assert a.seed == 3


def test_fixed_examples_match_data_files():
    names = [name for name, _ in suite_service.graded_subspaces()]
    assert len(names) == len(set(names))
    T, grading = polyball_service.load_tuple(data_path("nilpotent.json"))
    assert (T, grading) == suite_service.nilpotent_tuple()
    assert suite_service.nilpotent_pair() == create_nilpotent_pair()


def test_unknown_suite_is_rejected():
    with pytest.raises(InputFormatError):
        suite_service.run_suites(["nope"])
