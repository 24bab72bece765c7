import csv
import io
import json

import pytest

from app.main import main
from app.models.invariants import CheckRecord, CheckReport
from app.services import polyball_service
from tests.utils import data_path


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def last_json_line(err):
    return json.loads(err.strip().splitlines()[-1])


def test_chi_of_construction_csv(capsys):
    assert main(["chi", "--construct", "t=1/2", "--shape", "2,2", "--qmax", "6,6"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0].startswith("q1,q2,numerator")
    last = next(csv.reader([lines[-1]]))
    assert last[:2] == ["6", "6"]
    assert last[-1] == "1/2"


def test_chi_json_parses_back(capsys):
    assert main(["chi", "--tuple", data_path("nilpotent.json"), "--qmax", "3", "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert [e["value"] for e in payload["entries"]] == ["2/1", "2/3", "2/7", "2/15"]
    assert payload["limit_report"]["level_limit"] == "0/1"


def test_chi_along_a_chain(capsys):
    code = main(["chi", "--tuple", data_path("commuting_pair.json"), "--qmax", "2", "--chain", "0,0;1,1;2,2"])
    assert code == 0


def test_verify_identities_on_nilpotent(capsys):
    assert main(["verify-identities", "--tuple", data_path("nilpotent.json"), "--qmax", "3"]) == 0
    captured = capsys.readouterr()
    table = rows(captured.out)
    assert [r["q"] for r in table if r["check"] == "kpk"] == ["0", "1", "2", "3"]
    assert {r["check"] for r in table} >= {"telescoping", "concordance", "grading-commutation"}
    assert all(r["passed"] == "pass" for r in table)
    assert "identities: pass" in captured.err


def test_verify_identities_on_subspace_and_construction(capsys):
    assert main(["verify-identities", "--subspace", data_path("beurling_rotated.json"), "--qmax", "3"]) == 0
    assert main(["verify-identities", "--construct", "t=3/8,omega=1/2", "--qmax", "3,3"]) == 0


def test_failed_identity_exits_one(capsys, monkeypatch):
    def broken(T, q):
        return CheckReport.from_records("kpk", [CheckRecord(name="kpk", passed=False, q=[0], detail="forced")])

    monkeypatch.setattr(polyball_service, "kpk_check", broken)
    assert main(["verify-identities", "--tuple", data_path("nilpotent.json"), "--qmax", "2"]) == 1
    err = capsys.readouterr().err
    assert "identities: FAIL" in err
    assert '"check": "kpk"' in err


def test_gbc_check_summary(capsys):
    assert main(["gbc-check", "--subspace", data_path("m_half.json"), "--qmax", "8"]) == 0
    assert "trace=rank at all q: pass" in capsys.readouterr().err


def test_single_generator_factor_is_a_hypothesis_error(capsys, tmp_path):
    path = tmp_path / "scalar.json"
    path.write_text(json.dumps({"shape": [1], "dim": 1, "ops": [[[["1/2"]]]]}))
    assert main(["chi", "--tuple", str(path), "--qmax", "2"]) == 2
    error = last_json_line(capsys.readouterr().err)
    assert error["error"] == "HypothesisError"
    assert "hypothesis" in error


def test_missing_input_file(capsys, tmp_path):
    assert main(["chi", "--tuple", str(tmp_path / "absent.json")]) == 2
    assert last_json_line(capsys.readouterr().err)["error"] == "InputFormatError"


def test_bad_construction_text(capsys):
    assert main(["construct", "--construct", "t=0.5"]) == 2
    assert last_json_line(capsys.readouterr().err)["error"] == "ExpansionError"


def test_out_dir_is_independent_of_workers(tmp_path, capsys):
    for workers in ("1", "3"):
        target = tmp_path / f"w{workers}"
        code = main(
            ["chi", "--construct", "t=3/8,omega=1/2", "--qmax", "3", "--workers", workers, "--out", str(target)]
        )
        assert code == 0
    assert (tmp_path / "w1" / "chi.csv").read_text() == (tmp_path / "w3" / "chi.csv").read_text()
    assert capsys.readouterr().out == ""


def test_numeric_mode_needs_a_cutoff(capsys):
    assert main(["chi", "--subspace", data_path("mixed_degree.json"), "--qmax", "1"]) == 2
    assert last_json_line(capsys.readouterr().err)["error"] == "NotHomogeneousError"
    assert main(["chi", "--subspace", data_path("mixed_degree.json"), "--qmax", "1", "--inner-cutoff", "3"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["approximate"] is True
    assert report["q"] == [1]


def test_construct_lists_suffixes(capsys):
    assert main(["construct", "--construct", "t=5/8", "--qmax", "3", "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["name"] == "M(t)"
    assert report["factors"][0]["suffixes"] == [[1, 1], [1, 2, 2]]
    assert [row["complement_ratio"] for row in report["factors"][0]["levels"]] == ["1/1", "1/1", "3/4", "5/8"]


def test_construct_from_file(capsys):
    assert main(["construct", "--construct", "@" + data_path("m_omega.json"), "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["name"] == "M_omega(t)"
    assert report["closed_form"] == "3/8"


def test_unknown_suite(capsys):
    assert main(["suite", "--names", "no-such-suite"]) == 2


@pytest.mark.parametrize("argv", [["chi"], ["chi", "--tuple", "a.json", "--construct", "t=1/2"]])
def test_sources_are_exclusive(argv, capsys):
    assert main(argv) == 2


def test_restriction_of_full_space_is_normalized(capsys):
    argv = ["curv", "--subspace", data_path("full_space.json"), "--source", "restriction", "--qmax", "2"]
    assert main(argv + ["--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert {e["value"] for e in payload["entries"]} == {"1/1"}


def test_construct_honours_csv_format(capsys):
    assert main(["construct", "--construct", "t=5/8", "--qmax", "3", "--format", "csv"]) == 0
    table = rows(capsys.readouterr().out)
    assert [r["complement_ratio"] for r in table if r["factor"] == "1"] == ["1/1", "1/1", "3/4", "5/8"]
    assert {r["factor"] for r in table} == {"1", "2"}


def test_verify_identities_reports_purity(capsys):
    assert main(["verify-identities", "--tuple", data_path("nilpotent.json"), "--qmax", "2", "--format", "json"]) == 0
    reports = json.loads(capsys.readouterr().out)
    chain = next(r for r in reports if r["check"] == "psd-chain")
    purity = next(r for r in chain["records"] if r["name"] == "purity")
    assert purity["passed"] is True
    assert purity["detail"] == "pure up to max_power=12"
