import argparse
import csv
import json
import shutil

import pytest

from amc_codes import analysis, cli, search
from amc_codes.analysis import CodeParams, Distance
from amc_codes.exceptions import InvariantError
from amc_codes.simulator import read_packed
from amc_codes.version import VERSION

C7_ELEMENTS = "1+x,1+x^2,1+x^3,1+x^4"


@pytest.fixture
def c7_file(tmp_path):
    path = str(tmp_path / "c7.json")
    assert cli.main(["build", "--group", "C7", "--elems", C7_ELEMENTS, "--out", path]) == 0
    return path


def test_build_writes_descriptor(capsys, c7_file):
    assert "[[42,6]] written to" in capsys.readouterr().out
    with open(c7_file) as handle:
        descriptor = json.load(handle)
    assert (descriptor["n"], descriptor["k"], descriptor["group"]) == (42, 6, "C7")
    assert descriptor["provenance"].startswith(f"amc-codes {VERSION}; amc-codes build")


def test_load_code_checks_the_descriptor(c7_file):
    with open(c7_file) as handle:
        descriptor = json.load(handle)
    descriptor["k"] = 5
    with open(c7_file, "w") as handle:
        json.dump(descriptor, handle)
    with pytest.raises(InvariantError, match="42,6"):
        cli.load_code(c7_file)


def test_params(c7_file, capsys):
    capsys.readouterr()
    assert cli.main(["params", c7_file, "--threads", "1", "--seed", "1", "--ris-trials", "100"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert "n=42" in lines and "k=6" in lines and "d=4" in lines
    assert "d_upper=7" in lines and "d_S=4" in lines and "kappa=1" in lines


def test_params_writes_csv_with_provenance(c7_file, tmp_path):
    out = str(tmp_path / "params.csv")
    assert cli.main(["params", c7_file, "--threads", "1", "--seed", "1", "--ris-trials", "100", "--out", out]) == 0
    with open(out) as handle:
        lines = handle.read().splitlines()
    assert lines[0].startswith("# amc-codes")
    [row] = list(csv.DictReader(lines[1:]))
    assert (row["n"], row["k"], row["d"], row["d_S"]) == ("42", "6", "4", "4")


def test_distance(c7_file, capsys):
    assert cli.main(["distance", c7_file, "--threads", "1", "--exact-cap", "5", "--ris-trials", "100"]) == 0
    out = capsys.readouterr().out
    assert "d_Z=4" in out and "d_X=4" in out


def test_usage_errors_exit_with_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["params", "--no-such-flag"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


def test_bad_settings_exit_with_2(c7_file, capsys):
    assert cli.main(["params", c7_file, "--threads", "0"]) == 2
    assert "threads" in capsys.readouterr().err


def test_invariant_violation_exits_with_1(c7_file, mocker, capsys):
    mocker.patch.object(analysis, "code_params", side_effect=InvariantError("k mismatch"), autospec=True)
    assert cli.main(["params", c7_file]) == 1
    assert "invariant violated: k mismatch" in capsys.readouterr().err


def test_missing_file_exits_with_1(tmp_path, capsys):
    assert cli.main(["params", str(tmp_path / "missing.json")]) == 1


def test_table1_reports_pass(mocker, capsys):
    row = search.REFERENCE_TABLE[0]
    params = CodeParams(n=row.n, k=row.k, d=Distance(row.d, "exact", True), d_syndrome=row.d_s, ell=row.ell)
    search_best = mocker.patch.object(search, "search_best", return_value=[params], autospec=True)
    assert cli.main(["table1", "--max-ell", str(row.ell), "--threads", "1"]) == 0
    assert search_best.call_args.args[0] == [row.ell]
    assert capsys.readouterr().out.startswith(f"ell={row.ell} [[{row.n},{row.k},{row.d}]] d_S={row.d_s} PASS")


def test_table1_reports_missing_rows_as_failures(mocker, capsys):
    mocker.patch.object(search, "search_best", return_value=[], autospec=True)
    assert cli.main(["table1", "--max-ell", "7"]) == 1
    assert "ell=7 no candidate FAIL" in capsys.readouterr().out


def test_table1_with_no_rows_selected():
    assert cli.main(["table1", "--max-ell", "3"]) == 2


@pytest.mark.slow
def test_table1_small_rows(capsys):
    assert cli.main(["table1", "--max-ell", "11", "--seed", "3"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_memory_pipeline(c7_file, tmp_path, capsys):
    circuit = str(tmp_path / "c7.stim")
    dem = str(tmp_path / "c7.dem")
    samples = str(tmp_path / "c7.b8")
    common = ["--threads", "1", "--seed", "4"]
    assert cli.main(["circuit", c7_file, "--rounds", "3", "--p", "0.001", "--out", circuit] + common) == 0
    with open(circuit) as handle:
        assert handle.readline().startswith("# amc-codes")
    assert cli.main(["dem", circuit, "--out", dem] + common) == 0
    assert cli.main(["sample", circuit, "--shots", "40", "--out", samples] + common) == 0
    dets, obs, header = read_packed(samples)
    assert dets.shape[0] == 40 and obs.shape[1] == 6
    assert header["seed"] == 4
    capsys.readouterr()
    assert cli.main(["decode", "--dem", dem, "--shots", samples, "--cluster-weight", "1"] + common) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# amc-codes")
    [row] = list(csv.DictReader(lines[1:]))
    assert (row["p"], row["shots"]) == ("0.001", "40")
    assert 0 <= int(row["fails"]) <= 40
    assert float(row["wall_time"]) >= 0
    assert cli.main(["decode", "--dem", dem, "--shots", samples, "--detectors", "z", "--window", "2",
                     "--cluster-weight", "1"] + common) == 0


def test_decode_writes_csv_header(c7_file, tmp_path):
    circuit = str(tmp_path / "c7.stim")
    dem = str(tmp_path / "c7.dem")
    samples = str(tmp_path / "c7.b8")
    out = str(tmp_path / "decode.csv")
    assert cli.main(["circuit", c7_file, "--rounds", "3", "--p", "0.002", "--out", circuit]) == 0
    assert cli.main(["dem", circuit, "--out", dem]) == 0
    assert cli.main(["sample", circuit, "--shots", "10", "--seed", "3", "--out", samples]) == 0
    argv = ["decode", "--dem", dem, "--shots", samples, "--window", "2", "--p", "0.002", "--threads", "1",
            "--out", out]
    assert cli.main(argv) == 0
    with open(out) as handle:
        lines = handle.read().splitlines()
    assert lines[0].startswith(f"# amc-codes {VERSION}")
    assert lines[1] == ",".join(cli.DECODE_COLUMNS) == "p,shots,fails,p_L,wall_time"
    assert len(lines) == 3
    assert lines[2].startswith("0.002,10,")


def test_decode_requires_model_and_samples(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["decode", "--dem", "c7.dem"])
    assert exc.value.code == 2


def test_decode_rejects_mismatched_samples(c7_file, tmp_path, capsys):
    circuit = str(tmp_path / "c7.stim")
    dem = str(tmp_path / "c7.dem")
    samples = str(tmp_path / "other.b8")
    assert cli.main(["circuit", c7_file, "--rounds", "2", "--p", "0.001", "--out", circuit]) == 0
    assert cli.main(["dem", circuit, "--out", dem]) == 0
    assert cli.main(["sample", dem, "--shots", "5", "--out", samples, "--seed", "1"]) == 0
    wider = str(tmp_path / "wider.stim")
    assert cli.main(["circuit", c7_file, "--rounds", "3", "--p", "0.001", "--out", wider]) == 0
    assert cli.main(["sample", wider, "--shots", "5", "--out", samples, "--seed", "1"]) == 0
    assert cli.main(["decode", "--dem", dem, "--shots", samples]) == 2
    assert "samples have" in capsys.readouterr().err


@pytest.mark.slow
def test_threshold_writes_csv_and_crossing(c7_file, tmp_path, capsys):
    out = str(tmp_path / "threshold.csv")
    twin = str(tmp_path / "c7_twin.json")
    shutil.copy(c7_file, twin)
    argv = ["threshold", c7_file, twin, "--rounds", "3", "--ps", "0.004,0.008", "--shots", "100",
            "--seed", "2", "--out", out]
    assert cli.main(argv) == 0
    with open(out) as handle:
        lines = handle.read().splitlines()
    assert lines[0].startswith("# amc-codes")
    assert lines[1] == ",".join(cli.THRESHOLD_COLUMNS)
    assert len(lines) == 2 + 4
    assert "crossing p_c=" in capsys.readouterr().err


def test_probabilities_argument():
    assert cli._probabilities("0.001, 0.002") == [0.001, 0.002]
    with pytest.raises(argparse.ArgumentTypeError):
        cli._probabilities("0.5,2")


def test_confine(c7_file, capsys):
    capsys.readouterr()
    assert cli.main(["confine", c7_file, "--max-w", "1", "--threads", "1"]) == 0
    assert capsys.readouterr().out.splitlines() == ["1: 4"]


def test_search_writes_csv_to_stdout(mocker, capsys):
    params = CodeParams(n=42, k=6, d=Distance(4, "exact", True), d_syndrome=4, ell=7,
                        elements=("1+x", "1+x^2", "1+x^3", "1+x^4"))
    search_best = mocker.patch.object(search, "search_best", return_value=[params], autospec=True)
    assert cli.main(["search", "--ell", "7", "--any-h", "--seed", "2"]) == 0
    assert search_best.call_args.kwargs["require_h"] is False
    assert search_best.call_args.kwargs["seed"] == 2
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# amc-codes")
    assert lines[2].startswith("7,42,6,4,4,1+x,1+x^2,1+x^3,1+x^4")


def test_search_accepts_ranges_method_and_csv(mocker, tmp_path):
    search_best = mocker.patch.object(search, "search_best", return_value=[], autospec=True)
    out = str(tmp_path / "search.csv")
    argv = ["search", "--ell", "7..10", "12", "--weight", "2", "--method", "exact:5,ris:200", "--csv", out]
    assert cli.main(argv) == 0
    assert search_best.call_args.args == ([7, 8, 9, 10, 12], "exact:5,ris:200")
    assert search_best.call_args.kwargs["element_weight"] == 2
    with open(out) as handle:
        assert handle.readline().startswith("# amc-codes")


def test_search_out_is_an_alias_of_csv(mocker, tmp_path):
    mocker.patch.object(search, "search_best", return_value=[], autospec=True)
    out = str(tmp_path / "search.csv")
    assert cli.main(["search", "--ell", "7", "--out", out]) == 0
    with open(out) as handle:
        assert handle.readline().startswith("# amc-codes")


def test_search_rejects_other_weights_and_bad_methods(mocker, capsys):
    mocker.patch.object(search, "search_best", return_value=[], autospec=True)
    with pytest.raises(SystemExit) as exc:
        cli.main(["search", "--ell", "7", "--weight", "3"])
    assert exc.value.code == 2
    assert cli.main(["search", "--ell", "7", "--method", "guess:3"]) == 2
    assert "method" in capsys.readouterr().err


@pytest.mark.parametrize("text, expected", [
    ("7", [7]),
    ("7,10", [7, 10]),
    ("7..10", [7, 8, 9, 10]),
])
def test_ell_range_argument(text, expected):
    assert cli._ell_range(text) == expected


@pytest.mark.parametrize("text", ["", "seven", "7..x"])
def test_ell_range_argument_rejects(text):
    with pytest.raises(argparse.ArgumentTypeError):
        cli._ell_range(text)


def test_confine_refuses_scans_above_max_enumeration(c7_file, capsys):
    assert cli.main(["confine", c7_file, "--max-w", "3", "--max-enumeration", "100", "--threads", "1"]) == 1
    assert "max_enumeration" in capsys.readouterr().err


def test_params_passes_max_enumeration(c7_file, mocker):
    params = CodeParams(n=42, k=6, d=Distance(4, "exact", True), d_syndrome=4)
    code_params = mocker.patch.object(analysis, "code_params", return_value=params, autospec=True)
    assert cli.main(["params", c7_file, "--max-enumeration", "1000"]) == 0
    assert code_params.call_args.kwargs["max_enumeration"] == 1000
