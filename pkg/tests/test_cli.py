import csv
import io
import json
import math
import subprocess
import sys

import pytest

from hopfluid.cases import FAMILIES, builtin_config, run_verify, thread_count
from hopfluid.cli import dumps_report, main, parse_range
from hopfluid.config import ConfigError, parse_case_text, parse_potential
from hopfluid.maps import Potential

FAST = ["--grid", "16"]


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


def test_list_all_and_filtered(capsys):
    code, out, _ = run(["list"], capsys)
    assert code == 0 and len(out.strip().splitlines()) == len(FAMILIES) == 7
    code, out, _ = run(["list", "--filter", "manifold=S3"], capsys)
    assert code == 0 and len(out.strip().splitlines()) == 6
    code, out, _ = run(["list", "--filter", "manifold=S³"], capsys)
    assert len(out.strip().splitlines()) == 6
    code, out, _ = run(["list", "--filter", "manifold=R2xS1"], capsys)
    assert out.split()[0] == "r2xs1_winding"


def test_list_rejects_unknown_filter(capsys):
    code, _, err = run(["list", "--filter", "colour=blue"], capsys)
    assert code == 2 and "error" in err


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "hopfluid", "list"], capture_output=True, text=True, check=False
    )
    assert res.returncode == 0 and "s3_khesin" in res.stdout


def test_verify_builtin_passes_and_reports_schema(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, err = run(
        ["verify", "s3_squashed_kl", "--k", "2", "--l", "1", "--out", str(out)] + FAST, capsys
    )
    assert code == 0 and "PASS" in err
    d = json.loads(out.read_text())
    assert d["schema"] == 1 and d["pass"] is True
    assert d["charge"]["rounded"] == 2
    assert all(g["pass"] for g in d["gates"].values())
    assert "timing" not in d


def test_verify_is_byte_deterministic(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run(["verify", "s3_khesin", "--out", str(p)] + FAST, capsys)[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_verify_timing_is_opt_in(tmp_path, capsys):
    out = tmp_path / "t.json"
    run(["verify", "s3_khesin", "--timing", "--out", str(out)] + FAST, capsys)
    assert "timing" in json.loads(out.read_text())


def test_wrong_metric_scale_fails_the_gates(tmp_path, capsys):
    out = tmp_path / "bad.json"
    code, _, err = run(
        ["verify", "s3_squashed_kl", "--a-scale", "1.1", "--out", str(out)] + FAST, capsys
    )
    assert code == 1 and "FAIL" in err and "el_residual" in err
    d = json.loads(out.read_text())
    assert d["pass"] is False and d["gates"]["el_residual"]["pass"] is False


def test_case_file_round_trip(tmp_path, capsys):
    case = tmp_path / "case.ini"
    case.write_text(
        "[case]\nname = conformal_two_one\nfamily = s3_conformal_kl\nk = 2\nl = 1\n"
        "[numerics]\ngrid = 12\n[tolerances]\nel_residual = 1e-7\n"
    )
    out = tmp_path / "c.json"
    code, _, _ = run(["verify", str(case), "--out", str(out)], capsys)
    d = json.loads(out.read_text())
    assert code == 0 and d["case"] == "conformal_two_one"
    assert d["gates"]["el_residual"]["tolerance"] == 1e-7


def test_unknown_key_is_an_error_with_line_number(tmp_path, capsys):
    case = tmp_path / "typo.ini"
    case.write_text("[case]\nfamily = s3_khesin\n\n[tolerances]\neuler_tol = 1e-6\n")
    code, _, err = run(["verify", str(case)], capsys)
    assert code == 2
    assert f"{case}:5" in err and "euler_tol" in err


@pytest.mark.parametrize(
    "text,needle",
    [
        ("[case]\nfamily = s3_khesin\n[extras]\nx = 1\n", "unknown section"),
        ("[case]\nk = 2\n", "needs a 'family'"),
        ("[case]\nfamily = nope\n", "unknown case family"),
        ("[case]\nfamily = s3_khesin\nk = two\n", "bad value"),
        ("[case]\nfamily = s3_khesin\n[tolerances]\neuler = -1\n", "must be positive"),
        ("[case]\nfamily = s3_khesin\npotential = cubic\n", "unknown potential"),
    ],
)
def test_config_errors(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_case_text(text, source="case.ini")


def test_potential_tags():
    assert parse_potential("baby(2, 1.5)") == Potential.baby(2.0, 1.5)
    assert parse_potential("charge_dependent", 3) == Potential.charge_dependent(3)
    assert parse_potential("old_baby") == Potential.old_baby()


def test_unknown_case_name_exits_2(capsys):
    assert run(["verify", "no_such_case"], capsys)[0] == 2


def test_parse_range():
    assert parse_range("k=1..4") == ("k", [1, 2, 3, 4])
    assert parse_range("k=1,2,5") == ("k", [1, 2, 5])
    name, vals = parse_range("lambda=0.5..2:4")
    assert name == "lambda" and vals == pytest.approx([0.5, 1.0, 1.5, 2.0])
    assert parse_range("k=") == ("k", [])
    with pytest.raises(ConfigError):
        parse_range("k=0.5..2")
    with pytest.raises(ConfigError):
        parse_range("k")


def test_scan_harmonic_csv(capsys):
    code, out, _ = run(["scan", "s3_harmonic_k", "--param", "k=1..4"], capsys)
    rows = read_csv(out)
    assert code == 0 and rows[0] == ["parameter", "energy", "charge", "ratio", "status"]
    ratios = [float(r[3]) for r in rows[1:]]
    assert [round(float(r[2])) for r in rows[1:]] == [1, 4, 9, 16]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))


def test_scan_squashed_ratio_is_constant(capsys):
    code, out, _ = run(["scan", "s3_squashed_kl", "--param", "kl=1..4"], capsys)
    ratios = [float(r[3]) for r in read_csv(out)[1:]]
    assert code == 0 and max(ratios) - min(ratios) < 1e-6 * ratios[0]


def test_scan_empty_range_writes_header_only(capsys):
    code, out, _ = run(["scan", "s3_harmonic_k", "--param", "k="], capsys)
    assert code == 0 and read_csv(out) == [["parameter", "energy", "charge", "ratio", "status"]]


def test_scan_bad_parameter_name(capsys):
    assert run(["scan", "s3_harmonic_k", "--param", "l=1..2"], capsys)[0] == 2


def test_scan_derrick(tmp_path, capsys):
    out = tmp_path / "d.csv"
    code, _, _ = run(
        ["scan", "r3_derrick", "--param", "lambda=0.5..2:3", "--out", str(out)], capsys
    )
    rows = read_csv(out.read_text())[1:]
    assert code == 0 and len(rows) == 3
    assert all(abs(float(r[3]) - 1) < 1e-6 for r in rows)


def test_profile_csv(capsys):
    code, out, err = run(["profile", "s3_squashed_kl", "--k", "2", "--l", "1", "--n", "9"], capsys)
    rows = read_csv(out)
    assert code == 0 and rows[0] == ["s", "alpha", "alpha_prime"] and len(rows) == 10
    assert float(rows[1][1]) == pytest.approx(math.pi)
    assert "a=" in err and "smooth=True" in err


def test_profile_without_admissible_scale_exits_1(capsys):
    code, _, err = run(["profile", "s3_round", "--k", "2", "--l", "1"], capsys)
    assert code == 1 and "NoAdmissibleScale" in err


def test_profile_coupled(capsys):
    code, out, err = run(["profile", "s3_oldbaby_profile", "--k", "2", "--n", "5"], capsys)
    assert code == 0 and "h0=" in err and len(read_csv(out)) == 6


def test_json_numbers_have_seventeen_digits():
    text = dumps_report({"x": 0.1, "n": 3, "nan": float("nan"), "whole": 2.0})
    d = json.loads(text)
    assert "0.10000000000000001" in text and d["nan"] is None
    assert d["whole"] == 2.0 and isinstance(d["whole"], float)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("HOPFLUID_THREADS", "1")
    assert thread_count() == 1
    monkeypatch.setenv("HOPFLUID_THREADS", "garbage")
    assert thread_count() >= 1


def test_thread_count_does_not_change_results(monkeypatch):
    cfg = builtin_config("s3_squashed_kl").with_updates(grid=16)
    monkeypatch.setenv("HOPFLUID_THREADS", "1")
    one = dumps_report(run_verify(cfg).to_dict())
    monkeypatch.setenv("HOPFLUID_THREADS", "3")
    three = dumps_report(run_verify(cfg).to_dict())
    assert one == three


def test_report_directory(tmp_path, capsys):
    code, _, err = run(["report", "--out", str(tmp_path)], capsys)
    assert code == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {f"{n}.json" for n in FAMILIES} <= names
    assert {"summary.json", "scan_s3_harmonic_k.csv", "scan_r3_derrick.csv"} <= names
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["pass"] is True and all(summary["cases"].values())
