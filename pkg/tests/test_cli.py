import json
import math
import os

import pytest

from twistmoments.cli import (
    ConfigError,
    RunConfig,
    build_config,
    cmd_verify,
    main,
    parse_config_file,
    report_body_hash,
    select_character,
)


def test_parse_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("q = 17  # modulus\nr = 34\nh = 3\nX = 1024\n")
    vals = parse_config_file(str(cfg))
    assert vals == {"q": "17", "r": "34", "h": "3", "X": "1024"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("this is not a key value line\n")
    with pytest.raises(ConfigError):
        parse_config_file(str(bad))


def test_flag_overrides_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("h = 3\nl = 1\n")
    rc = build_config(["moment1", "--config", str(cfg), "--h", "5", "--X", "512"])
    assert rc.h == 5 and rc.l == 1 and rc.X == 512.0


def test_invalid_config_exits_2(capsys):
    # r odd
    assert main(["moment1", "--r", "33"]) == 2
    assert "configuration error" in capsys.readouterr().err
    # h sharing a factor with r
    assert main(["moment1", "--h", "17"]) == 2


def test_select_character():
    rc = RunConfig("predict")
    psi = select_character(rc)
    from twistmoments.characters import classify

    info = classify(psi)
    assert info.order == 4 and info.is_even and info.is_primitive
    rc2 = RunConfig("predict", q=1)
    assert select_character(rc2).is_principal()


def test_cmd_lvalue(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["lvalue", "--q", "17", "--d", "7", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["body_sha256"] == report_body_hash(report["body"])
    assert float(report["body"]["oracle_rel_err"]) <= 1e-8


def test_cmd_moment1_with_csv(tmp_path):
    out = tmp_path / "m1.json"
    csvp = tmp_path / "rows.csv"
    code = main(
        ["moment1", "--X", "512", "--h", "3", "--out", str(out), "--csv", str(csvp)]
    )
    assert code == 0
    body = json.loads(out.read_text())["body"]
    assert body["q"] == 17 and body["X"] == 512.0
    lines = csvp.read_text().strip().splitlines()
    assert lines[0].startswith("q,r,h,l,X,Y,empirical_re")
    assert len(lines) == 2


def test_cmd_predict(tmp_path):
    out = tmp_path / "p.json"
    code = main(["predict", "--h", "1", "--l", "3", "--out", str(out)])
    assert code == 0
    body = json.loads(out.read_text())["body"]
    assert "first_moment_constant" in body
    assert "components" in body["first_moment_constant"]
    assert "second_moment_diag_poly" in body


def test_cmd_compare_gcd_case(tmp_path):
    out = tmp_path / "c.json"
    code = main(
        ["compare", "--l", "17", "--X-list", "256,512", "--out", str(out)]
    )
    assert code == 0  # predicted 0, empirical below the generous envelope
    body = json.loads(out.read_text())["body"]
    assert body["checks"]["first_below_envelope"]


def test_cmd_verify_and_determinism(tmp_path):
    out = tmp_path / "v.json"
    rc = build_config(
        ["verify", "--gauss-smax", "99", "--workers", "2", "--out", str(out)]
    )
    code = cmd_verify(rc)
    assert code == 0
    body = json.loads(out.read_text())["body"]
    assert body["determinism_two_runs"] is True
    assert all(s["pass"] for s in body["suites"].values())


def test_cmd_verify_fault_injection(tmp_path):
    out = tmp_path / "vf.json"
    rc = build_config(["verify", "--gauss-smax", "45", "--out", str(out)])
    code = cmd_verify(rc, fault_inject="gauss_sums")
    assert code == 1
    body = json.loads(out.read_text())["body"]
    assert body["suites"]["gauss_sums"]["pass"] is False


def test_tolerance_override_honored(tmp_path):
    rc = build_config(["verify", "--tol-scale", "100"])
    assert rc.tol_scale == 100.0
