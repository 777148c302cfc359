import json
import os
import subprocess
import sys

import pytest

from qcurrents.qgcli import (
    SuiteConfig,
    UsageError,
    build_config,
    emit_report,
    main,
    run_suite,
)

ROOT = os.path.join(os.path.dirname(__file__), "..")


def small_cfg(**kw):
    base = dict(suite="rational", N_list=(3,), K=4, window=8, M=20)
    base.update(kw)
    return SuiteConfig(**base)


def test_config_validation():
    with pytest.raises(UsageError):
        SuiteConfig("nope").validate()
    with pytest.raises(UsageError):
        small_cfg(K=1).validate()
    with pytest.raises(UsageError):
        small_cfg(format="xml").validate()
    assert small_cfg().validate()


def test_build_config_from_argv():
    cfg = build_config(["suite", "rational", "--N", "3", "--K", "4",
                        "--window", "8", "--M", "20"])
    assert cfg.suite == "rational"
    assert cfg.N_list == (3,)
    assert cfg.K == 4


def test_config_file_with_flag_override(tmp_path):
    p = tmp_path / "suite.cfg"
    p.write_text("# sample config\nN = 2,3\nK = 4\nwindow = 8\nM = 20\n"
                 "format = text\n")
    cfg = build_config(["suite", "rational", "--config", str(p)])
    assert cfg.N_list == (2, 3) and cfg.format == "text"
    cfg2 = build_config(["suite", "rational", "--config", str(p),
                         "--format", "json", "--N", "3"])
    assert cfg2.format == "json" and cfg2.N_list == (3,)


def test_empty_runs_produce_pass_summary():
    report = run_suite(small_cfg(suite="zn", N_list=(1,)))
    s = report.summary()
    assert s["fail"] == 0
    assert report.exit_code() == 0


def test_json_determinism_and_golden():
    report = run_suite(small_cfg())
    text1 = report.to_json()
    text2 = run_suite(small_cfg()).to_json()
    assert text1 == text2
    golden = open(os.path.join(ROOT, "fixtures", "golden_rational.json")).read()
    assert text1 == golden


def test_json_text_roundtrip_preserves_fields():
    report = run_suite(small_cfg(suite="zn", N_list=(1, 2)))
    data = json.loads(report.to_json())
    text = report.to_text()
    for rec in data["records"]:
        assert rec["module"] in text
        assert rec["params"] in text
        assert rec["status"] in text
    assert set(data["records"][0]) == {"module", "operation", "params",
                                       "residual", "status", "wall_s"}


def test_emit_report_writes_file(tmp_path):
    report = run_suite(small_cfg(suite="zn", N_list=(1,)))
    out = tmp_path / "r.json"
    emit_report(report, "json", str(out))
    assert json.loads(out.read_text())["summary"]["fail"] == 0


def test_exit_codes_usage():
    assert main(["suite", "rational", "--K", "1"]) == 2
    assert main(["nonsense"]) == 2


def test_cli_subprocess_end_to_end(tmp_path):
    out = tmp_path / "zn.json"
    proc = subprocess.run(
        [sys.executable, "-m", "qcurrents.qgcli", "suite", "zn",
         "--N", "1", "--K", "4", "--window", "8", "--M", "20",
         "--out", str(out)],
        capture_output=True, text=True, cwd=ROOT)
    assert proc.returncode == 0, proc.stderr
    data = json.loads(out.read_text())
    assert data["summary"]["fail"] == 0
    assert data["records"]
