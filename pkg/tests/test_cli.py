import json

import numpy as np
import pytest

from ospfock.cli import main, parse_config, ConfigError
from ospfock.fock import fock_space, parse_triplet_text
from ospfock.superalgebra import TruncatedSpace

SMALL = {
    "truncation": {"m_f": 2, "m_b": 2, "D": 6},
    "seed": 7,
    "suites": ["algebra", "restriction"],
    "samples": {"triples": 10},
}


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def error_record(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_list_suites(capsys):
    assert main(["list-suites"]) == 0
    out = capsys.readouterr().out
    for name in ("algebra", "oscillator", "series", "counterexamples", "restriction"):
        assert name in out


def test_run_writes_deterministic_reports(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    assert main(["run", "--config", cfg, "--output-dir", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", cfg, "--output-dir", str(tmp_path / "b")]) == 0
    for rel in ("reports.jsonl", "summary.json"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["passed"] and set(summary["suites"]) == {"algebra", "restriction"}
    records = [json.loads(line) for line in (tmp_path / "a" / "reports.jsonl").read_text().splitlines()]
    assert {r["config_hash"] for r in records} == {summary["config_hash"]}
    assert [r["suite"] for r in records] == sorted(r["suite"] for r in records)


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("OSPFOCK_OUTPUT_DIR", str(tmp_path / "env"))
    cfg = write_config(tmp_path, {**SMALL, "suites": ["algebra"]})
    assert main(["run", "--config", cfg]) == 0
    assert (tmp_path / "env" / "summary.json").exists()


def test_suite_failure_exit_code(tmp_path):
    cfg = write_config(tmp_path, {**SMALL, "suites": ["algebra"], "tolerances": {"jacobi": 1e-300}})
    assert main(["run", "--config", cfg, "--output-dir", str(tmp_path / "out")]) == 1
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert not summary["passed"]
    assert (tmp_path / "out" / "reports.jsonl").exists()


def test_no_safe_interior(tmp_path, capsys):
    assert main(["run", "--D", "4", "--suites", "oscillator", "--output-dir", str(tmp_path)]) == 2
    assert error_record(capsys)["error"] == "no_safe_interior"
    # D = 4 is fine for suites that never touch the Fock space
    assert main(["run", "--D", "4", "--suites", "algebra", "--output-dir", str(tmp_path)]) == 0


@pytest.mark.parametrize(
    "data,code",
    [
        ({**SMALL, "suites": ["nope"]}, "unknown_suite"),
        ({k: v for k, v in SMALL.items() if k != "seed"}, "seed_required"),
        ({**SMALL, "colour": 1}, "unknown_key"),
        ({**SMALL, "tolerances": {"jacobi": -1}}, "invalid_value"),
        ({**SMALL, "truncation": {"m_f": 0}}, "invalid_value"),
        ({**SMALL, "formats": ["xml"]}, "invalid_value"),
    ],
)
def test_config_errors(tmp_path, capsys, data, code):
    cfg = write_config(tmp_path, data)
    assert main(["run", "--config", cfg, "--output-dir", str(tmp_path)]) == 2
    assert error_record(capsys)["error"] == code


def test_invalid_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{truncation")
    assert main(["run", "--config", str(path)]) == 2
    assert error_record(capsys)["error"] == "invalid_json"


def test_parse_config_defaults():
    cfg = parse_config({"seed": 3})
    assert (cfg.m_f, cfg.m_b, cfg.D, cfg.seed) == (2, 2, 8, 3)
    assert parse_config({}).seed is None
    assert parse_config({}, default_seed=True).seed == 42
    with pytest.raises(ConfigError):
        parse_config([])


def test_emit_central_and_number(tmp_path):
    out = tmp_path / "central.trip"
    assert main(["emit-matrix", "central", "--D", "6", "-o", str(out)]) == 0
    header, M = parse_triplet_text(out.read_text())
    assert header["safe_degree"] == "6"
    assert np.allclose(M.toarray(), 1j * np.eye(M.shape[0]))

    assert main(["emit-matrix", "number", "--D", "6", "-o", str(tmp_path / "n.trip")]) == 0
    _, N = parse_triplet_text((tmp_path / "n.trip").read_text())
    fs = fock_space(TruncatedSpace(2, 2), 6)
    assert np.allclose(N.toarray(), np.diag(1j * fs.degrees))


def test_emit_is_byte_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["emit-matrix", "odd.conj.1.2.im", "--D", "5", "-o", str(a)]) == 0
    assert main(["emit-matrix", "odd.conj.1.2.im", "--D", "5", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header, _ = parse_triplet_text(a.read_text())
    assert header["safe_degree"] == "3"


def test_emit_unknown_generator(tmp_path, capsys):
    assert main(["emit-matrix", "bogus", "-o", str(tmp_path / "x")]) == 2
    assert error_record(capsys)["error"] == "unknown_generator"
