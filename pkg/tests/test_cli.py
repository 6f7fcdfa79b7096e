import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from shadowlab.cli import SCHEMA, run

ROOT = Path(__file__).resolve().parents[1]
TOY = str(ROOT / "configs" / "toy.json")


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_entropy_json():
    code, out, _ = call("entropy", "--eps-list", "0.5,0.25", "--n-min", "1", "--n-max", "6")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == SCHEMA
    assert doc["config"]["command"] == "entropy"
    h = {float(k): v for k, v in doc["result"]["h"].items()}
    assert h[0.5] == pytest.approx(math.log(2), abs=1e-12)
    # eps = 1/4 separates on n + 1 symbols; the top-half maximum sits at n = 4
    assert h[0.25] == pytest.approx(5 / 4 * math.log(2), abs=1e-12)


def test_entropy_csv_header():
    code, out, _ = call("entropy", "--eps", "0.5", "--n-max", "4", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == f"# schema: {SCHEMA}"
    assert lines[1].startswith("# config: ")
    json.loads(lines[1][len("# config: "):])
    cols = lines[2].split(",")
    assert {"eps", "n", "mode"} <= set(cols)


def test_chainrec_full_shift_single_class():
    code, out, _ = call("chainrec", "--eps", "0.3", "--resolution", "0.1")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["class_count"] == 1
    assert "resolution" in res["label"]


def test_shadow_periodic(tmp_path):
    cfg = tmp_path / "po.json"
    cfg.write_text(json.dumps({"points": ["(01)", "(10)"], "delta": 0.25, "period": 2, "eps": 0.1}))
    code, out, _ = call("shadow", "--config", str(cfg))
    assert code == 0
    res = json.loads(out)["result"]
    assert res["traces"] is True and res["shadow"] == "(01)"


def test_shadow_rejects_non_pseudo_orbit(tmp_path):
    cfg = tmp_path / "po.json"
    cfg.write_text(json.dumps({"points": ["(0)", "(1)"], "delta": 0.25, "period": 2, "eps": 0.1}))
    code, out, err = call("shadow", "--config", str(cfg))
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "invalid-argument"


def test_audit_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert call("audit", "--config", TOY, "--seed", "7", "--out", str(a))[0] == 0
    assert call("audit", "--config", TOY, "--seed", "7", "--out", str(b))[0] == 0
    ta, tb = (a / "audit.json").read_bytes(), (b / "audit.json").read_bytes()
    assert ta == tb
    doc = json.loads(ta)
    assert doc["config"]["seed"] == 7 and "out" not in doc["config"]


def test_construct_csv_trace():
    code, out, _ = call("construct", "--config", TOY, "--format", "csv")
    assert code == 0
    body = out.splitlines()[2:]
    assert body[0].split(",") == ["eps", "n", "mode", "level", "member", "average"]
    assert len(body) > 1


@pytest.mark.parametrize(
    "argv, kind",
    [
        (("entropy", "--system", "builtin:nope"), None),
        (("frobnicate",), "invalid-argument"),
        (("entropy", "--eps", "abc"), "invalid-argument"),
        (("audit", "--preset", "nope"), None),
        (("audit", "--preset", "toy_full_shift2", "--system", "builtin:golden_mean"), None),
        (("entropy", "--config", "/nonexistent/cfg.json"), None),
        (("entropy", "--seed", "-1"), None),
    ],
)
def test_validation_errors_exit_2(argv, kind):
    code, out, err = call(*argv)
    assert code == 2
    assert out == ""
    doc = json.loads(err)
    assert "error" in doc and "message" in doc
    if kind:
        assert doc["error"] == kind


def test_unwritable_out_is_io_error():
    code, _, err = call("entropy", "--eps", "0.5", "--n-max", "2", "--out", "/proc/shadowlab-x")
    assert code == 2
    assert json.loads(err)["error"] == "io-error"


def test_bad_threads_env(monkeypatch):
    monkeypatch.setenv("SHADOWLAB_THREADS", "zero")
    code, _, err = call("entropy", "--eps", "0.5", "--n-max", "2")
    assert code == 2
    json.loads(err)


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "shadowlab.cli", "entropy", "--eps", "0.5", "--n-max", "3"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["schema"] == SCHEMA
