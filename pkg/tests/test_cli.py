import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from bouquet_lab import cli
from bouquet_lab.errors import NonConvergence


def run(args, tmp_path, capsys, sub="out"):
    out = tmp_path / sub
    code = cli.main(args + ["--out", str(out)])
    return code, out, capsys.readouterr()


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_zeros_p3(tmp_path, capsys):
    code, out, _ = run(["zeros", "--p", "3", "--m", "5..25"], tmp_path, capsys)
    assert code == 0
    assert len(rows(out / "zeros.csv")) == 21
    summ = json.load(open(out / "zeros.json"))
    assert summ["winding_checks"] == summ["winding_ok"] == 21
    assert summ["m_hat"] == 0 and summ["max_residual"] < 1e-9


def test_zeros_all_rays_p4(tmp_path, capsys):
    code, out, _ = run(["zeros", "--p", "4", "--m", "5..10", "--rays", "all"], tmp_path, capsys)
    assert code == 0
    rs = rows(out / "zeros.csv")
    assert len(rs) == 24
    summ = json.load(open(out / "zeros.json"))
    assert summ["winding_ok"] == 24 and summ["max_rotation_mismatch"] < 1e-12


def test_critical(tmp_path, capsys):
    code, out, _ = run(["critical", "--p", "3", "--m", "2..8"], tmp_path, capsys)
    assert code == 0
    assert json.load(open(out / "critical.json"))["alternating_signs"]


@pytest.mark.parametrize("args", [["zeros", "--p", "2"], ["zeros", "--m", "9..3"],
                                  ["render", "--size", "0"], ["periodic", "--s", "4"],
                                  ["nonsense"], ["render", "--window", "1,2,3"],
                                  ["itinerary"], ["zeros", "--lambda", "-1"]])
def test_usage_errors(tmp_path, capsys, args):
    code, _, _ = run(args, tmp_path, capsys)
    assert code == 2


def test_tampered_tau_fails_verification(tmp_path, capsys):
    code, _, io = run(["verify", "--p", "3", "--tau", "1.0"], tmp_path, capsys)
    assert code == 1 and "invariant" in io.err


def test_numerical_failure_exit_code(tmp_path, capsys, monkeypatch):
    import bouquet_lab.symbolic as sym

    def boom(*a, **k):
        raise NonConvergence("forced")

    monkeypatch.setattr(sym, "periodic_point", boom)
    code, _, io = run(["periodic", "--s", "1"], tmp_path, capsys)
    assert code == 3 and "NonConvergence" in io.err


def test_periodic_and_hair_agree(tmp_path, capsys):
    code, out, _ = run(["periodic", "--s", "2"], tmp_path, capsys, "per")
    assert code == 0
    z = json.load(open(out / "periodic.json"))["points"][0]
    zp = complex(z["re"], z["im"])
    code, out, _ = run(["hair", "--p", "3", "--s", "2", "--tmax", "30"], tmp_path, capsys, "hair")
    assert code == 0
    rs = rows(out / "hair_2.csv")
    assert float(rs[0]["t"]) == 1.0
    assert abs(complex(float(rs[0]["re"]), float(rs[0]["im"])) - zp) < 1e-8
    man = json.load(open(out / "hair_2.manifest.json"))
    assert man["q_hat"] is not None and man["M_hat"] > 0


def test_hair_conjugate_pair(tmp_path, capsys):
    code, out, _ = run(["hair", "--s", "1,-1", "--s", "-1,1", "--tmax", "10", "--samples", "20"],
                       tmp_path, capsys)
    assert code == 0
    a, b = rows(out / "hair_1_m1.csv"), rows(out / "hair_m1_1.csv")
    za = np.array([complex(float(r["re"]), float(r["im"])) for r in a])
    zb = np.array([complex(float(r["re"]), float(r["im"])) for r in b])
    assert np.max(np.abs(za - zb.conj())) < 1e-10


def test_itinerary(tmp_path, capsys):
    code, out, io = run(["itinerary", "--z", "20", "--n", "5"], tmp_path, capsys)
    assert code == 0
    res = json.loads(io.out)
    assert res["status"] == "Escaped" and set(res["digits"]) == {0}


def test_render_workers_and_sidecar(tmp_path, capsys):
    args = ["render", "--size", "64x48", "--max-iter", "30"]
    hashes = []
    for w in ("1", "8"):
        code, out, _ = run(args + ["--workers", w], tmp_path, capsys, "r" + w)
        assert code == 0
        hashes.append(json.load(open(out / "render.json"))["grid_hash"])
        side = json.load(open(out / "render.ppm.sidecar.json"))
        assert side["config"]["options"]["size"] == "64x48"
        assert side["config"]["workers"] == int(w)
        assert side["config"]["p"] == 3
    assert hashes[0] == hashes[1]


def test_sidecars_reproducible(tmp_path, capsys):
    def snap(out):
        return {f: open(out / f, "rb").read() for f in os.listdir(out)}

    _, out, _ = run(["periodic", "--s", "1,2"], tmp_path, capsys)
    first = snap(out)
    _, out, _ = run(["periodic", "--s", "1,2"], tmp_path, capsys)
    assert snap(out) == first
    side = json.loads(first["periodic.json.sidecar.json"])
    assert side["file"] == "periodic.json" and len(side["sha256"]) == 64


def test_config_merge(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"p": 4, "s": "1,-1", "seed": 5}))
    code, out, _ = run(["periodic", "--config", str(conf), "--p", "3"], tmp_path, capsys)
    assert code == 0
    echo = json.load(open(out / "periodic.json.sidecar.json"))["config"]
    assert echo["p"] == 3 and echo["seed"] == 5 and echo["options"]["s"] == ["1,-1"]
    conf.write_text(json.dumps({"bogus": 1}))
    assert run(["periodic", "--config", str(conf)], tmp_path, capsys)[0] == 2


def test_env_output_fallback(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BOUQUET_LAB_OUT", str(tmp_path / "envout"))
    assert cli.main(["itinerary", "--z", "1+1j", "--n", "3"]) == 0
    assert (tmp_path / "envout" / "itinerary.json").exists()


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "bouquet_lab.cli", "itinerary", "--z", "20",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["status"] == "Escaped"


@pytest.mark.slow
def test_verify_p3(tmp_path, capsys):
    code, out, io = run(["verify", "--p", "3"], tmp_path, capsys)
    assert code == 0
    rep = json.load(open(out / "verify.json"))
    assert rep["pass"] and not rep["failed"]
    assert io.out.count("PASS") == len(rep["checks"])
