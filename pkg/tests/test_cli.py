import filecmp
import json
import subprocess
import sys

import numpy as np
import pytest

from contourcred.fileio import write_mesh
from contourcred.mesh import lattice_mesh


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "contourcred.cli"] + args,
                          cwd=str(cwd), capture_output=True, text=True)


@pytest.fixture()
def workdir(tmp_path):
    mesh = lattice_mesh(8, 8, bounds=((0.0, 0.0), (10.0, 10.0)))
    write_mesh(str(tmp_path / "mesh.json"), mesh)
    r = run_cli(["simulate", "--mesh", "mesh.json", "--nu", "1",
                 "--kappa", "1", "--phi2", "1", "--seed", "4",
                 "--out", "sim"], tmp_path)
    assert r.returncode == 0, r.stderr
    # turn the simulated field into observations at the mesh vertices
    rows = [ln for ln in (tmp_path / "sim.realization.csv").read_text().splitlines()
            if ln and not ln.startswith("#")]
    with open(tmp_path / "obs.csv", "w") as fh:
        fh.write(rows[0][:rows[0].rfind(",")].replace("f0", "value") + "\n")
        rng = np.random.default_rng(1)
        for ln in rows[1:]:
            x, y, v = ln.split(",")
            fh.write("%s,%s,%.10g\n" % (x, y, float(v) + rng.normal(0, 0.05)))
    r = run_cli(["krige", "--model", "sim.json", "--mesh", "mesh.json",
                 "--obs", "obs.csv", "--noise-var", "0.0025",
                 "--out", "post"], tmp_path)
    assert r.returncode == 0, r.stderr
    return tmp_path


def test_full_chain_outputs(workdir):
    r = run_cli(["levels", "--model", "post.json", "--K", "2",
                 "--strategy", "standard", "--out", "lv.json"], workdir)
    assert r.returncode == 0, r.stderr
    r = run_cli(["measures", "--model", "post.json", "--mesh", "mesh.json",
                 "--levels", "lv.json", "--samples", "800", "--seed", "5",
                 "--out", "meas.json"], workdir)
    assert r.returncode == 0, r.stderr
    doc = json.loads((workdir / "meas.json").read_text())
    assert doc["K"] == 2
    assert 0.0 <= doc["P2"] <= doc["P1"] + 3 * (doc["se_P1"] + doc["se_P2"])
    r = run_cli(["cmfunction", "--model", "post.json", "--mesh", "mesh.json",
                 "--K", "2", "--method", "log", "--alpha", "0.1",
                 "--alpha", "0.5", "--depth", "1", "--samples", "800",
                 "--seed", "6", "--out", "cmf", "--svg", "map.svg"], workdir)
    assert r.returncode == 0, r.stderr
    for name in ("cmf.f.csv", "cmf.subdivided.json", "cmf.credible.geojson",
                 "map.svg"):
        assert (workdir / name).exists()
    geo = json.loads((workdir / "cmf.credible.geojson").read_text())
    alphas = sorted({f["properties"]["alpha"] for f in geo["features"]})
    assert alphas == [0.1, 0.5]


def test_single_level_map_reports_unit_P1(workdir):
    r = run_cli(["measures", "--model", "post.json", "--mesh", "mesh.json",
                 "--K", "1", "--samples", "200", "--seed", "7",
                 "--out", "one.json"], workdir)
    assert r.returncode == 0, r.stderr
    doc = json.loads((workdir / "one.json").read_text())
    assert doc["P1"] == 1.0
    assert doc["se_P1"] == 0.0


def test_reruns_are_byte_identical(workdir):
    args = ["measures", "--model", "post.json", "--mesh", "mesh.json",
            "--K", "3", "--samples", "500", "--seed", "9", "--out", "m.json"]
    assert run_cli(args, workdir).returncode == 0
    first = (workdir / "m.json").read_bytes()
    assert run_cli(args, workdir).returncode == 0
    assert (workdir / "m.json").read_bytes() == first

    args = ["cmfunction", "--model", "post.json", "--mesh", "mesh.json",
            "--K", "2", "--method", "step", "--samples", "400",
            "--seed", "3", "--out", "c"]
    assert run_cli(args, workdir).returncode == 0
    snap = {n: (workdir / n).read_bytes()
            for n in ("c.f.csv", "c.subdivided.json", "c.credible.geojson")}
    assert run_cli(args, workdir).returncode == 0
    for n, blob in snap.items():
        assert (workdir / n).read_bytes() == blob


def test_target_selection_payload(workdir):
    r = run_cli(["measures", "--model", "post.json", "--mesh", "mesh.json",
                 "--target", "0.3", "--measure", "p2", "--kmax", "5",
                 "--samples", "600", "--seed", "11", "--out", "sel.json"],
                workdir)
    assert r.returncode == 0, r.stderr
    doc = json.loads((workdir / "sel.json").read_text())
    assert doc["selected_K"] >= 1
    assert doc["report"]["P2"] >= 0.3
    assert all(e["requested_K"] >= doc["selected_K"] for e in doc["scan"])


def test_unreachable_target_warns_but_succeeds(workdir):
    # a noisy refit keeps every K=1..4 bound below 1, so nothing qualifies
    r = run_cli(["krige", "--model", "sim.json", "--mesh", "mesh.json",
                 "--obs", "obs.csv", "--noise-var", "5.0", "--out", "wide"],
                workdir)
    assert r.returncode == 0, r.stderr
    r = run_cli(["measures", "--model", "wide.json", "--mesh", "mesh.json",
                 "--target", "1.0", "--measure", "p2", "--kmax", "4",
                 "--samples", "300", "--seed", "12", "--out", "none.json"],
                workdir)
    assert r.returncode == 0
    assert "warning" in r.stderr.lower()
    doc = json.loads((workdir / "none.json").read_text())
    assert doc["selected_K"] == 0
    assert doc["report"] is None


def test_subdivision_multiplies_triangles(workdir):
    # crossing triangles are dropped before the first split, so compare
    # depth 1 against depth 2 where every parent survives
    docs = {}
    for depth in (1, 2):
        out = "d%d" % depth
        r = run_cli(["cmfunction", "--model", "post.json", "--mesh",
                     "mesh.json", "--K", "1", "--method", "linear",
                     "--depth", str(depth), "--samples", "300",
                     "--seed", "8", "--out", out], workdir)
        assert r.returncode == 0, r.stderr
        docs[depth] = json.loads(
            (workdir / (out + ".subdivided.json")).read_text())
    assert len(docs[2]["triangles"]) == 4 * len(docs[1]["triangles"])
    assert len(docs[1]["triangles"]) % 4 == 0
    for doc in docs.values():
        assert len(doc["vertices"]) == len(doc["values"])
        assert doc["method"] == "linear"
        assert doc["source_method"] == "linear"


def test_coverage_subcommand(workdir):
    cfg = {"nu": 1, "spatial_range": 3.0, "model_shape": [6, 6],
           "obs_count": 25, "fields": 1, "repeats": 2, "samples": 200,
           "seed": 2, "methods": ["step", "pointwise"]}
    (workdir / "cov.json").write_text(json.dumps(cfg))
    r = run_cli(["coverage", "--config", "cov.json", "--out", "covres.json",
                 "--table", "cov.txt"], workdir)
    assert r.returncode == 0, r.stderr
    doc = json.loads((workdir / "covres.json").read_text())
    assert doc["replicates"] == 2
    assert doc["config"]["model_shape"] == [6, 6]
    assert "step" in (workdir / "cov.txt").read_text()

    cfg["repeats"] = 1
    (workdir / "cov1.json").write_text(json.dumps(cfg))
    r = run_cli(["coverage", "--config", "cov1.json", "--out", "c1.json"],
                workdir)
    assert r.returncode == 0
    assert "single replicate" in r.stderr.lower() or "degenerate" in r.stderr.lower()


def test_oracle_subcommand(tmp_path):
    r = run_cli(["oracle", "--case", "a", "--out", "oa.json"], tmp_path)
    assert r.returncode == 0, r.stderr
    doc = json.loads((tmp_path / "oa.json").read_text())
    assert doc["summary"]["step"]["max_signed_deviation"] <= 1e-8
    assert doc["endpoint_values"][0] == pytest.approx(0.6909856723713373,
                                                      abs=1e-12)
    assert doc["manifest"]["parameters"]["u"] == -0.5
    # explicit level overrides the case default
    r = run_cli(["oracle", "--case", "a", "--u", "0.25", "--out", "ob.json"],
                tmp_path)
    assert r.returncode == 0
    assert json.loads((tmp_path / "ob.json").read_text())[
        "manifest"]["parameters"]["u"] == 0.25
    # custom parameter lists work too
    r = run_cli(["oracle", "--params", "0,1,1,1,0.5", "--u", "-0.5",
                 "--grid", "21", "--out", "oc.json"], tmp_path)
    assert r.returncode == 0, r.stderr
    assert len(json.loads((tmp_path / "oc.json").read_text())["s"]) == 21


def test_error_exit_codes(workdir):
    assert run_cli(["simulate", "--mesh", "nope.json", "--out", "x"],
                   workdir).returncode == 2
    assert run_cli(["simulate", "--mesh", "mesh.json", "--nu", "3",
                    "--out", "x"], workdir).returncode == 2
    assert run_cli(["levels", "--model", "post.json", "--K", "0",
                    "--out", "x.json"], workdir).returncode == 2
    assert run_cli(["measures", "--model", "post.json", "--mesh", "mesh.json",
                    "--out", "x.json"], workdir).returncode == 2
    assert run_cli(["oracle", "--out", "x.json"], workdir).returncode == 2
    r = run_cli(["oracle", "--case", "a", "--params", "0,1,1,1,0.5",
                 "--out", "x.json"], workdir)
    assert r.returncode == 2
    # a readable message lands on stderr, not a traceback
    assert "error" in r.stderr.lower()
    assert "Traceback" not in r.stderr


def test_version_flag(tmp_path):
    r = run_cli(["--version"], tmp_path)
    assert r.returncode == 0
    assert r.stdout.strip()
