import csv
import json
import subprocess
import sys

import pytest

from trishoot import bench
from trishoot.apps import Polyhedron
from trishoot.apps.polyhedra import dump_off
from trishoot.cli import main
from trishoot.geom import P, Triangle3
from trishoot.scenes import dump_soup, read_scene


def _run(capsys, *argv):
    rc = main([str(a) for a in argv])
    return rc, capsys.readouterr()


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.soup", tmp_path / "b.soup"
    qa, qb = tmp_path / "a.q", tmp_path / "b.q"
    for out, q in ((a, qa), (b, qb)):
        assert main(["generate", "--n", "50", "--seed", "3", "--out", str(out),
                     "--queries", str(q), "--count", "10"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert qa.read_bytes() == qb.read_bytes()
    assert len(read_scene(str(a)).triangles) == 50
    assert sum(1 for ln in qa.read_text().splitlines() if ln) == 40


def test_generate_to_stdout(capsys):
    rc, cap = _run(capsys, "generate", "--n", "4", "--seed", "1")
    assert rc == 0 and len([ln for ln in cap.out.splitlines() if ln and not ln.startswith("#")]) >= 4


def test_stacked_sheets_vertical_stab(tmp_path, capsys):
    scene = tmp_path / "s.soup"
    main(["generate", "--kind", "stacked-sheets", "--n", "5", "--size", "64", "--out", str(scene)])
    rc, cap = _run(capsys, "report", "--scene", scene, "2", "2", "0", "2", "2", "64")
    row = json.loads(cap.out.splitlines()[0])
    assert rc == 0 and row["ids"] == [0, 1, 2, 3, 4]


def test_mesh_file_scene(tmp_path):
    mesh = tmp_path / "cube.off"
    mesh.write_text(dump_off(Polyhedron.box((1, 1, 1), (5, 5, 5))))
    out = tmp_path / "m.soup"
    main(["generate", "--kind", "mesh-file", "--mesh", str(mesh), "--out", str(out)])
    assert len(read_scene(str(out)).triangles) == 12


@pytest.fixture(scope="module")
def workload(tmp_path_factory):
    d = tmp_path_factory.mktemp("w")
    scene, queries = d / "scene.soup", d / "q.txt"
    main(["generate", "--n", "200", "--seed", "5", "--out", str(scene),
          "--queries", str(queries), "--count", "30"])
    return scene, queries


def test_verify_clean(workload, capsys):
    scene, queries = workload
    rc, cap = _run(capsys, "verify", "--scene", scene, "--queries", queries)
    rep = json.loads(cap.out)
    assert rc == 0 and rep["ok"] and rep["checked"] == 120 and rep["mismatches"] == []


def test_verify_catches_fault(tmp_path, capsys):
    scene, queries = tmp_path / "s.soup", tmp_path / "q.txt"
    main(["generate", "--n", "300", "--seed", "6", "--size", "256", "--out", str(scene),
          "--queries", str(queries), "--count", "300", "--query-kind", "segments"])
    rc, cap = _run(capsys, "verify", "--scene", scene, "--queries", queries, "--inject-fault")
    rep = json.loads(cap.out)
    assert rc == 1 and len(rep["mismatches"]) >= 1
    m = rep["mismatches"][0]
    assert {"index", "query", "engine", "oracle"} <= set(m)


def test_build_telemetry(workload, capsys):
    scene, _ = workload
    rc, cap = _run(capsys, "build", "--scene", scene, "--s-param", "1.25")
    info = json.loads(cap.out)
    assert rc == 0 and info["n"] == 200 and info["s"] == round(200 ** 1.25)
    assert info["stored_ids"] >= 200


def test_query_commands_csv(workload, tmp_path, capsys):
    scene, queries = workload
    out = tmp_path / "shoot.csv"
    assert main(["shoot", "--scene", str(scene), "--queries", str(queries),
                 "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 30 and {"op", "hit", "triangle_tests"} <= set(rows[0])
    rc, cap = _run(capsys, "acount", "--scene", scene, "--queries", queries)
    assert rc == 0 and all(json.loads(ln)["op"] == "ACOUNT" for ln in cap.out.splitlines())


def test_bad_coordinates(workload):
    scene, _ = workload
    with pytest.raises(SystemExit):
        main(["shoot", "--scene", str(scene), "1", "2"])


def test_lines_and_polybool(tmp_path, capsys):
    rc, cap = _run(capsys, "lines", "--count", "20", "--mode", "report")
    assert rc == 0 and json.loads(cap.out)["mode"] == "report"
    k1, k2 = tmp_path / "k1.off", tmp_path / "k2.off"
    k1.write_text(dump_off(Polyhedron.box((0, 0, 0), (2, 2, 2))))
    k2.write_text(dump_off(Polyhedron.box((1, 1, 1), (3, 3, 3))))
    rc, cap = _run(capsys, "polybool", k1, k2)
    assert rc == 0 and len(json.loads(cap.out)["vertices"]) == 8


def test_arrange_command(tmp_path, capsys):
    scene = tmp_path / "t.soup"
    scene.write_text(dump_soup([Triangle3(0, P(0, 0, 0), P(4, 0, 0), P(0, 4, 0)),
                                Triangle3(1, P(1, 1, -1), P(1, 1, 3), P(2, -2, 1))]))
    rc, cap = _run(capsys, "arrange", "--scene", scene)
    out = json.loads(cap.out)
    assert rc == 0 and len(out["vertices"]) == 2
    assert all(r["euler_ok"] for r in out["triangles"])


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "trishoot.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify" in res.stdout


# -- bench helpers

def test_bench_csv_round_trip(tmp_path):
    recs = bench.bench_grid([60, 120], (1.0, 1.5), m=5, seed=2, threads=1)
    assert len(recs) == 2 * 2 * 5
    path = tmp_path / "b.csv"
    bench.write_csv(recs, str(path))
    assert bench.read_csv(str(path)) == recs


def test_bench_schema_guard(tmp_path):
    recs = bench.bench_grid([60], (1.0,), m=2, seed=2, threads=1)
    path = tmp_path / "b.csv"
    bench.write_csv(recs, str(path))
    path.write_text(path.read_text().replace("\n1,", "\n99,"))
    with pytest.raises(ValueError):
        bench.read_csv(str(path))


def test_fit_exponent_recovers_power():
    xs = [10, 100, 1000, 10000]
    assert bench.fit_exponent(xs, [3 * x ** 0.5 for x in xs]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        bench.fit_exponent([1], [1])


def test_nonincreasing_tolerance():
    assert bench.nonincreasing([100, 105, 90])
    assert not bench.nonincreasing([100, 120])


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("TRISHOOT_THREADS", "1")
    assert bench.worker_count() == 1


def test_threads_do_not_change_results():
    from trishoot.engine import Engine
    from trishoot.oracle import Scene
    from trishoot.scenes import random_rays, random_uniform
    eng = Engine.build(Scene(random_uniform(150, seed=3)))
    qs = [("SHOOT", r) for r in random_rays(40, seed=4)]
    one = [res for _, _, res in bench.run_queries(eng, qs, threads=1)]
    many = [res for _, _, res in bench.run_queries(eng, qs, threads=4)]
    assert one == many


def test_verify_large_mixed_workload(tmp_path, capsys):
    scene, queries = tmp_path / "s.soup", tmp_path / "q.txt"
    main(["generate", "--n", "2000", "--seed", "12", "--out", str(scene),
          "--queries", str(queries), "--count", "2500", "--query-kind", "mixed"])
    rc, cap = _run(capsys, "verify", "--scene", scene, "--queries", queries, "--s-param", "1.5")
    rep = json.loads(cap.out)
    assert rc == 0 and rep["checked"] == 10_000 and rep["mismatches"] == []


def test_bench_hashes_are_reproducible():
    a = bench.bench_grid([80], (1.0, 1.5), m=8, seed=4, threads=1)
    b = bench.bench_grid([80], (1.0, 1.5), m=8, seed=4, threads=2)
    assert [(r.s, r.query, r.result_hash, r.primitive_tests, r.stored_ids) for r in a] == \
           [(r.s, r.query, r.result_hash, r.primitive_tests, r.stored_ids) for r in b]
