"""``trishoot`` command line."""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
import time

from . import bench
from .geom import Q
from .engine import ApproxConfig, Engine, EngineConfig, QueryStats, answer, parse_query, _num
from .partition import PartitionConfig
from .scenes import SceneSpec, generate, random_rays, random_segments, read_scene, write_scene
from .wide import WideConfig


def _config(args, n):
    s = None if args.s_param is None else round(n ** args.s_param)
    return EngineConfig(
        partition=PartitionConfig(branch_target=args.branch),
        wide=WideConfig(r0=args.r0),
        approx=ApproxConfig(delta=args.delta, q=args.q, seed=args.seed),
        storage=s,
    )


def _engine(args):
    scene = read_scene(args.scene)
    t0 = time.perf_counter()
    eng = Engine.build(scene, _config(args, len(scene.triangles)))
    return scene, eng, (time.perf_counter() - t0) * 1000.0


def _read_queries(path, only=None):
    with open(path) as fh:
        out = [q for q in map(parse_query, fh) if q is not None]
    if only:
        out = [q for q in out if q[0] in only]
    return out


def _emit(rows, args, out=None):
    out = out or sys.stdout
    if args.format == "json":
        for r in rows:
            out.write(json.dumps(r) + "\n")
        return
    keys = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    w = csv.DictWriter(out, fieldnames=keys)
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})


def _open_out(args):
    if args.out:
        return open(args.out, "w", newline="")
    return contextlib.nullcontext(sys.stdout)


# -- commands ---------------------------------------------------------------------

def cmd_generate(args):
    spec = SceneSpec(args.kind, args.n, size=args.size, seed=args.seed, path=args.mesh)
    scene = generate(spec)
    if args.out:
        write_scene(args.out, scene.triangles)
    else:
        from .scenes import dump_soup
        sys.stdout.write(dump_soup(scene.triangles))
    if args.queries and args.count:
        lines = []
        m = args.count
        if args.query_kind in ("rays", "mixed"):
            for r in random_rays(m, args.seed + 1, args.size):
                lines.append("SHOOT " + " ".join(str(_num(c)) for c in (*r.origin, *r.dir)))
        if args.query_kind in ("segments", "mixed"):
            for op in ("REPORT", "EMPTY", "ACOUNT") if args.query_kind == "mixed" else ("REPORT",):
                for s in random_segments(m, args.seed + 2 + len(lines), args.size):
                    lines.append(f"{op} " + " ".join(str(_num(c)) for c in (*s.a, *s.b)))
        with open(args.queries, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def cmd_build(args):
    scene, eng, ms = _engine(args)
    depth = max(nd.depth for nd in eng.tree.nodes)
    info = {"n": eng.n, "s": eng.s, "build_ms": round(ms, 3), "stored_ids": eng.stored_ids(),
            "nodes": len(eng.tree.nodes), "depth": depth,
            "wide_structures": sum(nd.wide_structure is not None for nd in eng.tree.nodes),
            "sample_size": eng.approx.size, "p": eng.approx.p}
    with _open_out(args) as out:
        _emit([info], args, out)
    return 0


def _query_cmd(args, ops):
    scene, eng, _ = _engine(args)
    if args.coords:
        if len(args.coords) != 6:
            raise SystemExit("expected six coordinates")
        queries = [parse_query(f"{ops[0]} {' '.join(args.coords)}")]
    elif args.queries:
        queries = _read_queries(args.queries, ops)
    else:
        raise SystemExit("give --queries or six coordinates")
    rows = []
    for op, q in queries:
        st = QueryStats()
        r = answer(eng, op, q, st)
        r["triangle_tests"] = st.triangle_tests
        rows.append(r)
    with _open_out(args) as out:
        _emit(rows, args, out)
    return 0


def cmd_shoot(args):
    return _query_cmd(args, ("SHOOT",))


def cmd_report(args):
    return _query_cmd(args, ("REPORT", "EMPTY"))


def cmd_acount(args):
    return _query_cmd(args, ("ACOUNT",))


def cmd_verify(args):
    from .verify import verify
    scene, eng, _ = _engine(args)
    if args.inject_fault:
        eng.inject_fault()
    rep = verify(eng, scene, _read_queries(args.queries))
    with _open_out(args) as out:
        out.write(json.dumps(rep, indent=1) + "\n")
    print(f"checked {rep['checked']} queries, {len(rep['mismatches'])} mismatches",
          file=sys.stderr)
    return 0 if rep["ok"] else 1


def cmd_bench(args):
    ns = [int(x) for x in args.ns.split(",")]
    exps = [float(x) for x in args.s_grid.split(",")]

    def progress(n, e, recs):
        med = sorted(r.primitive_tests for r in recs)[len(recs) // 2]
        print(f"n={n} s=n^{e}: median tests {med}, stored {recs[0].stored_ids}, "
              f"build {recs[0].build_ms:.0f} ms", file=sys.stderr)

    cfg = EngineConfig(partition=PartitionConfig(branch_target=args.branch),
                       wide=WideConfig(r0=args.r0))
    recs = bench.bench_grid(ns, exps, args.count, args.kind, args.seed, cfg, progress=progress)
    if args.out:
        bench.write_csv(recs, args.out)
    fit = bench.summarize(recs)
    print(json.dumps({k: v for k, v in fit.items()
                      if k in ("cost_exponent", "storage_exponent", "s_exponent",
                               "median_cost", "stored_ids")}, default=str, indent=1))
    return 0


def _line_file(path):
    from .apps import LineSet
    lines = []
    with open(path) as fh:
        for ln in fh:
            parts = ln.split()
            if parts and not parts[0].startswith("#"):
                c = [Q(x) for x in parts]
                lines.append((tuple(c[:3]), tuple(c[3:6])))
    return LineSet(lines)


def cmd_lines(args):
    from .apps import LineSet, line_pairs
    if args.red and args.blue:
        red, blue = _line_file(args.red), _line_file(args.blue)
    else:
        red = LineSet.random_through_ball(args.count, args.seed)
        blue = LineSet.random_through_ball(args.count, args.seed + 1, color="blue")
    res = line_pairs(red, blue, args.mode)
    with _open_out(args) as out:
        out.write(json.dumps({"mode": args.mode, "result": res}) + "\n")
    return 0


def cmd_polybool(args):
    from .apps import load_mesh, polyhedra_intersect
    sk = polyhedra_intersect(load_mesh(args.k1), load_mesh(args.k2))
    with _open_out(args) as out:
        out.write(sk.to_json() + "\n")
    return 0


def cmd_arrange(args):
    from .apps import arrangement_features
    scene = read_scene(args.scene)
    f = arrangement_features(scene, _config(args, len(scene.triangles)))
    rows = [{"triangle": k, "v": s.v, "e": s.e, "faces": s.faces,
             "components": s.components, "euler_ok": s.euler_ok}
            for k, s in sorted(f.triangles.items())]
    with _open_out(args) as out:
        if args.format == "json":
            out.write(json.dumps({"vertices": [[_num(c) for c in p] for p in f.vertices],
                                  "triangles": rows}) + "\n")
        else:
            _emit(rows, args, out)
    return 0


# -- parser -----------------------------------------------------------------------

def _engine_flags(p):
    p.add_argument("--scene", required=True, help="TRISOUP scene file")
    p.add_argument("--s-param", type=float, default=None,
                   help="storage exponent: s = n ** S (default 1.5)")
    p.add_argument("--branch", type=int, default=8, help="target children per partition node")
    p.add_argument("--r0", type=int, default=8, help="sample size of wide-structure levels")
    p.add_argument("--delta", type=float, default=0.1, help="relative error for acount")
    p.add_argument("--q", type=float, default=0.01, help="failure probability for acount")
    p.add_argument("--seed", type=int, default=0)


def _common(p):
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser():
    ap = argparse.ArgumentParser(prog="trishoot", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("generate", help="write a scene (and optionally queries)")
    p.add_argument("--kind", default="random-uniform",
                   choices=("random-uniform", "stacked-sheets", "clustered", "mesh-file"))
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--size", type=int, default=4096)
    p.add_argument("--mesh", help="OFF/OBJ file for mesh-file scenes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--queries", help="also write a query file here")
    p.add_argument("--count", type=int, default=0, help="queries per kind")
    p.add_argument("--query-kind", choices=("rays", "segments", "mixed"), default="mixed")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("build", help="build an engine and print its telemetry")
    _engine_flags(p)
    _common(p)
    p.set_defaults(func=cmd_build)

    for name, fn, hlp in (("shoot", cmd_shoot, "ray shooting"),
                          ("report", cmd_report, "segment reporting and emptiness"),
                          ("acount", cmd_acount, "approximate counting")):
        p = sub.add_parser(name, help=hlp)
        _engine_flags(p)
        _common(p)
        p.add_argument("--queries", help="query batch file")
        p.add_argument("coords", nargs="*", help="six numbers: origin+direction or endpoints")
        p.set_defaults(func=fn)

    p = sub.add_parser("verify", help="compare engine answers with the brute-force oracle")
    _engine_flags(p)
    p.add_argument("--queries", required=True)
    p.add_argument("--out")
    p.add_argument("--inject-fault", action="store_true",
                   help="drop one id from a leaf list (tests the checker)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="scaling sweep over n and the storage parameter")
    p.add_argument("--ns", default="1024,2048,4096,8192")
    p.add_argument("--s-grid", default="1,1.25,1.5", help="storage exponents")
    p.add_argument("--kind", default="random-uniform")
    p.add_argument("--count", type=int, default=200, help="rays per configuration")
    p.add_argument("--branch", type=int, default=8)
    p.add_argument("--r0", type=int, default=8)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", help="CSV output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("lines", help="red/blue line intersection pairs")
    p.add_argument("--red")
    p.add_argument("--blue")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("detect", "count", "report"), default="count")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lines)

    p = sub.add_parser("polybool", help="intersection sketch of two polyhedra")
    p.add_argument("k1")
    p.add_argument("k2")
    p.add_argument("--out")
    p.set_defaults(func=cmd_polybool)

    p = sub.add_parser("arrange", help="per-triangle arrangement pieces")
    _engine_flags(p)
    _common(p)
    p.set_defaults(func=cmd_arrange)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
