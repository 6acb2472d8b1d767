"""Batch command line: sample, weights, deform, check, serve.

The weights command runs the whole offline pipeline (partition, virtual
insertion when needed, weight evaluation) and writes, next to the
weight export, the expanded domain/handle files the deform command
consumes, plus the insertion trace.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix

from . import __version__
from .deform import deform, deform_progressive, mirror_permutation, scan_local_maxima
from .distance import (bellman_ford_reference, compute_handle_fields,
                       delaunay_graph, voronoi_partition)
from .domain import domain_from_doc, load_domain, save_domain
from .errors import MfdError
from .handles import handles_to_doc, load_handle_file
from .raster import splat_ppm
from .transforms import HandleTransform, load_motion_file, load_pose_file
from .virtual import insert_virtual_handles, propagate_transforms, solve_harmonic_fields
from .weights import (WeightField, compute_weights, load_weights_binary,
                      load_weights_csv, save_weights_binary, save_weights_csv)


def _cmd_sample(args) -> int:
    doc = json.loads(Path(args.points).read_text())
    if isinstance(doc, list):
        doc = {"points": doc}
    if args.k:  # command line wins over the file's k
        doc["k"] = args.k
    domain = domain_from_doc(doc)
    save_domain(domain, args.out)
    print(f"domain: {domain.num_points} samples, {domain.num_edges} edges, "
          f"{domain.n_components} component(s), k={domain.k}")
    return 0


def _cmd_weights(args) -> int:
    domain = load_domain(args.domain)
    domain, handles, options = load_handle_file(domain, args.handles)
    alpha = args.alpha if args.alpha is not None else options["alpha"]

    fields = compute_handle_fields(domain, handles)
    partition = voronoi_partition(domain, handles, fields=fields)
    trace = None
    if partition.violations():
        trace = insert_virtual_handles(
            domain, handles, default_basis=options["default_basis"], fields=fields)
        handles = trace.final_handles
        partition = trace.final_partition
        print(f"inserted {trace.num_inserted} virtual handle(s)")
        if not trace.score_monotone:
            print("warning: insertion score increased at some step", file=sys.stderr)

    fld = compute_weights(domain, handles, alpha, partition=partition, fields=fields)

    out = Path(args.out)
    if out.suffix == ".mfw":
        save_weights_binary(fld, out)
    else:
        save_weights_csv(fld, out)
    trace_path = out.with_suffix(out.suffix + ".trace.json")
    trace_path.write_text(trace.to_json() if trace else "[]")
    handles_path = out.with_suffix(out.suffix + ".handles.json")
    handles_path.write_text(json.dumps(handles_to_doc(handles, domain)))
    domain_path = out.with_suffix(out.suffix + ".domain.json")
    save_domain(domain, domain_path)

    print(f"weights: {fld.num_samples} samples x {len(fld.handle_ids)} handles "
          f"({fld.regime}, alpha={alpha}) -> {out}")
    print(f"aux: {trace_path.name}, {handles_path.name}, {domain_path.name}")
    return 0


def _load_weight_file(path: str, handle_ids) -> WeightField:
    if path.endswith(".mfw"):
        dense = load_weights_binary(path)
        ids = tuple(sorted(handle_ids))
    else:
        ids, dense = load_weights_csv(path)
    matrix = csr_matrix(dense)
    matrix.eliminate_zeros()
    return WeightField(handle_ids=tuple(ids), matrix=matrix, regime="interpolating",
                       metadata={"loaded_from": path})


def _cmd_deform(args) -> int:
    domain = load_domain(args.domain)
    domain, handles, _ = load_handle_file(domain, args.handles)
    fld = _load_weight_file(args.weights, [h.id for h in handles])
    if fld.num_samples != domain.num_points:
        print(f"error: weight file covers {fld.num_samples} samples, domain has "
              f"{domain.num_points}; use the expanded domain written by `weights`",
              file=sys.stderr)
        return 1

    real = [h for h in handles if not h.is_virtual]
    virtual = [h for h in handles if h.is_virtual]

    poses = load_pose_file(args.poses, domain.dim)
    transforms = {h.id: poses.get(h.id, HandleTransform.identity(domain.dim))
                  for h in real}
    if virtual:
        fields = compute_handle_fields(domain, handles)
        partition = voronoi_partition(domain, handles, fields=fields)
        harmonic = solve_harmonic_fields(delaunay_graph(partition),
                                         [h.id for h in real])
        transforms = propagate_transforms(harmonic, transforms)

    if args.progressive:
        motions = load_motion_file(args.poses, domain.dim)
        targets = {hid: motions.get(hid, tr) for hid, tr in transforms.items()}
        result = deform_progressive(domain, fld, targets, step_angle=args.step,
                                    policy=args.policy, handles=handles)
    else:
        result = deform(domain, fld, transforms)

    out_doc = {
        "dim": domain.dim,
        "points": result.positions.tolist(),
        "k": domain.k,
        "deformed": True,
    }
    Path(args.out).write_text(json.dumps(out_doc))
    if args.ppm:
        splat_ppm(result.positions, args.ppm)
    print(f"deformed {domain.num_points} samples "
          f"({result.metadata.get('passes', 1)} pass(es)) -> {args.out}")
    return 0


def run_checks(domain, handles, options, seed: int = 0) -> list:
    """Invariant suite behind `mfdeform check`; returns (name, ok, detail) rows."""
    rng = np.random.default_rng(seed)
    rows = []

    lengths_ok = np.allclose(
        domain.edge_len,
        np.linalg.norm(domain.positions[domain.edge_a] - domain.positions[domain.edge_b], axis=1),
        rtol=1e-12, atol=0.0)
    rows.append(("edge-lengths", lengths_ok, f"{domain.num_edges} edges"))

    # shortest-path oracle on induced subgraphs
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra as _dijkstra

    ok = True
    for _ in range(5):
        size = min(domain.num_points, 40)
        nodes = np.sort(rng.choice(domain.num_points, size=size, replace=False))
        remap = {int(n): i for i, n in enumerate(nodes)}
        sub_edges = [(remap[int(a)], remap[int(b)], float(ln)) for a, b, ln in
                     zip(domain.edge_a, domain.edge_b, domain.edge_len)
                     if int(a) in remap and int(b) in remap]
        if not sub_edges:
            continue
        src = [int(rng.integers(0, size))]
        ref = bellman_ford_reference(size, sub_edges, src)
        ea = [e[0] for e in sub_edges] + [e[1] for e in sub_edges]
        eb = [e[1] for e in sub_edges] + [e[0] for e in sub_edges]
        el = [e[2] for e in sub_edges] * 2
        g = coo_matrix((el, (ea, eb)), shape=(size, size)).tocsr()
        got = _dijkstra(g, indices=src, min_only=True)
        finite = np.isfinite(ref)
        if not (np.all(np.isfinite(got) == finite)
                and np.allclose(got[finite], ref[finite], rtol=1e-12, atol=0.0)):
            ok = False
    rows.append(("dijkstra-oracle", ok, "5 induced subgraphs vs Bellman-Ford"))

    fields = compute_handle_fields(domain, handles)
    partition = voronoi_partition(domain, handles, fields=fields)
    if partition.violations():
        trace = insert_virtual_handles(domain, handles, fields=fields)
        handles = trace.final_handles
        partition = trace.final_partition
    fld = compute_weights(domain, handles, options.get("alpha", 1.0),
                          partition=partition, fields=fields)

    err = np.abs(fld.dense().sum(axis=1) - 1.0).max()
    rows.append(("partition-of-unity", bool(err <= 1e-9), f"max |sum-1| = {err:.2e}"))

    interp_ok = True
    if fld.regime == "interpolating":
        for h in handles:
            if h.is_virtual:
                continue
            for s in h.sample_indices:
                w = fld.sample_weights(s)
                expect = np.zeros(len(fld.handle_ids))
                expect[fld.column_of(h.id)] = 1.0
                if np.abs(w - expect).max() > 1e-12:
                    interp_ok = False
    rows.append(("interpolation", interp_ok, f"regime = {fld.regime}"))

    report = scan_local_maxima(domain, fld, handles)
    rows.append(("no-local-maxima", report.clean,
                 f"{sum(len(v) for v in report.offenders.values())} offender(s)"))

    mirror = options.get("mirror")
    if mirror:
        sigma = mirror_permutation(domain, int(mirror["axis"]), float(mirror["value"]))
        dense = fld.dense()
        # handle permutation by mirrored handle sample sets
        id_to_col = {hid: c for c, hid in enumerate(fld.handle_ids)}
        hperm = {}
        for h in handles:
            mirrored = tuple(sorted(int(sigma[s]) for s in h.sample_indices))
            match = [g.id for g in handles
                     if tuple(sorted(g.sample_indices)) == mirrored]
            hperm[h.id] = match[0] if match else None
        sym_ok = all(v is not None for v in hperm.values())
        if sym_ok:
            for hid, mid in hperm.items():
                lhs = dense[:, id_to_col[hid]]
                rhs = dense[sigma, id_to_col[mid]]
                if np.abs(lhs - rhs).max() > 1e-9:
                    sym_ok = False
        rows.append(("symmetry", sym_ok, f"axis {mirror['axis']} = {mirror['value']}"))

    return rows


def _cmd_check(args) -> int:
    domain = load_domain(args.domain)
    domain, handles, options = load_handle_file(domain, args.handles)
    try:
        rows = run_checks(domain, handles, options, seed=args.seed)
    except MfdError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    width = max(len(r[0]) for r in rows)
    all_ok = True
    for name, ok, detail in rows:
        status = "pass" if ok else "FAIL"
        all_ok &= ok
        print(f"{name:<{width}}  {status}  {detail}")
    return 0 if all_ok else 1


def _cmd_serve(args) -> int:
    from .service import serve
    doc = None
    if args.domain:
        doc = json.loads(Path(args.domain).read_text())
    serve(args.port, doc, host=args.host)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mfdeform",
        description="Meshfree handle-driven shape deformation")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="build a sample domain from a point file")
    p.add_argument("--points", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("weights", help="compute blending weights")
    p.add_argument("--domain", required=True)
    p.add_argument("--handles", required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--out", required=True, help=".csv or .mfw")
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser("deform", help="apply handle transforms")
    p.add_argument("--domain", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--handles", required=True)
    p.add_argument("--poses", required=True)
    p.add_argument("--progressive", action="store_true")
    p.add_argument("--step", type=float, default=2.0, help="degrees per pass")
    p.add_argument("--policy", choices=["frozen", "recompute"], default="frozen")
    p.add_argument("--out", required=True)
    p.add_argument("--ppm", default=None)
    p.set_defaults(func=_cmd_deform)

    p = sub.add_parser("check", help="run the invariant suite")
    p.add_argument("--domain", required=True)
    p.add_argument("--handles", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("serve", help="start the session service")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--domain", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MfdError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
