"""Command-line front end.

Subcommands: gen, compile, verify-ft, simulate, bench-depth, bench-qaoa,
bench-energy, report.  Output directory defaults to $ICECOMP_OUTDIR (falling
back to the working directory); every bench run writes a manifest next to
its CSV.
"""

from __future__ import annotations

import argparse
import csv
import os
import random
import sys
import time

from .bench import (SweepSpec, default_outdir, emit_plotdata, read_rows,
                    run_depth_sweep, run_energy_bench, run_qaoa_bench,
                    write_manifest, write_rows)
from .compiler import (CompileConfig, GadgetSet, compile_baseline,
                       compile_cooptimized, read_encoded, write_encoded)
from .faults import check_gadget_ft, enumerate_fault_locations, run_fault, \
    context_for_gadget
from .gadgets import GadgetKind, build_gadget
from .maxcut import (GraphKind, cut_value, generate_instance, ramp_params,
                     read_graph, read_params, write_graph, write_params)
from .simulator import (NoiseModel, post_selection_rate, read_noise,
                        sample_shots, write_noise)


def _out(args, name):
    path = getattr(args, name, None)
    if path is None:
        return None
    if os.path.dirname(path):
        return path
    return os.path.join(args.out_dir, path)


def cmd_gen(args) -> int:
    kind = GraphKind.REGULAR_3 if args.kind == "regular3" else GraphKind.ERDOS_RENYI
    g = generate_instance(kind, args.k, density=args.density, seed=args.seed)
    with open(_out(args, "out"), "w") as fh:
        fh.write(write_graph(g))
    if args.params_out:
        with open(_out(args, "params_out"), "w") as fh:
            fh.write(write_params(ramp_params(args.p)))
    print(f"graph: {g.num_vertices} vertices, {g.num_edges} edges -> {args.out}")
    return 0


def cmd_compile(args) -> int:
    with open(args.graph) as fh:
        graph = read_graph(fh.read())
    if args.params:
        with open(args.params) as fh:
            params = read_params(fh.read())
    else:
        params = ramp_params(args.p)
    cfg = CompileConfig(
        num_syndromes=args.syndromes,
        gadget_set=GadgetSet(args.gadgets),
        use_z2=args.z2,
        resynthesize=args.resynth,
        expansion_width=args.width,
        queue_cap=args.queue_cap,
        seed=args.seed,
    )
    t0 = time.perf_counter()
    if args.mode == "baseline":
        enc = compile_baseline(graph, params, cfg)
    else:
        enc = compile_cooptimized(graph, params, cfg)
    wall = time.perf_counter() - t0
    with open(_out(args, "out"), "w") as fh:
        fh.write(write_encoded(enc))
    k = graph.num_vertices
    print(f"mode={args.mode} 2Q gates={enc.meta['twoq_gates']} "
          f"2Q depth={enc.meta['depth_2q']} "
          f"area={(k + 2) * enc.meta['depth_2q']} wall={wall:.2f}s")
    if args.report:
        path = _out(args, "report")
        new = not os.path.exists(path)
        with open(path, "a", newline="") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(["instance", "k", "p", "s", "mode", "twoq_gates",
                            "depth_2q", "area", "wall_s"])
            w.writerow([os.path.basename(args.graph), k, params.p,
                        args.syndromes, args.mode, enc.meta["twoq_gates"],
                        enc.meta["depth_2q"], (k + 2) * enc.meta["depth_2q"],
                        round(wall, 3)])
    return 0


def cmd_verify_ft(args) -> int:
    kind = GadgetKind(args.gadget)
    rng = random.Random(args.seed)
    n = args.k + 2
    orders = [None]
    for _ in range(args.perms):
        orders.append(tuple(rng.sample(range(n), n)))
    rows = []
    failures = 0
    for order in orders:
        gadget = build_gadget(kind, args.k, order)
        summary = check_gadget_ft(gadget)
        tag = "PASS" if summary.passed else "FAIL"
        if not summary.passed:
            failures += 1
        label = "default" if order is None else ",".join(map(str, order))
        print(f"{kind.value} k={args.k} order={label}: {tag} "
              f"({summary.total} faults, {summary.num_logical} logical escapes)")
        if args.csv:
            ctx = context_for_gadget(gadget)
            for loc in enumerate_fault_locations(gadget.fragment):
                rep = run_fault(gadget.fragment, loc, ctx)
                rows.append([label, loc.gate_index,
                             loc.describe(gadget.fragment),
                             rep.classification.value])
    if args.csv:
        with open(_out(args, "csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["order", "gate_index", "fault", "classification"])
            w.writerows(rows)
    return 1 if failures else 0


def cmd_simulate(args) -> int:
    with open(args.circuit) as fh:
        circuit, checks, decode = read_encoded(fh.read())
    noise = NoiseModel()
    if args.noise:
        with open(args.noise) as fh:
            noise = read_noise(fh.read())
    graph = None
    if args.graph:
        with open(args.graph) as fh:
            graph = read_graph(fh.read())
    records = sample_shots(circuit, noise, args.shots, args.seed,
                           checks=checks, decode=decode)
    with open(_out(args, "out"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["shot", "accepted", "decoded", "energy"])
        for i, rec in enumerate(records):
            energy = ""
            if rec.accepted and graph is not None and rec.logical is not None:
                energy = -cut_value(graph, rec.logical)
            w.writerow([i, int(rec.accepted),
                        "" if rec.logical is None else rec.logical, energy])
    print(f"shots={args.shots} post-selection rate="
          f"{post_selection_rate(records):.4f} -> {args.out}")
    return 0


def _spec_from_args(args, **overrides) -> SweepSpec:
    kind = GraphKind.REGULAR_3 if args.family == "regular3" \
        else GraphKind.ERDOS_RENYI
    noise = NoiseModel()
    if getattr(args, "noise", None):
        with open(args.noise) as fh:
            noise = read_noise(fh.read())
    spec = SweepSpec(
        family=kind,
        sizes=tuple(args.sizes),
        densities=tuple(args.densities or ()),
        seeds=tuple(range(args.num_seeds)),
        p=args.p,
        syndromes=tuple(args.syndromes),
        modes=tuple(args.modes),
        shots=getattr(args, "shots", 10_000),
        noise=noise,
        queue_cap=args.queue_cap,
    )
    for key, value in overrides.items():
        setattr(spec, key, value)
    return spec


def _run_bench(args, runner, name) -> int:
    spec = _spec_from_args(args)
    if name == "energy":
        spec.noise_scales = tuple(args.scales)
    rows = runner(spec)
    out = _out(args, "out")
    write_rows(rows, out)
    write_manifest(out + ".manifest.json", name, {
        "family": spec.family.value, "sizes": spec.sizes,
        "densities": spec.densities, "seeds": spec.seeds, "p": spec.p,
        "syndromes": spec.syndromes, "modes": spec.modes,
        "shots": spec.shots, "noise": write_noise(spec.noise),
        "noise_scales": spec.noise_scales, "queue_cap": spec.queue_cap,
    })
    print(f"{len(rows)} rows -> {out}")
    return 0


def cmd_report(args) -> int:
    rows = read_rows(args.csv)
    text = emit_plotdata(rows, args.figure)
    out = _out(args, "out")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        print(f"plot data -> {out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="icecomp",
        description="Iceberg-code QAOA co-compiler, verifier, and benchmarks",
    )
    ap.add_argument("--out-dir", default=default_outdir(),
                    help="output directory (default: $ICECOMP_OUTDIR or .)")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a MaxCut instance")
    g.add_argument("--kind", choices=("regular3", "er"), default="regular3")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--density", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--p", type=int, default=3)
    g.add_argument("--out", required=True)
    g.add_argument("--params-out")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("compile", help="compile an encoded circuit")
    c.add_argument("--graph", required=True)
    c.add_argument("--params")
    c.add_argument("--p", type=int, default=3)
    c.add_argument("--syndromes", type=int, default=3)
    c.add_argument("--gadgets", choices=("old", "new"), default="new")
    c.add_argument("--mode", choices=("baseline", "coopt"), default="coopt")
    c.add_argument("--z2", action="store_true")
    c.add_argument("--resynth", action="store_true")
    c.add_argument("--width", type=int, default=3)
    c.add_argument("--queue-cap", type=int, default=2000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.add_argument("--report")
    c.set_defaults(func=cmd_compile)

    v = sub.add_parser("verify-ft", help="exhaustive single-fault check")
    v.add_argument("--gadget", required=True,
                   choices=[k.value for k in GadgetKind])
    v.add_argument("--k", type=int, default=6)
    v.add_argument("--perms", type=int, default=0,
                   help="additional random implicit orders to verify")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--csv")
    v.set_defaults(func=cmd_verify_ft)

    s = sub.add_parser("simulate", help="noisy trajectory sampling")
    s.add_argument("--circuit", required=True)
    s.add_argument("--noise")
    s.add_argument("--graph")
    s.add_argument("--shots", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    def bench_common(b, qaoa=False):
        b.add_argument("--family", choices=("regular3", "er"),
                       default="regular3")
        b.add_argument("--sizes", type=int, nargs="+", required=True)
        b.add_argument("--densities", type=float, nargs="*")
        b.add_argument("--num-seeds", type=int, default=10)
        b.add_argument("--p", type=int, default=10)
        b.add_argument("--syndromes", type=int, nargs="+", default=[3])
        b.add_argument("--modes", nargs="+",
                       default=["baseline", "resynth", "resynth+z2"])
        b.add_argument("--queue-cap", type=int, default=400)
        b.add_argument("--out", required=True)
        if qaoa:
            b.add_argument("--shots", type=int, default=10_000)
            b.add_argument("--noise")

    bd = sub.add_parser("bench-depth", help="compile-only depth sweep")
    bench_common(bd)
    bd.set_defaults(func=lambda a: _run_bench(a, run_depth_sweep, "depth"))

    bq = sub.add_parser("bench-qaoa", help="noisy QAOA quality sweep")
    bench_common(bq, qaoa=True)
    bq.set_defaults(func=lambda a: _run_bench(a, run_qaoa_bench, "qaoa"))

    be = sub.add_parser("bench-energy", help="energy-distribution TV sweep")
    bench_common(be, qaoa=True)
    be.add_argument("--scales", type=float, nargs="+",
                    default=[0.0, 0.25, 0.5, 1.0])
    be.set_defaults(func=lambda a: _run_bench(a, run_energy_bench, "energy"))

    r = sub.add_parser("report", help="emit tidy plot data from a bench CSV")
    r.add_argument("--csv", required=True)
    r.add_argument("--figure", required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    os.makedirs(args.out_dir, exist_ok=True)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
