"""Command-line interface.

Subcommands cover the full pipeline: simulate a field, krige observations,
pick contour levels, compute quality measures, export the contour function
and credible sets, run coverage studies, and compare interpolation rules
against the two-point closed form.  Exit codes: 0 success, 1 computation
failure, 2 input error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Dict, List

import numpy as np

from . import __version__
from .contours import (assign_level_sets, contour_function, levels_from_values,
                       pretty_levels, quality_report, select_K, standard_levels)
from .errors import ContourCredError, InputError
from .fileio import (RunManifest, credible_sets_geojson, read_levels,
                     read_mesh, read_model, read_observations, write_json,
                     write_levels, write_model, write_realizations,
                     svg_contour_map)
from .gmrf import (MaternSpec, build_matern_precision,
                   condition_on_observations, sample_field)
from .harness import (CoverageConfig, check_mesh_resolution,
                      run_coverage_study)
from .interp import InterpolatedField, extract_credible_set, subdivide
from .twopoint import REFERENCE_CASES, TwoPointParams, compare_to_oracle


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="contourcred",
        description="Quality measures and credible regions for contour maps "
                    "of latent Gaussian fields")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a field and write its model")
    p.add_argument("--mesh", required=True)
    p.add_argument("--nu", type=int, default=1)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--phi2", type=float, default=1.0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("krige", help="condition a model on observations")
    p.add_argument("--model", required=True)
    p.add_argument("--mesh", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--noise-var", type=float, required=True)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_krige)

    p = sub.add_parser("levels", help="choose contour levels for a model mean")
    p.add_argument("--model", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--strategy", choices=("standard", "pretty"),
                   default="standard")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_levels)

    p = sub.add_parser("measures", help="quality measures of a contour map")
    p.add_argument("--model", required=True)
    p.add_argument("--mesh", required=True)
    p.add_argument("--levels", help="levels JSON (otherwise --K + --strategy)")
    p.add_argument("--K", type=int)
    p.add_argument("--strategy", choices=("standard", "pretty"),
                   default="standard")
    p.add_argument("--target", type=float,
                   help="scan K downward until this measure target holds")
    p.add_argument("--measure", choices=("p0", "p1", "p2"), default="p2")
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("cmfunction",
                       help="contour function, subdivision and credible sets")
    p.add_argument("--model", required=True)
    p.add_argument("--mesh", required=True)
    p.add_argument("--levels", help="levels JSON (otherwise --K + --strategy)")
    p.add_argument("--K", type=int)
    p.add_argument("--strategy", choices=("standard", "pretty"),
                   default="standard")
    p.add_argument("--method", choices=("step", "linear", "log"),
                   default="linear")
    p.add_argument("--alpha", action="append", type=float,
                   help="credible level, repeatable (default 0.1)")
    p.add_argument("--depth", type=int, default=0)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_cmfunction)

    p = sub.add_parser("coverage", help="coverage study from a config JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--table", help="also write a plain-text table")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("oracle",
                       help="compare interpolation rules to the two-point "
                            "closed form")
    p.add_argument("--case", choices=sorted(REFERENCE_CASES))
    p.add_argument("--params",
                   help="mu0,mu1,sd0,sd1,rho (alternative to --case)")
    p.add_argument("--u", type=float,
                   help="contour level (defaults to the case's own level)")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)
    return top


def _manifest(args, inputs: Dict[str, str], parameters: Dict[str, object],
              outputs: List[str]) -> RunManifest:
    return RunManifest(subcommand=args.command, inputs=inputs,
                       parameters=parameters, outputs=tuple(outputs))


def cmd_simulate(args) -> int:
    mesh = read_mesh(args.mesh)
    spec = MaternSpec(nu=args.nu, kappa=args.kappa, phi2=args.phi2)
    if args.count < 1:
        raise InputError("count must be positive")
    model = build_matern_precision(mesh, spec)
    advisory = check_mesh_resolution(spec, mesh)
    if not advisory.ok:
        print("warning: %s" % advisory.message, file=sys.stderr)
    fields = sample_field(model, args.seed, args.count)
    outs = [args.out + ".json", args.out + ".qmat",
            args.out + ".realization.csv"]
    man = _manifest(args, {"mesh": args.mesh},
                    {"nu": args.nu, "kappa": args.kappa, "phi2": args.phi2,
                     "count": args.count, "seed": args.seed}, outs)
    write_model(args.out, model, man)
    write_realizations(outs[2], mesh, fields, man)
    print("wrote %s" % ", ".join(outs))
    return 0


def cmd_krige(args) -> int:
    model = read_model(args.model)
    mesh = read_mesh(args.mesh)
    obs = read_observations(args.obs, args.noise_var)
    posterior = condition_on_observations(model, obs, mesh)
    outs = [args.out + ".json", args.out + ".qmat"]
    man = _manifest(args,
                    {"model": args.model, "mesh": args.mesh, "obs": args.obs},
                    {"noise_var": args.noise_var}, outs)
    write_model(args.out, posterior, man)
    print("wrote %s" % ", ".join(outs))
    return 0


def _levels_for(args, f):
    if args.levels:
        return read_levels(args.levels)
    if args.K is None:
        raise InputError("provide --levels or --K")
    if args.strategy == "standard":
        return standard_levels(f, args.K)
    return pretty_levels(f, args.K)


def cmd_levels(args) -> int:
    model = read_model(args.model)
    if args.strategy == "standard":
        lv = standard_levels(model.mu, args.K)
    else:
        lv = pretty_levels(model.mu, args.K)
    man = _manifest(args, {"model": args.model},
                    {"K": args.K, "strategy": args.strategy}, [args.out])
    write_levels(args.out, lv, man)
    print("wrote %s (K=%d)" % (args.out, lv.K))
    return 0


def cmd_measures(args) -> int:
    model = read_model(args.model)
    mesh = read_mesh(args.mesh)
    if mesh.n_vertices != model.n:
        raise InputError("mesh size does not match the model")
    weights = mesh.vertex_areas
    outs = [args.out] + ([args.svg] if args.svg else [])
    inputs = {"model": args.model, "mesh": args.mesh}
    if args.levels:
        inputs["levels"] = args.levels
    if args.target is not None:
        params = {"target": args.target, "measure": args.measure,
                  "kmax": args.kmax, "strategy": args.strategy,
                  "samples": args.samples, "seed": args.seed}
        man = _manifest(args, inputs, params, outs)
        sel = select_K(model, args.target, measure=args.measure,
                       strategy=args.strategy, k_max=args.kmax,
                       samples=args.samples, seed=args.seed, weights=weights)
        payload = {
            "selected_K": sel.K,
            "conservative": sel.conservative,
            "report": sel.report.to_json_dict() if sel.report else None,
            "scan": [
                {"requested_K": e.requested_K, "actual_K": e.actual_K,
                 "spacing": e.spacing, "bound": e.bound,
                 "evaluated": e.evaluated, "estimate": e.estimate,
                 "std_error": e.std_error, "selected": e.selected}
                for e in sel.scan],
        }
        write_json(args.out, payload, man)
        if sel.K == 0:
            print("warning: no K from 1..%d reaches %s >= %g"
                  % (args.kmax, args.measure, args.target), file=sys.stderr)
            print("wrote %s (no feasible K)" % args.out)
            return 0
        levels = sel.levels
    else:
        levels = _levels_for(args, model.mu)
        params = {"K": levels.K, "strategy": levels.strategy,
                  "samples": args.samples, "seed": args.seed}
        man = _manifest(args, inputs, params, outs)
        report = quality_report(model, levels, samples=args.samples,
                                seed=args.seed, weights=weights)
        write_json(args.out, report.to_json_dict(), man)
    if args.svg:
        assignment = assign_level_sets(model.mu, levels)
        svg = svg_contour_map(mesh, assignment.k, levels, manifest=man)
        with open(args.svg, "w") as fh:
            fh.write(svg)
    print("wrote %s" % ", ".join(outs))
    return 0


def cmd_cmfunction(args) -> int:
    model = read_model(args.model)
    mesh = read_mesh(args.mesh)
    if mesh.n_vertices != model.n:
        raise InputError("mesh size does not match the model")
    alphas = args.alpha if args.alpha else [0.1]
    for a in alphas:
        if not 0.0 < a <= 1.0:
            raise InputError("alpha must lie in (0, 1], got %g" % a)
    if args.depth < 0:
        raise InputError("depth must be nonnegative")
    levels = _levels_for(args, model.mu)
    assignment = assign_level_sets(model.mu, levels)
    cf = contour_function(model, assignment, levels, samples=args.samples,
                          seed=args.seed, weights=mesh.vertex_areas)
    field = InterpolatedField.build(mesh, cf.values, args.method, assignment)
    fine = subdivide(field, args.depth)
    outs = [args.out + ".f.csv", args.out + ".subdivided.json",
            args.out + ".credible.geojson"] + ([args.svg] if args.svg else [])
    inputs = {"model": args.model, "mesh": args.mesh}
    if args.levels:
        inputs["levels"] = args.levels
    man = _manifest(args, inputs,
                    {"K": levels.K, "strategy": levels.strategy,
                     "method": args.method, "alpha": list(alphas),
                     "depth": args.depth, "samples": args.samples,
                     "seed": args.seed}, outs)
    with open(outs[0], "w") as fh:
        fh.write(man.comment_line() + "\n")
        fh.write("x,y,F,p,se\n")
        for i in range(mesh.n_vertices):
            fh.write(",".join("%.17g" % v for v in
                              (mesh.vertices[i, 0], mesh.vertices[i, 1],
                               cf.values[i], cf.marginals[i],
                               cf.std_error[i])) + "\n")
    write_json(outs[1], {
        "method": fine.method,
        "source_method": args.method,
        "depth": args.depth,
        "vertices": [[float(x), float(y)] for x, y in fine.mesh.vertices],
        "triangles": [[int(a), int(b), int(c)] for a, b, c in
                      fine.mesh.triangles],
        "values": [float(v) for v in fine.values],
    }, man)
    sets = {a: extract_credible_set(field, a) for a in alphas}
    write_json(outs[2], credible_sets_geojson(sets), man)
    if args.svg:
        svg = svg_contour_map(mesh, assignment.k, levels,
                              credible=sets[min(alphas)], manifest=man)
        with open(args.svg, "w") as fh:
            fh.write(svg)
    print("wrote %s" % ", ".join(outs))
    return 0


def cmd_coverage(args) -> int:
    from .fileio import _read_json

    doc = _read_json(args.config, "config")
    config = CoverageConfig.from_json_dict(doc)
    result = run_coverage_study(config)
    outs = [args.out] + ([args.table] if args.table else [])
    man = _manifest(args, {"config": args.config},
                    {"seed": config.seed, "replicates": config.replicates},
                    outs)
    write_json(args.out, result.to_json_dict(), man)
    if args.table:
        with open(args.table, "w") as fh:
            fh.write(man.comment_line() + "\n")
            fh.write(result.to_text())
    if result.degenerate:
        print("warning: standard errors are degenerate with %d replicate"
              % result.replicates, file=sys.stderr)
    print("wrote %s" % ", ".join(outs))
    return 0


def cmd_oracle(args) -> int:
    if args.case and args.params:
        raise InputError("give either --case or --params, not both")
    if args.case:
        ref = REFERENCE_CASES[args.case]
        params = ref.params
        u = ref.u if args.u is None else args.u
        label = args.case
    elif args.params:
        parts = args.params.split(",")
        if len(parts) != 5:
            raise InputError("--params needs mu0,mu1,sd0,sd1,rho")
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise InputError("--params must be numeric")
        params = TwoPointParams(*vals)
        u = 0.0 if args.u is None else args.u
        label = "custom"
    else:
        raise InputError("provide --case or --params")
    comp = compare_to_oracle(params, u, grid=args.grid)
    man = _manifest(args, {},
                    {"case": label, "u": u, "grid": args.grid,
                     "mu0": params.mu0, "mu1": params.mu1, "sd0": params.sd0,
                     "sd1": params.sd1, "rho": params.rho}, [args.out])
    payload = {
        "case": label,
        "s": [float(v) for v in comp.s],
        "exact": [float(v) for v in comp.exact],
        "interpolated": {m: [float(v) for v in vals]
                         for m, vals in comp.interpolated.items()},
        "endpoint_values": list(comp.endpoint_values),
        "endpoint_p": list(comp.endpoint_p),
        "summary": {m: {"max_signed_deviation": comp.max_signed_deviation(m),
                        "max_abs_deviation": comp.max_abs_deviation(m)}
                    for m in comp.interpolated},
    }
    write_json(args.out, payload, man)
    print("wrote %s" % args.out)
    return 0


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except ContourCredError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
