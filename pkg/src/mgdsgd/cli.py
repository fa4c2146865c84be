"""Command-line entry point: ``python -m mgdsgd <command>``."""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import gossip, harness, topology


def _cmd_topology(args) -> int:
    if args.k is not None:
        g = topology.ring_lattice(args.n, args.k)
        W = topology.uniform_weight_matrix(g)
    else:
        W, g = topology.construct_weight_matrix(args.n, args.beta)
    k = g.degree_k
    D = topology.diameter(args.n, k)
    report = {"n": args.n, "k": k, "diameter": D, "beta": W.beta,
              "case": 1 if g.is_complete else 2}
    if args.beta is not None:
        report["beta_target"] = args.beta
    if args.spectrum and not g.is_complete:
        spec = topology.laplacian_spectrum(args.n, k)
        report.update(mu_min=spec.min_nonzero, sandwich=[spec.lower_bound, spec.upper_bound],
                      eigenvalues=[float(v) for v in sorted(spec.eigenvalues)])
    print(json.dumps(report))
    if args.save:
        topology.save_weight_matrix(args.save, W)
    return 0


def _cmd_gossip_check(args) -> int:
    rows = harness.contraction_table(args.betas, args.n, args.R_max, args.variant)
    for r in rows:
        print(json.dumps(r))
    failed = sum(not r["passed"] for r in rows)
    print(json.dumps({"summary": True, "rows": len(rows), "failed": failed}))
    return 1 if failed else 0


def _cmd_run(args) -> int:
    m = harness.load_manifest(args.manifest)
    if args.output_dir:
        m.output_dir = args.output_dir
    print(harness.run_manifest(m))
    return 0


def _parse_grid(items) -> dict:
    grid = {}
    for item in items:
        key, sep, values = item.partition("=")
        if not sep or not values:
            raise harness.ManifestError(key or item, "grid entries look like key=v1,v2")
        grid[key.strip()] = [harness._coerce(v.strip()) for v in values.split(",")]
    return grid


def _cmd_sweep(args) -> int:
    base = harness.load_manifest(args.manifest)
    if args.output_dir:
        base.output_dir = args.output_dir
    manifests = harness.expand_grid(base, _parse_grid(args.grid))
    index = args.index or f"{base.output_dir}/{base.name}-sweep-index.csv"
    for path in harness.run_sweep(manifests, args.workers, index):
        print(path)
    print(index)
    return 0


def _cmd_verify(args) -> int:
    names = args.suite or list(harness.SUITES)
    results = []
    for name in names:
        results.extend(harness.run_suite(name))
    print(harness.format_results(results))
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgdsgd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topology", help="build a weight matrix for a target connectivity")
    p.add_argument("--n", type=int, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--beta", type=float, help="target connectivity")
    group.add_argument("--k", type=int, help="ring-lattice degree with uniform weights")
    p.add_argument("--save", help="write the matrix in text format")
    p.add_argument("--spectrum", action="store_true", help="include Laplacian eigenvalues")
    p.set_defaults(func=_cmd_topology)

    p = sub.add_parser("gossip-check", help="accelerated gossip contraction sweep")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--betas", type=float, nargs="+", default=[0.5, 0.8, 0.9, 0.95, 0.99])
    p.add_argument("--R-max", type=int, default=50)
    p.add_argument("--variant", choices=[v.value for v in gossip.EtaVariant],
                   default=gossip.DEFAULT_VARIANT.value)
    p.set_defaults(func=_cmd_gossip_check)

    p = sub.add_parser("run", help="execute one manifest")
    p.add_argument("manifest")
    p.add_argument("--output-dir")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="expand a parameter grid over a base manifest")
    p.add_argument("manifest")
    p.add_argument("--grid", nargs="+", required=True, metavar="KEY=V1,V2")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--index", help="path of the sweep index CSV")
    p.add_argument("--output-dir")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", action="append", choices=list(harness.SUITES))
    p.set_defaults(func=_cmd_verify)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except harness.ManifestError as exc:
        print(f"manifest error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
