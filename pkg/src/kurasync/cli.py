"""Command-line interface.

Subcommands mirror the toolkit's experiments; every command validates its
inputs, writes CSV/JSON artifacts into the requested directory, and on
failure exits nonzero after printing a machine-readable error JSON to
standard error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import certificates as cert
from .connectome import preprocess_connectome
from .errors import ConfigError, KurasyncError
from .experiments import (
    ExperimentConfig,
    brain_experiment,
    practical_sweep,
    run_simulation,
)
from .metrics import save_correlation_csv  # noqa: F401  (re-export for scripting)
from .network import load_adjacency_csv, load_network_json, save_network_json
from .tree import build_spanning_tree, dump_decomposition


def _load_network(path):
    if str(path).endswith(".json"):
        net, part = load_network_json(path)
    else:
        net, part = load_adjacency_csv(path)
    if part is None:
        raise ConfigError(f"{path} carries no partition; use the JSON format")
    return net, part


def _load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_json(path)


def _cmd_check_partition(args) -> int:
    from .network import check_partition

    net, part = _load_network(args.network)
    report = check_partition(net, part)
    payload = {
        "is_exact": report.is_exact,
        "deviation_K": report.deviation_K,
        "worst_pair": list(report.worst_pair),
        "tolerance": report.tolerance,
    }
    if args.json:
        print(json.dumps(payload, indent=1))
    else:
        state = "exact" if report.is_exact else "approximate"
        print(f"partition is {state}: K = {report.deviation_K:.6g} (tol {report.tolerance:.3g})")
    return 0


def _cmd_simulate(args) -> int:
    net, part = _load_network(args.network)
    config = _load_config(args.config)
    record, _, _ = run_simulation(net, part, config, args.out)
    if args.dump_decomposition:
        dump_decomposition(build_spanning_tree(net, part), args.dump_decomposition)
    print(f"wrote {len(record.times)} samples to {args.out}")
    return 0


def _cmd_certify(args) -> int:
    net, part = _load_network(args.network)
    config = _load_config(args.config)
    omega = config.frequencies.sample(part, net.n_nodes)
    os.makedirs(args.out, exist_ok=True)
    decomp = build_spanning_tree(net, part)
    certificate = cert.certify(net, part, omega, decomp=decomp)
    certificate.to_json(os.path.join(args.out, "certificate.json"))
    if args.tradeoff:
        grid = _parse_grid(args.gamma_grid, certificate.gamma)
        points = cert.tradeoff_curve(net, part, grid, decomp=decomp)
        cert.save_tradeoff_csv(os.path.join(args.out, "tradeoff.csv"), points)
    if args.dump_decomposition:
        dump_decomposition(decomp, args.dump_decomposition)
    print(json.dumps(certificate.to_dict(), indent=1))
    return 0


def _parse_grid(spec: str | None, gamma_instance: float) -> np.ndarray:
    """Grid spec 'lo:hi:n' or comma list; default spans the instance gamma."""
    if not spec:
        top = max(gamma_instance, 1e-6)
        return np.linspace(0.0, top, 20)
    if ":" in spec:
        lo, hi, n = spec.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    return np.array([float(x) for x in spec.split(",")])


def _cmd_two_cluster(args) -> int:
    net, part = _load_network(args.network)
    config = _load_config(args.config)
    omega = config.frequencies.sample(part, net.n_nodes)
    decomp = build_spanning_tree(net, part)
    verdict = cert.two_cluster_test(net, part, omega, decomp=decomp)
    payload = {"verdict": verdict}
    if verdict != cert.NOT_APPLICABLE:
        omega_bar = cert.frequency_gap(decomp, omega)
        a_bar = cert.coupling_sum(decomp)
        payload.update(
            omega_bar=omega_bar,
            a_bar=a_bar,
            period_T2=cert.period_T2(omega_bar, a_bar),
        )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "two_cluster.json"), "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    print(json.dumps(payload, indent=1))
    return 0


def _cmd_sweep_practical(args) -> int:
    net, part = _load_network(args.network)
    config = _load_config(args.config)
    multipliers = [float(c) for c in args.multipliers.split(",")]
    if any(c <= 0 for c in multipliers):
        raise ConfigError("multipliers must be positive")
    rows = practical_sweep(net, part, config, multipliers, out_dir=args.out)
    for c, d in rows:
        print(f"c = {c:g}: asymptotic distance {d:.6g}")
    return 0


def _cmd_brain(args) -> int:
    summary = brain_experiment(
        args.scenario, args.out, seed=args.seed, connectome_csv=args.connectome
    )
    print(json.dumps(summary, indent=1))
    return 0


def _cmd_preprocess(args) -> int:
    raw_dir = args.raw
    files = sorted(
        os.path.join(raw_dir, f) for f in os.listdir(raw_dir) if f.endswith(".csv")
    )
    if not files:
        raise ConfigError(f"no CSV matrices found in {raw_dir}")
    mats = [np.loadtxt(f, delimiter=",") for f in files]
    region_map = np.loadtxt(args.region_map, delimiter=",", dtype=int)
    net, report = preprocess_connectome(mats, region_map)
    save_network_json(args.out, net)
    print(
        f"aggregated {report.n_subjects} subjects into {net.n_nodes} regions"
        + (f" (dropped {list(report.dropped_nodes)})" if report.dropped_nodes else "")
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kurasync",
        description="Cluster synchronization toolkit for Kuramoto oscillator networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-partition", help="verify the cluster partition conditions")
    p.add_argument("--network", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_check_partition)

    p = sub.add_parser("simulate", help="integrate the phase dynamics")
    p.add_argument("--network", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-decomposition", metavar="DIR")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("certify", help="compute the averaging stability certificate")
    p.add_argument("--network", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--tradeoff", action="store_true")
    p.add_argument("--gamma-grid", metavar="SPEC")
    p.add_argument("--out", required=True)
    p.add_argument("--dump-decomposition", metavar="DIR")
    p.set_defaults(fn=_cmd_certify)

    p = sub.add_parser("two-cluster", help="commutation test for two clusters")
    p.add_argument("--network", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_two_cluster)

    p = sub.add_parser("sweep-practical", help="intra-weight multiplier sweep")
    p.add_argument("--network", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--multipliers", default="1,2,4,8")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sweep_practical)

    p = sub.add_parser("brain", help="66-region brain pipeline")
    p.add_argument(
        "--scenario",
        required=True,
        choices=["homogeneous", "heterogeneous", "strong-intra"],
    )
    p.add_argument("--connectome", metavar="CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_brain)

    p = sub.add_parser("preprocess", help="aggregate raw connectome matrices")
    p.add_argument("--raw", required=True)
    p.add_argument("--region-map", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_preprocess)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except KurasyncError as exc:
        print(json.dumps(exc.payload()), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(json.dumps({"error": "file_not_found", "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
