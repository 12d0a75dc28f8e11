"""Command-line front end: ``afmech {label,verify,trace,mane}``.

Exit codes: 0 success, 1 configuration error (nothing is written),
2 integration failure, 3 failed verification checks.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .affinity import AffinityError, CounterexampleAffinity, condition_norm
from .config import ConfigError, RunConfig, load_config
from .diagnostics import diagnostics_table
from .integrate import IntegrationError, integrate
from .io import atomic_write, encode_afm1, labels_to_pgm, table_to_csv
from .labeling import (
    GridGraph,
    LabelingError,
    build_omega,
    extract_labels,
    mane_analysis,
    objective_j,
    sflow_init,
    sflow_run,
    synth_dataset,
)
from .manifold import ManifoldError, barycenter, check_assignment
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INTEGRATION = 2
EXIT_CHECKS = 3

J_SLACK = 1e-10
J_MARGIN = 1e-6
CONDITION_TOL = 1e-10

_SETUP_ERRORS = (ConfigError, LabelingError, AffinityError, ManifoldError, ValueError, TypeError)


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _to_bytes(data) -> bytes:
    return data.encode() if isinstance(data, str) else data


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _versions() -> dict:
    return {"afmech": __version__, "numpy": np.__version__, "python": platform.python_version()}


def _write_all(out: Path, files: dict[str, bytes | str], cfg: RunConfig, command: str, criteria, extra=None):
    """Atomically write ``files`` plus a manifest; returns the manifest digest."""
    blobs = {name: _to_bytes(data) for name, data in files.items()}
    manifest = {
        "command": command,
        "config_hash": cfg.digest(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "versions": _versions(),
        "criteria": criteria,
        "outputs": {name: _sha(blob) for name, blob in sorted(blobs.items())},
    }
    if extra:
        manifest.update(extra)
    blobs["manifest.json"] = _json(manifest).encode()
    for name, blob in blobs.items():
        atomic_write(out / name, blob)
    return _sha(blobs["manifest.json"])


def _grid_omega(cfg: RunConfig):
    g = cfg.grid
    graph = GridGraph(g.height, g.width, g.radius, g.boundary, g.norm)
    weights = cfg.weights if isinstance(cfg.weights, str) else np.asarray(cfg.weights, dtype=float)
    return graph, build_omega(graph, weights)


def _dataset(cfg: RunConfig):
    return synth_dataset(cfg.grid.height, cfg.grid.width, cfg.labels, cfg.noise, cfg.seed)


def _is_constant(labels) -> bool:
    return bool(np.all(labels == labels[0]))


def cmd_label(cfg: RunConfig, out: Path) -> int:
    integ = cfg.integrator.build(stop=True)
    graph, omega = _grid_omega(cfg)
    ds = _dataset(cfg)
    state = sflow_init(omega, ds.D)
    try:
        res = sflow_run(state, omega, integ)
    except IntegrationError as exc:
        print(f"error: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    eps = integ.eps_conv if integ.eps_conv is not None else 1e-3
    labels, conf, converged = extract_labels(res.W.final, eps)
    accuracy = float(np.mean(labels == ds.labels))
    table = diagnostics_table(omega, res.S.times, res.S.states)
    J = table["J"]
    criteria = {
        "converged": bool(converged),
        "ground_truth_recovered": bool(accuracy == 1.0),
        "j_nondecreasing": bool(np.all(np.diff(J) >= -J_SLACK)),
    }
    if omega.is_symmetric:
        criteria["condition_norm_small"] = bool(np.nanmax(table["condition_norm"]) <= CONDITION_TOL)
    if converged and not _is_constant(labels):
        criteria["j_limit_below_max"] = bool(objective_j(omega, res.S.final)[0] < graph.m / 2 - J_MARGIN)
    files = {
        "labels.pgm": labels_to_pgm(labels, graph.height, graph.width, cfg.labels - 1),
        "assignment.afm1": encode_afm1(res.W.final),
        "diagnostics.csv": table_to_csv(table),
    }
    extra = {
        "accuracy": accuracy,
        "confidence": conf,
        "t_final": float(res.W.times[-1]),
        "n_steps": res.W.n_steps,
        "floored": res.floored,
    }
    digest = _write_all(out, files, cfg, "label", criteria, extra)
    print(f"accuracy {accuracy:.6f}  converged {converged}  t={res.W.times[-1]:.6g}  manifest {digest}")
    return EXIT_OK


def _trace_problem(cfg: RunConfig):
    flow = cfg.trace.flow
    init = cfg.trace.init
    n = cfg.labels
    if flow == "sflow":
        _, F = _grid_omega(cfg)
        m = F.m
        if init == "data":
            return F, sflow_init(F, _dataset(cfg).D).S
    elif flow == "counterexample":
        F = CounterexampleAffinity(n)
        m = 1
        if init == "data":
            raise ConfigError("counterexample flow needs trace.init = 'barycenter' or an explicit point")
    if init == "barycenter":
        return F, barycenter(m, n)
    W0 = check_assignment(np.atleast_2d(np.asarray(init, dtype=float)))
    if W0.shape != (m, n):
        raise ConfigError(f"trace.init must have shape {(m, n)}, got {W0.shape}")
    return F, W0


def cmd_trace(cfg: RunConfig, out: Path) -> int:
    section = cfg.integrator
    if cfg.trace.t_end is not None:
        section = dataclasses.replace(section, t_end=cfg.trace.t_end)
    integ = section.build(stop=False)
    F, W0 = _trace_problem(cfg)
    try:
        traj = integrate(F, W0, integ)
    except IntegrationError as exc:
        print(f"error: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    table = diagnostics_table(F, traj.times, traj.states)
    cond = table["condition_norm"]
    criteria = {"energy_zero": bool(np.max(np.abs(table["energy"])) <= 1e-10 * W0.size)}
    if getattr(F, "is_symmetric", False):
        criteria["condition_norm_small"] = bool(np.max(cond) <= CONDITION_TOL)
        criteria["j_nondecreasing"] = bool(np.all(np.diff(table["J"]) >= -J_SLACK))
    digest = _write_all(out, {"trace.csv": table_to_csv(table)}, cfg, "trace", criteria)
    print(f"{len(traj)} samples  max condition norm {np.max(cond):.3e}  manifest {digest}")
    return EXIT_OK


def cmd_mane(cfg: RunConfig, out: Path) -> int:
    _, omega = _grid_omega(cfg)
    n = cfg.labels
    if cfg.mane.query == "barycenter":
        Q = barycenter(omega.m, n)
    else:
        Q = sflow_init(omega, _dataset(cfg).D).S
    report = mane_analysis(omega, n, query=Q).to_dict()
    report["query"] = cfg.mane.query
    report["condition_norm_at_query"] = condition_norm(omega, Q)
    criteria = {"dim_formula_holds": report["dim_sigma"] == report["dim_sigma_formula"]}
    digest = _write_all(out, {"mane.json": _json(report)}, cfg, "mane", criteria)
    print(f"dim Sigma {report['dim_sigma']}  distance {report['distance']:.3e}  manifest {digest}")
    return EXIT_OK


def cmd_verify(suite: str, seed: int, threads: int, out: Path) -> int:
    names = list(SUITES) if suite == "all" else [suite]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(lambda s: (s, run_suite(s, seed)), names))
    report = {name: [c.to_dict() for c in checks] for name, checks in results}
    failures = [f"{name}.{c['name']}" for name, checks in report.items() for c in checks if not c["passed"]]
    body = _json({"seed": seed, "versions": _versions(), "suites": report, "failures": failures})
    atomic_write(out / f"verify_{suite}.json", body)
    for name, checks in report.items():
        for c in checks:
            mark = "PASS" if c["passed"] else "FAIL"
            print(f"{mark} {name}.{c['name']}: {c['value']:.3e} {c['relation']} {c['tol']:.1e}")
    if failures:
        print("failed checks: " + ", ".join(failures), file=sys.stderr)
        return EXIT_CHECKS
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (AFMECH_OUT overrides)")
    common.add_argument("--seed", type=int, help="seed override (unsigned 64-bit)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="K=V",
                        help="config override, dotted keys, JSON values; repeatable")
    common.add_argument("--threads", type=int, default=1, help="worker threads for verify")

    parser = argparse.ArgumentParser(prog="afmech", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"afmech {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("label", parents=[common], help="run the S-flow labeling pipeline")
    sub.add_parser("trace", parents=[common], help="write per-sample diagnostics of a flow")
    sub.add_parser("mane", parents=[common], help="critical-set dimensions for the grid averaging matrix")
    p = sub.add_parser("verify", parents=[common], help="run numerical check suites")
    p.add_argument("suite", nargs="?", default="all", choices=list(SUITES) + ["all"])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(os.environ["AFMECH_OUT"]) if os.environ.get("AFMECH_OUT") else args.out
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.config, args.overrides, args.seed)
        if args.command == "verify":
            return cmd_verify(args.suite, cfg.seed, args.threads, out)
        return {"label": cmd_label, "trace": cmd_trace, "mane": cmd_mane}[args.command](cfg, out)
    except _SETUP_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
