"""Command-line interface: streamed solves, certificates, oracles, app drivers.

Instances stream one constraint per line so true online arrival can be
demonstrated through a pipe.  Reports are emitted as deterministic JSON;
repeated runs with the same inputs, config and seed are byte-identical
(wall-clock timing is only included on request).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import report as rep
from .buyatbulk import BabDriver, BabNetwork
from .certify import certified_ratio, dual_violation, weak_duality_check
from .errors import CertificateError, NormCoverError
from .generators import lower_bound_demo_instance
from .model import eval_objective, instance_stats
from .netflow import Digraph
from .oracle import offline_oracle
from .reduction import ReducedSolver
from .routing import CapacityGroup, RoutingDriver, RoutingNetwork, capacity_check, scale_and_round
from .solver import SolverConfig

EXIT_OK = 0
EXIT_CERT = 1
EXIT_INPUT = 2


def _config_from_args(args) -> SolverConfig:
    return SolverConfig(
        delta=args.delta,
        eta=args.eta,
        lhs_tol=args.lhs_tol,
        max_steps_per_constraint=args.max_steps,
        exact_linear_fastpath=not args.no_fastpath,
    )


def _config_to_dict(cfg: SolverConfig) -> dict:
    return {
        "delta": cfg.delta,
        "eta": cfg.eta,
        "lhs_tol": cfg.lhs_tol,
        "max_steps_per_constraint": cfg.max_steps_per_constraint,
        "exact_linear_fastpath": cfg.exact_linear_fastpath,
    }


def _config_from_dict(doc: dict) -> SolverConfig:
    return SolverConfig(
        delta=doc["delta"],
        eta=doc["eta"],
        lhs_tol=doc["lhs_tol"],
        max_steps_per_constraint=doc["max_steps_per_constraint"],
        exact_linear_fastpath=doc["exact_linear_fastpath"],
    )


def _certificate_to_dict(cert) -> dict:
    return {
        "primal": cert.primal,
        "dual": cert.dual,
        "violation": cert.violation,
        "bound": cert.bound,
        "certified_ratio": cert.certified_ratio,
        "pd_gap": cert.pd_gap,
        "lower_bound": cert.lower_bound,
        "eta": cert.eta,
        "per_term_violation": list(cert.per_term_violation),
        "zero_weight_loads": list(cert.zero_weight_loads),
    }


def _certificate_section(inner):
    """(section dict, ok flag): chain values plus assertions, never raising."""
    section: dict = {}
    ok = True
    try:
        chain = weak_duality_check(inner)
        section["chain"] = {
            "sum_y": chain.sum_y,
            "y_ax": chain.y_ax,
            "mu_x": chain.mu_x,
            "holder": chain.holder,
        }
        cert = certified_ratio(inner, check_chain=False)
        section["certificate"] = _certificate_to_dict(cert)
    except CertificateError as exc:
        ok = False
        section["certificate_error"] = str(exc)
        report_v = dual_violation(inner)
        section["certificate"] = {
            "primal": inner.primal_value,
            "dual": inner.dual_value,
            "violation": report_v.max_factor,
            "per_term_violation": list(report_v.per_term),
        }
    return section, ok


def run_solve(lines, config: SolverConfig, timings: bool = False):
    """Drive one streamed instance end to end; returns (report, exit_code)."""
    t0 = time.perf_counter()
    gen = rep.parse_instance_lines(lines)
    header = next(gen)
    rs = ReducedSolver(header, config)
    constraints = []
    trace_rows = []
    for con in gen:
        constraints.append(con)
        gt = rs.process_general_constraint(con)
        trace_rows.append(
            {
                "k": gt.index,
                "inner_iterations": gt.iterations,
                "steps": sum(t.steps for t in gt.inner),
                "tau": math.fsum(t.tau for t in gt.inner),
                "lhs_final": gt.lhs_min_final,
                "fast_path": any(t.fast_path for t in gt.inner),
                "primal_value": rs.inner.primal_value,
                "dual_value": rs.inner.dual_value,
            }
        )
    inner = rs.inner
    stats = instance_stats(header, constraints)
    section, ok = _certificate_section(inner)
    doc = {
        "kind": "solve",
        "config": _config_to_dict(config),
        "instance": {
            "header": rep.header_to_dict(header),
            "constraints": [rep.constraint_to_dict(c) for c in constraints],
        },
    }
    doc.update(section)
    doc["delta"] = inner.delta
    doc["f_delta_offset"] = inner.f_offset
    doc["observed"] = {"d": stats.d, "rho": stats.rho}
    doc["declared"] = {
        "n": header.n,
        "d": header.d,
        "a_min": header.a_min,
        "a_max": header.a_max,
        "rho": header.rho,
        "terms": len(header.norm_terms),
    }
    doc["flags"] = {
        "uncosted_saturations": inner.saturation_events,
        "overshoot_events": inner.overshoot_events,
        "reduction_identity": rs.map.identity,
    }
    doc["traces"] = trace_rows
    if not rs.map.identity:
        xbar = rs.project_solution()
        margins = [c.value_at(xbar) for c in constraints]
        doc["projected"] = {
            "objective": eval_objective(header, xbar),
            "duplicated_objective": inner.objective_value(),
            "min_constraint_value": min(margins) if margins else None,
        }
    if timings:
        doc["wall_clock_s"] = time.perf_counter() - t0
    return doc, (EXIT_OK if ok else EXIT_CERT)


def _cmd_solve(args) -> int:
    lines = _read_lines(args.instance)
    try:
        doc, code = run_solve(lines, _config_from_args(args), timings=args.timings)
    except NormCoverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(doc, args.out)
    return code


def _cmd_certify(args) -> int:
    with open(args.report) as fh:
        stored = json.load(fh)
    config = _config_from_dict(stored["config"])
    lines = rep.write_instance(
        rep.header_from_dict(stored["instance"]["header"]),
        [rep.constraint_from_dict(c) for c in stored["instance"]["constraints"]],
    ).splitlines()
    doc, code = run_solve(lines, config)
    fresh = rep.dumps(doc.get("certificate"))
    kept = rep.dumps(stored.get("certificate"))
    if fresh != kept:
        print("certificate mismatch on replay", file=sys.stderr)
        print(f"stored: {kept}", file=sys.stderr)
        print(f"replayed: {fresh}", file=sys.stderr)
        return EXIT_CERT
    print("certificate reproduced bit-for-bit")
    return code


def _cmd_oracle(args) -> int:
    header, constraints = rep.read_instance(_read_text(args.instance))
    try:
        result = offline_oracle(
            header, constraints, resolution=args.resolution, mode=args.oracle_mode
        )
    except NormCoverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(
        {
            "kind": "oracle",
            "mode": result.mode,
            "resolution": args.resolution,
            "value": result.value,
            "x": [float(v) for v in result.x],
        },
        args.out,
    )
    return EXIT_OK


def demo_assertions(m: int) -> dict:
    """Companion assertion set for the l2 block instance."""
    n = m * m
    return {
        "m": m,
        "n": n,
        "x_bar": 1.0 / m,
        "x_bar_tol": 1e-4,
        "gradient": 1.0 / m,
        "gradient_tol": 1e-4,
        "pointwise_ratio_min": math.sqrt(m) / 4.0,
        "violation_bound": 1.0 + 6.0 * math.log(max(float(n), math.e)),
    }


def _cmd_gen_demo(args) -> int:
    header, constraints = lower_bound_demo_instance(args.m)
    sys.stdout.write(rep.write_instance(header, constraints))
    if args.assertions:
        with open(args.assertions, "w") as fh:
            fh.write(rep.dumps(demo_assertions(args.m)) + "\n")
    return EXIT_OK


def _parse_events(lines, expected_kind: str):
    events = []
    for k, raw in enumerate(lines):
        raw = raw.strip()
        if not raw:
            continue
        parts = raw.split()
        if len(parts) != 3 or parts[0] != expected_kind:
            raise NormCoverError(
                f"event {k}: expected '{expected_kind} <s> <t>', got {raw!r}"
            )
        try:
            events.append((int(parts[1]), int(parts[2])))
        except ValueError as exc:
            raise NormCoverError(f"event {k}: bad node id: {exc}") from exc
    return events


def _cmd_bab(args) -> int:
    t0 = time.perf_counter()
    try:
        gdoc = json.loads(_read_text(args.graph))
        edges = tuple((e[0], e[1]) for e in gdoc["edges"])
        network = BabNetwork(
            graph=Digraph(n=gdoc["nodes"], edges=edges),
            fixed_cost=tuple(e[2] for e in gdoc["edges"]),
            incr_cost=tuple(e[3] for e in gdoc["edges"]),
        )
        events = _parse_events(_read_lines(args.events), "pair")
        config = _config_from_args(args)
        driver = BabDriver(network, config)
        pair_rows = []
        for k, (s, t) in enumerate(events):
            try:
                trace = driver.handle_pair(s, t)
            except NormCoverError as exc:
                raise NormCoverError(f"event {k}: {exc}") from exc
            pair_rows.append(
                {
                    "pair": [s, t],
                    "iterations": trace.iterations,
                    "cut_total": trace.cut_total,
                }
            )
    except (NormCoverError, KeyError, IndexError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    true_obj, surrogate = driver.fractional_objective()
    section, ok = _certificate_section(driver.reduced.inner)
    doc = {
        "kind": "bab",
        "config": _config_to_dict(config),
        "graph": gdoc,
        "events": [[s, t] for s, t in events],
        "pairs": pair_rows,
        "objective": {"true_max": true_obj, "surrogate": surrogate},
    }
    doc.update(section)
    doc["flags"] = {
        "uncosted_saturations": driver.reduced.inner.saturation_events,
        "overshoot_events": driver.reduced.inner.overshoot_events,
    }
    if args.timings:
        doc["wall_clock_s"] = time.perf_counter() - t0
    _emit(doc, args.out)
    return EXIT_OK if ok else EXIT_CERT


def _parse_group(doc) -> CapacityGroup:
    p = doc["p"]
    if isinstance(p, str):
        if p not in ("inf", "Infinity"):
            raise NormCoverError(f"bad group exponent {p!r}")
        p = math.inf
    return CapacityGroup(edges=tuple(doc["edges"]), p=float(p), c=float(doc["c"]))


def _cmd_route(args) -> int:
    try:
        gdoc = json.loads(_read_text(args.graph))
        network = RoutingNetwork(
            graph=Digraph(n=gdoc["nodes"], edges=tuple((e[0], e[1]) for e in gdoc["edges"])),
            groups=tuple(_parse_group(g) for g in gdoc["groups"]),
        )
        events = _parse_events(_read_lines(args.events), "request")
        config = _config_from_args(args)
        max_requests = args.max_requests or max(len(events), 1)
        driver = RoutingDriver(network, max_requests=max_requests, config=config)
        request_rows = []
        for k, (s, t) in enumerate(events):
            try:
                out = driver.handle_request(s, t)
            except NormCoverError as exc:
                raise NormCoverError(f"event {k}: {exc}") from exc
            request_rows.append(
                {
                    "request": [s, t],
                    "iterations": out.iterations,
                    "rejected": out.rejected,
                    "total_flow": out.total_flow,
                    "paths": [[list(p), f] for p, f in out.path_flows],
                }
            )
    except (NormCoverError, KeyError, IndexError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    violation = dual_violation(driver.solver).max_factor
    rounding = scale_and_round(
        driver.outcomes, violation, seed=args.seed, n_edges=network.graph.m
    )
    groups = capacity_check(rounding.loads, network)
    section, ok = _certificate_section(driver.solver)
    doc = {
        "kind": "route",
        "config": _config_to_dict(config),
        "seed": args.seed,
        "graph": gdoc,
        "events": [[s, t] for s, t in events],
        "requests": request_rows,
        "total_flow": driver.total_flow,
        "doubled_primal": driver.doubled_primal_value,
    }
    doc.update(section)
    doc["rounding"] = {
        "violation": rounding.violation,
        "expected_value": rounding.expected_value,
        "realized_value": rounding.realized_value,
        "chosen": [[i, list(p) if p is not None else None] for i, p in rounding.chosen],
        "loads": list(rounding.loads),
        "groups": [
            {
                "group": g.group,
                "load_norm": g.load_norm,
                "capacity": g.capacity,
                "violated": g.violated,
                "precondition_ok": g.precondition_ok,
            }
            for g in groups
        ],
    }
    _emit(doc, args.out)
    return EXIT_OK if ok else EXIT_CERT


def _solve_one_file(path: str, config: SolverConfig):
    with open(path) as fh:
        return run_solve(fh.read().splitlines(), config)


def _cmd_batch(args) -> int:
    config = _config_from_args(args)
    results = []
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            futures = [pool.submit(_solve_one_file, f, config) for f in args.instances]
            results = [f.result() for f in futures]
    else:
        results = [_solve_one_file(f, config) for f in args.instances]
    doc = {
        "kind": "batch",
        "reports": [
            {"file": f, "report": r} for f, (r, _) in zip(args.instances, results)
        ],
    }
    _emit(doc, args.out)
    return EXIT_OK if all(code == EXIT_OK for _, code in results) else EXIT_CERT


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _read_lines(path: str):
    if path == "-":
        return sys.stdin
    return open(path)


def _emit(doc, out: str | None):
    text = rep.dumps(doc) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_config_flags(p):
    p.add_argument("--eta", type=float, default=1e-3, help="per-step growth cap")
    p.add_argument("--delta", type=float, default=None, help="initial primal floor")
    p.add_argument("--lhs-tol", type=float, default=1e-9, dest="lhs_tol")
    p.add_argument("--max-steps", type=int, default=5_000_000, dest="max_steps")
    p.add_argument("--no-fastpath", action="store_true", help="disable exact linear integration")
    p.add_argument("--timings", action="store_true", help="include wall-clock in the report")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="normcover",
        description="Online primal-dual solver for sum-of-norm covering programs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a streamed instance and certify the run")
    p.add_argument("instance", help="instance file, or - for stdin")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("certify", help="replay a report and verify its certificate")
    p.add_argument("report")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("oracle", help="offline optimum estimate for an instance file")
    p.add_argument("instance")
    p.add_argument("--oracle-mode", choices=("grid", "subgrad"), default="grid")
    p.add_argument("--resolution", type=float, default=1e-3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("gen-demo", help="emit the l2 block lower-bound demo instance")
    p.add_argument("m", type=int)
    p.add_argument("--assertions", default=None, help="also write the assertion set here")
    p.set_defaults(func=_cmd_gen_demo)

    p = sub.add_parser("bab", help="fractional buy-at-bulk over an event stream")
    p.add_argument("graph")
    p.add_argument("events", help="event file with 'pair s t' lines, or -")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_bab)

    p = sub.add_parser("route", help="online routing with lp-norm capacities")
    p.add_argument("graph")
    p.add_argument("events", help="event file with 'request s t' lines, or -")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-requests", type=int, default=None)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_route)

    p = sub.add_parser("batch", help="solve several instance files")
    p.add_argument("instances", nargs="+")
    p.add_argument("--workers", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_batch)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
