"""Experiment driver: deterministic runs and invariant verification.

``cobadd run config.json`` executes every configured run, writes one
trace CSV per run plus a ``summary.json`` with the oracle optimum, final
errors, error floors, message counts at the 1%-relative-error crossing,
and bound-violation counters.  ``cobadd verify config.json`` replays the
property suites (consensus-matrix conditions, projection against the
alternating-projection oracle, consensus contraction, theorem
inequalities, weak duality) and exits nonzero on any failure.  Plots are
not generated here; the CSVs feed any plotting stack.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .central import central_solve
from .errors import ConfigurationError
from .network import (MessageLedger, check_consensus_conditions,
                      consensus_round, metropolis_weights,
                      random_connected_graph)
from .oracles import (dual_bisection, dykstra_project, grid_search_lmi,
                      load_cached_result, store_cached_result, OracleResult)
from .problem import (DualPoint, ProblemInstance, build_dual_sets,
                      dual_set_threshold, instance_from_json,
                      make_sample_lmi_instance, make_sample_num_instance,
                      slater_certificate)
from .solver import CobaddConfig, cobadd_solve
from .spectral import project_G
from .trace import RunTrace


@dataclass
class RunSpec:
    solver: str
    alpha: float
    K: int
    phi: int = 1
    bounded: bool = True
    name: str = ""


@dataclass
class ExperimentConfig:
    instance: dict
    graph: dict
    runs: list[RunSpec]
    output_dir: str
    r: float | None = None
    slater_xbar: list[float] | None = None
    probe_mu: float = 0.0
    meta: dict = field(default_factory=dict)


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate an experiment configuration file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc

    def need(section, key, types, where):
        if key not in section:
            raise ConfigurationError(f"missing field {where}.{key}")
        if not isinstance(section[key], types):
            raise ConfigurationError(f"field {where}.{key} has the wrong type")
        return section[key]

    inst = need(doc, "instance", dict, "config")
    if "builtin" not in inst and "path" not in inst:
        raise ConfigurationError("instance needs either 'builtin' or 'path'")
    graph = need(doc, "graph", dict, "config")
    for key in ("n", "avg_degree", "seed"):
        need(graph, key, (int, float), "graph")
    runs_doc = need(doc, "runs", list, "config")
    if not runs_doc:
        raise ConfigurationError("runs must be a nonempty list")
    runs = []
    for i, rd in enumerate(runs_doc):
        where = f"runs[{i}]"
        solver = need(rd, "solver", str, where)
        if solver not in ("cobadd", "centralized"):
            raise ConfigurationError(f"{where}.solver must be 'cobadd' or 'centralized'")
        alpha = float(need(rd, "alpha", (int, float), where))
        if alpha <= 0:
            raise ConfigurationError(f"{where}.alpha must be positive")
        K = int(need(rd, "K", (int,), where))
        if K < 1:
            raise ConfigurationError(f"{where}.K must be >= 1")
        phi = int(rd.get("phi", 1))
        if phi < 1:
            raise ConfigurationError(f"{where}.phi must be >= 1")
        runs.append(RunSpec(solver=solver, alpha=alpha, K=K, phi=phi,
                            bounded=bool(rd.get("bounded", True)),
                            name=str(rd.get("name", ""))))
    output_dir = need(doc, "output_dir", str, "config")
    r = doc.get("r")
    if r is not None:
        r = float(r)
    xbar = doc.get("slater_xbar")
    return ExperimentConfig(instance=inst, graph=graph, runs=runs,
                            output_dir=output_dir, r=r, slater_xbar=xbar,
                            probe_mu=float(doc.get("probe_mu", 0.0)),
                            meta=dict(doc.get("meta", {})))


def build_instance(spec: dict, seed_override: int | None = None) -> ProblemInstance:
    if "path" in spec:
        with open(spec["path"]) as fh:
            return instance_from_json(json.load(fh))
    builtin = spec["builtin"]
    if builtin == "num":
        seed = seed_override if seed_override is not None else int(spec.get("seed", 0))
        return make_sample_num_instance(int(spec.get("n", 100)), seed)
    if builtin == "lmi":
        return make_sample_lmi_instance()
    raise ConfigurationError(f"unknown builtin instance {builtin!r}")


def default_slater_xbar(instance: ProblemInstance) -> np.ndarray:
    builtin = instance.meta.get("builtin")
    if builtin in ("num", "lmi"):
        return np.zeros(instance.n)
    raise ConfigurationError("slater_xbar is required for non-builtin instances")


def ground_truth(instance: ProblemInstance, cache_path: str | None = None) -> OracleResult:
    """f* for an instance from the applicable independent oracle."""
    if cache_path:
        cached = load_cached_result(cache_path, instance)
        if cached is not None:
            return cached
    if instance.d == 0:
        result = dual_bisection(instance, tol=1e-10)
    elif instance.n <= 3:
        result = grid_search_lmi(instance, 1e-3)
    else:
        raise ConfigurationError("no oracle covers this instance shape")
    if cache_path:
        store_cached_result(cache_path, instance, result)
    return result


def run_name(spec: RunSpec) -> str:
    if spec.name:
        return spec.name
    if spec.solver == "centralized":
        return f"central_alpha{spec.alpha:g}"
    return f"cobadd_phi{spec.phi}_alpha{spec.alpha:g}"


def _first_crossing(rel_err: np.ndarray, level: float = 0.01) -> int | None:
    hits = np.nonzero(rel_err <= level)[0]
    return int(hits[0]) if hits.size else None


def cmd_run(config_path: str, seed_override: int | None = None,
            out_override: str | None = None) -> int:
    """Execute all configured runs; write per-run CSVs and summary.json."""
    try:
        cfg = load_config(config_path)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = out_override or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    try:
        instance = build_instance(cfg.instance, seed_override)
        graph_seed = seed_override if seed_override is not None else int(cfg.graph["seed"])
        graph = random_connected_graph(int(cfg.graph["n"]),
                                       float(cfg.graph["avg_degree"]), graph_seed)
        W = metropolis_weights(graph)
        xbar = (np.array(cfg.slater_xbar, dtype=float) if cfg.slater_xbar is not None
                else default_slater_xbar(instance))
        slater = slater_certificate(instance, xbar)
        probe = DualPoint(cfg.probe_mu, np.zeros((instance.d,) * 2))
        threshold = dual_set_threshold(instance, slater, probe)
        r = cfg.r if cfg.r is not None else (threshold if threshold > 0 else 1.0)
        sets = build_dual_sets(instance, slater, probe, r)
        oracle = ground_truth(instance, os.path.join(out_dir, "oracle_cache.json"))
    except (ConfigurationError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    f_star = oracle.f_star
    summary_runs = []
    for spec in cfg.runs:
        name = run_name(spec)
        if spec.solver == "centralized":
            trace = central_solve(instance, spec.alpha, spec.K,
                                  sets=sets if spec.bounded else None)
        else:
            rc = CobaddConfig(alpha=spec.alpha, phi=spec.phi, K=spec.K,
                              sets=sets, seed=graph_seed)
            trace = cobadd_solve(instance, W, rc)
        csv_path = os.path.join(out_dir, name + ".csv")
        trace.write_csv(csv_path)
        err = np.abs(f_star - trace.f_ergodic)
        tail = max(1, spec.K // 10)
        rel = (f_star - trace.f_ergodic) / f_star if f_star != 0 else np.zeros(spec.K)
        cross = _first_crossing(rel)
        violations = _bound_violations(trace, f_star)
        summary_runs.append({
            "name": name, "solver": spec.solver, "alpha": spec.alpha,
            "phi": spec.phi if spec.solver == "cobadd" else None,
            "K": spec.K, "csv": os.path.basename(csv_path),
            "final_error": float(err[-1]),
            "floor": float(err[-tail:].mean()),
            "rel_error_1pct_k": None if cross is None else int(trace.k[cross]),
            "messages_at_1pct": None if cross is None else int(trace.messages_cum[cross]),
            "bound_violations": violations,
        })

    summary = {
        "config": os.path.basename(config_path),
        "instance": dict(instance.meta),
        "graph": {"n": graph.n, "edges": graph.edge_count,
                  "avg_degree": graph.average_degree, "nu": W.nu,
                  "seed": graph_seed},
        "dual_sets": {"radius": sets.Lambda, "r": sets.r, "threshold": threshold},
        "f_star": f_star,
        "f_star_oracle": oracle.certificate.get("method", "unknown"),
        "runs": summary_runs,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
    print(f"wrote {len(cfg.runs)} trace(s) and summary.json to {out_dir}")
    return 0


def _bound_violations(trace: RunTrace, f_star: float) -> dict:
    """Count per-row violations of the applicable theorem inequalities."""
    out = {"primal_upper": 0, "primal_lower": 0, "disagreement": 0,
           "weak_duality": 0, "applicable": True}
    slack = 1e-9
    b = trace.bounds
    if b is not None and not b.agreement_applicable:
        out["applicable"] = False
        out["weak_duality"] = int(np.sum(trace.q_best_node > f_star + 1e-7))
        return out
    out["primal_upper"] = int(np.sum(trace.f_ergodic > f_star + trace.bound_upper + slack))
    out["primal_lower"] = int(np.sum(trace.f_ergodic < f_star - trace.bound_lower - slack))
    out["weak_duality"] = int(np.sum(trace.q_best_node > f_star + 1e-7))
    if b is not None and trace.mu_disagreement is not None:
        env = b.disagreement_envelope(trace.k)
        out["disagreement"] = int(
            np.sum(trace.mu_disagreement > env + slack)
            + np.sum(trace.G_disagreement > env + slack))
    return out


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(config_path: str, seed_override: int | None = None) -> int:
    """Run the invariant suites and report one PASS/FAIL line each."""
    try:
        cfg = load_config(config_path)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failures = 0

    def report(name: str, ok: bool | None, detail: str = ""):
        nonlocal failures
        if ok is None:
            status = "SKIP (conditional)"
        else:
            status = "PASS" if ok else "FAIL"
            failures += 0 if ok else 1
        print(f"{status:18s} {name}" + (f"  [{detail}]" if detail else ""))

    rng = np.random.default_rng(0)

    # consensus-matrix conditions on the config graph and seeds 1..5
    try:
        instance = build_instance(cfg.instance, seed_override)
        graph = random_connected_graph(int(cfg.graph["n"]),
                                       float(cfg.graph["avg_degree"]),
                                       int(cfg.graph["seed"]))
        W = metropolis_weights(graph)
        report("consensus conditions (config graph)",
               not check_consensus_conditions(W.W, graph), f"nu={W.nu:.4f}")
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for seed in range(1, 6):
        g = random_connected_graph(30, 4.0, seed)
        Wg = metropolis_weights(g)
        report(f"consensus conditions (seed {seed})",
               not check_consensus_conditions(Wg.W, g))
        # mean preservation and spread contraction
        x = rng.normal(size=(30, 3))
        ledger = MessageLedger()
        y = consensus_round(Wg, x, 4, ledger)
        mean_ok = np.max(np.abs(y.mean(axis=0) - x.mean(axis=0))) < 1e-10
        dev0 = np.linalg.norm(x - x.mean(axis=0), axis=0)
        dev1 = np.linalg.norm(y - y.mean(axis=0), axis=0)
        contract_ok = np.all(dev1 <= (Wg.nu ** 4) * dev0 + 1e-12)
        report(f"consensus contraction (seed {seed})", bool(mean_ok and contract_ok),
               f"messages={ledger.total_messages}")

    # projection against the alternating-projection oracle
    worst = 0.0
    for trial in range(40):
        d = int(rng.integers(2, 5))
        A = rng.normal(size=(d, d))
        A = (A + A.T) / 2.0
        Gam = float(rng.uniform(0.2, 3.0))
        worst = max(worst, float(np.linalg.norm(
            project_G(A, Gam) - dykstra_project(A, Gam, 2000))))
    report("projection equals Dykstra oracle", worst < 1e-7, f"max dev {worst:.2e}")

    # weak duality and theorem inequalities on shortened config runs
    xbar = (np.array(cfg.slater_xbar, dtype=float) if cfg.slater_xbar is not None
            else default_slater_xbar(instance))
    slater = slater_certificate(instance, xbar)
    probe = DualPoint(cfg.probe_mu, np.zeros((instance.d,) * 2))
    threshold = dual_set_threshold(instance, slater, probe)
    r = cfg.r if cfg.r is not None else (threshold if threshold > 0 else 1.0)
    sets = build_dual_sets(instance, slater, probe, r)
    oracle = ground_truth(instance)
    f_star = oracle.f_star
    for spec in cfg.runs:
        name = run_name(spec)
        K = min(spec.K, 300)
        if spec.solver == "centralized":
            trace = central_solve(instance, spec.alpha, K,
                                  sets=sets if spec.bounded else None)
            okU = np.all(trace.f_ergodic <= f_star + trace.bound_upper + 1e-9)
            okL = np.all(trace.f_ergodic >= f_star - trace.bound_lower - 1e-9)
            report(f"baseline sandwich ({name})", bool(okU and okL))
        else:
            rc = CobaddConfig(alpha=spec.alpha, phi=spec.phi, K=K, sets=sets)
            trace = cobadd_solve(instance, W, rc)
            dual_ok = bool(np.max(trace.q_best_node) <= f_star + 1e-7)
            report(f"weak duality ({name})", dual_ok)
            sets_ok = bool(np.all(trace.final_mus <= sets.Lambda + 1e-12))
            report(f"dual iterates inside sets ({name})", sets_ok)
            b = trace.bounds
            if b is None or not b.agreement_applicable:
                report(f"agreement bound ({name})", None,
                       f"phi={spec.phi} < phibar={b.phibar:.1f}")
                report(f"primal sandwich ({name})", None, "conditional on phi >= phibar")
            else:
                env = b.disagreement_envelope(trace.k)
                agree_ok = bool(np.all(trace.mu_disagreement <= env + 1e-9)
                                and np.all(trace.G_disagreement <= env + 1e-9))
                report(f"agreement bound ({name})", agree_ok)
                okU = np.all(trace.f_ergodic <= f_star + b.primal_upper_deviation(trace.k) + 1e-9)
                okL = np.all(trace.f_ergodic >= f_star - b.primal_lower_deviation(trace.k) - 1e-9)
                report(f"primal sandwich ({name})", bool(okU and okL))

    print(f"{failures} failure(s)")
    return 1 if failures else 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cobadd",
        description="Consensus-based dual decomposition experiment driver")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute the runs in a config file")
    p_run.add_argument("config")
    p_run.add_argument("--seed-override", type=int, default=None)
    p_run.add_argument("--out", default=None, help="override output directory")
    p_ver = sub.add_parser("verify", help="run the invariant suites")
    p_ver.add_argument("config")
    p_ver.add_argument("--seed-override", type=int, default=None)
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.seed_override, args.out)
    return cmd_verify(args.config, args.seed_override)


if __name__ == "__main__":
    sys.exit(main())
