"""Command-line front end: ``qnet-privacy <command> --config scenario.json``.

Exit codes: 0 success (certify: every check passed), 1 certify failure,
2 invalid input.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from dataclasses import asdict, is_dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .config import DEFAULT_TOL
from .errors import UnsupportedEncoding
from .fisher import cfim, cfim_leq_qfim_check, crb_covariance_bound, function_basis, qfim, reparametrize
from .model import evolve, state_derivatives
from .noise import ghz_corner_indices, make_channel, noisy_probe, privacy_after_noise
from .privacy import (
    average_privacy_condition,
    continuity_gap_bound,
    derivative_norm_condition,
    rank_one_privacy_check,
    unitary_privacy_condition,
)
from .protocol import in_estimator_quadrant, run_experiment, x_basis_povm
from .qcore import fidelity, operator_norm
from .scenario import Scenario, ScenarioError, build_model, generator_matrix, load_scenario

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2
COMMANDS = {"analyze": "analyze", "noise-sweep": "noise_sweep", "simulate": "simulate", "certify": "certify"}
SWEEP_COLUMNS = ("eta", "epsilon", "epsilon_bound", "fidelity", "coherence_abs", "verdict")
MAX_CONTINUITY_CHECKS = 10


# --- serialization -------------------------------------------------------------

def to_jsonable(obj):
    """Plain JSON types; complex -> [re, im], non-finite floats -> None."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def serialize_report(report) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2) + "\n"


def parse_report(text):
    return json.loads(text)


def report_body(report):
    """Report without wall-clock timing (the part that must be reproducible)."""
    return {k: v for k, v in report.items() if k != "timing"}


def _verdict(v):
    return to_jsonable(v)


# --- commands --------------------------------------------------------------------

def _echo(sc: Scenario):
    echo = sc.model_dump(mode="json")
    tol = DEFAULT_TOL.updated(privacy=sc.tolerances.privacy, rank_rel=sc.tolerances.rank_rel).as_dict()
    tol["sweep_privacy"] = sc.tolerances.sweep_privacy
    echo["tolerances"] = tol
    echo["function_weights_resolved"] = sc.w
    return echo


def _rank_tol(rho, sc):
    evals = np.linalg.eigvalsh(rho)
    return sc.tolerances.rank_rel * max(float(evals[-1]), 0.0)


def _continuity_checks(rho, drho, q, rank_tol):
    d = len(drho)
    pairs = [(m, n) for m in range(d) for n in range(m, d)]
    out = []
    for (m, n), (m2, n2) in list(combinations(pairs, 2))[:MAX_CONTINUITY_CHECKS]:
        rep = continuity_gap_bound(rho, drho, m, n, m2, n2, q=q, rank_tol=rank_tol)
        item = to_jsonable(rep)
        item.update(indices=[m, n, m2, n2], holds=rep.holds, slack=rep.slack)
        out.append(item)
    return out


def _privacy_checks(sc, model, rho, drho, q):
    tol = sc.tolerances.privacy
    w = sc.w
    out = {}
    if "rank_one" in sc.checks:
        out["rank_one"] = rank_one_privacy_check(q, w, tol)
    if "derivative_norm" in sc.checks:
        out["derivative_norm"] = derivative_norm_condition(drho, w, tol)
    if "unitary" in sc.checks:
        try:
            out["unitary"] = unitary_privacy_condition(model, sc.theta, w, tol)
        except UnsupportedEncoding as e:
            out["unitary"] = {"is_private": False, "notes": [str(e)]}
    return out


def cmd_analyze(sc: Scenario):
    model = build_model(sc)
    rho = evolve(model, sc.theta).mat
    drho = state_derivatives(model, sc.theta)
    rank_tol = _rank_tol(rho, sc)
    q = qfim(rho, drho, rank_tol=rank_tol, theta=sc.theta)
    res = {"qfim": q.entries, "qfim_alt_form_gap": q.diagnostics["alt_form_gap"]}
    if sc.povm == "x_basis":
        if set(model.dims) != {2}:
            raise ScenarioError("povm 'x_basis' needs qubit factors")
        f = cfim(rho, x_basis_povm(len(model.dims)), drho, theta=sc.theta)
        res["cfim"] = f.entries
        res["cfim_leq_qfim"] = cfim_leq_qfim_check(f, q)
        res["qfim_minus_cfim_entrywise"] = q.entries - f.entries
    b = function_basis(sc.w)
    bound = crb_covariance_bound(q, 1)
    res["function"] = {
        "w": sc.w,
        "qfi": float(reparametrize(q, b).entries[0, 0]),
        "crb_variance_per_shot": bound.variance_of(sc.w),
        "crb_variance": None if bound.variance_of(sc.w) is None else bound.variance_of(sc.w) / sc.simulation.shots,
        "shots": sc.simulation.shots,
        "qfim_rank": bound.rank,
    }
    res["privacy"] = {k: _verdict(v) for k, v in _privacy_checks(sc, model, rho, drho, q).items()}
    if len(set(sc.w)) == 1 and sc.d >= 2:
        res["privacy"]["average_condition"] = average_privacy_condition(drho, sc.tolerances.privacy)
    res["continuity"] = _continuity_checks(rho, drho, q, rank_tol)
    return res


def sweep_rows(sc: Scenario):
    """One record per eta (ascending) for the configured noise channel."""
    if sc.noise is None:
        raise ScenarioError("field noise: required for noise-sweep")
    model = build_model(sc)
    h_norm = operator_norm(generator_matrix(sc))
    rows = []
    for eta in sc.noise.eta:
        channel = make_channel(sc.noise.channel, eta, sc.noise.locality)
        probe = noisy_probe(model, channel, sc.noise.stage, sc.theta)
        verdict = derivative_norm_condition(probe.drho, sc.w, sc.tolerances.sweep_privacy)
        f = min(fidelity(probe.rho, probe.reference), 1.0)
        i0, i1 = ghz_corner_indices(probe.model.dims)
        rows.append({
            "eta": float(eta),
            "epsilon": verdict.residual_rel,
            "epsilon_bound": 8.0 * h_norm * math.sqrt(max(0.0, 1.0 - f * f)),
            "fidelity": f,
            "coherence_abs": 2.0 * abs(probe.rho[i0, i1]),
            "verdict": "private" if verdict.is_private else "not_private",
        })
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(float(r[k])) if isinstance(r[k], float) else r[k]) for k in SWEEP_COLUMNS})
    return buf.getvalue()


def cmd_noise_sweep(sc: Scenario):
    rows = sweep_rows(sc)
    return {
        "channel": sc.noise.channel,
        "locality": sc.noise.locality,
        "stage": sc.noise.stage,
        "epsilon_definition": "worst-pair statistic of the derivative trace-norm condition",
        "coherence_definition": "2 |<0..0| rho |1..1>| (1 for a pure balanced GHZ state)",
        "rows": rows,
    }


def cmd_simulate(sc: Scenario):
    theta_bar = float(np.mean(sc.theta))
    warning = None
    if not in_estimator_quadrant(sc.d, theta_bar):
        warning = "d*theta_bar outside (0, pi): the arccos estimator is biased here"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = run_experiment(sc.d, sc.theta, sc.simulation.shots, sc.simulation.repetitions, sc.seed)
    return {
        "theta_bar": r.theta_bar,
        "theta_bar_hat": r.theta_bar_hat,
        "bias": r.bias,
        "mse": r.mse,
        "crb": r.crb,
        "mse_over_crb": r.efficiency,
        "shots": r.shots,
        "repetitions": r.repetitions,
        "seed": r.seed,
        "warning": warning,
    }


def cmd_certify(sc: Scenario):
    model = build_model(sc)
    rho = evolve(model, sc.theta).mat
    drho = state_derivatives(model, sc.theta)
    q = qfim(rho, drho, rank_tol=_rank_tol(rho, sc))
    checks = {k: _verdict(v) for k, v in _privacy_checks(sc, model, rho, drho, q).items()}
    if sc.noise is not None:
        for eta in sc.noise.eta:
            channel = make_channel(sc.noise.channel, eta, sc.noise.locality)
            v = privacy_after_noise(model, channel, sc.noise.stage, sc.theta, sc.w, sc.tolerances.sweep_privacy)
            checks[f"noise[{sc.noise.channel},eta={eta!r}]"] = _verdict(v)
    passed = all(c["is_private"] for c in checks.values())
    return {"passed": passed, "checks": checks}


HANDLERS = {
    "analyze": cmd_analyze,
    "noise_sweep": cmd_noise_sweep,
    "simulate": cmd_simulate,
    "certify": cmd_certify,
}


def run(task: str, sc: Scenario):
    """Execute ``task`` and return the full report (dict of JSON types)."""
    t0 = time.perf_counter()
    results = HANDLERS[task](sc)
    report = {
        "tool": {"name": "qnet-privacy", "version": __version__, "kernel_backend": _kernels.backend()},
        "command": task,
        "scenario": _echo(sc),
        "results": results,
        "timing": {"wall_clock_s": time.perf_counter() - t0},
    }
    return to_jsonable(report)


def _use_color(stream) -> bool:
    return "NO_COLOR" not in os.environ and hasattr(stream, "isatty") and stream.isatty()


def _tag(ok: bool, color: bool) -> str:
    word = "PASS" if ok else "FAIL"
    if not color:
        return word
    return f"\033[{32 if ok else 31}m{word}\033[0m"


def build_parser():
    p = argparse.ArgumentParser(prog="qnet-privacy", description="Fisher-information privacy analysis for quantum sensor networks.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.add_argument("--csv", help="noise-sweep CSV path (default: next to --out, else stdout after the report)")
    p.add_argument("--seed", type=int, help="override the scenario seed (unsigned 64-bit)")
    p.add_argument("--tol", type=float, help="override the privacy tolerance")
    return p


def _apply_overrides(sc: Scenario, args, task):
    if sc.task is not None and sc.task != task:
        raise ScenarioError(f"field task: scenario is for {sc.task!r}, command runs {task!r}")
    updates = {"task": task}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ScenarioError("--seed must be an unsigned 64-bit integer")
        updates["seed"] = args.seed
    if args.tol is not None:
        if not args.tol > 0:
            raise ScenarioError("--tol must be positive")
        updates["tolerances"] = sc.tolerances.model_copy(update={"privacy": args.tol})
    return sc.model_copy(update=updates)


def main(argv=None):
    args = build_parser().parse_args(argv)
    task = COMMANDS[args.command]
    try:
        sc = _apply_overrides(load_scenario(args.config), args, task)
        build_model(sc)  # full validation for every command, before any output
        if task == "noise_sweep" and sc.noise is None:
            raise ScenarioError("field noise: required for noise-sweep")
        report = run(task, sc)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID

    text = serialize_report(report)
    if args.out:
        Path(args.out).write_text(text)
    elif task != "certify":
        sys.stdout.write(text)

    if task == "noise_sweep":
        table = sweep_csv(report["results"]["rows"])
        csv_path = args.csv or (str(Path(args.out).with_suffix(".csv")) if args.out else None)
        if csv_path:
            Path(csv_path).write_text(table)
        else:
            sys.stdout.write(table)

    if task == "certify":
        res = report["results"]
        color = _use_color(sys.stdout)
        for name, check in res["checks"].items():
            print(f"{_tag(check['is_private'], color)}  {name}")
        print(f"{'CERTIFIED' if res['passed'] else 'NOT CERTIFIED'}: {sc.name}")
        return EXIT_OK if res["passed"] else EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
