"""Batch experiment runner.

Usage: ``toplyap <command> --config PATH [--seed S] [--threads T] [--out DIR]``.

Every command writes ``<out>/<command>.json`` (the effective config, results,
convergence flags and wall time) and ``<out>/<command>.csv`` (a plot-ready
trace with the columns listed in ``CSV_COLUMNS``).  Exit status is 0 on success
(results may still be flagged as unconverged), 2 for configuration errors and 3
when an internal invariant is violated.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path
from typing import Callable

from toplyap import __version__
from toplyap.algorithms import metric_jsr, optimal_orbit, word_table
from toplyap.algorithms.lyapunov import derived_seeds, lyapunov, periodic_approx
from toplyap.algorithms.pressure import pressure, variational_gap, zero_temperature_scan
from toplyap.config import ConfigError, Experiment, build, load_config, validate, with_overrides
from toplyap.errors import InputError, InvariantViolation
from toplyap.oracles import run_suite
from toplyap.symbolic import CyclicWord, count_words

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3

CSV_COLUMNS = {
    "lyapunov": ["seed", "n", "estimate"],
    "periodic-approx": ["seed", "n", "k", "periodic_value", "estimate", "gap", "in_window",
                        "converged"],
    "jsr": ["n", "upper", "lower"],
    "optimal-orbit": ["m", "exponent"],
    "pressure": ["q", "pressure"],
    "zero-temp": ["q", "pressure", "normalized", "lower", "upper", "mean_displacement",
                  "concentration"],
    "oracle-check": ["property", "passed", "trials", "detail"],
}


def _num(x: float):
    """JSON-safe float: non-finite values become ``None``."""
    x = float(x)
    return x if math.isfinite(x) else None


def _cycle(c: CyclicWord) -> dict:
    return {"word": list(c.symbols), "period": c.period, "primitive": c.primitive,
            "root": list(c.root().symbols)}


def _require_chain(exp: Experiment):
    if exp.chain is None:
        raise InputError("this command needs a 'chain' entry")
    return exp.chain


def run_lyapunov(exp: Experiment):
    p = exp.params("lyapunov")
    chain = _require_chain(exp)
    n = p.get("n", 100_000)
    runs = p.get("runs", 1)
    tol = p.get("tol", 0.02)
    seeds = [exp.seed] if runs == 1 else derived_seeds(exp.seed, runs)
    records, rows = [], []
    for s in seeds:
        est = lyapunov(exp.cocycle, chain, n, s)
        change = abs(est.trace[-1][1] - est.trace[-2][1]) if len(est.trace) > 1 else math.inf
        records.append({"seed": s, "value": est.value, "n": est.n,
                        "trace": [[m, v] for m, v in est.trace],
                        "last_change": _num(change), "converged": change <= tol})
        rows += [[s, m, v] for m, v in est.trace]
    result = {"estimates": records, "converged": all(r["converged"] for r in records)}
    return result, rows


def run_periodic_approx(exp: Experiment):
    p = exp.params("periodic-approx")
    chain = _require_chain(exp)
    runs = p.get("runs", 1)
    seeds = [exp.seed] if runs == 1 else derived_seeds(exp.seed, runs)
    kwargs = {"n_estimate": p.get("n_estimate", 100_000), "max_retries": p.get("max_retries", 6)}
    if "n_return" in p:
        kwargs["n_return"] = p["n_return"]
    records, rows = [], []
    for s in seeds:
        r = periodic_approx(exp.cocycle, chain, p.get("eps", 0.05), s, **kwargs)
        ok = r.converged and r.in_window
        records.append({
            "seed": s, "k": r.k, "n": r.n, "eps": r.eps, "window": [r.n * (1 + r.eps),
                                                                    r.n * (1 + 2 * r.eps)],
            "in_window": r.in_window, "periodic_value": _num(r.periodic_value),
            "estimate": r.estimate, "n_estimate": r.n_estimate, "gap": _num(r.gap),
            "converged": r.converged, "success": ok, "retries": r.retries,
            "cycle": _cycle(r.cycle) if r.k else None,
        })
        rows.append([s, r.n, r.k, _num(r.periodic_value), r.estimate, _num(r.gap),
                     r.in_window, r.converged])
    result = {"runs": records, "successes": sum(r["success"] for r in records),
              "converged": all(r["success"] for r in records)}
    return result, rows


def run_jsr(exp: Experiment):
    p = exp.params("jsr")
    b = metric_jsr(exp.cocycle, p.get("n", 20), p.get("k_max", 8), threads=exp.threads,
                   slack=p.get("slack"))
    result = {
        "lower": b.lower, "upper": b.upper, "width": b.width,
        "rho_lower": b.rho_lower, "rho_upper": b.rho_upper,
        "lower_witness": _cycle(b.lower_witness),
        "witness_translation_length": b.witness_translation_length,
        "upper_level": b.upper_level, "slack": b.slack,
        "certified": b.slack == 0, "converged": b.converged,
    }
    rows = [[n, best, b.lower] for n, _ratio, best in b.upper_trace]
    return result, rows


def run_optimal_orbit(exp: Experiment):
    p = exp.params("optimal-orbit")
    o = optimal_orbit(exp.cocycle, p.get("k_max", 8), tol=p.get("tol", 1e-6),
                      m_max=p.get("m_max", 400), threads=exp.threads)
    t = exp.target
    result = {
        "cycle": _cycle(o.cycle), "exponent": o.exponent, "eta": o.eta,
        "eta_curve": t.curve_to_json(t.marking[o.eta]), "eta_exponent": o.eta_exponent,
        "curve_exponents": o.curve_exponents, "eta_trace": o.eta_trace,
        "converged": o.converged,
    }
    rows = [[m, v] for m, v in enumerate(o.eta_trace, start=1)]
    return result, rows


def _q_list(p: dict, default: list[float]) -> list[float]:
    if "q_list" in p:
        return [float(q) for q in p["q_list"]]
    if "q" in p:
        return [float(p["q"])]
    return default


def run_pressure(exp: Experiment):
    p = exp.params("pressure")
    n = p.get("n", 12)
    qs = _q_list(p, [0.0])
    tab = word_table(exp.cocycle, n, threads=exp.threads)
    values = [pressure(exp.cocycle, q, n, table=tab) for q in qs]
    result = {"n": n, "q": qs, "values": values, "word_count": tab.count,
              "entropy_check": math.log(count_words(exp.system, n)) / n, "converged": True}
    if exp.chains:
        result["variational_gaps"] = {
            str(q): variational_gap(exp.cocycle, q, exp.chains, n, table=tab) for q in qs}
    rows = [[q, v] for q, v in zip(qs, values)]
    return result, rows


def run_zero_temp(exp: Experiment):
    p = exp.params("zero-temp")
    n = p.get("n", 12)
    qs = _q_list(p, [1.0, 2.0, 4.0, 8.0, 16.0])
    curve = zero_temperature_scan(exp.cocycle, qs, n, threads=exp.threads,
                                  near_fraction=p.get("near_fraction", 0.05))
    bounds = [curve.sandwich(q) for q in qs]
    result = {"n": n, "q": qs, "values": curve.values, "normalized": curve.normalized,
              "word_count": curve.word_count, "max_displacement": curve.max_displacement,
              "best_word_average": curve.max_displacement / n,
              "sandwich": [list(b) for b in bounds],
              "mean_displacement": curve.mean_displacement,
              "concentration": curve.concentration, "converged": True}
    rows = [[q, v, v / q, lo, hi, m, c] for q, v, (lo, hi), m, c in
            zip(qs, curve.values, bounds, curve.mean_displacement, curve.concentration)]
    return result, rows


def run_oracle_check(exp: Experiment):
    quick = exp.params("oracle-check").get("quick", False)
    checks = run_suite(exp.cocycle, seed=exp.seed, quick=quick)
    result = {"properties": [{"name": c.name, "passed": c.passed, "trials": c.trials,
                              "detail": c.detail} for c in checks],
              "all_passed": all(c.passed for c in checks), "converged": True}
    rows = [[c.name, c.passed, c.trials, c.detail] for c in checks]
    return result, rows


COMMANDS: dict[str, Callable] = {
    "lyapunov": run_lyapunov,
    "periodic-approx": run_periodic_approx,
    "jsr": run_jsr,
    "optimal-orbit": run_optimal_orbit,
    "pressure": run_pressure,
    "zero-temp": run_zero_temp,
    "oracle-check": run_oracle_check,
}


def execute(command: str, config: dict, text: str | None = None, source: str = "<config>",
            base: Path | None = None) -> dict:
    """Run ``command`` on a validated config and return the result record (no I/O)."""
    exp = build(config, text, source, base)
    t0 = time.perf_counter()
    result, rows = COMMANDS[command](exp)
    return {"command": command, "version": __version__, "config": config,
            "result": result, "trace_columns": CSV_COLUMNS[command], "trace": rows,
            "wall_time": time.perf_counter() - t0}


def write_outputs(record: dict, out_dir: Path) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    command = record["command"]
    json_path = out_dir / f"{command}.json"
    csv_path = out_dir / f"{command}.csv"
    body = {k: v for k, v in record.items() if k != "trace"}
    json_path.write_text(json.dumps(body, indent=2, allow_nan=False) + "\n")
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(record["trace_columns"])
        w.writerows(record["trace"])
    return json_path, csv_path


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="toplyap", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="experiment config (JSON)")
    ap.add_argument("--seed", type=int, help="master seed (overrides the config)")
    ap.add_argument("--threads", type=int, help="worker threads (overrides the config)")
    ap.add_argument("--out", help="output directory (overrides the config; default 'out')")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw, text = load_config(args.config)
        config = with_overrides(raw, args.seed, args.threads, args.out)
        validate(config, None, args.config)
        record = execute(args.command, config, text, args.config, Path(args.config).parent)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    out_dir = Path(config.get("output", {}).get("dir", "out"))
    json_path, csv_path = write_outputs(record, out_dir)
    res = record["result"]
    flag = "" if res.get("converged", True) else " (flagged: not converged)"
    print(f"{args.command}: wrote {json_path} and {csv_path} in {record['wall_time']:.2f}s{flag}")
    if args.command == "oracle-check":
        for p in res["properties"]:
            print(f"  {'PASS' if p['passed'] else 'FAIL'} {p['name']}: {p['detail']}")
        if not res["all_passed"]:
            return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
