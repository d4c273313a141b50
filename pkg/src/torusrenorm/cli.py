"""Command-line front end.

Subcommands: trees, omega, lindstedt, renormalize, verify, spectra,
measures, suite.  Structured artifacts are JSON, sweep tables are CSV; each
run writes into a directory named by the hash of its effective
configuration, and every output embeds that hash and the seed.  CSV bodies
are byte-identical across reruns; timestamps appear only in comment
headers.

Exit codes: 0 on success, 2 when a scenario or flag fails validation, 3
when a numerical assertion fails.  Both failure paths also write a
machine-readable error.json when the run directory is known.

Environment: WORKERS caps the worker pool (default: logical cores),
OUT_DIR sets the output base when no --out flag is given.

Recognized scenario tolerance keys: "residual" (verify exits 3 when any
conjugation defect exceeds it), "matched_fraction" (spectra floor),
"measure_deviation" (measures ceiling).
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import acceptance, dynamics
from .divisors import (
    DecoratedTree,
    enumerate_resonances,
    eliasson_bound_check,
    omega_recursive,
    rho,
)
from .errors import (
    NotDecomposableError,
    ResonantFrequencyError,
    ScenarioError,
    ShellMatchError,
    ToleranceExceededError,
    UnitarityDriftError,
)
from .lindstedt import (
    counterterm,
    lindstedt_terms,
    lindstedt_terms_tree,
)
from .scenario import Scenario, resolve_out_dir, worker_count
from .symbols import FrequencyVector, TorusSymbol, random_symbol
from .trees import coefficient_c, enumerate_delta

VALIDATION_ERRORS = (ScenarioError, FileNotFoundError)
NUMERICAL_ERRORS = (
    ResonantFrequencyError,
    NotDecomposableError,
    UnitarityDriftError,
    ShellMatchError,
    ToleranceExceededError,
    RuntimeError,
)


# -- output plumbing ---------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if value == "":
        return None
    return value


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_csv(path, meta: dict, columns, rows) -> None:
    """Comment header (the only place a timestamp may appear), then the body."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {value}\n")
        fh.write(f"# generated: {_timestamp()}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _meta(run_hash: str, seed, command: str) -> dict:
    return {"command": command, "scenario": run_hash, "seed": seed}


class _Run:
    """Where a command writes, plus the hash every artifact embeds.

    ``emit`` steers formats: tables are CSV and structured artifacts JSON
    by default ("both"); "json" converts tables to row-dict JSON, "csv"
    keeps only the tables.
    """

    def __init__(self, command: str, config: dict, seed, cli_out, scenario_out=None, emit="both"):
        self.command = command
        self.hash = _config_hash(config)
        self.seed = seed
        self.emit = emit
        self.base = resolve_out_dir(scenario_out, cli_out)
        self.dir = self.base / self.hash

    def csv(self, name, columns, rows, extra_meta=None):
        if self.emit == "json":
            body = [dict(zip(columns, (_jsonable(v) for v in row))) for row in rows]
            self.json(Path(name).with_suffix(".json").name, {"rows": body}, always=True)
            return
        meta = _meta(self.hash, self.seed, self.command)
        if extra_meta:
            meta.update(extra_meta)
        write_csv(self.dir / name, meta, columns, rows)

    def json(self, name, payload: dict, always=False):
        if self.emit == "csv" and not always:
            return
        payload = dict(payload)
        payload["meta"] = _meta(self.hash, self.seed, self.command)
        write_json(self.dir / name, payload)


def _pool_map(fn, items):
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _emit_kind(value: str):
    """--emit is a format keyword or, as in the worked examples, a directory."""
    if value in ("json", "csv", "both"):
        return value, None
    return "both", value


def _parse_ints(text: str):
    return [int(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]


def _parse_floats(text: str):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_v(text: str, n: int):
    """Weight list: semicolons between nodes, commas inside a vector."""
    if ";" in text:
        vs = [tuple(int(t) for t in part.split(",")) for part in text.split(";")]
    else:
        vs = [(v,) for v in _parse_ints(text)]
    if len(vs) != n:
        raise ScenarioError(f"need {n} weights, got {len(vs)}")
    return vs


# -- subcommands -------------------------------------------------------------


def cmd_trees(args) -> int:
    if args.count:
        print("n count")
        for n in range(1, args.max + 1):
            print(f"{n} {len(enumerate_delta(n))}")
        return 0
    if args.n is None:
        raise ScenarioError("trees needs --count or --n")
    emit, out_override = _emit_kind(args.emit)
    config = {"command": "trees", "n": args.n}
    payload = []
    for tree in enumerate_delta(args.n):
        c = coefficient_c(tree)
        payload.append(
            {
                "delta": list(tree.delta),
                "parent": {str(i): tree.parent[i] for i in range(1, tree.n)},
                "c": f"{c.numerator}/{c.denominator}",
                "diameter": tree.diameter(),
            }
        )
    if args.out or out_override:
        run = _Run("trees", config, args.seed, args.out or out_override, emit=emit)
        run.json("trees.json", {"n": args.n, "trees": payload}, always=True)
        print(run.dir / "trees.json")
    else:
        json.dump({"n": args.n, "trees": payload}, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def _omega_point(args) -> int:
    delta = _parse_ints(args.delta)
    n = len(delta)
    v = _parse_v(args.v, n)
    omega = _parse_floats(args.omega)
    dt = DecoratedTree(delta, v, d=len(omega))
    o1, o2 = omega_recursive(dt, omega)
    payload = {
        "delta": delta,
        "v": [list(w) for w in v],
        "omega": omega,
        "omega1": {"re": o1.real, "im": o1.imag},
        "omega2": {"re": o2.real, "im": o2.imag},
        "rho": rho(dt),
        "resonances": [
            {
                "apex": r.apex,
                "B": list(r.B),
                "members": r.members(),
                "support": r.support(),
            }
            for r in enumerate_resonances(dt)
        ],
    }
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def cmd_omega(args) -> int:
    if not args.sweep:
        if args.delta is None or args.v is None:
            raise ScenarioError("omega needs --delta and --v, or --sweep")
        return _omega_point(args)

    omega = _parse_floats(args.omega)
    if len(omega) != 1:
        raise ScenarioError("the sweep is one-dimensional")
    config = {
        "command": "omega-sweep",
        "max_n": args.max_n,
        "v_range": args.v_range,
        "omega": omega,
    }
    emit, out_override = _emit_kind(args.emit)
    run = _Run("omega", config, args.seed, args.out or out_override, emit=emit)
    freq = FrequencyVector(tuple(omega))
    rows = []
    skipped = 0
    from itertools import product as iproduct

    for n in range(1, args.max_n + 1):
        for tree in enumerate_delta(n):
            for v in iproduct(range(-args.v_range, args.v_range + 1), repeat=n):
                dt = DecoratedTree(tree, list(v))
                try:
                    o1, _ = omega_recursive(dt, omega)
                    k_cap = max(1, n * max((abs(x) for x in v), default=1))
                    lhs, rhs = eliasson_bound_check(dt, freq, K_max=k_cap)
                except ResonantFrequencyError:
                    skipped += 1
                    continue
                rows.append(
                    (
                        n,
                        ",".join(str(x) for x in tree.delta),
                        ",".join(str(x) for x in v),
                        o1.real,
                        o1.imag,
                        rho(dt),
                        lhs / rhs if rhs > 0 else 0.0,
                    )
                )
    run.csv(
        "omega_sweep.csv",
        ["n", "delta", "v", "omega1_re", "omega1_im", "rho", "bound_ratio"],
        rows,
        extra_meta={"skipped_resonant": skipped},
    )
    print(run.dir / "omega_sweep.csv")
    return 0


def cmd_lindstedt(args) -> int:
    v_sym = TorusSymbol.load_json(args.v)
    omega = _parse_floats(args.omega)
    emit, out_override = _emit_kind(args.emit)
    config = {
        "command": "lindstedt",
        "V": v_sym.to_json_dict(),
        "omega": omega,
        "gamma": args.gamma,
        "hbar": args.hbar,
        "orders": args.orders,
        "method": args.method,
    }
    run = _Run("lindstedt", config, args.seed, args.out or out_override, emit=emit)
    if args.method == "tree":
        series = lindstedt_terms_tree(v_sym, omega, args.hbar, args.orders)
    else:
        series = lindstedt_terms(v_sym, omega, args.hbar, args.orders, method=args.method)
    for n, (H, Rp) in enumerate(series.orders, start=1):
        run.json(f"H{n}.json", H.to_json_dict())
        run.json(f"R{n}.json", Rp.to_json_dict())
    rows = []
    for n, (H, Rp) in enumerate(series.orders, start=1):
        for s in series.s_grid:
            rows.append((n, s, H.analytic_norm(s), Rp.analytic_norm(s)))
    run.csv("norms.csv", ["order", "s", "h_norm", "rprime_norm"], rows)
    print(run.dir)
    return 0


def _require_scenario(args) -> Scenario:
    if not args.scenario:
        raise ScenarioError("this command needs --scenario")
    return Scenario.from_path(args.scenario)


def _residual_cell(payload):
    scenario_dict, hbar = payload
    sc = Scenario.from_json_dict(scenario_dict)
    series = lindstedt_terms(sc.v, sc.omega, hbar, sc.orders)
    rows = []
    for t in sc.t_grid:
        if t == 0.0:
            rows.append((t, hbar, sc.orders, 0.0))
            continue
        resid = dynamics.conjugation_residual(sc.v, series, t, hbar, sc.J)
        rows.append((t, hbar, sc.orders, resid))
    return rows


def _slope_window(rows_for_hbar):
    """Per-row centered log-log slope; empty string when undefined."""
    ts = [r[0] for r in rows_for_hbar]
    res = [r[3] for r in rows_for_hbar]
    out = []
    for i in range(len(ts)):
        lo = max(0, i - 1)
        hi = min(len(ts) - 1, i + 1)
        if lo == hi or min(res[lo], res[hi]) <= 0 or ts[lo] <= 0:
            out.append("")
            continue
        out.append((np.log(res[hi]) - np.log(res[lo])) / (np.log(ts[hi]) - np.log(ts[lo])))
    return out


def _spectra_rows(sc: Scenario):
    rows = []
    for hbar in sc.hbar_grid:
        series = lindstedt_terms(sc.v, sc.omega, hbar, sc.orders)
        for t in sc.t_grid:
            tol = 10.0 * t ** (sc.orders + 1)
            _, frac = dynamics.spectrum_check(sc.v, series, t, hbar, sc.J)
            rows.append((hbar, t, sc.J, tol, frac))
    return rows


def _measure_rows(sc: Scenario):
    rng = np.random.default_rng(sc.seed)
    tests = []
    for _ in range(10):
        a = random_symbol(rng, d=sc.v.d, n_modes=4, k_max=2, m_max=2)
        norm = a.analytic_norm(0.0)
        tests.append(a * (1.0 / norm) if norm > 0 else a)
    rows = []
    for hbar in sc.hbar_grid:
        series = lindstedt_terms(sc.v, sc.omega, hbar, sc.orders)
        for t in sc.t_grid:
            est = dynamics.semiclassical_measure(sc.v, series, t, tests, [hbar], sc.J)
            for rec in est.records:
                for idx, (pairing, reference) in enumerate(
                    zip(rec["pairings"], rec["references"])
                ):
                    rows.append(
                        (
                            hbar,
                            t,
                            idx,
                            pairing.real,
                            pairing.imag,
                            reference.real,
                            reference.imag,
                            abs(pairing - reference),
                        )
                    )
    return rows


MEASURE_COLUMNS = [
    "hbar",
    "t",
    "symbol",
    "pairing_re",
    "pairing_im",
    "reference_re",
    "reference_im",
    "deviation",
]


def cmd_verify(args) -> int:
    sc = _require_scenario(args)
    emit, out_override = _emit_kind(args.emit)
    run = _Run(
        "verify", sc.canonical_dict(), sc.seed, args.out or out_override, sc.out_dir, emit
    )

    cells = [(sc.canonical_dict(), hbar) for hbar in sc.hbar_grid]
    per_hbar = _pool_map(_residual_cell, cells)
    rows = []
    for cell_rows in per_hbar:
        slopes = _slope_window(cell_rows)
        for row, slope in zip(cell_rows, slopes):
            rows.append(row + (slope,))
    run.csv("residuals.csv", ["t", "hbar", "N", "residual", "slope_window"], rows)

    run.csv(
        "spectra.csv",
        ["hbar", "t", "J", "tol", "matched_fraction"],
        _spectra_rows(sc),
    )
    run.csv("measures.csv", MEASURE_COLUMNS, _measure_rows(sc))
    print(run.dir)

    cap = sc.tolerances.get("residual")
    if cap is not None:
        bad = [(r[0], r[1], r[3]) for r in rows if r[3] > cap]
        if bad:
            raise ToleranceExceededError(
                f"{len(bad)} conjugation defects exceed {cap}: worst "
                f"{max(b[2] for b in bad):.3e} at (t, hbar) = "
                f"{max(bad, key=lambda b: b[2])[:2]}"
            )
    return 0


def cmd_renormalize(args) -> int:
    sc = _require_scenario(args)
    emit, out_override = _emit_kind(args.emit)
    run = _Run(
        "renormalize", sc.canonical_dict(), sc.seed, args.out or out_override, sc.out_dir, emit
    )
    rows = []
    first_artifacts = None
    for hbar in sc.hbar_grid:
        series = lindstedt_terms(sc.v, sc.omega, hbar, sc.orders)
        for t in sc.t_grid:
            matrix = dynamics.renormalized_matrix(sc.v, series, t, hbar, sc.J)
            path = dynamics.propagate(
                lambda tau: series.generator(tau) * -1.0, hbar, sc.J, t
            )
            drift = path.control["max_unitarity_drift"]
            resid = dynamics.conjugation_residual(sc.v, series, t, hbar, sc.J)
            rows.append((hbar, t, path.control["steps"], resid, drift))
            if first_artifacts is None:
                first_artifacts = (hbar, t, series, matrix)
    run.csv(
        "renormalized.csv",
        ["hbar", "t", "steps", "defect_norm", "unitarity_drift"],
        rows,
    )
    hbar, t, series, matrix = first_artifacts
    run.json("counterterm.json", counterterm(series, t).to_json_dict())
    run.json("generator.json", series.generator(t).to_json_dict())
    run.json("renormalized_matrix.json", matrix.to_json_dict())
    matrix.save_binary(run.dir / "renormalized_matrix.mat")
    print(run.dir)
    return 0


def cmd_spectra(args) -> int:
    sc = _require_scenario(args)
    emit, out_override = _emit_kind(args.emit)
    run = _Run(
        "spectra", sc.canonical_dict(), sc.seed, args.out or out_override, sc.out_dir, emit
    )
    rows = _spectra_rows(sc)
    run.csv("spectra.csv", ["hbar", "t", "J", "tol", "matched_fraction"], rows)
    print(run.dir / "spectra.csv")
    floor = sc.tolerances.get("matched_fraction")
    if floor is not None:
        worst = min(r[4] for r in rows)
        if worst < floor:
            raise ToleranceExceededError(f"matched fraction {worst:.4f} below {floor}")
    return 0


def cmd_measures(args) -> int:
    sc = _require_scenario(args)
    emit, out_override = _emit_kind(args.emit)
    run = _Run(
        "measures", sc.canonical_dict(), sc.seed, args.out or out_override, sc.out_dir, emit
    )
    rows = _measure_rows(sc)
    run.csv("measures.csv", MEASURE_COLUMNS, rows)
    print(run.dir / "measures.csv")
    cap = sc.tolerances.get("measure_deviation")
    if cap is not None:
        worst = max((r[7] for r in rows), default=0.0)
        if worst > cap:
            raise ToleranceExceededError(f"measure deviation {worst:.4e} exceeds {cap}")
    return 0


def cmd_suite(args) -> int:
    ids = None
    if args.only:
        ids = _parse_ints(args.only)
    config = {"command": "suite", "only": ids}
    run = _Run("suite", config, args.seed, args.out)
    results = acceptance.run_all(ids, echo=print)
    summary = {
        "criteria": [r.to_json_dict() for r in results],
        "all_passed": all(r.passed for r in results),
        "all_expected": all(r.passed or r.status == "degenerate" for r in results),
    }
    run.json("suite_summary.json", summary)
    print(run.dir / "suite_summary.json")
    if not summary["all_expected"]:
        raise ToleranceExceededError(
            "acceptance criteria failed: "
            + ", ".join(str(r.cid) for r in results if not (r.passed or r.status == "degenerate"))
        )
    return 0


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusrenorm",
        description="Desk-scale renormalization experiments for perturbed transport operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output base directory (else OUT_DIR, else ./runs)")
        p.add_argument("--seed", type=int, default=0, help="RNG seed recorded in outputs")
        p.add_argument(
            "--emit",
            default="both",
            help="json, csv, both, or a directory (implies both)",
        )

    p = sub.add_parser("trees", help="enumerate tree index sets")
    p.add_argument("--count", action="store_true", help="print the count table")
    p.add_argument("--max", type=int, default=8, help="largest order for --count")
    p.add_argument("--n", type=int, help="dump all trees of this order")
    common(p)
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("omega", help="small-divisor coefficients of decorated trees")
    p.add_argument("--delta", help="children counts, comma separated")
    p.add_argument("--v", help="node weights; semicolons separate nodes when d > 1")
    p.add_argument("--omega", default="1", help="frequency entries, comma separated")
    p.add_argument("--sweep", action="store_true", help="stream a box sweep to CSV")
    p.add_argument("--max-n", type=int, default=4, help="sweep order cap")
    p.add_argument("--v-range", type=int, default=1, help="sweep weight box half-width")
    common(p)
    p.set_defaults(func=cmd_omega)

    p = sub.add_parser("lindstedt", help="generator and counterterm coefficients")
    p.add_argument("--v", required=True, help="perturbing symbol JSON file")
    p.add_argument("--omega", default="1", help="frequency entries, comma separated")
    p.add_argument("--gamma", type=float, default=1.0, help="diophantine exponent")
    p.add_argument("--hbar", type=float, default=0.5, help="0 runs the classical hierarchy")
    p.add_argument("--orders", type=int, default=4)
    p.add_argument(
        "--method",
        choices=["recursive", "compositions", "tree"],
        default="recursive",
    )
    common(p)
    p.set_defaults(func=cmd_lindstedt)

    for name, fn, help_text in (
        ("renormalize", cmd_renormalize, "build the renormalized operator and propagator"),
        ("verify", cmd_verify, "conjugation defects, spectra and measures over the grids"),
        ("spectra", cmd_spectra, "interior eigenvalue match table"),
        ("measures", cmd_measures, "eigenfunction pairings against transported averages"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("suite", help="run the acceptance battery")
    p.add_argument("--only", help="comma-separated criterion ids (default: all)")
    common(p)
    p.set_defaults(func=cmd_suite)

    return parser


def _report_error(exc: Exception, code: int, cli_out=None) -> None:
    payload = {
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }
    print(json.dumps(payload), file=sys.stderr)
    out = Path(resolve_out_dir(None, cli_out))
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "error.json", payload)
    except OSError:
        pass  # stderr already carries the report


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cli_out = getattr(args, "out", None)
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        _report_error(exc, 2, cli_out)
        return 2
    except (ValueError, KeyError) as exc:
        _report_error(exc, 2, cli_out)
        return 2
    except NUMERICAL_ERRORS as exc:
        _report_error(exc, 3, cli_out)
        return 3


if __name__ == "__main__":
    sys.exit(main())
