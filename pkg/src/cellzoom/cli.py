"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 invalid configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .centralized import CentralizedError
from .distributed import CLOSED_FORM, EXACT, DistributedError
from .harness import METHODS, HarnessError, metrics, run_simulation, write_metrics, write_trace
from .local_solver import SolverError
from .model import ModelError, SimParams, params_from_config
from .privacy import PrivacyError, budget_rows
from .scenario import K_TWO_DAYS, ScenarioError, random_scenario, read_scenario, table2_scenario, write_scenario

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _positive(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if val < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {val}")
    return val


def _ints(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def _int_list(text: str) -> list[int]:
    try:
        return _ints(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers or ranges like 2-16, got {text!r}")


def load_params(path, n: int | None = None) -> SimParams:
    cfg = {}
    if path is not None:
        try:
            cfg = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}")
        if not isinstance(cfg, dict):
            raise ConfigError(f"config {path} must be a JSON object")
    if n is not None:
        cfg = {**cfg, "n": n}
    try:
        return params_from_config(cfg)
    except (ModelError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}")


def load_scenario(source: str, params: SimParams, seed: int, k_steps: int):
    if source == "table2":
        if params.n != 4:
            raise ConfigError("the table2 scenario has 4 cells; set n = 4")
        return table2_scenario(k_steps)
    if source == "random":
        return random_scenario(params.n, np.random.default_rng(seed), k_steps)
    try:
        sc = read_scenario(source)
    except FileNotFoundError:
        raise ConfigError(f"scenario file {source} not found")
    except ScenarioError as exc:
        raise ConfigError(str(exc))
    if sc.n != params.n:
        raise ConfigError(f"scenario {source} has {sc.n} cells but n = {params.n}")
    return sc


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_rows(rows, header, path=None) -> None:
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)
    finally:
        if path:
            fh.close()


def cmd_simulate(args) -> None:
    params = load_params(args.config, args.n)
    sc = load_scenario(args.scenario, params, args.seed, args.k)
    tr = run_simulation(sc, args.method, args.rho, params, seed=args.seed, solver=args.solver, t_max=args.t_max)
    out = _outdir(args.out)
    write_trace(tr, out / "trace.csv")
    write_metrics(metrics(tr, params), out / "metrics.csv")
    print(f"wrote {out / 'trace.csv'} and {out / 'metrics.csv'}")


def cmd_compare(args) -> None:
    params = load_params(args.config, args.n)
    sc = load_scenario(args.scenario, params, args.seed, args.k)
    rows = experiments.compare(sc, params, args.rhos, args.samples, args.seed, args.methods, args.workers)
    table = [(r.method, r.rho, r.samples, r.ee_mean, r.ee_std, r.degradation, r.charging_rate) for r in rows]
    header = ["method", "rho", "samples", "ee_mean_users_per_kj", "ee_std", "ee_degradation", "charging_rate"]
    _write_rows(table, header, _outdir(args.out) / "compare.csv" if args.out else None)


def cmd_privacy_budget(args) -> None:
    rows = budget_rows(args.n, args.lambda_thresh, args.zeta)
    _write_rows(rows, ["n", "lambda_thresh", "zeta", "method", "max_delta_over_epsilon"], args.out)


def cmd_approx_error(args) -> None:
    params = load_params(args.config, 4 if args.n is None else args.n)
    sc = load_scenario(args.scenario, params, args.seed, args.k)
    lo, hi = args.s_active_range
    grid = np.linspace(lo, hi, args.points) if args.points > 1 else np.array([lo])
    grid = grid[grid > params.s_sleep]
    rows = experiments.approx_sweep(sc, params, grid)
    _write_rows(rows, ["s_active_w", "e1_percent", "e2_percent"], args.out)


def cmd_truncation_error(args) -> None:
    params = load_params(args.config, args.n)
    sc = load_scenario(args.scenario, params, args.seed, args.k)
    rows = experiments.truncation_sweep(sc, params, args.ts, args.t_ref)
    _write_rows(rows, ["t", "truncation_error_percent"], args.out)


def cmd_scenario_gen(args) -> None:
    params = load_params(args.config, args.n)
    sc = load_scenario(args.kind, params, args.seed, args.k)
    write_scenario(sc, args.out)
    print(f"wrote {args.out}")


def _methods(text: str) -> list[str]:
    out = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"methods must be among {', '.join(METHODS)}")
    return out


def _range2(text: str):
    vals = _floats(text)
    if len(vals) != 2 or not vals[0] <= vals[1]:
        raise argparse.ArgumentTypeError("expected LO,HI with LO <= HI")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cellzoom", description="Privacy-masked cell zooming simulations for off-grid small cells.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, scenario=True):
        sp.add_argument("--config", help="JSON parameter file with unit-suffixed keys (e.g. x_max_kj)")
        sp.add_argument("--n", type=int, default=None, help="number of small cells (overrides config)")
        sp.add_argument("--seed", type=int, default=0, help="master random seed")
        sp.add_argument("--k", type=_positive, default=K_TWO_DAYS, help="number of time steps")
        if scenario:
            sp.add_argument("--scenario", default="table2",
                            help="'table2', 'random' or a scenario CSV path (default: table2)")

    sp = sub.add_parser("simulate", help="run one simulation and write trace + metrics CSVs")
    common(sp)
    sp.add_argument("--method", choices=METHODS, default="distributed")
    sp.add_argument("--rho", type=float, default=0.0, help="Laplace masking scale (users)")
    sp.add_argument("--solver", choices=(CLOSED_FORM, EXACT), default=CLOSED_FORM, help="local solver")
    sp.add_argument("--t-max", type=int, default=None, help="rounds per step (overrides config)")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", help="energy efficiency under masking noise for both methods")
    common(sp)
    sp.add_argument("--rhos", type=_floats, default=[0, 2, 4, 6, 8, 10])
    sp.add_argument("--samples", type=_positive, default=500, help="noise samples per rho")
    sp.add_argument("--methods", type=_methods, default=list(METHODS))
    sp.add_argument("--workers", type=_positive, default=1, help="processes for centralized samples")
    sp.add_argument("--out", default=None, help="output directory (default: print to stdout)")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("privacy-budget", help="largest noise scale delta/epsilon per cell count")
    sp.add_argument("--n", type=_int_list, default=[4], help="cell counts, e.g. 4 or 2-16")
    sp.add_argument("--lambda-thresh", type=float, default=30.0, help="sum-noise threshold (users)")
    sp.add_argument("--zeta", type=float, default=0.01, help="tail probability bound")
    sp.add_argument("--out", default=None, help="CSV path (default: stdout)")
    sp.set_defaults(func=cmd_privacy_budget)

    sp = sub.add_parser("approx-error", help="E1/E2 against the enumeration baseline over s_active")
    common(sp)
    sp.add_argument("--s-active-range", type=_range2, default=[0.5, 2.5], help="LO,HI in W")
    sp.add_argument("--points", type=_positive, default=5)
    sp.add_argument("--out", default=None, help="CSV path (default: stdout)")
    sp.set_defaults(func=cmd_approx_error)

    sp = sub.add_parser("truncation-error", help="error of T-round runs against a long reference")
    common(sp)
    sp.add_argument("--ts", type=_int_list, default=[5, 10, 15, 20, 25, 30])
    sp.add_argument("--t-ref", type=int, default=experiments.T_REF)
    sp.add_argument("--out", default=None, help="CSV path (default: stdout)")
    sp.set_defaults(func=cmd_truncation_error)

    sp = sub.add_parser("scenario-gen", help="write a scenario CSV")
    common(sp, scenario=False)
    sp.add_argument("--kind", choices=("table2", "random"), default="random")
    sp.add_argument("--out", required=True, help="CSV path")
    sp.set_defaults(func=cmd_scenario_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelError, ScenarioError, PrivacyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HarnessError, DistributedError, CentralizedError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
