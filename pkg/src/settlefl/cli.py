"""Command-line front end.

Exit codes: 0 success, 1 an assertion or check failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import gzip
import io
import itertools
import json
import sys
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from . import circuits as cc
from . import config as cfgmod
from .chain import GAS_TABLES, Pricing
from .economics import (
    GameParameters,
    check_nash,
    commit_component,
    cost_breakdown,
    crossover_participants,
    crossover_rounds,
    statefl_cheaper,
    baseline_costs,
)
from .errors import ConfigInvalid, SettleError
from .scenario import THREATS, ScenarioReport, run_many, run_scenario, threat_config

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
VERBS = ("run", "sweep", "threats", "circuits", "costs", "nash")

REFERENCE_TOTALS = {"cc": Fraction("2.054"), "cp": Fraction("2.841")}
REFERENCE_COMMIT = {"cc": Fraction("0.005"), "cp": Fraction("0.021")}
# Below roughly N*T = 256 the fixed signature/hash overhead dominates and
# T-doubling ratios drop under 1.8, so the defaults start above that.
DEFAULT_SIZES = ((32, 16), (32, 32), (64, 16), (64, 32))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, help="override scenario seed")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. scenario.N=16 (repeatable)")
    common.add_argument("--parallel", type=int, default=1, metavar="N", help="worker processes")

    p = _Parser(prog="settlefl", description="Reward settlement protocol simulator")
    sub = p.add_subparsers(dest="verb", metavar="{" + ",".join(VERBS) + "}", parser_class=_Parser)
    sub.required = True
    sub.add_parser("run", parents=[common], help="run one scenario")
    sub.add_parser("sweep", parents=[common], help="run a grid of scenarios from [sweep]")
    t = sub.add_parser("threats", parents=[common], help="run the four threat regressions")
    t.add_argument("--only", choices=sorted(THREATS), action="append", help="restrict to a threat")
    c = sub.add_parser("circuits", parents=[common], help="constraint-count table")
    c.add_argument("--sizes", help="comma list of NxT, e.g. 16x8,64x32")
    sub.add_parser("costs", parents=[common], help="cost breakdown and StateFL crossover grid")
    n = sub.add_parser("nash", parents=[common], help="incentive game utilities and verdict")
    n.add_argument("--sweep", action="store_true", help="map the P_slash_agg / C_gas boundary")
    return p


# ---------------------------------------------------------------------------
# output helpers


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def write_replay(path: Path, reports: list[ScenarioReport]) -> None:
    """gzip'd JSON lines: one header per scenario, then commitments and instances."""
    lines = []
    for rep in reports:
        lines.append({"type": "scenario", "name": rep.name, "seed": rep.seed, "schema": rep.schema})
        for c in rep.replay.get("commitments", []):
            lines.append({"type": "commitment", "scenario": rep.name, **c})
        for inst in rep.replay.get("instances", []):
            lines.append({"type": "instance", "scenario": rep.name, "kind": inst["kind"], "instance": json.loads(inst["instance"])})
    raw = "".join(json.dumps(x, sort_keys=True) + "\n" for x in lines).encode()
    with open(path, "wb") as fh:
        with gzip.GzipFile(fileobj=fh, mode="wb", mtime=0, filename="") as gz:
            gz.write(raw)


def read_replay(path: Path) -> list[dict]:
    with gzip.open(path, "rt") as fh:
        return [json.loads(line) for line in fh]


def gas_rows(reports: list[ScenarioReport], pricing: Pricing):
    for rep in reports:
        calls = rep.tx_summary["by_function"]
        for fn, gas in rep.gas_by_function.items():
            meth, usd = pricing.gas_to_money(gas)
            yield [rep.name, fn, calls.get(fn, 0), gas, f"{float(meth):.6f}", f"{float(usd):.4f}"]


GAS_HEADER = ["scenario", "function", "calls", "gas", "mETH", "USD"]


def _load(args) -> dict:
    data = cfgmod.load_file(args.config) if args.config else {}
    for s in args.set:
        data = cfgmod.apply_override(data, s)
    return data


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit_reports(out: Path, reports: list[ScenarioReport], pricing: Pricing, single: bool) -> None:
    body = reports[0].to_json_dict() if single else {
        "schema": reports[0].schema if reports else "",
        "scenarios": [r.to_json_dict() for r in reports],
    }
    write_json(out / "report.json", body)
    write_csv(out / "gas.csv", GAS_HEADER, list(gas_rows(reports, pricing)))
    write_replay(out / "replay.jsonl.gz", reports)


def _line(rep: ScenarioReport) -> str:
    status = "PASS" if rep.passed else "FAIL"
    extra = "" if rep.passed else " :: " + "; ".join(rep.violations)
    return f"[{status}] {rep.name}: terminal={rep.terminal_state} txs={rep.tx_summary['count']}{extra}"


# ---------------------------------------------------------------------------
# verbs


def cmd_run(args) -> int:
    data = _load(args)
    cfg = cfgmod.scenario_config(data, args.seed)
    rep = run_scenario(cfg)
    _emit_reports(_outdir(args), [rep], cfg.pricing, single=True)
    print(_line(rep))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    data = _load(args)
    axes = cfgmod.sweep_axes(data)
    if not axes:
        raise ConfigInvalid("sweep needs a [sweep] table of section.key = [values]")
    configs, points = [], []
    for combo in itertools.product(*(a.values for a in axes)):
        d = {k: v for k, v in data.items() if k != "sweep"}
        for axis, value in zip(axes, combo):
            d = cfgmod.apply_override(d, f"{axis.key}={json.dumps(value)}")
        cfg = cfgmod.scenario_config(d, args.seed)
        label = ",".join(f"{a.key}={v}" for a, v in zip(axes, combo))
        configs.append(replace(cfg, name=f"{cfg.name}[{label}]"))
        points.append(combo)
    reports = run_many(configs, args.parallel)
    rows = []
    for combo, cfg, rep in zip(points, configs, reports):
        commits = rep.tx_summary["by_function"].get("commit", 0)
        per_round = rep.gas_by_function.get("commit", 0) // commits if commits else 0
        rows.append([
            *combo, rep.terminal_state, int(rep.passed), sum(rep.gas_by_function.values()),
            per_round, rep.tx_summary["count"], rep.friction["value"],
        ])
    out = _outdir(args)
    write_csv(out / "sweep.csv", [a.key for a in axes] + [
        "terminal_state", "passed", "total_gas", "commit_gas_per_round", "tx_count", "friction",
    ], rows)
    _emit_reports(out, reports, configs[0].pricing, single=False)
    for rep in reports:
        print(_line(rep))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_threats(args) -> int:
    data = _load(args)
    base = cfgmod.scenario_config(data, args.seed)
    chosen = args.only or sorted(THREATS, key=THREATS.get)
    activation = base.aggregator.activation_round
    configs = [threat_config(t, base, activation) for t in chosen]
    t0 = time.perf_counter()
    reports = run_many(configs, args.parallel)
    _emit_reports(_outdir(args), reports, base.pricing, single=False)
    for rep in reports:
        print(_line(rep))
    print(f"{len(reports)} threat scenarios in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def parse_sizes(text: str | None, data: dict) -> list[tuple[int, int]]:
    if text:
        try:
            return [tuple(int(x) for x in item.lower().split("x")) for item in text.split(",")]
        except ValueError as exc:
            raise ConfigInvalid(f"bad --sizes {text!r}; expected e.g. 16x8,64x32") from exc
    sizes = data.get("circuits", {}).get("sizes")
    if sizes is None:
        return list(DEFAULT_SIZES)
    try:
        return [(int(n), int(t)) for n, t in sizes]
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid("circuits.sizes must be a list of [N, T] pairs") from exc


def circuit_table(sizes, hash_config, batch: int = 8) -> list[dict]:
    rows = []
    for N, T in sizes:
        params = cc.CircuitParams(N, T, min(batch, N), hash_config)
        counts = {cid: cc.build(cid, params).constraint_count() for cid in cc.BUILDERS}
        rows.append({
            "N": N, "T": T, "B": params.B, **counts,
            "transition_over_challenge": counts[cc.TRANSITION] / counts[cc.CHALLENGE],
            "distribution_over_challenge": counts[cc.DISTRIBUTION] / counts[cc.CHALLENGE],
        })
    return rows


def fit_linear(rows: list[dict], key: str) -> tuple[float, float]:
    """Least-squares count ~ a + b * (N * T)."""
    xs = [r["N"] * r["T"] for r in rows]
    ys = [r[key] for r in rows]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    b = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx if sxx else 0.0
    return my - b * mx, b


def circuit_flags(rows: list[dict]) -> list[str]:
    flags = []
    for r in rows:
        tag = f"N={r['N']},T={r['T']}"
        if not 1.8 <= r["transition_over_challenge"] <= 2.2:
            flags.append(f"{tag}: transition/challenge {r['transition_over_challenge']:.3f} outside [1.8, 2.2]")
        if abs(r["distribution_over_challenge"] - 1) > 0.15:
            flags.append(f"{tag}: distribution/challenge {r['distribution_over_challenge']:.3f} off by more than 15%")
    by = {(r["N"], r["T"]): r for r in rows}
    for (N, T), r in by.items():
        nxt = by.get((N, 2 * T))
        if nxt:
            for cid in cc.BUILDERS:
                ratio = nxt[cid] / r[cid]
                if not 1.8 <= ratio <= 2.2:
                    flags.append(f"N={N}: {cid} T {T}->{2 * T} ratio {ratio:.3f} outside [1.8, 2.2]")
    return flags


def t_doubling(rows: list[dict]) -> list[list]:
    by = {(r["N"], r["T"]): r for r in rows}
    out = []
    for (N, T), r in sorted(by.items()):
        nxt = by.get((N, 2 * T))
        if nxt:
            out.append([N, T, 2 * T] + [f"{nxt[c] / r[c]:.4f}" for c in cc.BUILDERS])
    return out


def cmd_circuits(args) -> int:
    data = _load(args)
    sizes = parse_sizes(args.sizes, data)
    batch = int(data.get("circuits", {}).get("batch", 8))
    rows = circuit_table(sizes, cfgmod.hash_config(data), batch)
    out = _outdir(args)
    header = ["N", "T", "B", *cc.BUILDERS, "transition_over_challenge", "distribution_over_challenge"]
    write_csv(out / "circuits.csv", header, [
        [r[h] if not isinstance(r[h], float) else f"{r[h]:.4f}" for h in header] for r in rows
    ])
    doubling = t_doubling(rows)
    write_csv(out / "circuits_doubling.csv", ["N", "T", "T2", *cc.BUILDERS], doubling)
    flags = circuit_flags(rows)
    fits = {cid: fit_linear(rows, cid) for cid in cc.BUILDERS}
    write_json(out / "circuits.json", {"rows": rows, "doubling": doubling, "fit_a_plus_b_NT": fits, "flags": flags})
    print(f"{'N':>4} {'T':>4} " + " ".join(f"{c:>13}" for c in cc.BUILDERS) + "  tr/ch  di/ch")
    for r in rows:
        print(f"{r['N']:>4} {r['T']:>4} " + " ".join(f"{r[c]:>13}" for c in cc.BUILDERS)
              + f"  {r['transition_over_challenge']:.3f}  {r['distribution_over_challenge']:.3f}")
    for cid, (a, b) in fits.items():
        print(f"fit {cid}: {a:.0f} + {b:.2f}*N*T")
    for f in flags:
        print(f"FLAG {f}")
    return EXIT_OK if not flags else EXIT_FAIL


def reference_costs(data: dict, N: int = 800, T: int = 50, B: int = 50) -> dict:
    pricing = cfgmod.pricing(data)
    out = {}
    for table_name, factory in sorted(GAS_TABLES.items()):
        gas = factory() if table_name != data.get("ledger", {}).get("gas_table", "default") else cfgmod.gas_table(data)
        for variant in ("cc", "cp"):
            lines = cost_breakdown(variant, N, T, B, gas)
            total_gas = sum(l.gas for l in lines)
            meth, usd = pricing.gas_to_money(total_gas)
            commit = next(l for l in lines if l.operation == "commit")
            per_call, _ = pricing.gas_to_money(commit.gas_per_call)
            out[f"{table_name}/{variant}"] = {
                "lines": [
                    {"operation": l.operation, "calls": l.calls, "gas_per_call": l.gas_per_call, "gas": l.gas,
                     "mETH": float(pricing.gas_to_money(l.gas)[0]), "USD": float(pricing.gas_to_money(l.gas)[1])}
                    for l in lines
                ],
                "total_gas": total_gas,
                "total_mETH": meth,
                "total_USD": usd,
                "commit_per_call_mETH": per_call,
                "total_rel_err": (meth - REFERENCE_TOTALS[variant]) / REFERENCE_TOTALS[variant],
                "commit_rel_err": (per_call - REFERENCE_COMMIT[variant]) / REFERENCE_COMMIT[variant],
            }
    return out


def crossover_grid(gas, Ns=(10, 25, 50, 100, 200, 400, 800), Ts=(10, 50, 100, 200, 400, 800)) -> list[list]:
    rows = []
    for N in Ns:
        for T in Ts:
            rows.append([
                N, T, baseline_costs("statefl", N, T, gas), commit_component("settlefl_cc", T, gas),
                commit_component("settlefl_cp", T, gas), baseline_costs("settlefl_cc", N, T, gas),
                baseline_costs("bcfl", N, T, gas), int(statefl_cheaper(N, T, gas)),
            ])
    return rows


def cmd_costs(args) -> int:
    data = _load(args)
    scen = data.get("scenario", {})
    N, T, B = int(scen.get("N", 800)), int(scen.get("T", 50)), int(scen.get("B", 50))
    result = reference_costs(data, N, T, B)
    out = _outdir(args)
    rows = []
    for key, r in result.items():
        for l in r["lines"]:
            rows.append([key, l["operation"], l["calls"], l["gas_per_call"], l["gas"], f"{l['mETH']:.6f}", f"{l['USD']:.4f}"])
        rows.append([key, "total", "", "", r["total_gas"], f"{float(r['total_mETH']):.6f}", f"{float(r['total_USD']):.4f}"])
    write_csv(out / "costs.csv", ["table/variant", "operation", "calls", "gas_per_call", "gas", "mETH", "USD"], rows)
    gas = cfgmod.gas_table(data)
    grid = crossover_grid(gas)
    write_csv(out / "crossover.csv", [
        "N", "T", "statefl_gas", "cc_commit_gas", "cp_commit_gas", "cc_total_gas", "bcfl_gas", "statefl_cheaper",
    ], grid)
    summary = {
        k: {kk: (str(vv) if isinstance(vv, Fraction) else vv) for kk, vv in v.items() if kk != "lines"}
        for k, v in result.items()
    }
    summary["crossover"] = {
        "N_star_at_T200": str(crossover_participants(200, gas)),
        "T_star_at_N25": str(crossover_rounds(25, gas)),
    }
    write_json(out / "costs.json", summary)
    for key, r in result.items():
        print(f"{key:>12}: total {float(r['total_mETH']):.4f} mETH (${float(r['total_USD']):.2f}, "
              f"{float(r['total_rel_err']) * 100:+.2f}%)  commit/call {float(r['commit_per_call_mETH']):.6f} mETH "
              f"({float(r['commit_rel_err']) * 100:+.2f}%)")
    print(f"StateFL/CC crossover: N*={float(crossover_participants(200, gas)):.1f} at T=200, "
          f"T*={float(crossover_rounds(25, gas)):.1f} at N=25")
    return EXIT_OK


def cmd_nash(args) -> int:
    data = _load(args)
    params = cfgmod.game_parameters(data)
    rep = check_nash(params)
    out = _outdir(args)
    write_json(out / "nash.json", {"params": params.to_dict(), **rep.to_dict()})
    for player, row in rep.table.items():
        cells = "  ".join(f"{s}={u}" for s, u in row.items())
        print(f"{player:>12}: {cells}")
    print(f"equilibrium (strict)={rep.equilibrium} weak={rep.weak_equilibrium} "
          f"P_slash_agg > C_gas: {rep.condition}")
    for d in rep.violations:
        print(f"  deviation {d.player}->{d.strategy}: {d.utility} >= {d.honest_utility}")
    if args.sweep:
        rows = []
        c_gas = params.C_gas
        hi = max(4 * c_gas, Fraction(4))
        steps = 32
        for i in range(steps + 1):
            ps = hi * i / steps
            r = check_nash(replace(params, P_slash_agg=ps))
            rows.append([str(ps), str(c_gas), int(r.equilibrium), int(r.weak_equilibrium), int(ps > c_gas)])
        write_csv(out / "nash_sweep.csv", ["P_slash_agg", "C_gas", "equilibrium", "weak_equilibrium", "condition"], rows)
        flips = [(rows[i - 1][0], rows[i][0]) for i in range(1, len(rows)) if rows[i][2] != rows[i - 1][2]]
        for lo, hi_ in flips:
            print(f"sweep: equilibrium flips between P_slash_agg={lo} and {hi_} (C_gas={c_gas})")
        if len(flips) != 1 or Fraction(flips[0][0]) != c_gas:
            print("sweep: boundary does not sit at P_slash_agg = C_gas")
            return EXIT_FAIL
    return EXIT_OK if rep.equilibrium else EXIT_FAIL


COMMANDS = {
    "run": cmd_run, "sweep": cmd_sweep, "threats": cmd_threats,
    "circuits": cmd_circuits, "costs": cmd_costs, "nash": cmd_nash,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.parallel < 1:
            raise UsageError("--parallel must be at least 1")
        return COMMANDS[args.verb](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SettleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main_entry() -> None:
    sys.exit(main())
