"""Command-line front end.

    iemi-sim simulate <scenario> [-o DIR]
    iemi-sim sweep <scenario> --param PATH --from X --to Y --step DX [-o DIR] [--jobs N]
    iemi-sim fixtures
    iemi-sim validate <scenario>

``<scenario>`` is a YAML file or the name of a shipped fixture (see
``fixtures``). Exit status: 0 success, 1 configuration or I/O error,
2 simulation diverged. Safety events such as shoot-through are results, not
failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from decimal import Decimal
from pathlib import Path

from .engine import run_scenario, run_sweep
from .errors import ConfigError, SimulationDiverged
from .fixtures import FIXTURES, fixture_path
from .output import emit_results
from .scenario import load_scenario
from .units import parse_quantity

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2

# dimension of a sweep value, keyed by the last component of the parameter path
_PARAM_DIMENSIONS = {
    "frequency": "frequency", "resonant_frequency": "frequency", "update_rate": "frequency",
    "sample_rate": "frequency", "pwm_frequency": "frequency",
    "power": "power", "amplitude_current": "current",
    "d_a": "length", "w": "length", "l": "length",
    "duration": "time", "step": "time", "tau_p": "time", "min_dwell": "time", "settling_guard": "time",
    "V_bat": "voltage", "V_out_ref": "voltage", "V_p": "voltage", "V_n": "voltage", "V_th": "voltage",
    "v_min": "voltage", "v_max": "voltage", "logic_level": "voltage", "V_on": "voltage", "V_off": "voltage",
    "R_bat": "resistance", "source_resistance": "resistance", "phi_grid": "angle",
}


def _resolve(scenario: str) -> Path:
    path = Path(scenario)
    if not path.exists() and scenario in FIXTURES:
        return fixture_path(scenario)
    return path


def _sweep_values(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise ConfigError("--step must be > 0")
    if stop < start:
        raise ConfigError("--to must be >= --from")
    # decimal arithmetic so 0.1-style steps land exactly on --to
    a, b, d = Decimal(repr(start)), Decimal(repr(stop)), Decimal(repr(step))
    n = int((b - a) / d + Decimal("1e-9"))
    return [float(a + i * d) for i in range(n + 1)]


def _print_summary(result, out):
    print(f"scenario {result.scenario.name}: {len(result.time)} samples", file=out)
    for w in result.summary["windows"]:
        ch = w["channels"]

        def m(name):
            v = ch[name]["mean"]
            return "n/a" if v is None else f"{v:.6g}"

        print(
            f"  {w['label']:<10} [{w['t0']:.6g}, {w['t1']:.6g}) s  "
            f"v_out={m('v_out_V')} V  v_sense={m('v_sense_V')} V  i_out={m('i_out_A')} A  i_sense={m('i_sense_A')} A",
            file=out,
        )
    print(f"  joule_heat={result.joule_heat:.6g} J", file=out)
    for e in result.events:
        print(f"  event {e.type} at t={e.t:.6g} s {e.detail}", file=out)


def cmd_simulate(args) -> int:
    scenario = load_scenario(_resolve(args.scenario))
    result = run_scenario(scenario)
    csv_path, json_path = emit_results(result, args.output)
    _print_summary(result, sys.stdout)
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def _flatten(summary: dict) -> dict:
    row = {"joule_heat_J": summary["joule_heat_J"]}
    for label, deltas in summary["attack_effect"].items():
        for channel, delta in deltas.items():
            row[f"{label}.delta_{channel}"] = delta
    for w in summary["windows"]:
        for channel, stats in w["channels"].items():
            row[f"{w['label']}.mean_{channel}"] = stats["mean"]
    counts = summary["event_counts"]
    for kind in ("shoot_through", "saturation", "reverse_current"):
        row[f"events.{kind}"] = counts.get(kind, 0)
    return row


def cmd_sweep(args) -> int:
    scenario = load_scenario(_resolve(args.scenario))
    dimension = _PARAM_DIMENSIONS.get(args.param.split(".")[-1], "dimensionless")
    try:
        bounds = [parse_quantity(x, dimension) for x in (args.start, args.stop, args.increment)]
    except ValueError as exc:
        raise ConfigError(f"sweep range: {exc}") from exc
    values = _sweep_values(*bounds)
    results = run_sweep(scenario, args.param, values, jobs=args.jobs)
    out = Path(args.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
        rows = [{"value": v, **_flatten(s)} for v, s in results]
        fields = ["value"] + sorted({k for row in rows for k in row} - {"value"})
        with (out / "sweep.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        doc = {"parameter": args.param, "values": values, "results": [{"value": v, **s} for v, s in results]}
        (out / "sweep.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write results to {out}: {exc}") from exc
    print(f"{len(results)} runs over {args.param}; wrote {out / 'sweep.csv'} and {out / 'sweep.json'}")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    for name, (_, desc) in FIXTURES.items():
        print(f"{name:<14} {desc}\n{'':<14} {fixture_path(name)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = load_scenario(_resolve(args.scenario))
    print(f"{args.scenario}: ok ({scenario.name}, {scenario.n_steps} steps, {len(scenario.attacks)} attack(s))")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iemi-sim", description="IEMI attack simulator for charger control loops")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", default="results")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a scenario over a range of one parameter")
    p.add_argument("scenario")
    p.add_argument("--param", required=True, help="dotted path, e.g. attacks.0.source.power")
    p.add_argument("--from", dest="start", required=True)
    p.add_argument("--to", dest="stop", required=True)
    p.add_argument("--step", dest="increment", required=True)
    p.add_argument("-o", "--output", default="sweep")
    p.add_argument("-j", "--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fixtures", help="list shipped scenarios")
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
