"""Command-line entry point: ``simfair sweep|converge|verify``.

Precedence for every setting: built-in default < ``--config`` file < explicit
flag. The config file is JSON with optional ``scenario``, ``sweep``, ``gda``
and ``gd`` tables; powers in it follow the flags (``P_T_dBm``, ``noise_dBm``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiments import (SWEEP_VARS, SweepSpec, dbm_to_watt, run_convergence, run_sweep,
                          trace_is_monotone)
from .geometry import ScenarioConfig
from .icsi import GdaParams
from .scsi import GdParams
from .verification import SUITES, run_all

# flag name -> ScenarioConfig field
SCENARIO_FLAGS = {
    "M": "elements_per_layer",
    "L": "num_layers",
    "K": "num_users",
    "bits": "quant_bits",
    "freq": "carrier_frequency",
    "d_bs": "bs_ue_distance",
    "d_ue": "ue_spacing",
}


def _values(text: str) -> list:
    out = []
    for tok in text.split(","):
        num = float(tok)
        out.append(int(num) if num.is_integer() and "." not in tok else num)
    return out


def _add_scenario_flags(p):
    g = p.add_argument_group("scenario")
    g.add_argument("--M", type=int, help="elements per layer")
    g.add_argument("--L", type=int, help="number of layers")
    g.add_argument("--K", type=int, help="users (= BS antennas)")
    g.add_argument("--bits", type=int, help="phase resolution in bits")
    g.add_argument("--P_T_dBm", type=float, help="transmit power budget in dBm")
    g.add_argument("--noise_dBm", type=float, help="noise power in dBm")
    g.add_argument("--freq", type=float, help="carrier frequency in Hz")
    g.add_argument("--d_bs", type=float, help="BS-UE distance in m")
    g.add_argument("--d_ue", type=float, help="UE spacing in m")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--max-iter", type=int, dest="max_iter", help="inner iteration cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simfair", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    sw = sub.add_parser("sweep", help="run a parameter sweep and write CSV")
    sw.add_argument("--mode", help="icsi, scsi or a benchmark scheme")
    sw.add_argument("--sweep-var", dest="sweep_var", choices=SWEEP_VARS)
    sw.add_argument("--values", type=_values, help="comma-separated sweep values")
    sw.add_argument("--trials", type=int)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--output", dest="output_path", help="CSV path")
    sw.add_argument("--json", dest="json_path", help="optional JSON mirror path")
    sw.add_argument("--workers", type=int)
    _add_scenario_flags(sw)

    cv = sub.add_parser("converge", help="write an outer-iteration objective trace")
    cv.add_argument("--mode", choices=("icsi", "scsi"))
    cv.add_argument("--seed", type=int)
    cv.add_argument("--output", dest="output_path", help="trace CSV path")
    cv.add_argument("--inner", dest="inner_path", help="per-GDA-step CSV path (icsi)")
    _add_scenario_flags(cv)

    vf = sub.add_parser("verify", help="run the oracle suites")
    vf.add_argument("suites", nargs="*", help=f"subset of {', '.join(SUITES)} (default: all)")
    return parser


def _merged(args, file_cfg: dict) -> dict:
    """Flat settings: config-file tables first, explicit flags on top."""
    merged = {}
    for table in ("sweep", "scenario"):
        merged.update(file_cfg.get(table, {}))
    for key, val in vars(args).items():
        if val is not None:
            merged[key] = val
    return merged


def scenario_from(settings: dict) -> ScenarioConfig:
    changes = {}
    for key, val in settings.items():
        if key in SCENARIO_FLAGS:
            changes[SCENARIO_FLAGS[key]] = val
        elif key in ScenarioConfig.__dataclass_fields__ and key != "power_budget":
            changes[key] = val
    if "K" in settings:
        changes["num_bs_antennas"] = settings["K"]
    if "P_T_dBm" in settings:
        changes["power_budget"] = dbm_to_watt(settings["P_T_dBm"])
    if "noise_dBm" in settings:
        changes["noise_power"] = dbm_to_watt(settings["noise_dBm"])
    return ScenarioConfig().with_updates(**changes)


def _params(file_cfg: dict, settings: dict):
    gda = dict(file_cfg.get("gda", {}))
    gd = dict(file_cfg.get("gd", {}))
    if "max_iter" in settings:
        gda["max_iter"] = gd["max_iter"] = settings["max_iter"]
    return GdaParams(**gda), GdParams(**gd)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.verb == "verify":
        bad = [n for n in args.suites if n not in SUITES]
        if bad:
            print(f"unknown suites: {bad}", file=sys.stderr)
            return 2
        results = run_all(args.suites)
        for r in results:
            print(r.line())
        return 0 if all(r.passed for r in results) else 1

    file_cfg = json.loads(Path(args.config).read_text()) if args.config else {}
    settings = _merged(args, file_cfg)
    try:
        config = scenario_from(settings)
        gda, gd = _params(file_cfg, settings)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2

    if args.verb == "sweep":
        missing = [k for k in ("mode", "sweep_var", "values") if k not in settings]
        if missing:
            print(f"missing settings: {', '.join(missing)}", file=sys.stderr)
            return 2
        try:
            spec = SweepSpec(mode=settings["mode"], sweep_var=settings["sweep_var"],
                             values=list(settings["values"]), trials=settings.get("trials", 1),
                             seed=settings.get("seed", 0), output_path=settings.get("output_path"),
                             config=config, gda=gda, gd=gd, json_path=settings.get("json_path"),
                             workers=settings.get("workers", 1))
        except ValueError as exc:
            print(exc, file=sys.stderr)
            return 2
        rows = run_sweep(spec)
        for row in rows:
            if row["trial"] == "mean":
                print(f"{spec.sweep_var}={row['value']}: mean min-rate {row['min_rate']:.4f} "
                      f"+/- {row['min_rate_ci95']:.4f}")
        return 0

    mode = settings.get("mode", "icsi")
    trace = run_convergence(mode, config, settings.get("seed", 0), settings.get("output_path"),
                            gda, gd, settings.get("inner_path"))
    ok = trace_is_monotone(trace, increasing=(mode == "icsi"))
    print(f"{mode}: {len(trace)} outer iterations, final objective {trace[-1]:.6g}, "
          f"monotone {'yes' if ok else 'no'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
