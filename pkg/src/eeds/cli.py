"""Command-line entry point: ``run``, ``compare``, ``validate-fis``, ``emit-rulebase``.

Exit codes::

    0  success
    2  bad command-line usage
    3  config or rule-base file not found
    4  config / rule-base document malformed (not JSON, wrong types)
    5  unknown config key
    6  config value out of range
    7  output directory not writable
    8  rule base failed validation
    70 internal error
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import fuzzy
from .energy import RadioParams
from .protocols import PROTOCOLS, Eeds, F3n
from .sim import (
    ComparisonTable,
    ConfigError,
    ProtocolConfig,
    RunResult,
    SimConfig,
    compare_runs,
    metrics_csv,
    run_simulation,
    sweep_configs,
)

log = logging.getLogger("eeds")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_SCHEMA = 4
EXIT_UNKNOWN_KEY = 5
EXIT_RANGE = 6
EXIT_IO = 7
EXIT_INVALID_FIS = 8
EXIT_INTERNAL = 70

PLAIN_ENV = "EEDS_PLAIN"

# key -> (accepted JSON types, required)
SCHEMA: dict[str, tuple[tuple[type, ...], bool]] = {
    "protocol": ((str,), False),
    "protocols": ((list,), False),
    "nodes": ((int,), True),
    "area": ((list,), True),
    "energy": ((int, float), False),
    "rounds": ((int,), False),
    "seed": ((int,), False),
    "radio_range": ((int, float), False),
    "bs_pos": ((list,), False),
    "e_elec": ((int, float), False),
    "eps_amp": ((int, float), False),
    "e_da": ((int, float), False),
    "packet_bits": ((int,), False),
    "p": ((int, float), False),
    "ch_fraction": ((int, float), False),
    "threshold": ((int, float), False),
    "window": ((int,), False),
}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunSpec:
    mode: str
    config_path: Path | None = None
    output_dir: Path | None = None
    overrides: list[str] = field(default_factory=list)


def _parse_override(item: str) -> tuple[str, Any]:
    if "=" not in item:
        raise CliError(EXIT_USAGE, f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _check_types(doc: dict) -> None:
    for key, value in doc.items():
        if key not in SCHEMA:
            raise CliError(EXIT_UNKNOWN_KEY, f"unknown config key {key!r}")
        types, _ = SCHEMA[key]
        if isinstance(value, bool) or not isinstance(value, types):
            raise CliError(EXIT_SCHEMA, f"{key}: expected {'/'.join(t.__name__ for t in types)}, got {value!r}")
    for key, (_, required) in SCHEMA.items():
        if required and key not in doc:
            raise CliError(EXIT_SCHEMA, f"{key}: required key missing")
    for key in ("area", "bs_pos"):
        if key in doc:
            v = doc[key]
            if len(v) != 2 or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
                raise CliError(EXIT_SCHEMA, f"{key}: expected two numbers, got {v!r}")
    if "protocols" in doc and not all(isinstance(p, str) for p in doc["protocols"]):
        raise CliError(EXIT_SCHEMA, "protocols: expected a list of names")


def load_document(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise CliError(EXIT_MISSING, f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_SCHEMA, f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise CliError(EXIT_SCHEMA, f"{path}: top level must be an object")
    return doc


def config_from_document(doc: dict, protocol: str | None = None) -> SimConfig:
    """Build a validated :class:`SimConfig` from a type-checked document."""
    kind = protocol or doc.get("protocol")
    if kind is None:
        raise CliError(EXIT_SCHEMA, "protocol: required key missing")
    if kind not in PROTOCOLS:
        raise CliError(EXIT_RANGE, f"protocol: unknown protocol {kind!r}, expected one of {', '.join(PROTOCOLS)}")
    try:
        defaults = RadioParams()
        radio = RadioParams(
            e_elec=float(doc.get("e_elec", defaults.e_elec)),
            eps_amp=float(doc.get("eps_amp", defaults.eps_amp)),
            e_da=float(doc.get("e_da", defaults.e_da)),
            packet_bits=int(doc.get("packet_bits", defaults.packet_bits)),
        )
    except ValueError as exc:
        raise CliError(EXIT_RANGE, str(exc)) from None
    pdef = ProtocolConfig()
    proto = ProtocolConfig(
        kind=kind,
        p=float(doc.get("p", pdef.p)),
        ch_fraction=float(doc.get("ch_fraction", pdef.ch_fraction)),
        threshold=float(doc.get("threshold", pdef.threshold)),
    )
    try:
        cfg = SimConfig(
            node_count=doc["nodes"],
            area=tuple(doc["area"]),
            initial_energy=float(doc.get("energy", 0.1)),
            rounds=doc.get("rounds", 500),
            protocol=proto,
            radio=radio,
            radio_range=doc.get("radio_range"),
            bs_pos=doc.get("bs_pos"),
            seed=doc.get("seed", 0),
            window=doc.get("window", SimConfig.window),
        )
        proto.build()
    except ConfigError as exc:
        raise CliError(EXIT_RANGE, str(exc)) from None
    except ValueError as exc:
        raise CliError(EXIT_RANGE, f"{kind}: {exc}") from None
    return cfg


def parse_config(path, overrides: Sequence[str] = (), seeds: int | None = None):
    """Resolve a config file plus ``key=value`` overrides.

    Returns one :class:`SimConfig`, or with ``seeds`` the full list of configs
    for a comparison: every protocol in ``protocols`` (all three when the
    key is absent) times ``seeds`` consecutive seeds starting at ``seed``.
    """
    doc = load_document(path)
    for item in overrides:
        key, value = _parse_override(item)
        doc[key] = value
    _check_types(doc)
    if seeds is None:
        return config_from_document(doc)
    if seeds < 1:
        raise CliError(EXIT_RANGE, f"seeds: must be >= 1, got {seeds}")
    kinds = doc.get("protocols") or list(PROTOCOLS)
    base = config_from_document(doc, kinds[0])
    for k in kinds:
        config_from_document(doc, k)
    return sweep_configs(base, kinds, range(base.seed, base.seed + seeds))


def resolved_document(cfg: SimConfig, protocols: Sequence[str] | None = None) -> dict:
    doc = {
        "protocol": cfg.protocol.kind,
        "nodes": cfg.node_count,
        "area": list(cfg.area),
        "energy": cfg.initial_energy,
        "rounds": cfg.rounds,
        "seed": cfg.seed,
        "radio_range": cfg.radio_range,
        "bs_pos": list(cfg.bs_pos),
        "e_elec": cfg.radio.e_elec,
        "eps_amp": cfg.radio.eps_amp,
        "e_da": cfg.radio.e_da,
        "packet_bits": cfg.radio.packet_bits,
        "p": cfg.protocol.p,
        "ch_fraction": cfg.protocol.ch_fraction,
        "threshold": cfg.protocol.threshold,
        "window": cfg.window,
    }
    if protocols is not None:
        doc.pop("protocol")
        doc["protocols"] = list(protocols)
    return doc


def _rulebases(kind: str, cfg: SimConfig | None = None):
    proto = (cfg.protocol if cfg else ProtocolConfig(kind=kind)).build()
    return proto.rulebases() if isinstance(proto, (Eeds, F3n)) else None


def _prepare_dir(out) -> Path:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write to {out}: {exc.strerror or exc}") from None
    return out


def _write(path: Path, text: str) -> Path:
    try:
        path.write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def emit_artifacts(results: RunResult | ComparisonTable, output_dir) -> list[Path]:
    """Write metrics CSVs, the resolved config and rule bases (and the
    comparison tables for a sweep). Returns the files written."""
    out = _prepare_dir(output_dir)
    written = []
    if isinstance(results, RunResult):
        cfg = results.config
        written.append(_write(out / f"metrics_{cfg.label}.csv", metrics_csv(results.rows)))
        written.append(_write(out / f"resolved_config_{cfg.label}.json",
                              json.dumps(resolved_document(cfg), indent=2) + "\n"))
        bases = _rulebases(cfg.protocol.kind, cfg)
        if bases:
            path = out / f"rulebase_{cfg.protocol.kind}.json"
            fuzzy.dump_fis(bases, path)
            written.append(path)
        return written

    table = results
    for res in table.results:
        written.append(_write(out / f"metrics_{res.config.label}.csv", metrics_csv(res.rows)))
    written.append(_write(out / "comparison.csv", table.to_csv()))
    written.append(_write(out / "comparison.txt", table.to_text()))
    first = table.results[0].config
    written.append(_write(out / "resolved_config.json",
                          json.dumps(resolved_document(first, list(table.rows)), indent=2) + "\n"))
    return written


# --- commands ---------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = parse_config(args.config, args.set or ())
    log.info("running %s: %d nodes, %gx%g m, %d rounds, seed %d",
             cfg.protocol.kind, cfg.node_count, *cfg.area, cfg.rounds, cfg.seed)
    res = run_simulation(cfg)
    for path in emit_artifacts(res, args.out):
        print(path)
    lt = res.lifetime
    log.info("FND %s  HND %s  LND %s", lt.fnd, lt.hnd, lt.lnd)
    return EXIT_OK


def cmd_compare(args) -> int:
    configs = parse_config(args.config, args.set or (), seeds=args.seeds)
    table = compare_runs(configs, workers=args.workers)
    emit_artifacts(table, args.out)
    sys.stdout.write(table.to_text())
    return EXIT_OK


def cmd_validate(args) -> int:
    path = Path(args.rulebase)
    if not path.is_file():
        raise CliError(EXIT_MISSING, f"rule-base file not found: {path}")
    try:
        systems = fuzzy.load_fis(path)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_SCHEMA, f"{path}: not valid JSON ({exc})") from None
    except fuzzy.FuzzyConfigError as exc:
        raise CliError(EXIT_SCHEMA, f"{path}: {exc}") from None
    ok = True
    for name, fis in systems.items():
        report = fuzzy.validate_rulebase(fis)
        print(f"[{name}] {'OK' if report.ok else 'INVALID'}")
        print(report.summary())
        ok &= report.ok
    return EXIT_OK if ok else EXIT_INVALID_FIS


def cmd_emit(args) -> int:
    out = _prepare_dir(args.out)
    path = out / f"rulebase_{args.protocol}.json"
    try:
        fuzzy.dump_fis(_rulebases(args.protocol), path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from None
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eeds-sim",
        description="Round-based WSN energy simulator comparing EEDS, F3N and LEACH cluster-head election.",
        epilog=f"Set {PLAIN_ENV}=1 (or NO_COLOR) for uncoloured diagnostics. "
               "Exit codes: 0 ok, 2 usage, 3 missing file, 4 malformed document, "
               "5 unknown key, 6 value out of range, 7 I/O error, 8 invalid rule base, 70 internal error.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one configuration")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run every protocol over a seed range and tabulate lifetimes")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, default=10, help="number of consecutive seeds (default 10)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--workers", type=int, default=1, help="parallel simulation processes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate-fis", help="check a rule-base JSON file for grid completeness")
    p.add_argument("--rulebase", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("emit-rulebase", help="write the generated controller rule bases as JSON")
    p.add_argument("--protocol", required=True, choices=["eeds", "f3n"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_emit)
    return parser


def _use_color() -> bool:
    if os.environ.get(PLAIN_ENV) or os.environ.get("NO_COLOR"):
        return False
    return sys.stderr.isatty()


def _error(message: str) -> None:
    prefix = "\033[31merror:\033[0m" if _use_color() else "error:"
    print(f"{prefix} {message}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        _error(str(exc))
        return exc.code
    except Exception as exc:  # noqa: BLE001
        _error(f"internal error: {exc!r}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
