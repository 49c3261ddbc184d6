"""Command-line batch runner: ``ospfock run | emit-matrix | list-suites``."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .fock import rho_full, triplet_text
from .reports import csv_text, dumps_record, jsonl
from .suites import (
    DEFAULT_SAMPLES,
    DEFAULT_TOLERANCES,
    NEEDS_INTERIOR,
    SUITES,
    SuiteParams,
    generator_table,
    run_suites,
)
from .superalgebra import TruncatedSpace

OUTPUT_ENV = "OSPFOCK_OUTPUT_DIR"
FORMATS = ("csv", "jsonl")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

SUITE_DESCRIPTIONS = {
    "algebra": "graded Jacobi, cocycle identities, closure and norm inequality",
    "counterexamples": "singular function h, moments, Banach norms, divergence witnesses",
    "oscillator": "Fock representation symmetry, square relation, cocycle defect, conjugacy",
    "restriction": "even-part restriction re-checked with identical operators",
    "series": "orbit series vs matrix exponential, BCH order, interpolation bound",
}


class ConfigError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code

    def record(self) -> dict:
        return {"error": self.code, "message": str(self)}


@dataclass
class RunConfig:
    m_f: int = 2
    m_b: int = 2
    D: int = 8
    seed: int | None = 42
    suites: list[str] = field(default_factory=lambda: list(SUITES))
    tolerances: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)
    output_dir: str = "ospfock-out"
    formats: list[str] = field(default_factory=lambda: list(FORMATS))

    def canonical(self) -> dict:
        """Everything that affects results; the output location does not."""
        return {
            "truncation": {"m_f": self.m_f, "m_b": self.m_b, "D": self.D},
            "seed": self.seed,
            "suites": sorted(self.suites),
            "tolerances": {**DEFAULT_TOLERANCES, **self.tolerances},
            "samples": {**DEFAULT_SAMPLES, **self.samples},
            "formats": sorted(self.formats),
        }

    def hash(self) -> str:
        return hashlib.sha256(dumps_record(self.canonical()).encode()).hexdigest()

    def params(self) -> SuiteParams:
        return SuiteParams(
            self.m_f,
            self.m_b,
            self.D,
            self.seed,
            {**DEFAULT_TOLERANCES, **self.tolerances},
            {**DEFAULT_SAMPLES, **self.samples},
        )


_KEYS = {"truncation", "seed", "suites", "tolerances", "samples", "output_dir", "formats"}


def _int(value, name, lo):
    if isinstance(value, bool) or not isinstance(value, int) or value < lo:
        raise ConfigError("invalid_value", f"{name} must be an integer >= {lo}, got {value!r}")
    return value


def parse_config(data: dict, *, default_seed: bool = False) -> RunConfig:
    """Build a RunConfig from decoded JSON; the seed is only defaulted on request."""
    if not isinstance(data, dict):
        raise ConfigError("invalid_config", "config must be a JSON object")
    extra = sorted(set(data) - _KEYS)
    if extra:
        raise ConfigError("unknown_key", f"unknown config keys: {extra}")
    cfg = RunConfig()
    trunc = data.get("truncation", {})
    if not isinstance(trunc, dict) or set(trunc) - {"m_f", "m_b", "D"}:
        raise ConfigError("invalid_value", "truncation must be an object with keys m_f, m_b, D")
    cfg.m_f = trunc.get("m_f", cfg.m_f)
    cfg.m_b = trunc.get("m_b", cfg.m_b)
    cfg.D = trunc.get("D", cfg.D)
    cfg.seed = data.get("seed", cfg.seed if default_seed else None)
    if cfg.seed is not None:
        cfg.seed = _int(cfg.seed, "seed", 0)
    if "suites" in data:
        cfg.suites = data["suites"]
    if "tolerances" in data:
        cfg.tolerances = data["tolerances"]
    if "samples" in data:
        cfg.samples = data["samples"]
    if "output_dir" in data:
        cfg.output_dir = data["output_dir"]
    if "formats" in data:
        cfg.formats = data["formats"]
    return cfg


def validate(cfg: RunConfig, for_run: bool = True) -> RunConfig:
    for name in ("m_f", "m_b", "D"):
        _int(getattr(cfg, name), f"truncation.{name}", 0 if name == "D" else 1)
    if not for_run:
        return cfg
    if not isinstance(cfg.suites, list) or not cfg.suites:
        raise ConfigError("invalid_value", "suites must be a non-empty list")
    unknown = sorted(set(cfg.suites) - set(SUITES))
    if unknown:
        raise ConfigError("unknown_suite", f"unknown suites {unknown}; available: {list(SUITES)}")
    if cfg.seed is None:
        raise ConfigError("seed_required", "randomized suites need an explicit seed")
    needs = sorted(set(cfg.suites) & NEEDS_INTERIOR)
    if needs and cfg.D < 6:
        raise ConfigError(
            "no_safe_interior",
            f"degree cap D={cfg.D} leaves only the vacuum below D-4; suites {needs} need D >= 6",
        )
    for key, table, defaults in (("tolerances", cfg.tolerances, DEFAULT_TOLERANCES), ("samples", cfg.samples, DEFAULT_SAMPLES)):
        if not isinstance(table, dict):
            raise ConfigError("invalid_value", f"{key} must be an object")
        bad = sorted(set(table) - set(defaults))
        if bad:
            raise ConfigError("unknown_key", f"unknown {key}: {bad}")
    for k, v in cfg.tolerances.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError("invalid_value", f"tolerance {k} must be a positive number")
    for k, v in cfg.samples.items():
        _int(v, f"samples.{k}", 1)
    if not isinstance(cfg.formats, list) or set(cfg.formats) - set(FORMATS):
        raise ConfigError("invalid_value", f"formats must be a subset of {list(FORMATS)}")
    if not isinstance(cfg.output_dir, str) or not cfg.output_dir:
        raise ConfigError("invalid_value", "output_dir must be a non-empty string")
    return cfg


def load_config(args) -> RunConfig:
    """Config file (if any), then environment, then flags."""
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError("unreadable_config", f"cannot read {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("invalid_json", f"{args.config}: {exc}") from None
        cfg = parse_config(data)
    else:
        cfg = RunConfig()
    if os.environ.get(OUTPUT_ENV):
        cfg.output_dir = os.environ[OUTPUT_ENV]
    for flag in ("m_f", "m_b", "D", "seed"):
        val = getattr(args, flag, None)
        if val is not None:
            setattr(cfg, flag, val)
    if getattr(args, "suites", None):
        cfg.suites = [s for s in args.suites.split(",") if s]
    if getattr(args, "output_dir", None):
        cfg.output_dir = args.output_dir
    return validate(cfg, for_run=args.command == "run")


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_run(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    results = run_suites(cfg.suites, cfg.params())
    chash = cfg.hash()
    records, summary = [], {}
    for res in results:
        for r in res.reports:
            records.append({"config_hash": chash, "suite": res.name, **r.to_record()})
        n_pass = sum(r.passed for r in res.reports)
        summary[res.name] = {"passed": n_pass, "failed": len(res.reports) - n_pass}
        if "csv" in cfg.formats:
            for tname in sorted(res.tables):
                header, rows = res.tables[tname]
                _write(out / "tables" / f"{res.name}.{tname}.csv", csv_text(header, rows))
    if "jsonl" in cfg.formats:
        _write(out / "reports.jsonl", jsonl(records))
    ok = all(s["failed"] == 0 for s in summary.values())
    doc = {"config": cfg.canonical(), "config_hash": chash, "passed": ok, "suites": summary}
    _write(out / "summary.json", json.dumps(doc, sort_keys=True, indent=2) + "\n")
    for name, s in summary.items():
        print(f"{name}: {s['passed']} passed, {s['failed']} failed")
    print(f"{'PASS' if ok else 'FAIL'} (config {chash[:12]}) -> {out}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_emit_matrix(cfg: RunConfig, name: str, output: str | None) -> int:
    table = generator_table(TruncatedSpace(cfg.m_f, cfg.m_b))
    if name not in table:
        raise ConfigError("unknown_generator", f"unknown generator {name!r}; available: {sorted(table)}")
    text = triplet_text(rho_full(table[name], cfg.D), name)
    path = Path(output) if output else Path(cfg.output_dir) / f"{name}.triplets"
    _write(path, text)
    print(path)
    return EXIT_OK


def cmd_list_suites() -> int:
    for name in SUITES:
        print(f"{name}\t{SUITE_DESCRIPTIONS[name]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ospfock", description="Truncated oscillator representation checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--m-f", dest="m_f", type=int)
        p.add_argument("--m-b", dest="m_b", type=int)
        p.add_argument("--D", dest="D", type=int, help="total degree cap")
        p.add_argument("--seed", type=int)
        p.add_argument("--output-dir", dest="output_dir", help=f"overrides config and ${OUTPUT_ENV}")

    run = sub.add_parser("run", help="run verification suites")
    common(run)
    run.add_argument("--suites", help="comma-separated suite names")

    emit = sub.add_parser("emit-matrix", help="write the sparse triplet file of one generator")
    common(emit)
    emit.add_argument("name", help="generator name (see canonical names, 'central', 'number')")
    emit.add_argument("-o", "--output", help="output file")

    sub.add_parser("list-suites", help="list available suites")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-suites":
        return cmd_list_suites()
    try:
        cfg = load_config(args)
        if args.command == "run":
            return cmd_run(cfg)
        return cmd_emit_matrix(cfg, args.name, args.output)
    except ConfigError as exc:
        print(dumps_record(exc.record()), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
