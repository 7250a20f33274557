"""Command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Logs go to
standard error; data goes to the files named by ``--out`` (or standard
output when ``--out -``). Every default can also come from a JSON file
passed with ``--config``; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from . import audit, report
from .detrend import DEFAULT_LOESS_SPAN, loess_smooth
from .dynreg import trace_jsonl
from .errors import SpurcheckError
from .ingest import (
    DEFAULT_MIN_OVERLAP,
    DUMP_SCHEMA,
    STUDY_COLUMNS,
    Catalog,
    catalog_manifest,
    dump_catalog,
    load_catalog,
    load_catalog_dir,
    load_series_csv,
    load_study,
    read_text,
)
from .series import TimeSeries
from .simgen import CLASSES, DEFAULT_LENGTH, DEFAULT_PARAMS, DEFAULT_START_YEAR, GeneratorSpec, gen_batch
from .tscore import EXACT_CUTOFF

log = logging.getLogger("spurcheck")

FIXTURES_ENV = "SPURCHECK_FIXTURES"
COMMANDS = ("simulate", "audit-sim", "audit-catalog", "table1", "dynreg", "ingest-check")

#: Table 1 predictor columns and the catalog entries they come from.
TABLE1_PREDICTORS = {
    "life_expectancy_costa_rica": "life-expectancy/Costa Rica",
    "aquaculture_world": "aquaculture-seafood-production/World",
    "population_uganda": "population/Uganda",
    "tractors_oecd": "tractors/OECD members",
    "palm_oil_world": "palm-oil-production/World",
    "slaughtered_livestock_india": "slaughtered-livestock/India",
}


def default_fixtures() -> Path:
    env = os.environ.get(FIXTURES_ENV)
    if env:
        return Path(env)
    return Path.cwd() / "fixtures"


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    count: int = 1000
    alpha: float = 0.05
    mode: str = "both"
    paths: Dict[str, Optional[str]] = field(default_factory=dict)
    overrides: Dict[str, object] = field(default_factory=dict)
    options: Dict[str, object] = field(default_factory=dict)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message.splitlines()[0])


# -- argument types ---------------------------------------------------------

def _alpha(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {text}")
    return v


def _min_overlap(text):
    v = int(text)
    if v < 3:
        raise argparse.ArgumentTypeError(f"min overlap must be at least 3, got {text}")
    return v


def _span(text):
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"span must lie in (0, 1], got {text}")
    return v


def _cutoff(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"exact cutoff must be non-negative, got {text}")
    return v


def _keyval(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="spurcheck", description=(
        "Trend and dependence diagnostics for time-series correlations, with "
        "simulation and catalog significance audits and dynamic-regression checks."
    ), formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    common = _Parser(add_help=False, formatter_class=fmt)
    common.add_argument("--config", help="JSON file of option defaults (flags win)")
    common.add_argument("--fixtures", default=None,
                        help=f"fixture directory (default: ${FIXTURES_ENV} or ./fixtures)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")

    def out_opts(p, formats, default="csv"):
        p.add_argument("--format", choices=formats, default=default, help="report format")
        p.add_argument("--out", default="-", help="output file, '-' for standard output")

    def gen_opts(p):
        p.add_argument("--count", type=_positive_int, default=1000, help="series per class")
        p.add_argument("--seed", type=_seed, default=0, help="master seed")
        p.add_argument("--length", type=_positive_int, default=DEFAULT_LENGTH, help="series length")
        p.add_argument("--start-year", type=int, default=DEFAULT_START_YEAR, help="first year")
        p.add_argument("--param", type=_keyval, action="append", default=[], metavar="KEY=VALUE",
                       help="generator parameter override, applied to every class that has KEY")

    def stat_opts(p):
        p.add_argument("--alpha", type=_alpha, default=0.05, help="significance level")
        p.add_argument("--exact-cutoff", type=_cutoff, default=EXACT_CUTOFF,
                       help="largest tie-free n that gets an exact P-value")

    def workers_opt(p):
        p.add_argument("--workers", type=_positive_int, default=audit.default_workers(),
                       help="worker processes")

    p = sub.add_parser("simulate", parents=[common], formatter_class=fmt,
                       help="generate simulated series as a catalog CSV")
    p.add_argument("--class", dest="cls", choices=CLASSES + ("all",), default="all",
                   help="series class")
    gen_opts(p)
    p.add_argument("--out", default="-", help="output CSV, '-' for standard output")

    p = sub.add_parser("audit-sim", parents=[common], formatter_class=fmt,
                       help="significance rates of simulated series against a target")
    p.add_argument("--class", dest="cls", choices=CLASSES + ("all",), default="all",
                   help="series class")
    gen_opts(p)
    p.add_argument("--target", help="target series CSV (default: <fixtures>/tightness.csv)")
    p.add_argument("--study", help="study CSV with covariates (default: <fixtures>/study.csv)")
    p.add_argument("--mode", choices=audit.MODES + ("both",), default="both", help="test mode")
    p.add_argument("--with-catalog", default=None, metavar="PATH",
                   help="also audit this catalog and add its grand total as a 'catalog' row")
    p.add_argument("--min-overlap", type=_min_overlap, default=DEFAULT_MIN_OVERLAP,
                   help="minimum common years for catalog series")
    stat_opts(p)
    workers_opt(p)
    out_opts(p, report.FORMATS)
    p.add_argument("--results", help="also write every per-test (tau, P) to this CSV")

    p = sub.add_parser("audit-catalog", parents=[common], formatter_class=fmt,
                       help="significance rates of catalog series against a target")
    p.add_argument("--catalog", help="catalog directory or dump CSV (default: <fixtures>/owid)")
    p.add_argument("--target", help="target series CSV (default: <fixtures>/tightness.csv)")
    p.add_argument("--study", help="study CSV with covariates (default: <fixtures>/study.csv)")
    p.add_argument("--mode", choices=audit.MODES + ("both",), default="raw", help="test mode")
    p.add_argument("--min-overlap", type=_min_overlap, default=DEFAULT_MIN_OVERLAP,
                   help="minimum common years")
    p.add_argument("--sweep", default=None, metavar="PATH",
                   help="also test every series against all creativity/order measures "
                        "and write the summary JSON here")
    stat_opts(p)
    workers_opt(p)
    out_opts(p, report.FORMATS)
    p.add_argument("--results", help="also write every per-test (tau, P) to this CSV")

    p = sub.add_parser("table1", parents=[common], formatter_class=fmt,
                       help="residual correlations of the creativity/order measures")
    p.add_argument("--study", help="study CSV (default: <fixtures>/study.csv)")
    p.add_argument("--catalog", help="catalog directory or dump CSV (default: <fixtures>/owid)")
    p.add_argument("--predictor", type=_keyval, action="append", default=[],
                   metavar="NAME=DATASET/ENTITY",
                   help="predictor column; default: tightness plus the six bundled catalog predictors")
    p.add_argument("--exact-cutoff", type=_cutoff, default=EXACT_CUTOFF,
                   help="largest tie-free n that gets an exact P-value")
    out_opts(p, ("csv", "json"))

    p = sub.add_parser("dynreg", parents=[common], formatter_class=fmt,
                       help="regression with ARIMA errors of each measure on tightness")
    p.add_argument("--study", help="study CSV (default: <fixtures>/study.csv)")
    p.add_argument("--no-control", action="store_true", help="skip the positive-control row")
    p.add_argument("--control-seed", type=_seed, default=0, help="seed of the control perturbation")
    p.add_argument("--trace", default=None, metavar="PATH",
                   help="write every order-search trace here as JSON lines")
    out_opts(p, ("csv", "json"))

    p = sub.add_parser("ingest-check", parents=[common], formatter_class=fmt,
                       help="load inputs and print an inventory manifest")
    p.add_argument("--catalog", help="catalog directory or dump CSV (default: <fixtures>/owid)")
    p.add_argument("--study", help="study CSV (default: <fixtures>/study.csv)")
    p.add_argument("--smooth", default=None, metavar="PATH",
                   help="write loess-smoothed study series to this CSV")
    p.add_argument("--span", type=_span, default=DEFAULT_LOESS_SPAN, help="loess span")
    p.add_argument("--out", default="-", help="manifest JSON file, '-' for standard output")
    return parser


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _resolve(ns, key, default):
    v = getattr(ns, key, None)
    if v is not None:
        return v
    return str(Path(ns.fixtures) / default)


def parse_args(argv: List[str]) -> Optional[RunConfig]:
    """Resolve defaults, config file and flags into a RunConfig.

    Returns None when there is nothing to run (no command). Raises
    UsageError with a one-line reason for invalid input.
    """
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        return None
    if ns.config:
        try:
            cfg = json.loads(Path(ns.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}")
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        sub = _subparser(parser, ns.command)
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in cfg.items():
            dest = key.replace("-", "_")
            if dest == "class":
                dest = "cls"
            if dest not in known or dest in ("config", "help"):
                raise UsageError(f"unknown option in config: {key}")
            action = known[dest]
            if action.type is not None and not isinstance(value, list):
                try:
                    value = action.type(str(value))
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise UsageError(f"config {key}: {exc}")
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config {key}: invalid choice {value!r}")
            defaults[dest] = value
        sub.set_defaults(**defaults)
        ns = parser.parse_args(argv)

    if ns.fixtures is None:
        ns.fixtures = str(default_fixtures())
    paths = {}
    for key, default in (("target", "tightness.csv"), ("study", "study.csv"), ("catalog", "owid")):
        if hasattr(ns, key):
            paths[key] = _resolve(ns, key, default)
            if ns.command != "simulate" and not Path(paths[key]).exists():
                raise UsageError(f"{key} path not found: {paths[key]}")
    for key in ("out", "results", "trace", "sweep", "smooth", "with_catalog"):
        if hasattr(ns, key):
            paths[key] = getattr(ns, key)
    if paths.get("with_catalog") and not Path(paths["with_catalog"]).exists():
        raise UsageError(f"catalog path not found: {paths['with_catalog']}")

    overrides = {}
    if hasattr(ns, "param"):
        classes = CLASSES if ns.cls == "all" else (ns.cls,)
        params = {}
        for key, value in ns.param:
            if not any(key in DEFAULT_PARAMS[c] for c in classes):
                raise UsageError(f"unknown generator parameter {key!r}")
            try:
                params[key] = float(value)
            except ValueError:
                raise UsageError(f"parameter {key} needs a number, got {value!r}")
        overrides["params"] = params
    for key in ("min_overlap", "span", "exact_cutoff"):
        if hasattr(ns, key):
            overrides[key] = getattr(ns, key)
    if hasattr(ns, "predictor"):
        preds = dict(ns.predictor) or dict(TABLE1_PREDICTORS)
        for name, ref in preds.items():
            if "/" not in ref:
                raise UsageError(f"predictor {name}: expected DATASET/ENTITY, got {ref!r}")
        overrides["predictors"] = preds

    options = {k: v for k, v in vars(ns).items()
               if k not in ("command", "seed", "count", "alpha", "mode", "param", "predictor")
               and k not in paths and k not in overrides}
    return RunConfig(
        command=ns.command,
        seed=getattr(ns, "seed", 0),
        count=getattr(ns, "count", 0),
        alpha=getattr(ns, "alpha", 0.05),
        mode=getattr(ns, "mode", ""),
        paths=paths,
        overrides=overrides,
        options=options,
    )


# -- commands ---------------------------------------------------------------

def _write(path, data: bytes):
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        report.write_atomic(path, data)
        log.info("wrote %s", path)


def _load_catalog(path) -> Catalog:
    path = Path(path)
    if path.is_dir():
        return load_catalog_dir(path)
    return load_catalog(read_text(path), DUMP_SCHEMA, {"dump": str(path)})


def _specs(cfg: RunConfig):
    classes = CLASSES if cfg.options["cls"] == "all" else (cfg.options["cls"],)
    out = []
    for cls in classes:
        params = {k: v for k, v in cfg.overrides["params"].items() if k in DEFAULT_PARAMS[cls]}
        out.append(GeneratorSpec(cls, cfg.options["length"], params, cfg.seed,
                                 cfg.options["start_year"]))
    return out


def _modes(cfg):
    return audit.MODES if cfg.mode == "both" else (cfg.mode,)


def _results_csv(rows) -> bytes:
    buf = io.StringIO()
    buf.write("label,mode,id,tau,p_two_sided\n")
    for r in rows:
        for ident, tau, p in r.results.rows():
            buf.write(f"{_csv_field(r.label)},{r.mode},{_csv_field(ident)},{tau!r},{p!r}\n")
    return buf.getvalue().encode()


def _csv_field(text):
    text = str(text)
    if any(c in text for c in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def cmd_simulate(cfg):
    series = {}
    for spec in _specs(cfg):
        for s in gen_batch(spec, cfg.count):
            series[(spec.cls, s.id)] = s
    buf = io.StringIO()
    dump_catalog(Catalog(series), buf)
    _write(cfg.paths["out"], buf.getvalue().encode())
    return 0


def cmd_audit_sim(cfg):
    target = load_series_csv(read_text(cfg.paths["target"]))
    modes = _modes(cfg)
    covariates = load_study(read_text(cfg.paths["study"])).covariates if "ols_residual" in modes else None
    rows = []
    for spec in _specs(cfg):
        for mode in modes:
            log.info("auditing %s (%s, %d series)", spec.cls, mode, cfg.count)
            rows.append(audit.run_simulation_audit(
                target, spec, cfg.count, cfg.alpha, mode,
                covariates if mode == "ols_residual" else None,
                workers=cfg.options["workers"], exact_cutoff=cfg.overrides["exact_cutoff"],
            ))
    if cfg.paths.get("with_catalog"):
        catalog = _load_catalog(cfg.paths["with_catalog"])
        for mode in modes:
            total = audit.run_catalog_audit(
                target, catalog, cfg.alpha, mode, covariates if mode == "ols_residual" else None,
                cfg.overrides["min_overlap"], cfg.options["workers"],
                exact_cutoff=cfg.overrides["exact_cutoff"],
            )[-1]
            total.label = "catalog"
            rows.append(total)
    _write(cfg.paths["out"], report.emit_report(rows, cfg.options["format"]))
    if cfg.paths.get("results"):
        _write(cfg.paths["results"], _results_csv(rows))
    return 0


def cmd_audit_catalog(cfg):
    target = load_series_csv(read_text(cfg.paths["target"]))
    catalog = _load_catalog(cfg.paths["catalog"])
    modes = _modes(cfg)
    bundle = None
    if "ols_residual" in modes or cfg.paths.get("sweep"):
        bundle = load_study(read_text(cfg.paths["study"]))
    rows = []
    for mode in modes:
        rows.extend(audit.run_catalog_audit(
            target, catalog, cfg.alpha, mode,
            bundle.covariates if mode == "ols_residual" else None,
            cfg.overrides["min_overlap"], cfg.options["workers"],
            exact_cutoff=cfg.overrides["exact_cutoff"],
        ))
    _write(cfg.paths["out"], report.emit_report(rows, cfg.options["format"]))
    if cfg.paths.get("results"):
        _write(cfg.paths["results"], _results_csv(rows))
    if cfg.paths.get("sweep"):
        sweep = audit.run_catalog_sweep(catalog, bundle, cfg.alpha, cfg.overrides["min_overlap"],
                                        cfg.overrides["exact_cutoff"])
        doc = {"n_series": sweep.n_series, "n_excluded": sweep.n_excluded,
               "counts": list(sweep.counts), "frac_all": sweep.frac_all,
               "frac_at_least_6": sweep.frac_at_least_6}
        _write(cfg.paths["sweep"], (json.dumps(doc, indent=2) + "\n").encode())
    return 0


def cmd_table1(cfg):
    bundle = load_study(read_text(cfg.paths["study"]))
    catalog = _load_catalog(cfg.paths["catalog"])
    predictors: Dict[str, TimeSeries] = {"tightness": bundle.tightness}
    for name, ref in cfg.overrides["predictors"].items():
        dataset, entity = ref.split("/", 1)
        if (dataset, entity) not in catalog.entries:
            raise SpurcheckError(f"predictor {name}: no catalog entry {ref!r}")
        predictors[name] = catalog.entries[(dataset, entity)]
    cells = audit.replicate_table1(bundle, predictors, cfg.overrides["exact_cutoff"])
    _write(cfg.paths["out"], report.emit_report(cells, cfg.options["format"]))
    return 0


def cmd_dynreg(cfg):
    bundle = load_study(read_text(cfg.paths["study"]))
    rows, traces = audit.run_dynreg_validation(
        bundle, include_control=not cfg.options["no_control"],
        control_seed=cfg.options["control_seed"], with_fits=True,
    )
    _write(cfg.paths["out"], report.emit_report(rows, cfg.options["format"]))
    if cfg.paths.get("trace"):
        lines = []
        for name, fit in traces:
            for line in trace_jsonl(fit).splitlines():
                rec = json.loads(line)
                lines.append(json.dumps({"measure": name, **rec}))
        _write(cfg.paths["trace"], ("\n".join(lines) + "\n").encode())
    return 0


def cmd_ingest_check(cfg):
    catalog = _load_catalog(cfg.paths["catalog"])
    bundle = load_study(read_text(cfg.paths["study"]))
    manifest = catalog_manifest(catalog)
    manifest["study"] = {
        name: {"first_year": int(s.years[0]), "last_year": int(s.years[-1]), "observations": len(s)}
        for name, s in ((n, bundle.measure(n)) for n in STUDY_COLUMNS)
    }
    _write(cfg.paths["out"], (json.dumps(manifest, indent=2) + "\n").encode())
    if cfg.paths.get("smooth"):
        buf = io.StringIO()
        buf.write("measure,year,value,smoothed\n")
        for name in STUDY_COLUMNS:
            s = bundle.measure(name)
            sm = loess_smooth(s, cfg.overrides["span"])
            for y, v, f in zip(s.years, s.values, sm.values):
                buf.write(f"{name},{int(y)},{float(v)!r},{float(f)!r}\n")
        _write(cfg.paths["smooth"], buf.getvalue().encode())
    return 0


HANDLERS = {
    "simulate": cmd_simulate,
    "audit-sim": cmd_audit_sim,
    "audit-catalog": cmd_audit_catalog,
    "table1": cmd_table1,
    "dynreg": cmd_dynreg,
    "ingest-check": cmd_ingest_check,
}


def main(config: RunConfig) -> int:
    """Run one configured command; returns the process exit code."""
    try:
        return HANDLERS[config.command](config)
    except (SpurcheckError, OSError) as exc:
        log.error("%s", exc)
        return 1


def run(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        build_parser().print_help()
        return 0
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(f"spurcheck: error: {exc}", file=sys.stderr)
        return 2
    if cfg is None:
        build_parser().print_help()
        return 0
    logging.basicConfig(level=logging.INFO if cfg.options.get("verbose") else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return main(cfg)


if __name__ == "__main__":
    sys.exit(run())
