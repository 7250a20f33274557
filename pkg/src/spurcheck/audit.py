"""Experiment harness: significance sweeps, table replication, dynamic regression.

Every sweep keeps its per-test (tau, P) results so that reported rates can
be recomputed and the full result table dumped. Parallel runs split work
into index ranges and merge by range start, so they agree bit-for-bit with
serial runs.
"""

from __future__ import annotations

import csv
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

import numpy as np

from .detrend import Residualizer
from .dynreg import auto_arima, coef_test
from .errors import AlignmentError, DegenerateInputError, InputError, SpurcheckError
from .ingest import CONVERGENT, CREATIVITY_ORDER, DEFAULT_MIN_OVERLAP, Catalog, StudyBundle, bridge_gaps
from .series import TimeSeries, common_years
from .simgen import GeneratorSpec, gen_series
from .tscore import (
    EXACT_CUTOFF,
    DiagnosticSummary,
    SeriesDiagnostics,
    diagnose,
    kendall_tau,
    significance_rate,
    summarize_diagnostics,
)

log = logging.getLogger(__name__)

MODES = ("raw", "ols_residual")
ALPHA_GRID = (0.05, 0.01, 0.005)
RESULT_CAP = 200_000
DEFAULT_CHUNK = 250


class ResultStore:
    """Per-test (id, tau, P) rows; spills to a temporary CSV beyond ``cap``."""

    def __init__(self, cap=RESULT_CAP):
        self.cap = cap
        self._ids: List[str] = []
        self._tau: List[float] = []
        self._p: List[float] = []
        self._spill = None
        self._n = 0

    def __len__(self):
        return self._n

    def add(self, ident, tau, p):
        if self._spill is None and self._n >= self.cap:
            self._spill = tempfile.NamedTemporaryFile(
                "w+", suffix=".csv", prefix="spurcheck-results-", newline="", delete=False
            )
            w = csv.writer(self._spill, lineterminator="\n")
            for row in zip(self._ids, self._tau, self._p):
                w.writerow([row[0], repr(row[1]), repr(row[2])])
            self._ids, self._tau, self._p = [], [], []
        if self._spill is not None:
            csv.writer(self._spill, lineterminator="\n").writerow([ident, repr(float(tau)), repr(float(p))])
        else:
            self._ids.append(ident)
            self._tau.append(float(tau))
            self._p.append(float(p))
        self._n += 1

    @property
    def spilled_path(self):
        return self._spill.name if self._spill is not None else None

    def rows(self):
        if self._spill is None:
            yield from zip(self._ids, self._tau, self._p)
            return
        self._spill.flush()
        with open(self._spill.name, newline="") as fh:
            for ident, tau, p in csv.reader(fh):
                yield ident, float(tau), float(p)

    def taus(self):
        return np.array([r[1] for r in self.rows()])

    def pvalues(self):
        return np.array([r[2] for r in self.rows()])

    def to_csv(self, stream):
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["id", "tau", "p_two_sided"])
        for ident, tau, p in self.rows():
            w.writerow([ident, repr(tau), repr(p)])


@dataclass
class AuditRow:
    label: str
    mode: str
    n_tests: int
    pct_significant: float
    alpha: float
    median_tau: float
    diagnostics: Optional[DiagnosticSummary]
    rates: Dict[float, float] = field(default_factory=dict)
    n_skipped: int = 0
    results: Optional[ResultStore] = field(default=None, repr=False, compare=False)


def _make_row(label, mode, alpha, store, diags, skipped=0):
    if len(store) == 0:
        raise InputError(f"{label}: no testable series")
    p = store.pvalues()
    rates = {a: significance_rate(p, a) for a in sorted(set(ALPHA_GRID) | {alpha}, reverse=True)}
    return AuditRow(
        label=label, mode=mode, n_tests=len(store), pct_significant=rates[alpha],
        alpha=alpha, median_tau=float(np.median(store.taus())),
        diagnostics=summarize_diagnostics(diags, label) if diags else None,
        rates=rates, n_skipped=skipped, results=store,
    )


def _check_mode(mode, covariates):
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "ols_residual" and not covariates:
        raise InputError("ols_residual mode needs covariates")


# -- simulated series -------------------------------------------------------

def _sim_chunk(args):
    target, spec, start, count, mode, covariates, cutoff = args
    first = gen_series(spec, start)
    if mode == "raw":
        years = common_years(first, target)
        if len(years) < 3:
            raise AlignmentError("generated series and target share fewer than 3 years")
        tvals = target.restrict(years).values
    else:
        years = common_years(first, target, *covariates.values())
        res = Residualizer(years, covariates)
        tvals = res.apply(target.restrict(years).values)
    out = []
    for i in range(start, start + count):
        s = first if i == start else gen_series(spec, i)
        vals = s.restrict(years).values
        if mode == "ols_residual":
            vals = res.apply(vals)
        r = kendall_tau(vals, tvals, cutoff)
        d = diagnose(s)
        out.append((s.id, r.tau, r.p_two_sided, d.tau_Y, d.tau_L))
    return start, out


def _run_chunks(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, jobs))
    else:
        parts = [fn(j) for j in jobs]
    return [row for _, rows in sorted(parts, key=lambda x: x[0]) for row in rows]


def run_simulation_audit(target: TimeSeries, spec: GeneratorSpec, count: int,
                         alpha: float = 0.05, mode: str = "raw",
                         covariates: Mapping[str, TimeSeries] | None = None,
                         workers: int = 1, chunk: int = DEFAULT_CHUNK,
                         exact_cutoff: int = EXACT_CUTOFF) -> AuditRow:
    """Correlate ``count`` generated series with ``target`` and summarise.

    ``mode="ols_residual"`` residualizes both sides on intercept, year and
    ``covariates`` over their common years before correlating.
    """
    _check_mode(mode, covariates)
    if count < 1:
        raise InputError("count must be at least 1")
    if not 0 < alpha < 1:
        raise InputError("alpha must lie in (0, 1)")
    covariates = dict(covariates or {})
    jobs = [(target, spec, s, min(chunk, count - s), mode, covariates, exact_cutoff)
            for s in range(0, count, chunk)]
    rows = _run_chunks(_sim_chunk, jobs, workers)
    store = ResultStore()
    diags = []
    for ident, tau, p, ty, tl in rows:
        store.add(ident, tau, p)
        diags.append(SeriesDiagnostics(ty, tl))
    return _make_row(spec.cls, mode, alpha, store, diags)


# -- catalog series ---------------------------------------------------------

def _catalog_test(entry, target, mode, covariates, min_overlap, cutoff=EXACT_CUTOFF):
    if mode == "raw":
        years = common_years(entry, target)
        if len(years) < min_overlap:
            raise AlignmentError(f"{entry.id}: {len(years)} common years")
        return kendall_tau(entry.restrict(years).values, target.restrict(years).values, cutoff)
    years = common_years(entry, target, *covariates.values())
    if len(years) < min_overlap:
        raise AlignmentError(f"{entry.id}: {len(years)} common years")
    res = Residualizer(years, covariates)
    return kendall_tau(res.apply(entry.restrict(years).values),
                       res.apply(target.restrict(years).values), cutoff)


def _catalog_chunk(args):
    start, entries, target, mode, covariates, min_overlap, cutoff = args
    out = []
    for key, s in entries:
        try:
            kendall = _catalog_test(s, target, mode, covariates, min_overlap, cutoff)
        except (AlignmentError, DegenerateInputError) as exc:
            out.append((key, None, None, None, str(exc)))
            continue
        try:
            d = diagnose(s)
        except DegenerateInputError:
            d = None
        out.append((key, kendall.tau, kendall.p_two_sided, d, ""))
    return start, out


def run_catalog_audit(target: TimeSeries, catalog: Catalog, alpha: float = 0.05,
                      mode: str = "raw", covariates: Mapping[str, TimeSeries] | None = None,
                      min_overlap: int = DEFAULT_MIN_OVERLAP, workers: int = 1,
                      chunk: int = DEFAULT_CHUNK, exact_cutoff: int = EXACT_CUTOFF) -> List[AuditRow]:
    """One row per dataset plus a grand-total row labelled ``ALL``.

    Series sharing fewer than ``min_overlap`` years with the target (and
    covariates, in residual mode) are skipped and counted per row.
    """
    _check_mode(mode, covariates)
    if len(catalog) == 0:
        raise InputError("catalog is empty")
    covariates = dict(covariates or {})
    keys = sorted(catalog.entries)
    items = [(k, catalog.entries[k]) for k in keys]
    jobs = [(s, items[s : s + chunk], target, mode, covariates, min_overlap, exact_cutoff)
            for s in range(0, len(items), chunk)]
    results = _run_chunks(_catalog_chunk, jobs, workers)

    groups: Dict[str, list] = {}
    for rec in results:
        groups.setdefault(rec[0][0], []).append(rec)
    groups_all = {**{name: groups[name] for name in sorted(groups)}, "ALL": results}
    rows = []
    for label, recs in groups_all.items():
        store = ResultStore()
        diags = []
        skipped = 0
        for (dataset, entity), tau, p, d, err in recs:
            if tau is None:
                skipped += 1
                continue
            store.add(f"{dataset}/{entity}", tau, p)
            if d is not None:
                diags.append(d)
        if len(store) == 0:
            log.warning("%s: every series skipped for insufficient overlap", label)
            continue
        rows.append(_make_row(label, mode, alpha, store, diags, skipped))
    if not rows:
        raise AlignmentError("no catalog series overlaps the target enough to test")
    return rows


@dataclass(frozen=True)
class SweepSummary:
    n_series: int
    n_excluded: int
    counts: tuple  # counts[k] = series significant with exactly k measures
    frac_all: float
    frac_at_least_6: float


def run_catalog_sweep(catalog: Catalog, bundle: StudyBundle, alpha: float = 0.05,
                      min_overlap: int = DEFAULT_MIN_OVERLAP,
                      exact_cutoff: int = EXACT_CUTOFF) -> SweepSummary:
    """Test every catalog series against all creativity/order measures.

    Uses residual correlations (intercept, year, collectivism, wealth).
    Series that cannot be tested against every measure are excluded.
    """
    measures = [bundle.creativity_order[m] for m in CREATIVITY_ORDER]
    k = len(measures)
    counts = [0] * (k + 1)
    excluded = 0
    for key in sorted(catalog.entries):
        s = catalog.entries[key]
        hits = 0
        try:
            for m in measures:
                r = _catalog_test(s, m, "ols_residual", bundle.covariates, min_overlap, exact_cutoff)
                hits += r.p_two_sided < alpha
        except (AlignmentError, DegenerateInputError):
            excluded += 1
            continue
        counts[hits] += 1
    n = sum(counts)
    return SweepSummary(
        n_series=n, n_excluded=excluded, counts=tuple(counts),
        frac_all=counts[k] / n if n else float("nan"),
        frac_at_least_6=sum(counts[6:]) / n if n else float("nan"),
    )


# -- study replications -----------------------------------------------------

STAR_THRESHOLDS = ((0.005, "**"), (0.01, "*"))


def stars(p: float) -> str:
    """'**' for P < 0.005, '*' for P < 0.01, '' otherwise."""
    for cut, mark in STAR_THRESHOLDS:
        if p < cut:
            return mark
    return ""


@dataclass(frozen=True)
class ReplicationCell:
    measure: str
    predictor: str
    tau: float
    p: float
    stars: str


def replicate_table1(bundle: StudyBundle, predictors: Mapping[str, TimeSeries],
                     exact_cutoff: int = EXACT_CUTOFF) -> List[ReplicationCell]:
    """Residual Kendall correlations of each creativity/order measure with each predictor.

    Cells come out measure-major in the fixed measure order, predictors in
    the order given.
    """
    if not predictors:
        raise InputError("no predictors given")
    from .detrend import residual_correlation

    cells = []
    for m in CREATIVITY_ORDER:
        for name, pred in predictors.items():
            r = residual_correlation(bundle.creativity_order[m], pred, bundle.covariates,
                                     exact_cutoff=exact_cutoff)
            cells.append(ReplicationCell(m, name, r.tau, r.p_two_sided, stars(r.p_two_sided)))
    return cells


@dataclass(frozen=True)
class DynregRow:
    block: str
    measure: str
    order: str
    beta: float
    se: float
    z: float
    p: float
    n_effective: int
    bridged_years: tuple = ()
    error: str = ""


def _contiguous_pair(y: TimeSeries, x: TimeSeries):
    y, by = bridge_gaps(y)
    x, bx = bridge_gaps(x)
    years = common_years(y, x)
    if len(years) < 10 or np.any(np.diff(years) != 1):
        raise AlignmentError(f"{y.id}: needs 10+ contiguous years shared with {x.id}")
    return years, y.restrict(years).values, x.restrict(years).values, tuple(sorted(set(by) | set(bx)))


def dynreg_test(block: str, name: str, y: TimeSeries, x: TimeSeries, with_fit: bool = False):
    """auto ARIMA regression of ``y`` on ``x`` over their bridged common years."""
    fit = None
    try:
        years, yv, xv, bridged = _contiguous_pair(y, x)
        fit = auto_arima(yv, xv[:, None], ["tightness"])
        t = coef_test(fit, "tightness")
        row = DynregRow(block, name, str(fit.order), t.estimate, t.se, t.z,
                        t.p_two_sided, fit.n_effective, tuple(int(b) for b in bridged))
    except SpurcheckError as exc:
        log.error("%s/%s: %s", block, name, exc)
        nan = float("nan")
        row = DynregRow(block, name, "", nan, nan, nan, nan, 0, (), str(exc))
    return (row, fit) if with_fit else row


def positive_control(tightness: TimeSeries, seed: int = 0) -> TimeSeries:
    """Tightness plus small seeded noise (5% of the s.d. of its changes).

    A literal copy gives an exact fit with zero residual variance; the
    perturbation keeps the likelihood well defined.
    """
    rng = np.random.default_rng(seed)
    scale = 0.05 * float(np.std(np.diff(tightness.values)))
    return tightness.with_values(tightness.values + rng.normal(scale=scale, size=len(tightness)),
                                 id="tightness_control")


def run_dynreg_validation(bundle: StudyBundle, include_control: bool = True,
                          control_seed: int = 0, with_fits: bool = False):
    """auto ARIMA dynamic regression of every measure on tightness.

    Failures are reported in the row's ``error`` field and the run continues.
    With ``with_fits`` also returns ``[(measure, ArimaFit)]`` for the
    successful fits, for search-trace output.
    """
    jobs = [("convergent", n, bundle.convergent[n]) for n in CONVERGENT]
    jobs += [("creativity_order", n, bundle.creativity_order[n]) for n in CREATIVITY_ORDER]
    if include_control:
        jobs.append(("control", "tightness_copy", positive_control(bundle.tightness, control_seed)))
    rows, fits = [], []
    for block, name, y in jobs:
        row, fit = dynreg_test(block, name, y, bundle.tightness, with_fit=True)
        rows.append(row)
        if fit is not None:
            fits.append((name, fit))
    return (rows, fits) if with_fits else rows


def default_workers():
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)
