"""Report emission: CSV, JSON and a self-contained SVG bar chart.

Field order is fixed per row type (see the ``*_FIELDS`` tuples) so that
reports are schema-stable and byte-identical for identical inputs.

AuditRow CSV columns::

    label, mode, n_tests, n_skipped, alpha, pct_significant,
    pct_p05, pct_p01, pct_p005, median_tau,
    abs_tau_Y_median, tau_L_median, diag_count, tau_variant

ReplicationCell CSV columns::

    measure, predictor, tau, p, stars

DynregRow CSV columns::

    block, measure, order, beta, se, z, p, n_effective, bridged_years, error

JSON reports are ``{"schema": ..., "tau_variant": ..., "rows": [...]}`` with
the same field names; :func:`load_json_report` reads them back.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .audit import AuditRow, DynregRow, ReplicationCell
from .errors import InputError, SchemaError
from .tscore import TAU_VARIANT, DiagnosticSummary

FORMATS = ("csv", "json", "svg_bar")

AUDIT_FIELDS = (
    "label", "mode", "n_tests", "n_skipped", "alpha", "pct_significant",
    "pct_p05", "pct_p01", "pct_p005", "median_tau",
    "abs_tau_Y_median", "tau_L_median", "diag_count", "tau_variant",
)
CELL_FIELDS = ("measure", "predictor", "tau", "p", "stars")
DYNREG_FIELDS = ("block", "measure", "order", "beta", "se", "z", "p",
                 "n_effective", "bridged_years", "error")

SCHEMAS = {
    AuditRow: ("spurcheck.audit/1", AUDIT_FIELDS),
    ReplicationCell: ("spurcheck.table1/1", CELL_FIELDS),
    DynregRow: ("spurcheck.dynreg/1", DYNREG_FIELDS),
}
_GRID_KEYS = {0.05: "pct_p05", 0.01: "pct_p01", 0.005: "pct_p005"}


def _num(v):
    return None if isinstance(v, float) and not math.isfinite(v) else v


def _record(item) -> dict:
    if isinstance(item, AuditRow):
        d = item.diagnostics
        rec = {
            "label": item.label, "mode": item.mode, "n_tests": item.n_tests,
            "n_skipped": item.n_skipped, "alpha": item.alpha,
            "pct_significant": item.pct_significant,
        }
        for a, key in _GRID_KEYS.items():
            rec[key] = item.rates.get(a)
        rec.update(median_tau=item.median_tau,
                   abs_tau_Y_median=d.abs_tau_Y_median if d else None,
                   tau_L_median=d.tau_L_median if d else None,
                   diag_count=d.count if d else 0,
                   tau_variant=TAU_VARIANT)
        return rec
    if isinstance(item, ReplicationCell):
        return {"measure": item.measure, "predictor": item.predictor,
                "tau": _num(item.tau), "p": _num(item.p), "stars": item.stars}
    if isinstance(item, DynregRow):
        return {"block": item.block, "measure": item.measure, "order": item.order,
                "beta": _num(item.beta), "se": _num(item.se), "z": _num(item.z),
                "p": _num(item.p), "n_effective": item.n_effective,
                "bridged_years": list(item.bridged_years), "error": item.error}
    raise InputError(f"cannot report objects of type {type(item).__name__}")


def _row_type(items):
    if not items:
        raise InputError("nothing to report")
    kinds = {type(i) for i in items}
    if len(kinds) != 1 or next(iter(kinds)) not in SCHEMAS:
        raise InputError("a report holds rows of a single supported type")
    return next(iter(kinds))


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ";".join(str(x) for x in v)
    return str(v)


def to_csv(items: Sequence) -> bytes:
    _, fields = SCHEMAS[_row_type(items)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for item in items:
        rec = _record(item)
        w.writerow([_cell(rec[f]) for f in fields])
    return buf.getvalue().encode()


def to_json(items: Sequence) -> bytes:
    schema, _ = SCHEMAS[_row_type(items)]
    doc = {"schema": schema, "tau_variant": TAU_VARIANT,
           "rows": [_record(i) for i in items]}
    return (json.dumps(doc, indent=2, allow_nan=False) + "\n").encode()


def load_json_report(data: bytes | str) -> list:
    """Rebuild report rows from :func:`to_json` output.

    Audit rows come back without their per-test results.
    """
    doc = json.loads(data)
    schema = doc.get("schema")
    nan = float("nan")
    out = []
    for rec in doc["rows"]:
        if schema == SCHEMAS[AuditRow][0]:
            diag = None
            if rec["abs_tau_Y_median"] is not None:
                diag = DiagnosticSummary(rec["label"], rec["abs_tau_Y_median"], rec["tau_L_median"], rec["diag_count"])
            rates = {a: rec[k] for a, k in _GRID_KEYS.items() if rec[k] is not None}
            rates.setdefault(rec["alpha"], rec["pct_significant"])
            out.append(AuditRow(rec["label"], rec["mode"], rec["n_tests"], rec["pct_significant"],
                                rec["alpha"], rec["median_tau"], diag, rates, rec["n_skipped"]))
        elif schema == SCHEMAS[ReplicationCell][0]:
            out.append(ReplicationCell(rec["measure"], rec["predictor"],
                                       nan if rec["tau"] is None else rec["tau"],
                                       nan if rec["p"] is None else rec["p"], rec["stars"]))
        elif schema == SCHEMAS[DynregRow][0]:
            f = {k: nan if rec[k] is None else rec[k] for k in ("beta", "se", "z", "p")}
            out.append(DynregRow(rec["block"], rec["measure"], rec["order"], f["beta"], f["se"],
                                 f["z"], f["p"], rec["n_effective"], tuple(rec["bridged_years"]),
                                 rec["error"]))
        else:
            raise SchemaError(f"unknown report schema {schema!r}")
    return out


# -- SVG -------------------------------------------------------------------

_COLOURS = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3")


def to_svg_bar(rows: Sequence[AuditRow], title: str = "Share of P < alpha") -> bytes:
    """Grouped bars of ``pct_significant``: one panel per mode, one bar per label."""
    if _row_type(rows) is not AuditRow:
        raise InputError("svg_bar needs audit rows")
    modes = [m for m in ("raw", "ols_residual") if any(r.mode == m for r in rows)]
    labels = list(dict.fromkeys(r.label for r in rows))
    bar, gap, pad = 28, 8, 50
    panel_w = pad + len(labels) * (bar + gap) + gap
    height, plot_h, top = 330, 200, 50
    width = panel_w * len(modes) + 20
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    for k, mode in enumerate(modes):
        x0 = 10 + k * panel_w
        base = top + plot_h
        out.append(f'<g class="panel" data-mode="{mode}">')
        out.append(f'<text x="{x0 + panel_w / 2:.1f}" y="38" text-anchor="middle">{mode}</text>')
        for tick in (0, 0.25, 0.5, 0.75, 1.0):
            y = base - tick * plot_h
            out.append(f'<line x1="{x0 + pad - 4}" y1="{y:.1f}" x2="{x0 + panel_w - gap}" '
                       f'y2="{y:.1f}" stroke="#ddd"/>')
            out.append(f'<text x="{x0 + pad - 6}" y="{y + 3:.1f}" text-anchor="end">{tick:.0%}</text>')
        by_label = {r.label: r for r in rows if r.mode == mode}
        for i, label in enumerate(labels):
            r = by_label.get(label)
            if r is None:
                continue
            x = x0 + pad + gap + i * (bar + gap)
            h = r.pct_significant * plot_h
            colour = _COLOURS[i % len(_COLOURS)]
            out.append(f'<rect class="bar" x="{x}" y="{base - h:.2f}" width="{bar}" height="{h:.2f}" '
                       f'fill="{colour}"><title>{escape(label)}: {r.pct_significant:.4f}</title></rect>')
            out.append(f'<text x="{x + bar / 2}" y="{base - h - 3:.1f}" text-anchor="middle">'
                       f'{100 * r.pct_significant:.1f}</text>')
            out.append(f'<text transform="translate({x + bar / 2},{base + 8}) rotate(45)">'
                       f'{escape(label)}</text>')
        out.append("</g>")
    out.append("</svg>\n")
    return "\n".join(out).encode()


def emit_report(items: Sequence, fmt: str) -> bytes:
    """Serialize rows in one of :data:`FORMATS`."""
    items = list(items)
    if fmt == "csv":
        return to_csv(items)
    if fmt == "json":
        return to_json(items)
    if fmt == "svg_bar":
        return to_svg_bar(items)
    raise InputError(f"unknown report format {fmt!r}; expected one of {FORMATS}")


def write_atomic(path, data: bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
