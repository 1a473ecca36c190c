"""File formats: matrix CSV, problem bundles, trace CSV, JSON reports, SVG chart.

Floats are written with ``repr`` (shortest round-trip decimal), so every
write-then-read cycle reproduces values bit for bit and reruns produce
byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import InputError
from .objective import Problem
from .spectral import as_matrix

__all__ = [
    "TRACE_COLUMNS",
    "ProblemBundle",
    "write_matrix",
    "read_matrix",
    "make_synthetic",
    "write_bundle",
    "read_bundle",
    "write_trace",
    "read_trace",
    "write_combined",
    "write_svg",
    "write_report",
    "REPORT_SCHEMA",
]

TRACE_COLUMNS = ("iter", "objective", "g_part", "rank", "support_size",
                 "step_norm", "fixpoint_residual", "alpha", "z_accepted")
REPORT_SCHEMA = 1
MANIFEST_NAME = "manifest.json"


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_text(path, text):
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def _read_text(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _rows_to_csv(rows, header=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_matrix(path, M):
    """Comma-separated, no header, one line per row."""
    A = as_matrix(M)
    _write_text(path, _rows_to_csv([[_fmt(v) for v in row] for row in A]))


def _parse_matrix(text, src):
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise InputError(f"{src}: empty matrix")
    try:
        vals = [[float(v) for v in r] for r in rows]
    except ValueError as exc:
        raise InputError(f"{src}: {exc}") from exc
    width = len(vals[0])
    if any(len(r) != width for r in vals):
        raise InputError(f"{src}: ragged rows")
    return as_matrix(np.array(vals), str(src))


def read_matrix(path) -> np.ndarray:
    return _parse_matrix(_read_text(path), path)


@dataclass
class ProblemBundle:
    """``Y``, ``D``, ``lambda`` plus the optional ground truth and seed."""

    Y: np.ndarray
    D: np.ndarray
    lam: float
    X_true: np.ndarray | None = None
    seed: int | None = None

    def problem(self) -> Problem:
        return Problem(self.Y, self.D, self.lam)


def make_synthetic(d, n, k, true_rank, noise_sigma, lam, seed) -> ProblemBundle:
    """Gaussian design ``D``, rank-``r`` truth ``A B^T`` and noisy ``Y``.

    Draw order from ``default_rng(seed)``: ``D`` (d x n), ``A`` (n x r),
    ``B`` (k x r), noise (d x k).
    """
    for name, v in (("d", d), ("n", n), ("k", k)):
        if int(v) != v or v < 1:
            raise InputError(f"{name} must be a positive integer, got {v}")
    if int(true_rank) != true_rank or not 0 <= true_rank <= min(n, k):
        raise InputError(f"true_rank must lie in [0, min(n, k)], got {true_rank}")
    if not noise_sigma >= 0:
        raise InputError(f"noise_sigma must be nonnegative, got {noise_sigma}")
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((d, n))
    A = rng.standard_normal((n, true_rank))
    B = rng.standard_normal((k, true_rank))
    X_true = A @ B.T
    Y = D @ X_true + noise_sigma * rng.standard_normal((d, k))
    return ProblemBundle(Y, D, float(lam), X_true, int(seed))


def write_bundle(out_dir, bundle: ProblemBundle) -> Path:
    """Write ``manifest.json`` plus one CSV per matrix into `out_dir`."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create {out}: {exc}") from exc
    manifest = {"lambda": bundle.lam, "Y": "Y.csv", "D": "D.csv",
                "seed": bundle.seed}
    write_matrix(out / "Y.csv", bundle.Y)
    write_matrix(out / "D.csv", bundle.D)
    if bundle.X_true is not None:
        write_matrix(out / "X_true.csv", bundle.X_true)
        manifest["X_true"] = "X_true.csv"
    _write_text(out / MANIFEST_NAME, _dumps(manifest))
    return out / MANIFEST_NAME


def _load_entry(value, base, key):
    # a file name relative to the manifest, or an inline list of rows
    if isinstance(value, str):
        return read_matrix(base / value)
    if isinstance(value, list):
        try:
            return as_matrix(np.array(value, dtype=float), key)
        except (TypeError, ValueError) as exc:
            raise InputError(f"inline matrix {key}: {exc}") from exc
    raise InputError(f"manifest entry {key} must be a path or a list of rows")


def read_bundle(path) -> ProblemBundle:
    """Load a bundle from its manifest or from the directory holding it."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        manifest = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(manifest, dict):
        raise InputError(f"{path}: manifest must be a JSON object")
    missing = [k for k in ("lambda", "Y", "D") if k not in manifest]
    if missing:
        raise InputError(f"{path}: missing keys {missing}")
    base = path.parent
    Y = _load_entry(manifest["Y"], base, "Y")
    D = _load_entry(manifest["D"], base, "D")
    X_true = None
    if manifest.get("X_true") is not None:
        X_true = _load_entry(manifest["X_true"], base, "X_true")
        if X_true.shape != (D.shape[1], Y.shape[1]):
            raise InputError(f"X_true has shape {X_true.shape}, expected "
                             f"{(D.shape[1], Y.shape[1])}")
    try:
        lam = float(manifest["lambda"])
    except (TypeError, ValueError) as exc:
        raise InputError(f"lambda: {exc}") from exc
    b = ProblemBundle(Y, D, lam, X_true, manifest.get("seed"))
    b.problem()  # shape and lambda validation
    return b


def write_trace(path, trace):
    """One CSV row per record; blank cells where a column does not apply."""
    rows = []
    for r in trace.records:
        rows.append([_fmt(r.iter), _fmt(r.objective), _fmt(r.g_part),
                     _fmt(r.rank), _fmt(r.support_size), _fmt(r.step_norm),
                     _fmt(r.fixpoint_residual), _fmt(r.alpha),
                     _fmt(r.z_accepted)])
    _write_text(path, _rows_to_csv(rows, TRACE_COLUMNS))


def read_trace(path) -> list:
    """Rows of a trace CSV as dicts with typed values (``None`` for blanks)."""
    reader = csv.DictReader(io.StringIO(_read_text(path)))
    if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
        raise InputError(f"{path}: unexpected header {reader.fieldnames}")
    ints = {"iter", "rank", "support_size"}
    out = []
    for row in reader:
        rec = {}
        for k, v in row.items():
            if v == "":
                rec[k] = None
            elif k in ints:
                rec[k] = int(v)
            elif k == "z_accepted":
                rec[k] = v == "1"
            else:
                rec[k] = float(v)
        out.append(rec)
    return out


def write_combined(path, traces: dict):
    """Long format: one ``algo, iter, objective, rank`` row per record."""
    rows = [[algo, _fmt(r.iter), _fmt(r.objective), _fmt(r.rank)]
            for algo, tr in traces.items() for r in tr.records]
    _write_text(path, _rows_to_csv(rows, ("algo", "iter", "objective", "rank")))


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def write_svg(path, series: dict, title="objective vs iteration",
              width=640, height=400):
    """Static line chart, log-scale y. `series` maps a label to y values.

    Nonpositive values are drawn at the smallest positive value present.
    """
    pos = [v for ys in series.values() for v in ys if v > 0]
    lo = min(pos) if pos else 1.0
    hi = max(pos) if pos else 10.0
    ylo, yhi = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if yhi == ylo:
        yhi += 1
    xmax = max((len(ys) - 1 for ys in series.values()), default=1) or 1
    ml, mr, mt, mb = 70, 130, 30, 40
    pw, ph = width - ml - mr, height - mt - mb

    def px(i):
        return ml + pw * i / xmax

    def py(v):
        v = max(v, lo)
        return mt + ph * (yhi - math.log10(v)) / (yhi - ylo)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
           f'font-family="sans-serif" font-size="14">{title}</text>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
           'stroke="black"/>']
    for e in range(ylo, yhi + 1):
        y = py(10.0 ** e)
        out.append(f'<line x1="{ml}" y1="{y:.2f}" x2="{ml + pw}" y2="{y:.2f}" '
                   'stroke="#ddd"/>')
        out.append(f'<text x="{ml - 6}" y="{y + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">1e{e}</text>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        x = ml + pw * frac
        out.append(f'<text x="{x:.2f}" y="{mt + ph + 16}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">'
                   f'{int(round(xmax * frac))}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 6}" '
               'text-anchor="middle" font-family="sans-serif" '
               'font-size="12">iteration</text>')
    for idx, (label, ys) in enumerate(series.items()):
        color = _COLORS[idx % len(_COLORS)]
        pts = " ".join(f"{px(i):.2f},{py(v):.2f}" for i, v in enumerate(ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{pts}"/>')
        ly = mt + 16 * (idx + 1)
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" '
                   f'y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 35}" y="{ly + 4}" '
                   f'font-family="sans-serif" font-size="12">{label}</text>')
    out.append("</svg>")
    _write_text(path, "\n".join(out) + "\n")


def _clean(obj):
    # JSON-safe plain types; non-finite floats become strings
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_report(path, report: dict):
    """JSON report with ``schema`` set; keys sorted for stable bytes."""
    _write_text(path, _dumps({"schema": REPORT_SCHEMA, **report}))
