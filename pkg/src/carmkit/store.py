"""Result persistence and rendering.

Append-only CSV files per suite type under a results root, with lossless
numeric round-tripping, plus deterministic SVG renderers for roofline and
memory-curve plots.
"""

from __future__ import annotations

import csv
import json
import math
import os
import threading
from fractions import Fraction

from .errors import SchemaError
from .model import CarmModel, attainable_performance, ridge_point
from .suite import MemoryCurveRecord, MixedPoint, RooflineRecord

FORMAT_VERSION = "v1"
_SUITE_DIRS = {"roofline": "Roofline", "memcurve": "MemoryCurve",
               "mixed": "Mixed"}

_ROOFLINE_COLUMNS = (
    "machine", "date", "isa", "precision", "threads", "loads", "stores",
    "frequency_ghz", "l1_gbps", "l1_ipc", "l2_gbps", "l2_ipc", "l3_gbps",
    "l3_ipc", "dram_gbps", "dram_ipc", "fp_op", "fp_gflops", "fp_ipc",
    "fma_gflops", "fma_ipc", "warnings")
_MEMCURVE_COLUMNS = (
    "machine", "date", "isa", "precision", "threads", "loads", "stores",
    "frequency_ghz", "points", "warnings")
_MIXED_COLUMNS = (
    "machine", "isa", "precision", "threads", "level", "fp_op",
    "fp_per_mem", "ai_numerator", "ai_denominator", "gflops", "ipc")


def _fmt(value):
    """Shortest decimal that round-trips; empty cell for missing values."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _opt_float(cell):
    return float(cell) if cell else None


class ResultArchive:
    """CSV store rooted at <root>/Results/{Roofline,MemoryCurve,Mixed}.

    One file per suite type; rows append in write order. The first line of
    every file names the format version so later layout changes fail
    loudly instead of misreading old data.
    """

    def __init__(self, root):
        self.root = root
        self._lock = threading.Lock()

    def _path(self, suite):
        d = os.path.join(self.root, "Results", _SUITE_DIRS[suite])
        os.makedirs(d, exist_ok=True)
        return os.path.join(d, "results.csv")

    def path_for(self, suite):
        """Location of the CSV file holding the given suite's records."""
        return self._path(suite)

    def _append(self, suite, columns, row):
        path = self._path(suite)
        with self._lock:
            new = not os.path.exists(path)
            with open(path, "a", newline="") as fh:
                w = csv.writer(fh)
                if new:
                    fh.write(f"carmkit-csv,{suite},{FORMAT_VERSION}\n")
                    w.writerow(columns)
                w.writerow(row)
        return path

    def _read_rows(self, suite, columns):
        path = self._path(suite)
        if not os.path.exists(path):
            return []
        with self._lock, open(path, newline="") as fh:
            header = fh.readline().strip().split(",")
            if len(header) != 3 or header[0] != "carmkit-csv":
                raise SchemaError(f"{path}: not a carmkit CSV file")
            if header[1] != suite:
                raise SchemaError(
                    f"{path}: holds {header[1]!r} records, expected {suite!r}")
            if header[2] != FORMAT_VERSION:
                raise SchemaError(
                    f"{path}: format {header[2]} needs migration to "
                    f"{FORMAT_VERSION}")
            reader = csv.reader(fh)
            file_columns = tuple(next(reader))
            unknown = [c for c in file_columns if c not in columns]
            if unknown:
                raise SchemaError(
                    f"{path}: unknown column(s) {', '.join(unknown)}")
            missing = [c for c in columns if c not in file_columns]
            if missing:
                raise SchemaError(
                    f"{path}: missing column(s) {', '.join(missing)}")
            return [dict(zip(file_columns, row)) for row in reader]

    # -- roofline --

    def write_roofline(self, record):
        row = [record.machine, record.date, record.isa, record.precision,
               record.threads, record.ld_st_ratio[0], record.ld_st_ratio[1],
               _fmt(record.frequency_ghz)]
        for f in ("l1_gbps", "l1_ipc", "l2_gbps", "l2_ipc", "l3_gbps",
                  "l3_ipc", "dram_gbps", "dram_ipc"):
            row.append(_fmt(getattr(record, f)))
        row += [record.fp_op, _fmt(record.fp_gflops), _fmt(record.fp_ipc),
                _fmt(record.fma_gflops), _fmt(record.fma_ipc),
                json.dumps(list(record.warnings))]
        return self._append("roofline", _ROOFLINE_COLUMNS, row)

    def read_roofline(self):
        records = []
        for r in self._read_rows("roofline", _ROOFLINE_COLUMNS):
            records.append(RooflineRecord(
                machine=r["machine"], date=r["date"], isa=r["isa"],
                precision=r["precision"], threads=int(r["threads"]),
                ld_st_ratio=(int(r["loads"]), int(r["stores"])),
                frequency_ghz=float(r["frequency_ghz"]),
                l1_gbps=_opt_float(r["l1_gbps"]),
                l1_ipc=_opt_float(r["l1_ipc"]),
                l2_gbps=_opt_float(r["l2_gbps"]),
                l2_ipc=_opt_float(r["l2_ipc"]),
                l3_gbps=_opt_float(r["l3_gbps"]),
                l3_ipc=_opt_float(r["l3_ipc"]),
                dram_gbps=_opt_float(r["dram_gbps"]),
                dram_ipc=_opt_float(r["dram_ipc"]),
                fp_op=r["fp_op"],
                fp_gflops=_opt_float(r["fp_gflops"]),
                fp_ipc=_opt_float(r["fp_ipc"]),
                fma_gflops=_opt_float(r["fma_gflops"]),
                fma_ipc=_opt_float(r["fma_ipc"]),
                warnings=tuple(json.loads(r["warnings"])),
            ))
        return records

    # -- memory curve --

    def write_memcurve(self, record):
        points = json.dumps([[s, repr(b), repr(i)]
                             for s, b, i in record.points])
        row = [record.machine, record.date, record.isa, record.precision,
               record.threads, record.ld_st_ratio[0], record.ld_st_ratio[1],
               _fmt(record.frequency_ghz), points,
               json.dumps(list(record.warnings))]
        return self._append("memcurve", _MEMCURVE_COLUMNS, row)

    def read_memcurve(self):
        records = []
        for r in self._read_rows("memcurve", _MEMCURVE_COLUMNS):
            points = tuple((int(s), float(b), float(i))
                           for s, b, i in json.loads(r["points"]))
            records.append(MemoryCurveRecord(
                machine=r["machine"], date=r["date"], isa=r["isa"],
                precision=r["precision"], threads=int(r["threads"]),
                ld_st_ratio=(int(r["loads"]), int(r["stores"])),
                frequency_ghz=float(r["frequency_ghz"]), points=points,
                warnings=tuple(json.loads(r["warnings"])),
            ))
        return records

    # -- mixed --

    def write_mixed(self, points, machine="", isa="", precision="dp",
                    threads=1):
        path = None
        for p in points:
            row = [machine, isa, precision, threads, p.level, p.fp_op,
                   p.fp_per_mem, p.ai_exact.numerator, p.ai_exact.denominator,
                   _fmt(p.gflops), _fmt(p.ipc)]
            path = self._append("mixed", _MIXED_COLUMNS, row)
        return path

    def read_mixed(self):
        rows = []
        for r in self._read_rows("mixed", _MIXED_COLUMNS):
            point = MixedPoint(
                ai_exact=Fraction(int(r["ai_numerator"]),
                                  int(r["ai_denominator"])),
                gflops=float(r["gflops"]), ipc=float(r["ipc"]),
                fp_per_mem=int(r["fp_per_mem"]), level=r["level"],
                fp_op=r["fp_op"])
            rows.append({"machine": r["machine"], "isa": r["isa"],
                         "precision": r["precision"],
                         "threads": int(r["threads"]), "point": point})
        return rows


# --- SVG rendering ---------------------------------------------------------

_WIDTH, _HEIGHT = 800, 500
_MARGIN = 70


def _log_scale(lo, hi, span, offset):
    llo, lhi = math.log10(lo), math.log10(hi)

    def scale(v):
        return offset + (math.log10(v) - llo) / (lhi - llo) * span

    return scale


def _coord(v):
    return f"{v:.3f}"


def _svg_header(title):
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<title>{title}</title>',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" '
        'fill="white"/>',
    ]


_ROOF_COLORS = {"L1": "#1f77b4", "L2": "#2ca02c", "L3": "#ff7f0e",
                "DRAM": "#d62728"}
_CEIL_COLORS = {"add": "#9467bd", "mul": "#8c564b", "div": "#e377c2",
                "fma": "#17becf"}
_POINT_COLORS = {"dbi": "#000000", "pmu": "#7f7f7f",
                 "mixed-benchmark": "#bcbd22"}


def render_roofline_svg(model, points=(), x_range=None, y_range=None):
    """Log-log roofline plot: sloped roofs to their ridge, flat ceilings,
    application points, and a ridge marker on the fastest roof."""
    if not isinstance(model, CarmModel):
        raise TypeError("render_roofline_svg needs a CarmModel")
    fp = model.fp_peak
    ridges = [ridge_point(fp, r.bandwidth_gbps) for r in model.roofs]
    ais = [p.ai for p in points if p.ai > 0]
    if x_range is None:
        x_lo = min([min(ridges) / 10] + ais) / 2
        x_hi = max([max(ridges) * 10] + ais) * 2
    else:
        x_lo, x_hi = x_range
    perfs = [p.gflops for p in points if p.gflops > 0]
    if y_range is None:
        y_floor = min(attainable_performance(fp, r.bandwidth_gbps, x_lo)
                      for r in model.roofs)
        y_lo = min([y_floor] + perfs) / 2
        y_hi = max([fp * 2] + perfs) * 2
    else:
        y_lo, y_hi = y_range
    sx = _log_scale(x_lo, x_hi, _WIDTH - 2 * _MARGIN, _MARGIN)
    sy_raw = _log_scale(y_lo, y_hi, _HEIGHT - 2 * _MARGIN, _MARGIN)

    def sy(v):
        return _HEIGHT - sy_raw(v)  # SVG y grows downward

    out = _svg_header("Cache-aware roofline")
    out.append(f'<rect x="{_MARGIN}" y="{_MARGIN}" '
               f'width="{_WIDTH - 2 * _MARGIN}" '
               f'height="{_HEIGHT - 2 * _MARGIN}" fill="none" '
               'stroke="#333333" stroke-width="1"/>')
    # axis labels
    out.append(f'<text x="{_WIDTH // 2}" y="{_HEIGHT - 20}" '
               'text-anchor="middle" font-size="13">'
               'Arithmetic intensity (FLOP/byte)</text>')
    out.append(f'<text x="20" y="{_HEIGHT // 2}" text-anchor="middle" '
               f'font-size="13" transform="rotate(-90 20 {_HEIGHT // 2})">'
               'Performance (GFLOP/s)</text>')
    # decade ticks
    for d in range(math.ceil(math.log10(x_lo)), math.floor(math.log10(x_hi)) + 1):
        x = sx(10 ** d)
        out.append(f'<line x1="{_coord(x)}" y1="{_HEIGHT - _MARGIN}" '
                   f'x2="{_coord(x)}" y2="{_HEIGHT - _MARGIN + 5}" '
                   'stroke="#333333"/>')
        out.append(f'<text x="{_coord(x)}" y="{_HEIGHT - _MARGIN + 18}" '
                   f'text-anchor="middle" font-size="11">1e{d}</text>')
    for d in range(math.ceil(math.log10(y_lo)), math.floor(math.log10(y_hi)) + 1):
        y = sy(10 ** d)
        out.append(f'<line x1="{_MARGIN - 5}" y1="{_coord(y)}" '
                   f'x2="{_MARGIN}" y2="{_coord(y)}" stroke="#333333"/>')
        out.append(f'<text x="{_MARGIN - 8}" y="{_coord(y + 4)}" '
                   f'text-anchor="end" font-size="11">1e{d}</text>')
    # roofs: sloped from the left edge up to each roof's ridge with F_p
    for roof, ridge in zip(model.roofs, ridges):
        color = _ROOF_COLORS.get(roof.level, "#555555")
        y0 = attainable_performance(fp, roof.bandwidth_gbps, x_lo)
        out.append(
            f'<line x1="{_coord(sx(x_lo))}" y1="{_coord(sy(y0))}" '
            f'x2="{_coord(sx(min(ridge, x_hi)))}" y2="{_coord(sy(fp))}" '
            f'stroke="{color}" stroke-width="2"/>')
    # ceilings: horizontal from their own ridge with the fastest roof
    fast_bw = model.fastest_bandwidth
    for ceil in model.ceilings:
        color = _CEIL_COLORS.get(ceil.op, "#555555")
        start = ridge_point(ceil.gflops, fast_bw)
        out.append(
            f'<line x1="{_coord(sx(max(start, x_lo)))}" '
            f'y1="{_coord(sy(ceil.gflops))}" x2="{_coord(sx(x_hi))}" '
            f'y2="{_coord(sy(ceil.gflops))}" stroke="{color}" '
            'stroke-width="2"/>')
    # ridge marker on the fastest roof
    first_ridge = ridges[0]
    out.append(
        f'<line x1="{_coord(sx(first_ridge))}" y1="{_MARGIN}" '
        f'x2="{_coord(sx(first_ridge))}" y2="{_HEIGHT - _MARGIN}" '
        'stroke="#999999" stroke-dasharray="4,3"/>')
    out.append(
        f'<text x="{_coord(sx(first_ridge) + 4)}" y="{_MARGIN + 14}" '
        f'font-size="11">ridge {first_ridge:.4g}</text>')
    # application points
    anomalous = 0
    for p in points:
        best = attainable_performance(fp, fast_bw, p.ai) if p.ai > 0 else fp
        anomaly = p.gflops > best * (1 + 1e-9)
        anomalous += anomaly
        color = _POINT_COLORS.get(p.source, "#000000")
        stroke = ' stroke="#ff0000" stroke-width="1.5"' if anomaly else ""
        x = sx(min(max(p.ai, x_lo), x_hi)) if p.ai > 0 else _MARGIN
        y = sy(min(max(p.gflops, y_lo), y_hi)) if p.gflops > 0 \
            else _HEIGHT - _MARGIN
        out.append(f'<circle cx="{_coord(x)}" cy="{_coord(y)}" r="4" '
                   f'fill="{color}"{stroke}>'
                   f'<title>{p.label or p.source}: AI={p.ai:.6g}, '
                   f'{p.gflops:.6g} GFLOP/s</title></circle>')
    # legend
    ly = _MARGIN + 16
    ref = model.roofs[0]
    legend = [f'{model.machine or "machine"} | {ref.isa} {ref.precision} | '
              f'{ref.threads} thread(s)']
    for roof in model.roofs:
        legend.append(f'{roof.level}: {roof.bandwidth_gbps:.4g} GB/s')
    for ceil in model.ceilings:
        legend.append(f'FP {ceil.op}: {ceil.gflops:.4g} GFLOP/s')
    if anomalous:
        legend.append(f'{anomalous} point(s) above all ceilings (anomalous)')
    for i, text in enumerate(legend):
        out.append(f'<text x="{_WIDTH - _MARGIN - 4}" y="{ly + 14 * i}" '
                   f'text-anchor="end" font-size="11">{text}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_memcurve_svg(curve, topology=None):
    """Bandwidth vs log2(working-set size), with cache-size markers."""
    points = curve.points if hasattr(curve, "points") else tuple(curve)
    if len(points) < 2:
        raise ValueError("memory-curve rendering needs at least 2 points")
    sizes = [p[0] for p in points]
    bws = [p[1] for p in points]
    x_lo, x_hi = min(sizes), max(sizes)
    y_hi = max(bws) * 1.1
    sx = _log_scale(x_lo, x_hi, _WIDTH - 2 * _MARGIN, _MARGIN)

    def sy(v):
        frac = v / y_hi
        return _HEIGHT - (_MARGIN + frac * (_HEIGHT - 2 * _MARGIN))

    out = _svg_header("Memory bandwidth curve")
    out.append(f'<rect x="{_MARGIN}" y="{_MARGIN}" '
               f'width="{_WIDTH - 2 * _MARGIN}" '
               f'height="{_HEIGHT - 2 * _MARGIN}" fill="none" '
               'stroke="#333333" stroke-width="1"/>')
    out.append(f'<text x="{_WIDTH // 2}" y="{_HEIGHT - 20}" '
               'text-anchor="middle" font-size="13">'
               'Working-set size (bytes, log scale)</text>')
    out.append(f'<text x="20" y="{_HEIGHT // 2}" text-anchor="middle" '
               f'font-size="13" transform="rotate(-90 20 {_HEIGHT // 2})">'
               'Bandwidth (GB/s)</text>')
    # cache-size markers
    if topology is not None:
        markers = [("L1", topology.l1d_kib), ("L2", topology.l2_kib),
                   ("L3", topology.l3_slice_kib or topology.l3_total_kib)]
        for name, kib in markers:
            if kib is None:
                continue
            nbytes = kib * 1024
            if not x_lo <= nbytes <= x_hi:
                continue
            x = sx(nbytes)
            out.append(f'<line x1="{_coord(x)}" y1="{_MARGIN}" '
                       f'x2="{_coord(x)}" y2="{_HEIGHT - _MARGIN}" '
                       'stroke="#999999" stroke-dasharray="4,3"/>')
            out.append(f'<text x="{_coord(x + 3)}" y="{_MARGIN + 12}" '
                       f'font-size="11">{name} ({kib} KiB)</text>')
    # curve
    path = " ".join(
        f'{"M" if i == 0 else "L"}{_coord(sx(s))},{_coord(sy(b))}'
        for i, (s, b, *_rest) in enumerate(points))
    out.append(f'<path d="{path}" fill="none" stroke="#1f77b4" '
               'stroke-width="2"/>')
    for s, b, *rest in points:
        ipc = f", IPC {rest[0]:.4g}" if rest else ""
        out.append(f'<circle cx="{_coord(sx(s))}" cy="{_coord(sy(b))}" '
                   f'r="3" fill="#1f77b4">'
                   f'<title>{s} B: {b:.6g} GB/s{ipc}</title></circle>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
