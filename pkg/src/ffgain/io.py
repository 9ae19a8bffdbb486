"""Plain-text trace and campaign files, VNA CSV import and report output.

A trace file is a ``#`` header followed by one row per (distance, frequency)
point, sorted by distance and then frequency::

    # ffgain trace v1
    # pair: A B
    # run: 0
    # segment: 0
    # cluster: 1.0 0.0002 151 0.028
    # grid: 145000000000.0 170000000000.0 667
    # columns: distance_m frequency_hz s21_db phase_deg
    1.028 145000000000.0 -41.52 12.5
    ...

``s21_db`` is ``20 log10 |S21|``. Magnitudes and phases are written with the
shortest decimal that converts back to the same double. Where 17 digits are
not enough after the dB/degree conversion, up to 21 digits are written and
the conversion back runs in extended precision, so emit and parse invert
each other exactly on platforms with an 80-bit ``long double``.
"""
from __future__ import annotations

import csv
import io as _io
import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (AntennaKind, ApertureAntenna, Campaign, Cluster, FrequencyGrid, GainSolution,
                   SweepTrace, ValidationError, pair_key)

TRACE_MAGIC = "# ffgain trace v1"
CAMPAIGN_MAGIC = "# ffgain campaign v1"
_LD = np.longdouble
EXACT_ROUND_TRIP = np.finfo(_LD).nmant >= 63


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------- number text

def _fmt(x: float) -> str:
    return repr(float(x))


def _shortest(values, to_text, from_text):
    """Shortest decimal per value such that ``from_text`` gives the value back.

    ``to_text`` maps the doubles to extended-precision text-domain values,
    ``from_text`` maps text-domain values back to doubles.
    """
    values = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        ext = to_text(values.astype(_LD))
        # the text is read back in extended precision, so test the text itself
        short = np.array([repr(float(v)) for v in ext.astype(float).ravel()], dtype=object)
        ok = from_text(_parse_ld(short.astype(str)).reshape(values.shape)) == values
    res = short.copy()
    flat_ext = ext.ravel()
    for i in np.flatnonzero(~ok.ravel()):
        res[i] = np.format_float_scientific(flat_ext[i], precision=20, unique=False)
    return res.reshape(values.shape)


def _db_to_mag(db):
    return (10.0 ** (db / 20)).astype(float)


def _mag_to_db(mag):
    return 20 * np.log10(mag)


_PI_LD = _LD("3.14159265358979323846264338327950288")


def _deg_to_rad(deg):
    return (deg * _PI_LD / 180).astype(float)


def _rad_to_deg(rad):
    return rad * 180 / _PI_LD


def _parse_ld(tokens) -> np.ndarray:
    return np.asarray(tokens).astype(_LD)


# ---------------------------------------------------------------- traces

def _header_lines(trace: SweepTrace):
    g = trace.grid
    lines = [TRACE_MAGIC,
             f"# pair: {trace.pair[0]} {trace.pair[1]}",
             f"# run: {trace.run_index}",
             f"# segment: {trace.segment}"]
    cl = trace.cluster
    if cl is None:
        lines.append("# cluster: none")
    else:
        lines.append(f"# cluster: {_fmt(cl.start_distance)} {_fmt(cl.step)} {cl.count} {_fmt(cl.pair_offset)}")
    lines.append(f"# grid: {_fmt(g.start_hz)} {_fmt(g.stop_hz)} {g.count}")
    cols = "distance_m frequency_hz s21_db" + (" phase_deg" if trace.phase is not None else "")
    lines.append(f"# columns: {cols}")
    return lines


def emit_trace(trace: SweepTrace) -> str:
    """Serialize one trace; ``parse_trace(emit_trace(t)) == t``."""
    lines = _header_lines(trace)
    m, n = trace.shape
    dist = [_fmt(d) for d in trace.distances]
    freq = [_fmt(f) for f in trace.grid.frequencies]
    db = _shortest(trace.s21, _mag_to_db, _db_to_mag)
    ph = _shortest(trace.phase, _rad_to_deg, _deg_to_rad) if trace.phase is not None else None
    for i in range(m):
        for j in range(n):
            row = f"{dist[i]} {freq[j]} {db[i, j]}"
            if ph is not None:
                row += f" {ph[i, j]}"
            lines.append(row)
    return "\n".join(lines) + "\n"


def _split_header(lines, first_line=1):
    """Return (header dict, index of first data line)."""
    if not lines or lines[0].strip() != TRACE_MAGIC:
        raise ParseError(f"expected {TRACE_MAGIC!r}", first_line)
    header = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        if body:
            key, sep, value = body.partition(":")
            if not sep:
                raise ParseError(f"malformed header line {lines[i]!r}", first_line + i)
            key = key.strip()
            if key in header:
                raise ParseError(f"duplicate header key {key!r}", first_line + i)
            header[key] = (value.split(), first_line + i)
        i += 1
    return header, i


def _need(header, key, count=None):
    if key not in header:
        raise ParseError(f"header is missing {key!r}")
    values, line = header[key]
    if count is not None and len(values) != count:
        raise ParseError(f"{key!r} needs {count} values, got {len(values)}", line)
    return values, line


def _num(text, line, kind=float):
    try:
        if kind is int:
            v = int(text)
        else:
            v = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line) from None
    return v


def parse_trace(text: str, first_line: int = 1) -> SweepTrace:
    """Parse a trace file; errors carry 1-based line numbers."""
    lines = text.splitlines()
    header, start = _split_header(lines, first_line)
    (a, b), _ = _need(header, "pair", 2)
    (run,), run_line = _need(header, "run", 1)
    seg_values, seg_line = header.get("segment", (["0"], None))
    (g0, g1, gn), grid_line = _need(header, "grid", 3)
    try:
        grid = FrequencyGrid(_num(g0, grid_line), _num(g1, grid_line), _num(gn, grid_line, int))
    except ValidationError as exc:
        raise ParseError(str(exc), grid_line) from None
    cols, col_line = _need(header, "columns")
    base = ["distance_m", "frequency_hz", "s21_db"]
    if cols not in (base, base + ["phase_deg"]):
        raise ParseError(f"unsupported columns {' '.join(cols)}", col_line)
    ncol = len(cols)
    cluster = None
    if "cluster" in header:
        cv, cl_line = header["cluster"]
        if cv != ["none"]:
            if len(cv) != 4:
                raise ParseError("'cluster' needs start step count offset", cl_line)
            try:
                cluster = Cluster(_num(cv[0], cl_line), _num(cv[1], cl_line),
                                  _num(cv[2], cl_line, int), _num(cv[3], cl_line))
            except ValidationError as exc:
                raise ParseError(str(exc), cl_line) from None

    data = [(k, ln) for k, ln in enumerate(lines[start:], start) if ln.strip()]
    for k, ln in data:
        if ln.lstrip().startswith("#"):
            raise ParseError("header line after data rows", first_line + k)
    rows = len(data)
    nf = grid.count
    if rows == 0 or rows % nf:
        raise ParseError(f"{rows} data rows is not a multiple of the {nf} grid frequencies",
                         first_line + (data[-1][0] if data else len(lines) - 1))
    m = rows // nf
    tokens = [ln.split() for _, ln in data]
    try:
        arr = np.array(tokens, dtype=str)
        if arr.shape != (rows, ncol):
            raise ValueError
        dist = arr[:, 0].astype(float)
        freq = arr[:, 1].astype(float)
        db = _parse_ld(arr[:, 2])
        deg = _parse_ld(arr[:, 3]) if ncol == 4 else None
    except ValueError:
        _locate_bad_row(tokens, data, ncol, first_line)
        raise  # pragma: no cover - _locate_bad_row always raises
    dist = dist.reshape(m, nf)
    freq = freq.reshape(m, nf)
    _check_order(dist, freq, grid, data, first_line)
    with np.errstate(over="ignore", under="ignore"):
        mag = _db_to_mag(db).reshape(m, nf)
        phase = _deg_to_rad(deg).reshape(m, nf) if deg is not None else None
    if np.any(~np.isfinite(mag)):
        bad = int(np.flatnonzero(~np.isfinite(mag.ravel()))[0])
        raise ParseError("magnitude out of range", first_line + data[bad][0])
    run_index = _num(run, run_line, int)
    segment = _num(seg_values[0], seg_line, int)
    try:
        return SweepTrace((a, b), run_index, mag, dist[:, 0], grid, phase=phase,
                          segment=segment, cluster=cluster)
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def _locate_bad_row(tokens, data, ncol, first_line):
    for t, (k, _) in zip(tokens, data):
        if len(t) != ncol:
            raise ParseError(f"expected {ncol} columns, got {len(t)}", first_line + k)
        for v in t:
            try:
                float(v)
            except ValueError:
                raise ParseError(f"not a number: {v!r}", first_line + k) from None
    raise ParseError("unreadable data rows")


def _check_order(dist, freq, grid, data, first_line):
    m, nf = dist.shape
    # every frequency block must sit at one distance
    same = dist == dist[:, :1]
    if not same.all():
        i, j = np.argwhere(~same)[0]
        raise ParseError("distance changes within a frequency sweep; rows must be sorted by "
                         "(distance, frequency)", first_line + data[i * nf + j][0])
    steps = np.diff(dist[:, 0])
    if np.any(steps <= 0):
        i = int(np.flatnonzero(steps <= 0)[0]) + 1
        raise ParseError(f"distance {dist[i, 0]!r} is not greater than the previous {dist[i - 1, 0]!r}",
                         first_line + data[i * nf][0])
    if np.any(dist[:, 0] <= 0):
        i = int(np.flatnonzero(dist[:, 0] <= 0)[0])
        raise ParseError("distances must be positive", first_line + data[i * nf][0])
    expect = grid.frequencies
    ok = np.isclose(freq, expect[None, :], rtol=1e-9, atol=0.0)
    if not ok.all():
        i, j = np.argwhere(~ok)[0]
        raise ParseError(f"frequency {freq[i, j]!r} does not match grid point {expect[j]!r}",
                         first_line + data[i * nf + j][0])


# ---------------------------------------------------------------- campaigns

def emit_campaign(campaign: Campaign) -> str:
    g = campaign.grid
    out = [CAMPAIGN_MAGIC]
    for a in campaign.antennas:
        out.append(f"# antenna: {a.id} {_fmt(a.aperture_width)} {_fmt(a.aperture_height)} {a.kind.value}")
    out.append(f"# grid: {_fmt(g.start_hz)} {_fmt(g.stop_hz)} {g.count}")
    text = "\n".join(out) + "\n"
    blocks = [emit_trace(t) for p in campaign.pairs for t in campaign.traces[p]]
    return text + "".join(blocks)


def parse_campaign(text: str) -> Campaign:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CAMPAIGN_MAGIC:
        raise ParseError(f"expected {CAMPAIGN_MAGIC!r}", 1)
    antennas = []
    grid = None
    i = 1
    while i < len(lines) and lines[i].strip() != TRACE_MAGIC:
        body = lines[i].strip()
        if body and not body.startswith("#"):
            raise ParseError("data before the first trace block", i + 1)
        key, _, value = body.lstrip("#").partition(":")
        vals = value.split()
        key = key.strip()
        if key == "antenna":
            if len(vals) != 4:
                raise ParseError("'antenna' needs id width height kind", i + 1)
            try:
                antennas.append(ApertureAntenna(vals[0], _num(vals[1], i + 1), _num(vals[2], i + 1),
                                                AntennaKind(vals[3])))
            except ValueError as exc:
                raise ParseError(str(exc), i + 1) from None
        elif key == "grid":
            if len(vals) != 3:
                raise ParseError("'grid' needs start stop count", i + 1)
            try:
                grid = FrequencyGrid(_num(vals[0], i + 1), _num(vals[1], i + 1), _num(vals[2], i + 1, int))
            except ValidationError as exc:
                raise ParseError(str(exc), i + 1) from None
        elif body:
            raise ParseError(f"unknown campaign header key {key!r}", i + 1)
        i += 1
    if grid is None:
        raise ParseError("campaign header is missing 'grid'")
    starts = [k for k in range(i, len(lines)) if lines[k].strip() == TRACE_MAGIC]
    traces = {}
    for s, e in zip(starts, starts[1:] + [len(lines)]):
        t = parse_trace("\n".join(lines[s:e]), first_line=s + 1)
        traces.setdefault(t.pair, []).append(t)
    return Campaign(tuple(antennas), traces, grid)


def read_campaign(path) -> Campaign:
    with open(path, encoding="utf-8") as fh:
        return parse_campaign(fh.read())


def write_campaign(path, campaign: Campaign):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(emit_campaign(campaign))


# ---------------------------------------------------------------- VNA import

def parse_vna_csv(text: str):
    """Two-column VNA export (frequency in Hz, |S21| in dB); returns arrays.

    Non-numeric leading lines (instrument headers, ``!`` comments) are
    skipped; comma, semicolon and whitespace separators are accepted.
    """
    freqs, dbs = [], []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "!#":
            continue
        parts = [p for p in line.replace(";", ",").replace("\t", ",").replace(" ", ",").split(",") if p]
        try:
            f, v = float(parts[0]), float(parts[1])
        except (ValueError, IndexError):
            if freqs:
                raise ParseError(f"expected 'frequency, dB', got {raw!r}", n) from None
            continue
        freqs.append(f)
        dbs.append(v)
    if len(freqs) < 2:
        raise ParseError("VNA export holds fewer than two points")
    f = np.array(freqs)
    if np.any(np.diff(f) <= 0):
        raise ParseError("VNA frequencies must increase")
    return f, np.array(dbs)


def trace_from_vna(exports: Mapping[float, str], pair, run_index=0, segment=0) -> SweepTrace:
    """Build a trace from one VNA export per distance (keys in meters)."""
    dist = sorted(exports)
    cols = [parse_vna_csv(exports[d]) for d in dist]
    f0 = cols[0][0]
    for f, _ in cols[1:]:
        if f.shape != f0.shape or not np.allclose(f, f0, rtol=1e-9, atol=0):
            raise ValidationError("VNA exports use different frequency points")
    grid = FrequencyGrid(float(f0[0]), float(f0[-1]), len(f0))
    if not np.allclose(grid.frequencies, f0, rtol=1e-9, atol=0):
        raise ValidationError("VNA frequency points are not uniformly spaced")
    db = np.stack([v for _, v in cols])
    return SweepTrace(pair_key(*pair), run_index, 10 ** (db / 20), dist, grid, segment=segment)


# ---------------------------------------------------------------- reports

REPORT_COLUMNS = ("antenna_id", "frequency_hz", "gain_db", "sigma_f_db")


def _db2(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def report_rows(solution: GainSolution):
    rows = []
    for i in solution.ids:
        g = np.asarray(solution.gain_db[i])
        s = np.asarray(solution.sigma_f[i])
        for k, f in enumerate(solution.frequencies):
            rows.append((i, f"{f:.1f}", _db2(g[k]), _db2(s[k])))
    return rows


def format_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def format_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    rows = [[str(c) for c in r] for r in rows]
    widths = [len(h) for h in header]
    for r in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, r)]
    out = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    out.append("  ".join("-" * w for w in widths))
    for r in rows:
        out.append("  ".join(c.rjust(w) if _numeric(c) else c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(out) + "\n"


def _numeric(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def emit_report(solution: GainSolution, format="csv") -> str:
    """Per-antenna, per-frequency gain and sigma_f; dB to 2 decimals.

    ``format`` is ``"csv"`` or ``"aligned_table"``. An empty frequency list
    gives the header only.
    """
    rows = report_rows(solution)
    if format == "csv":
        return format_csv(REPORT_COLUMNS, rows)
    if format == "aligned_table":
        return format_table(REPORT_COLUMNS, rows)
    raise ValidationError(f"unknown report format {format!r}")
