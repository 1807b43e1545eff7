"""Text formats: matrices, point clouds, spike trains, diagram documents, barcodes."""
from __future__ import annotations

import hashlib
import json
import math
import re
from pathlib import Path
from xml.sax.saxutils import escape

from . import __version__
from .persistence import PersistenceDiagram

_SPLIT = re.compile(r"[,\s]+")


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _content_lines(text):
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        yield no, [t for t in _SPLIT.split(s) if t]


def _floats(tokens, no):
    out = []
    for t in tokens:
        try:
            out.append(float(t))
        except ValueError:
            raise ParseError(f"not a number: {t!r}", no) from None
    return out


def _is_numeric(tokens):
    try:
        [float(t) for t in tokens]
        return True
    except ValueError:
        return False


def parse_distance_matrix(text: str):
    """Returns (labels or None, rows). Rows are checked to form a square table."""
    labels, rows = None, []
    last = None
    for no, toks in _content_lines(text):
        last = no
        if labels is None and not rows and not _is_numeric(toks):
            labels = toks
            continue
        vals = _floats(toks, no)
        if rows and len(vals) != len(rows[0]):
            raise ParseError(f"expected {len(rows[0])} entries, found {len(vals)}", no)
        rows.append(vals)
    if not rows:
        raise ParseError("no matrix rows found", last)
    if len(rows) != len(rows[0]):
        raise ParseError(f"matrix has {len(rows)} rows but {len(rows[0])} columns", last)
    if labels is not None and len(labels) != len(rows):
        raise ParseError(f"{len(labels)} labels for a {len(rows)}x{len(rows)} matrix", None)
    return labels, rows


def parse_point_cloud(text: str):
    """Returns coordinate rows; a leading non-numeric line is a column header and is skipped."""
    rows = []
    seen_header = False
    last = None
    for no, toks in _content_lines(text):
        last = no
        if not rows and not seen_header and not _is_numeric(toks):
            seen_header = True
            continue
        vals = _floats(toks, no)
        if rows and len(vals) != len(rows[0]):
            raise ParseError(f"expected {len(rows[0])} coordinates, found {len(vals)}", no)
        rows.append(vals)
    if not rows:
        raise ParseError("no points found", last)
    return rows


def parse_spike_trains(text: str):
    """One line per cell with ascending firing times."""
    trains = []
    for no, toks in _content_lines(text):
        vals = _floats(toks, no)
        if any(not math.isfinite(v) for v in vals):
            raise ParseError("firing times must be finite", no)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ParseError("firing times must be strictly increasing", no)
        trains.append(vals)
    if not trains:
        raise ParseError("no spike trains found")
    return trains


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- diagram documents --------------------------------------------------------

def _num(x):
    return "inf" if math.isinf(x) else x


def diagram_document(diagrams, spectrum=None, digest=None, **extra) -> str:
    doc = {"tool": "finiteph", "version": __version__, "input_sha256": digest}
    doc.update(extra)
    doc["spectrum"] = None if spectrum is None else [float(v) for v in spectrum]
    doc["diagrams"] = {str(D.dim): [[_num(b), _num(d)] for b, d in D.points] for D in diagrams}
    return json.dumps(doc, indent=2) + "\n"


def _read_num(x):
    if x == "inf":
        return math.inf
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return float(x)
    raise ParseError(f"bad diagram coordinate {x!r}")


def read_diagram_document(text: str) -> dict:
    """Map dimension -> PersistenceDiagram."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("diagrams"), dict):
        raise ParseError("document has no 'diagrams' table")
    out = {}
    for k, pts in doc["diagrams"].items():
        try:
            dim = int(k)
        except ValueError:
            raise ParseError(f"bad dimension key {k!r}") from None
        if not isinstance(pts, list) or any(not isinstance(p, list) or len(p) != 2 for p in pts):
            raise ParseError(f"dimension {k}: points must be [birth, death] pairs")
        try:
            out[dim] = PersistenceDiagram(dim, tuple((_read_num(b), _read_num(d)) for b, d in pts))
        except ValueError as e:
            raise ParseError(f"dimension {k}: {e}") from None
    return out


# --- barcodes ---------------------------------------------------------------------

def barcode_text(diagrams) -> str:
    lines = []
    for D in diagrams:
        for b, d in D.points:
            lines.append(f"{D.dim} {b!r} {'inf' if math.isinf(d) else repr(d)}")
    return "\n".join(lines) + ("\n" if lines else "")


def barcode_svg(diagrams, width: int = 640, bar_height: int = 8, gap: int = 4) -> str:
    """Horizontal bars, one band per dimension; essential bars end in an arrow."""
    finite = [v for D in diagrams for p in D.points for v in p if math.isfinite(v)]
    hi = max(finite, default=1.0)
    lo = min(finite, default=0.0)
    span = (hi - lo) or 1.0
    left, right, top = 40, 20, 10
    plot_w = width - left - right

    def x(v):
        return left + plot_w * ((hi if math.isinf(v) else v) - lo) / span

    parts = []
    y = top
    for D in diagrams:
        parts.append(f'<text x="4" y="{y + bar_height}" font-size="10">H{D.dim}</text>')
        if not D.points:
            y += bar_height + gap
        for b, d in D.points:
            x0, x1 = x(b), x(d)
            parts.append(f'<rect x="{x0:.2f}" y="{y}" width="{max(x1 - x0, 0.5):.2f}" '
                         f'height="{bar_height}" fill="steelblue"/>')
            if math.isinf(d):
                parts.append(f'<polygon points="{x1:.2f},{y - 2} {x1 + 8:.2f},{y + bar_height / 2:.1f} '
                             f'{x1:.2f},{y + bar_height + 2}" fill="steelblue"/>')
            y += bar_height + gap
        y += 3 * gap
    height = y + top
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">')
    axis = (f'<text x="{left}" y="{height - 2}" font-size="9">{escape(repr(lo))}</text>'
            f'<text x="{left + plot_w - 20}" y="{height - 2}" font-size="9">{escape(repr(hi))}</text>')
    return "\n".join([head, *parts, axis, "</svg>"]) + "\n"


# --- dendrograms and filtrations -------------------------------------------------

def dendrogram_text(dg) -> str:
    """``scale<TAB>a<TAB>b`` per merge; blocks are named by their first leaf label."""
    labels = dg.labels or tuple(str(i) for i in range(dg.n))
    mem = dg.members()
    lines = []
    for s, a, b in dg.merges:
        la, lb = sorted((mem[a][0], mem[b][0]))
        lines.append(f"{s!r}\t{labels[la]}\t{labels[lb]}")
    return "\n".join(lines) + ("\n" if lines else "")


def dendrogram_document(dg, ultrametric=None, digest=None) -> str:
    labels = dg.labels or tuple(str(i) for i in range(dg.n))
    doc = {"tool": "finiteph", "version": __version__, "input_sha256": digest,
           "labels": list(labels),
           "merges": [{"scale": s, "a": a, "b": b, "id": dg.n + i} for i, (s, a, b) in enumerate(dg.merges)]}
    if ultrametric is not None:
        doc["ultrametric"] = [[float(v) for v in row] for row in ultrametric]
    return json.dumps(doc, indent=2) + "\n"


def filtration_dump(filtration) -> str:
    lines = [f"{v!r}\t{','.join(str(x) for x in s)}" for s, v in filtration.ordered()]
    return "\n".join(lines) + ("\n" if lines else "")
