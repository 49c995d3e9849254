"""Text I/O: intensity matrices, result documents, and small tables.

Matrix files are delimiter-separated UTF-8 text, one sample per row,
first column the sample ID, with an optional header row of probe
positions.  Tab or comma is autodetected; values are written with 17
significant digits so a write/read round trip is exact.
"""

from __future__ import annotations

import json
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import MatrixFormatError
from .scan import Detection, Pedigree
from .statistic import IntensityMatrix

__all__ = [
    "read_matrix",
    "write_matrix",
    "result_document",
    "read_detections_table",
    "read_pedigree",
    "write_table",
]


def _sniff_delimiter(line: str) -> str:
    if "\t" in line:
        return "\t"
    if "," in line:
        return ","
    return None  # any whitespace


def _split(line: str, delim):
    fields = line.rstrip("\n").split(delim)
    if delim is not None:
        return [f.strip() for f in fields]
    return fields


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _looks_like_header(fields) -> bool:
    # A header names the sample column, then lists probe IDs.  String IDs
    # are unambiguous; integer IDs are positions, which must strictly
    # increase, and a row of continuous intensities never looks like that.
    if len(fields) < 2 or _is_number(fields[0]):
        return False
    tail = fields[1:]
    if not all(_is_number(f) for f in tail):
        return True
    if not all(f.lstrip("+-").isdigit() for f in tail):
        return False
    values = [int(f) for f in tail]
    return all(b > a for a, b in zip(values, values[1:]))


def read_matrix(path) -> IntensityMatrix:
    """Parse a matrix file; raises MatrixFormatError with the line number."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise MatrixFormatError(f"{path}: empty matrix file")
    delim = _sniff_delimiter(lines[0])
    first = _split(lines[0], delim)
    positions = None
    start = 0
    if _looks_like_header(first):
        header = first[1:]
        if all(f.lstrip("+-").isdigit() for f in header):
            positions = np.array([int(f) for f in header], dtype=np.int64)
        start = 1
    rows = []
    ids = []
    width = None
    for lineno, line in enumerate(lines[start:], start=start + 1):
        fields = _split(line, delim)
        if len(fields) < 2:
            raise MatrixFormatError(f"{path}:{lineno}: expected a sample ID and values")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise MatrixFormatError(
                f"{path}:{lineno}: expected {width - 1} values, got {len(fields) - 1}"
            )
        ids.append(fields[0])
        try:
            rows.append([float(f) for f in fields[1:]])
        except ValueError as exc:
            raise MatrixFormatError(f"{path}:{lineno}: {exc}") from None
    values = np.array(rows, dtype=np.float64)
    if positions is not None and positions.size != values.shape[1]:
        raise MatrixFormatError(f"{path}: header length does not match row width")
    try:
        return IntensityMatrix(values, sample_ids=ids, probe_positions=positions)
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: {exc}") from None


def write_matrix(target, data: IntensityMatrix, delimiter: str = "\t") -> None:
    """Write a matrix with a probe-position header at full precision."""

    def _write(fh: TextIO):
        fh.write(delimiter.join(["sample"] + [str(p) for p in data.probe_positions]) + "\n")
        for sid, row in zip(data.sample_ids, data.values):
            fh.write(delimiter.join([sid] + [f"{v:.17g}" for v in row]) + "\n")

    if hasattr(target, "write"):
        _write(target)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            _write(fh)


def result_document(
    version: str,
    config: Mapping,
    detections: Sequence[Detection],
    sample_ids: Sequence[str],
) -> str:
    """Serialize detections plus the full config echo as stable JSON.

    Identical inputs produce identical bytes: keys are sorted and floats
    use their shortest round-trip representation.
    """
    doc = {
        "tool": "cnvscan",
        "version": version,
        "config": dict(config),
        "detections": [
            {
                "tau1": d.tau1,
                "tau2": d.tau2,
                "score": d.score,
                "p_value": d.p_value,
                "carriers": sorted(sample_ids[i] for i in d.carriers),
            }
            for d in detections
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def read_detections_table(path) -> dict[str, list[tuple[int, int]]]:
    """Read per-sample detections: lines ``sample<TAB>tau1<TAB>tau2``.

    A line holding only a sample ID declares a sample with no
    detections (so pedigree partners without calls can be referenced).
    """
    table: dict[str, list[tuple[int, int]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = _split(line, _sniff_delimiter(line))
            if len(fields) == 1:
                table.setdefault(fields[0], [])
                continue
            if len(fields) != 3:
                raise MatrixFormatError(
                    f"{path}:{lineno}: expected 'sample tau1 tau2', got {len(fields)} fields"
                )
            try:
                tau1, tau2 = int(fields[1]), int(fields[2])
            except ValueError as exc:
                raise MatrixFormatError(f"{path}:{lineno}: {exc}") from None
            table.setdefault(fields[0], []).append((tau1, tau2))
    return table


def read_pedigree(path) -> Pedigree:
    """Read pedigree lines: ``pair A B`` or ``trio CHILD PARENT PARENT``."""
    pairs = []
    trios = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = _split(line, _sniff_delimiter(line))
            kind = fields[0].lower()
            if kind == "pair" and len(fields) == 3:
                pairs.append((fields[1], fields[2]))
            elif kind == "trio" and len(fields) == 4:
                trios.append((fields[1], fields[2], fields[3]))
            else:
                raise MatrixFormatError(
                    f"{path}:{lineno}: expected 'pair A B' or 'trio C P1 P2'"
                )
    return Pedigree(replicate_pairs=tuple(pairs), trios=tuple(trios))


def write_table(fh: TextIO, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write a delimiter-separated table with a one-line header."""
    fh.write("\t".join(header) + "\n")
    for row in rows:
        fh.write("\t".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row) + "\n")
