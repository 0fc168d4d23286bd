"""Plain-text SGRID v1 occupancy files.

Format::

    SGRID 1
    N h
    ex ey [ez]
    <rows of 0/1 characters>

For N=2 the data is ``ey`` rows of ``ex`` characters, row 0 at the
smallest y.  For N=3 there are ``ez`` such blocks, z=0 first, separated
by a blank line.  Reading is whitespace-tolerant; writing is canonical
(no padding, single spaces, trailing newline) and normalizes the domain
to its tight bounding box with origin 0, so rewriting a file read from
disk is byte-identical.
"""

from __future__ import annotations

import io
import os

import numpy as np

from .grid import GridDomain, GridSpec

__all__ = ["SGridError", "read_sgrid", "write_sgrid", "dumps_sgrid", "loads_sgrid"]


class SGridError(ValueError):
    """Malformed SGRID input; carries the offending line (and column)."""

    def __init__(self, message: str, line: int, column: int | None = None):
        where = f"line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{where}: {message}")
        self.message = message
        self.line = line
        self.column = column


def loads_sgrid(text: str) -> GridDomain:
    lines = text.splitlines()

    def fail(msg, ln, col=None):
        raise SGridError(msg, ln, col)

    if not lines or lines[0].split() != ["SGRID", "1"]:
        fail("expected header 'SGRID 1'", 1)
    if len(lines) < 3:
        fail("missing 'N h' line", 2)
    parts = lines[1].split()
    if len(parts) != 2:
        fail("expected 'N h'", 2)
    try:
        n_dim = int(parts[0])
        h = float(parts[1])
    except ValueError:
        fail("could not parse 'N h'", 2)
    if n_dim not in (2, 3):
        fail(f"dimension must be 2 or 3, got {n_dim}", 2)
    if not h > 0:
        fail(f"cell size must be positive, got {h}", 2)
    ext_parts = lines[2].split()
    if len(ext_parts) != n_dim:
        fail(f"expected {n_dim} extents", 3)
    try:
        extent = tuple(int(p) for p in ext_parts)
    except ValueError:
        fail("could not parse extents", 3)
    if any(e < 1 for e in extent):
        fail(f"extents must be >= 1, got {extent}", 3)

    ex, ey = extent[0], extent[1]
    ez = extent[2] if n_dim == 3 else 1
    occ = np.zeros((ex, ey, ez), dtype=bool)

    ln = 3  # 0-based index of the next data line
    for iz in range(ez):
        # skip blank separator lines between slices
        while ln < len(lines) and not lines[ln].strip():
            ln += 1
        for iy in range(ey):
            if ln >= len(lines):
                fail(f"unexpected end of file: missing row y={iy}"
                     + (f" of slice z={iz}" if n_dim == 3 else ""), len(lines) + 1)
            row = "".join(lines[ln].split())
            if not row:
                fail(f"blank line where row y={iy} expected", ln + 1)
            if len(row) != ex:
                fail(f"row has {len(row)} cells, expected {ex}", ln + 1)
            for ix, ch in enumerate(row):
                if ch == "1":
                    occ[ix, iy, iz] = True
                elif ch != "0":
                    fail(f"invalid character {ch!r}", ln + 1, ix + 1)
            ln += 1
    for extra in range(ln, len(lines)):
        if lines[extra].strip():
            fail("trailing non-blank content", extra + 1)

    if n_dim == 2:
        occ = occ[:, :, 0]
    spec = GridSpec(n_dim, h, (0,) * n_dim, occ.shape)
    return GridDomain(spec, occ)


def dumps_sgrid(domain: GridDomain) -> str:
    """Canonical SGRID text for a domain (tight bounding box, origin dropped)."""
    if domain.is_empty:
        raise ValueError("cannot write an empty domain")
    d = domain.trimmed()
    occ = d.occupancy
    n_dim = d.dimension
    buf = io.StringIO()
    buf.write("SGRID 1\n")
    buf.write(f"{n_dim} {d.cell_size!r}\n")
    buf.write(" ".join(str(e) for e in d.spec.extent) + "\n")
    occ3 = occ if n_dim == 3 else occ[:, :, None]
    for iz in range(occ3.shape[2]):
        if iz:
            buf.write("\n")
        for iy in range(occ3.shape[1]):
            buf.write("".join("1" if v else "0" for v in occ3[:, iy, iz]))
            buf.write("\n")
    return buf.getvalue()


def read_sgrid(path: str | os.PathLike) -> GridDomain:
    with open(path, "r", encoding="ascii") as f:
        text = f.read()
    try:
        return loads_sgrid(text)
    except SGridError as e:
        raise SGridError(f"{os.fspath(path)}: {e.message}", e.line, e.column) from None


def write_sgrid(path: str | os.PathLike, domain: GridDomain) -> None:
    text = dumps_sgrid(domain)
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(text)
