"""Text file formats.

* ``mdl-v1`` dictionaries and ``mds-v1`` datasets: a header line
  ``<magic> <count> <N> <rho>`` then ``count`` blocks of ``N`` lines holding
  ``rho`` floats with 17 significant digits, blocks separated by a blank line.
* CSV tables: traces, noise sweeps, labeled distance matrices, partitions,
  dendrogram merge lists, embeddings and ground-truth codes.
* Run manifests as JSON lines.

Every writer goes through :func:`atomic_write`, so readers never observe a
half-written file.
"""

import csv
import io as _io
import json
import os
import tempfile

import numpy as np

from .errors import GrassdictError

DICT_MAGIC = "mdl-v1"
DATA_MAGIC = "mds-v1"


class FormatError(GrassdictError):
    """A file does not follow its declared format."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def fmt(x):
    return format(float(x), ".17g")


def atomic_write(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- atom stacks -------------------------------------------------------------


def format_atoms(atoms, magic):
    atoms = np.asarray(atoms, dtype=float)
    if atoms.ndim != 3:
        raise GrassdictError("expected an (M, N, rho) array")
    m, n, r = atoms.shape
    lines = [f"{magic} {m} {n} {r}"]
    for i, atom in enumerate(atoms):
        if i:
            lines.append("")
        lines.extend(" ".join(fmt(v) for v in row) for row in atom)
    return "\n".join(lines) + "\n"


def parse_atoms(text, magic, path="<string>"):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError(path, 1, "empty file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != magic:
        raise FormatError(path, 1, f"expected header '{magic} <count> <N> <rho>'")
    try:
        m, n, r = (int(v) for v in head[1:])
    except ValueError:
        raise FormatError(path, 1, "header sizes must be integers") from None
    if m < 1 or n < 1 or r < 1:
        raise FormatError(path, 1, "header sizes must be positive")
    out = np.empty((m, n, r))
    pos = 1
    for i in range(m):
        if i:
            if pos >= len(lines) or lines[pos].strip():
                raise FormatError(path, pos + 1, "blank separator line expected")
            pos += 1
        for j in range(n):
            if pos >= len(lines):
                raise FormatError(path, pos + 1, "unexpected end of file")
            fields = lines[pos].split()
            if len(fields) != r:
                raise FormatError(path, pos + 1, f"expected {r} values, found {len(fields)}")
            try:
                out[i, j] = [float(v) for v in fields]
            except ValueError:
                raise FormatError(path, pos + 1, "malformed number") from None
            pos += 1
    if pos != len(lines):
        raise FormatError(path, pos + 1, "trailing content after the last block")
    if not np.all(np.isfinite(out)):
        raise FormatError(path, 1, "non-finite values")
    return out


def _read_text(path):
    with open(path) as fh:
        return fh.read()


def write_dictionary(path, dictionary):
    atomic_write(path, format_atoms(dictionary, DICT_MAGIC))


def read_dictionary(path):
    return parse_atoms(_read_text(path), DICT_MAGIC, os.fspath(path))


def write_dataset(path, signals):
    atomic_write(path, format_atoms(signals, DATA_MAGIC))


def read_dataset(path):
    return parse_atoms(_read_text(path), DATA_MAGIC, os.fspath(path))


# -- CSV tables --------------------------------------------------------------


def _csv_text(header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _read_csv(path, expected_header=None):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(os.fspath(path), 1, "empty CSV file")
    if expected_header is not None and tuple(rows[0]) != tuple(expected_header):
        raise FormatError(os.fspath(path), 1, f"expected header {','.join(expected_header)}")
    return rows[0], rows[1:]


def trace_csv(trace_rows, columns):
    rows = [[str(i)] + [f"{v:.6f}" for v in row] for i, row in enumerate(trace_rows, start=1)]
    return _csv_text(("iter",) + tuple(columns), rows)


def write_trace(path, trace_rows, columns):
    atomic_write(path, trace_csv(trace_rows, columns))


def read_trace(path):
    """Return ``(columns, rows)`` of a trace CSV; rows exclude the iteration."""
    header, rows = _read_csv(path)
    if not header or header[0] != "iter":
        raise FormatError(os.fspath(path), 1, "trace CSV must start with an 'iter' column")
    values = []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise FormatError(os.fspath(path), lineno, "wrong number of fields")
        try:
            values.append([float(v) for v in row[1:]])
        except ValueError:
            raise FormatError(os.fspath(path), lineno, "malformed number") from None
    return tuple(header[1:]), values


def write_sweep(path, sweep_rows, columns):
    rows = []
    for r in sweep_rows:
        level = "inf" if r.snr_db is None else f"{r.snr_db:g}"
        rows.append([level, r.algo, r.dataset] + [f"{v:.6f}" for v in r.metrics])
    atomic_write(path, _csv_text(("snr_db", "algo", "dataset") + tuple(columns), rows))


def write_distance_matrix(path, labels, matrix):
    matrix = np.asarray(matrix, dtype=float)
    rows = [[lab] + [fmt(v) for v in row] for lab, row in zip(labels, matrix)]
    atomic_write(path, _csv_text([""] + list(labels), rows))


def read_distance_matrix(path):
    """Return ``(labels, matrix)`` from a labeled square CSV."""
    path = os.fspath(path)
    header, rows = _read_csv(path)
    labels = header[1:]
    n = len(labels)
    if n == 0 or len(rows) != n:
        raise FormatError(path, 1, "distance matrix must be square and labeled")
    out = np.empty((n, n))
    for i, row in enumerate(rows):
        if len(row) != n + 1:
            raise FormatError(path, i + 2, f"expected {n + 1} fields")
        if row[0] != labels[i]:
            raise FormatError(path, i + 2, "row label does not match the header")
        try:
            out[i] = [float(v) for v in row[1:]]
        except ValueError:
            raise FormatError(path, i + 2, "malformed number") from None
    if not np.all(np.isfinite(out)):
        raise FormatError(path, 2, "non-finite distances")
    return labels, out


def write_partition(path, labels, exemplars=None):
    rows = []
    for i, lab in enumerate(labels):
        ex = "" if exemplars is None else str(int(exemplars[lab]))
        rows.append([str(i), str(int(lab)), ex])
    atomic_write(path, _csv_text(("index", "label", "exemplar"), rows))


def read_partition(path):
    _, rows = _read_csv(path, ("index", "label", "exemplar"))
    return np.array([int(r[1]) for r in rows])


def write_merges(path, merges):
    rows = [[str(s), str(a), str(b), fmt(h)] for s, (a, b, h) in enumerate(merges, start=1)]
    atomic_write(path, _csv_text(("step", "a", "b", "height"), rows))


def write_embedding(path, coords):
    coords = np.asarray(coords, dtype=float)
    if coords.shape[1] == 2:
        header = ("index", "x", "y")
    else:
        header = ("index",) + tuple(f"x{j}" for j in range(coords.shape[1]))
    rows = [[str(i)] + [fmt(v) for v in row] for i, row in enumerate(coords)]
    atomic_write(path, _csv_text(header, rows))


def write_codes(path, truth):
    rows = []
    q, a = truth.indices.shape
    for i in range(q):
        for j in range(a):
            rot = ""
            if truth.rotations is not None:
                rot = " ".join(fmt(v) for v in truth.rotations[i, j].ravel())
            rows.append([str(i), str(int(truth.indices[i, j])), fmt(truth.coeffs[i, j]), rot])
    atomic_write(path, _csv_text(("signal", "atom", "coeff", "rotation"), rows))


def append_manifest(path, record):
    line = json.dumps(record, sort_keys=True) + "\n"
    with open(path, "a") as fh:
        fh.write(line)
