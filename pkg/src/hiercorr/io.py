"""File formats: data and correlation CSV, graph JSON/DOT, run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DimensionTooSmall, InputError, NonNumericCell, ParseError, RaggedRows
from .linalg import CorrelationMatrix, DataMatrix
from .networks import CorrelationGraph, Edge

PRECISION = ".12g"


def _num(x):
    return format(float(x), PRECISION)


def _read_table(path):
    """Header labels and a float array; rows and columns in errors are 1-based file positions."""
    try:
        with open(path, newline="", encoding="utf-8") as fp:
            rows = list(csv.reader(fp))
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc.reason})") from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ParseError(f"{path}: empty file", row=1)
    labels = [cell.strip() for cell in rows[0]]
    if any(not lab for lab in labels):
        raise ParseError(f"{path}: empty column label", row=1, column=labels.index("") + 1)
    if len(set(labels)) != len(labels):
        raise ParseError(f"{path}: duplicate column labels", row=1)
    n = len(labels)
    values = np.empty((len(rows) - 1, n))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != n:
            raise RaggedRows(f"{path}: expected {n} fields, found {len(row)}", row=r)
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericCell(f"{path}: cannot parse {cell.strip()!r}", row=r, column=c + 1) from None
            if not math.isfinite(v):
                raise NonNumericCell(f"{path}: non-finite value {cell.strip()!r}", row=r, column=c + 1)
            values[r - 2, c] = v
    return labels, values


def ingest_csv(path):
    """Read T records of N variables; the first row holds the column labels."""
    labels, values = _read_table(path)
    if values.shape[0] < 2 or values.shape[1] < 2:
        raise DimensionTooSmall(f"{path}: need at least 2 rows and 2 columns of data, got T={values.shape[0]}, N={values.shape[1]}")
    return DataMatrix(values, labels)


def write_data_csv(data, path):
    with open(path, "w", newline="", encoding="utf-8") as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(data.labels)
        for row in data.values:
            w.writerow([_num(v) for v in row])


def read_correlation_csv(path):
    """Square matrix with a label header row; validated as a correlation matrix."""
    labels, values = _read_table(path)
    if values.shape[0] != len(labels):
        raise ParseError(f"{path}: {values.shape[0]} rows for {len(labels)} columns, matrix must be square")
    if len(labels) < 2:
        raise DimensionTooSmall(f"{path}: need N >= 2")
    try:
        return CorrelationMatrix(values, labels)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_correlation_csv(c, path):
    with open(path, "w", newline="", encoding="utf-8") as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(c.labels)
        for row in c.values:
            w.writerow([_num(v) for v in row])


def sample_correlation():
    """The 10-stock correlation matrix shipped with the package."""
    ref = resources.files("hiercorr") / "data" / "nyse10_correlation.csv"
    with resources.as_file(ref) as path:
        return read_correlation_csv(path)


# -- graphs -------------------------------------------------------------------


def graph_to_dict(g):
    return {
        "format": "hiercorr.graph/1",
        "kind": g.kind,
        "n": g.n,
        "labels": list(g.labels),
        "edges": [
            {
                "i": e.i,
                "j": e.j,
                "source": g.labels[e.i],
                "target": g.labels[e.j],
                "weight": e.weight,
                "bootstrap": e.bootstrap,
            }
            for e in g.edges
        ],
    }


def write_graph_json(g, path):
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(graph_to_dict(g), fp, indent=2, sort_keys=True)
        fp.write("\n")


def read_graph_json(path):
    with open(path, encoding="utf-8") as fp:
        obj = json.load(fp)
    try:
        edges = tuple(Edge(int(e["i"]), int(e["j"]), float(e["weight"]), e.get("bootstrap")) for e in obj["edges"])
        return CorrelationGraph(int(obj["n"]), edges, obj["kind"], tuple(obj["labels"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed graph JSON: {exc}") from exc


def _dot_id(s):
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def graph_to_dot(g):
    lines = [f"graph {g.kind} {{"]
    for lab in g.labels:
        lines.append(f"  {_dot_id(lab)};")
    for e in g.edges:
        attrs = [f"weight={_num(e.weight)}"]
        label = _num(e.weight) if e.bootstrap is None else f"{_num(e.weight)} ({_num(e.bootstrap)})"
        attrs.append(f"label={_dot_id(label)}")
        if e.bootstrap is not None:
            attrs.append(f"bootstrap={_num(e.bootstrap)}")
        lines.append(f"  {_dot_id(g.labels[e.i])} -- {_dot_id(g.labels[e.j])} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_graph_dot(g, path):
    Path(path).write_text(graph_to_dot(g), encoding="utf-8")


# -- manifest -----------------------------------------------------------------


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fp:
        for chunk in iter(lambda: fp.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config):
    """SHA-256 of the canonical JSON form of a config dict."""
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def write_manifest(outdir, artifacts, config, seed):
    """List every artifact with its hash.  Only this file carries a timestamp."""
    outdir = Path(outdir)
    entries = []
    for p in sorted(artifacts):
        p = Path(p)
        entries.append({"path": p.name, "sha256": sha256_file(p), "bytes": p.stat().st_size})
    manifest = {
        "format": "hiercorr.manifest/1",
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seed": seed,
        "config": config,
        "config_hash": config_hash(config),
        "artifacts": entries,
    }
    path = outdir / "manifest.json"
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(manifest, fp, indent=2, sort_keys=True, default=str)
        fp.write("\n")
    return path
