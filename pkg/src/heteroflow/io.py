"""Canonical JSON and the on-disk formats (datasets, splits, traces, checkpoints).

Everything written here is deterministic: keys are sorted, floats carry 17
significant digits and lines end with ``\\n``. Parsing a file written by this
module gives back an equal value.
"""

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from . import __version__
from .datagen import SyntheticGraphRecord
from .errors import HeteroflowError, ParseError, ValidationError
from .graph import Graph
from .models import ModelParams
from .motif import Motif, boundary_and_intra_edges


class IoError(HeteroflowError):
    """A file could not be read or written."""


# ------------------------------------------------------------ canonical json

def format_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError(f"cannot serialize non-finite float {x}")
    s = format(x, ".17g")
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def _encode(obj, out):
    if obj is None:
        out.append("null")
    elif obj is True or obj is False or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for k, key in enumerate(sorted(obj, key=str)):
            if k:
                out.append(",")
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for k, item in enumerate(obj):
            if k:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise ValidationError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """Canonical compact JSON text."""
    out = []
    _encode(obj, out)
    return "".join(out)


def write_text(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def read_text(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def write_json(path, obj):
    return write_text(path, dumps(obj) + "\n")


def read_json(path):
    try:
        return json.loads(read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from exc


def _matrix(a):
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _unmatrix(obj):
    shape = tuple(int(s) for s in obj["shape"])
    data = np.asarray(obj["data"], dtype=np.float64)
    if data.size != int(np.prod(shape)):
        raise ValidationError(f"matrix data has {data.size} entries, shape {shape} needs {int(np.prod(shape))}")
    return data.reshape(shape)


# ----------------------------------------------------------------- datasets

def record_to_dict(r):
    obj = {
        "graph": r.graph.to_dict(),
        "features": _matrix(r.features),
        "node_labels": r.node_labels.tolist(),
        "motif_nodes": list(r.motif_nodes),
        "boundary_edges": [list(e) for e in r.boundary_edges],
        "intra_motif_edges": [list(e) for e in r.intra_motif_edges],
        "graph_label": int(r.graph_label),
        "provenance": r.provenance,
    }
    if r.target is not None:
        obj["target"] = float(r.target)
    return obj


def record_from_dict(obj):
    try:
        return SyntheticGraphRecord(
            graph=Graph.from_dict(obj["graph"]),
            features=_unmatrix(obj["features"]),
            node_labels=obj["node_labels"],
            motif_nodes=obj.get("motif_nodes", ()),
            boundary_edges=obj.get("boundary_edges", ()),
            intra_motif_edges=obj.get("intra_motif_edges", ()),
            graph_label=int(obj.get("graph_label", 0)),
            provenance=obj.get("provenance", {}),
            target=obj.get("target"),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed record: {exc}") from exc


def write_dataset(path, records):
    return write_text(path, "".join(dumps(record_to_dict(r)) + "\n" for r in records))


def _json_lines(path):
    for lineno, line in enumerate(read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc


def read_dataset(path):
    records = []
    for lineno, obj in _json_lines(path):
        try:
            records.append(record_from_dict(obj))
        except ValidationError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from exc
    return records


def ingest_graph_regression(path, require_target=True):
    """Read a user graph-regression file.

    One JSON object per line with ``n``, ``edges``, ``features`` (list of rows)
    and a numeric ``target``. ``node_labels`` and ``motif_nodes`` are optional.
    """
    records = []
    for lineno, obj in _json_lines(path):
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", lineno)
        for key in ("n", "edges", "features"):
            if key not in obj:
                raise ParseError(f"missing field {key!r}", lineno)
        target = obj.get("target")
        if target is None and require_target:
            raise ParseError("missing numeric field 'target'", lineno)
        if target is not None and (isinstance(target, bool) or not isinstance(target, (int, float))):
            raise ParseError("'target' must be a number", lineno)
        try:
            g = Graph(obj["n"], [tuple(e) for e in obj["edges"]])
            feats = np.asarray(obj["features"], dtype=np.float64)
            if feats.ndim == 1:
                feats = feats[:, None]
            labels = obj.get("node_labels", [0] * g.n)
            motif_nodes = tuple(obj.get("motif_nodes", ()))
            boundary, intra = boundary_and_intra_edges(g, motif_nodes) if motif_nodes else ((), ())
            records.append(SyntheticGraphRecord(
                graph=g,
                features=feats,
                node_labels=labels,
                motif_nodes=motif_nodes,
                boundary_edges=boundary,
                intra_motif_edges=intra,
                graph_label=int(bool(motif_nodes)),
                provenance={"source": os.path.basename(str(path)), "line": lineno},
                target=None if target is None else float(target),
            ))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise type(exc)(f"line {lineno}: {exc}") from exc
            raise ParseError(str(exc), lineno) from exc
    return records


# ------------------------------------------------------------------- splits

def write_splits(path, splits, **meta):
    train, val, test = (sorted(int(i) for i in s) for s in splits)
    return write_json(path, {"train": train, "val": val, "test": test, **meta})


def read_splits(path):
    obj = read_json(path)
    try:
        return [list(map(int, obj[k])) for k in ("train", "val", "test")]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed split file {path}: {exc}") from exc


# ------------------------------------------------------------------- traces

TRACE_COLUMNS = ("t", "dirichlet", "rayleigh", "energy", "feature_norm")


def write_trace_csv(path, trace):
    rows = [",".join(TRACE_COLUMNS)]
    for k in range(len(trace.times)):
        energy = "" if trace.energy is None else format_float(trace.energy[k])
        rows.append(",".join([
            format_float(trace.times[k]),
            format_float(trace.dirichlet[k]),
            format_float(trace.rayleigh[k]),
            energy,
            format_float(trace.feature_norm[k]),
        ]))
    return write_text(path, "\n".join(rows) + "\n")


def read_trace_csv(path):
    """Columns as float arrays; a blank energy column comes back as ``None``."""
    reader = csv.DictReader(read_text(path).splitlines())
    if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
        raise ParseError(f"expected header {','.join(TRACE_COLUMNS)}", 1)
    cols = {c: [] for c in TRACE_COLUMNS}
    for row in reader:
        for c in TRACE_COLUMNS:
            cols[c].append(row[c])
    out = {}
    for c, vals in cols.items():
        out[c] = None if vals and all(v == "" for v in vals) else np.array(vals, dtype=np.float64)
    return out


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return write_text(path, "\n".join(lines) + "\n")


# -------------------------------------------------------------- checkpoints

def checkpoint_to_dict(params, config=None, seed=None):
    return {
        "family": params.family,
        "layers": params.layers,
        "in_dim": params.in_dim,
        "hidden": params.hidden,
        "tau": float(params.tau),
        "activation": params.activation,
        "tensors": {k: _matrix(v) for k, v in params.tensors.items()},
        "config": config or {},
        "seed": seed,
        "version": __version__,
    }


def checkpoint_from_dict(obj):
    try:
        return ModelParams(
            family=obj["family"],
            layers=int(obj["layers"]),
            in_dim=int(obj["in_dim"]),
            hidden=int(obj["hidden"]),
            tau=float(obj["tau"]),
            activation=obj["activation"],
            tensors={k: _unmatrix(v) for k, v in obj["tensors"].items()},
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed checkpoint: {exc}") from exc


def write_checkpoint(path, params, config=None, seed=None):
    return write_json(path, checkpoint_to_dict(params, config, seed))


def read_checkpoint(path):
    return checkpoint_from_dict(read_json(path))


# ----------------------------------------------------------- motif library

def write_motif_library(path, motifs):
    """``motifs`` maps string ids to :class:`Motif` objects."""
    return write_json(path, [{"id": str(k), **m.pattern.to_dict()} for k, m in sorted(motifs.items())])


def read_motif_library(path):
    obj = read_json(path)
    if not isinstance(obj, list):
        raise ValidationError("motif library must be a JSON array")
    out = {}
    for entry in obj:
        try:
            out[str(entry["id"])] = Motif(Graph.from_dict(entry), name=str(entry["id"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed motif entry: {exc}") from exc
    return out
