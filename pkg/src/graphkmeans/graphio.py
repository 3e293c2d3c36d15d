"""Dataset files, IAM GXL conversion, and run manifests.

Dataset files are JSON lines.  Line 1 is a header, every further non-blank
line is one graph::

    {"format": "graphkmeans-dataset", "version": 1, "d_v": 2, "d_e": 0,
     "node_attributes": [{"name": "x", "type": "real"}, {"name": "y", "type": "real"}],
     "edge_attributes": [], "transforms_applied": [], "transform_checksum": "..."}
    {"id": "g0", "label": "A", "nodes": [[0.1, 0.2], [1.0, 0.5]], "edges": [[0, 1, []]]}

``d_v``/``d_e`` give the stored record widths.  Categorical attributes are
stored as strings and expanded by the ``one-hot`` transform; ``edge-flag``
prepends a constant 1.0 to every edge attribute.  Transforms listed in
``transforms_applied`` are never applied twice.
"""
from __future__ import annotations

import hashlib
import json
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, EmptyDatasetError, ParseError, SchemaError
from .graphs import AttributedGraph, AttributeSpace

FORMAT = "graphkmeans-dataset"
MANIFEST_FORMAT = "graphkmeans-manifest"
ONE_HOT = "one-hot"
EDGE_FLAG = "edge-flag"
TRANSFORM_ORDER = (ONE_HOT, EDGE_FLAG)
DEFAULT_TRANSFORMS = TRANSFORM_ORDER


@dataclass(frozen=True)
class DatasetStats:
    graphs: int
    classes: int
    avg_nodes: float
    max_nodes: int
    avg_edges: float
    max_edges: int

    def row(self, name: str = "") -> str:
        return (f"{name:<12} {self.graphs:>9} {self.classes:>11} {self.avg_nodes:>10.1f} "
                f"{self.max_nodes:>10} {self.avg_edges:>10.1f} {self.max_edges:>10}")

    @staticmethod
    def header() -> str:
        return (f"{'data set':<12} {'#(graphs)':>9} {'#(classes)':>11} {'avg(nodes)':>10} "
                f"{'max(nodes)':>10} {'avg(edges)':>10} {'max(edges)':>10}")


@dataclass
class Dataset:
    graphs: list[AttributedGraph]
    space: AttributeSpace
    header: dict

    @property
    def stats(self) -> DatasetStats:
        return dataset_stats(self.graphs)

    def by_id(self, gid) -> AttributedGraph:
        for g in self.graphs:
            if str(g.id) == str(gid):
                return g
        raise ConfigError(f"unknown graph id {gid!r}")


def dataset_stats(graphs: Sequence[AttributedGraph]) -> DatasetStats:
    if not graphs:
        raise EmptyDatasetError("no graphs")
    nodes = [g.order for g in graphs]
    edges = [g.n_edges for g in graphs]
    return DatasetStats(len(graphs), len({g.label for g in graphs if g.label is not None}),
                        float(np.mean(nodes)), max(nodes), float(np.mean(edges)), max(edges))


def transform_checksum(applied: Sequence[str]) -> str:
    return hashlib.sha256("|".join(applied).encode()).hexdigest()[:16]


def file_checksum(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _field_specs(header, key, width, line):
    specs = header.get(key)
    if specs is None:
        specs = [{"name": f"{key[0]}{i}", "type": "real"} for i in range(width)]
    if len(specs) != width:
        raise SchemaError(f"{key} declares {len(specs)} fields but width is {width}", line)
    for s in specs:
        if s.get("type", "real") not in ("real", "categorical"):
            raise SchemaError(f"unknown attribute type {s.get('type')!r}", line)
        if s.get("type") == "categorical" and not s.get("values"):
            raise SchemaError(f"categorical attribute {s.get('name')!r} lists no values", line)
    return specs


def _encode(values, specs, one_hot, line, what):
    out = []
    for v, s in zip(values, specs):
        if s.get("type", "real") == "categorical":
            if not one_hot:
                raise SchemaError(f"{what}: categorical attribute {s['name']!r} needs the one-hot transform", line)
            cats = s["values"]
            if v not in cats:
                raise SchemaError(f"{what}: value {v!r} not among {cats}", line)
            block = [0.0] * len(cats)
            block[cats.index(v)] = 1.0
            out.extend(block)
        else:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"{what}: expected a real number, got {v!r}", line)
            out.append(float(v))
    return out


def _encoded_width(specs, one_hot):
    return sum(len(s["values"]) if (one_hot and s.get("type") == "categorical") else 1 for s in specs)


def load_dataset(path, transforms: Iterable[str] = DEFAULT_TRANSFORMS) -> Dataset:
    """Read a dataset file, applying the requested transforms not yet applied."""
    transforms = list(transforms)
    for t in transforms:
        if t not in TRANSFORM_ORDER:
            raise ConfigError(f"unknown transform {t!r}")
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    if not lines:
        raise EmptyDatasetError("empty file", 1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed header: {exc.msg}", 1) from None
    if not isinstance(header, dict) or header.get("format") != FORMAT:
        raise ParseError(f"header must be an object with format {FORMAT!r}", 1)
    try:
        d_v, d_e = int(header["d_v"]), int(header["d_e"])
    except (KeyError, TypeError, ValueError):
        raise ParseError("header needs integer d_v and d_e", 1) from None
    applied = list(header.get("transforms_applied", []))
    if header.get("transform_checksum", transform_checksum(applied)) != transform_checksum(applied):
        raise SchemaError("transform checksum does not match transforms_applied", 1)
    node_specs = _field_specs(header, "node_attributes", d_v, 1)
    edge_specs = _field_specs(header, "edge_attributes", d_e, 1)
    todo = [t for t in TRANSFORM_ORDER if t in transforms and t not in applied]
    one_hot = ONE_HOT in todo or ONE_HOT in applied
    flag = EDGE_FLAG in todo
    node_width = _encoded_width(node_specs, one_hot)
    edge_width = _encoded_width(edge_specs, one_hot) + (1 if flag else 0)

    graphs = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed record: {exc.msg}", lineno) from None
        if not isinstance(rec, dict) or "nodes" not in rec:
            raise ParseError("record must be an object with 'nodes'", lineno)
        gid = rec.get("id", f"g{len(graphs)}")
        nodes = rec["nodes"]
        if not isinstance(nodes, list) or not nodes:
            raise SchemaError(f"graph {gid!r} has no vertices", lineno)
        node_rows = []
        for v in nodes:
            if not isinstance(v, list) or len(v) != d_v:
                raise SchemaError(f"graph {gid!r}: vertex attribute {v!r} does not have {d_v} entries", lineno)
            node_rows.append(_encode(v, node_specs, one_hot, lineno, f"graph {gid!r}"))
        order = len(node_rows)
        edges, seen = [], set()
        for e in rec.get("edges", []):
            if not isinstance(e, list) or len(e) not in (2, 3):
                raise ParseError(f"graph {gid!r}: edge {e!r} must be [i, j] or [i, j, attrs]", lineno)
            i, j = e[0], e[1]
            if not (isinstance(i, int) and isinstance(j, int) and 0 <= i < order and 0 <= j < order) or i == j:
                raise SchemaError(f"graph {gid!r}: invalid edge endpoints ({i}, {j})", lineno)
            key = (min(i, j), max(i, j))
            if key in seen:
                raise SchemaError(f"graph {gid!r}: duplicate edge {key}", lineno)
            seen.add(key)
            attrs = e[2] if len(e) == 3 else []
            if not isinstance(attrs, list) or len(attrs) != d_e:
                raise SchemaError(f"graph {gid!r}: edge {key} attribute does not have {d_e} entries", lineno)
            vec = _encode(attrs, edge_specs, one_hot, lineno, f"graph {gid!r}")
            if flag:
                vec = [1.0] + vec
            edges.append((i, j, vec))
        try:
            g = AttributedGraph.from_parts(np.array(node_rows, dtype=np.float64).reshape(order, node_width), edges,
                                           d_e=edge_width, id=gid, label=rec.get("label"))
        except DimensionError as exc:
            raise SchemaError(f"graph {gid!r}: {exc}", lineno) from None
        graphs.append(g)
    if not graphs:
        raise EmptyDatasetError("dataset contains no graphs", len(lines))
    applied_after = [t for t in TRANSFORM_ORDER if t in applied or t in todo]
    header = dict(header, transforms_applied=applied_after, transform_checksum=transform_checksum(applied_after))
    return Dataset(graphs, AttributeSpace(node_width, edge_width), header)


def graph_record(g: AttributedGraph, round_digits: int | None = None) -> dict:
    def fmt(a):
        vals = [float(v) for v in a]
        return [round(v, round_digits) for v in vals] if round_digits is not None else vals

    rec = {"id": g.id, "label": g.label, "nodes": [fmt(v) for v in g.node_attrs]}
    rec["edges"] = [[i, j, fmt(a)] for i, j, a in g.edges]
    return rec


def write_dataset(path, graphs: Sequence[AttributedGraph], name: str | None = None,
                  transforms_applied: Sequence[str] = TRANSFORM_ORDER) -> None:
    """Write graphs whose attributes are already fully encoded."""
    if not graphs:
        raise EmptyDatasetError("no graphs to write")
    d_v, d_e = graphs[0].d_v, graphs[0].d_e
    applied = [t for t in TRANSFORM_ORDER if t in transforms_applied]
    header = {"format": FORMAT, "version": 1, "name": name, "d_v": d_v, "d_e": d_e,
              "transforms_applied": applied, "transform_checksum": transform_checksum(applied)}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for g in graphs:
            if (g.d_v, g.d_e) != (d_v, d_e):
                raise DimensionError("graphs have differing attribute dimensions")
            fh.write(json.dumps(graph_record(g)) + "\n")


def _gxl_value(attr):
    for child in attr:
        tag = child.tag.lower()
        text = (child.text or "").strip()
        if tag in ("float", "double"):
            return float(text)
        if tag in ("int", "integer"):
            return int(text)
        return text
    return None


def read_gxl(path, node_fields: Sequence[str], edge_fields: Sequence[str] = ()) -> dict:
    """One graph from an IAM graph database GXL file as a raw record."""
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None
    graph = root.find("graph")
    if graph is None:
        raise ParseError(f"{path}: no <graph> element")
    index, nodes, edges = {}, [], []
    for node in graph.findall("node"):
        attrs = {a.get("name"): _gxl_value(a) for a in node.findall("attr")}
        index[node.get("id")] = len(nodes)
        try:
            nodes.append([attrs[f] for f in node_fields])
        except KeyError as exc:
            raise ParseError(f"{path}: node {node.get('id')} lacks attribute {exc.args[0]!r}") from None
    seen = set()
    for edge in graph.findall("edge"):
        i, j = index[edge.get("from")], index[edge.get("to")]
        key = (min(i, j), max(i, j))
        if i == j or key in seen:
            continue
        seen.add(key)
        attrs = {a.get("name"): _gxl_value(a) for a in edge.findall("attr")}
        edges.append([i, j, [attrs.get(f) for f in edge_fields]])
    return {"id": graph.get("id") or os.path.splitext(os.path.basename(path))[0], "nodes": nodes, "edges": edges}


def read_cxl(path) -> dict[str, str]:
    """``file -> class`` map from an IAM CXL index file."""
    root = ET.parse(path).getroot()
    return {el.get("file"): el.get("class") for el in root.iter() if el.get("file") and el.get("class")}


def convert_gxl(gxl_dir, cxl_path, out_path, node_fields: Sequence[str], edge_fields: Sequence[str] = (),
                name: str | None = None) -> int:
    """Convert the graphs listed in an IAM CXL index to a dataset file.

    String-valued attributes become categorical fields (one-hot on load).
    Returns the number of graphs written.
    """
    classes = read_cxl(cxl_path)
    records = []
    for fname, label in classes.items():
        rec = read_gxl(os.path.join(gxl_dir, fname), node_fields, edge_fields)
        rec["label"] = label
        records.append(rec)
    if not records:
        raise EmptyDatasetError(f"{cxl_path} lists no graphs")

    def specs(fields, rows):
        out = []
        for k, f in enumerate(fields):
            vals = [r[k] for r in rows]
            if any(isinstance(v, str) for v in vals):
                out.append({"name": f, "type": "categorical", "values": sorted({str(v) for v in vals})})
            else:
                out.append({"name": f, "type": "real"})
        return out

    node_rows = [v for r in records for v in r["nodes"]]
    edge_rows = [e[2] for r in records for e in r["edges"]]
    node_specs = specs(node_fields, node_rows)
    edge_specs = specs(edge_fields, edge_rows)
    for r in records:
        for v in r["nodes"]:
            for k, s in enumerate(node_specs):
                v[k] = str(v[k]) if s["type"] == "categorical" else v[k]
        for e in r["edges"]:
            for k, s in enumerate(edge_specs):
                e[2][k] = str(e[2][k]) if s["type"] == "categorical" else e[2][k]
    header = {"format": FORMAT, "version": 1, "name": name, "d_v": len(node_fields), "d_e": len(edge_fields),
              "node_attributes": node_specs, "edge_attributes": edge_specs,
              "transforms_applied": [], "transform_checksum": transform_checksum([])}
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for r in records:
            fh.write(json.dumps({"id": r["id"], "label": r["label"], "nodes": r["nodes"], "edges": r["edges"]}) + "\n")
    return len(records)


def build_manifest(result, report, config, dataset_path=None, runs: int = 1, matcher: dict | None = None,
                   round_digits: int | None = None) -> dict:
    """Plain-data description of a finished clustering run.

    No timestamps or host details are recorded, so identical runs give
    byte-identical manifests.
    """
    dataset = None
    if dataset_path is not None:
        dataset = {"path": os.fspath(dataset_path), "sha256": file_checksum(dataset_path)}
    ver = result.verification
    return {
        "format": MANIFEST_FORMAT,
        "version": 1,
        "config": {
            "algorithm": result.algorithm,
            "k": config.k,
            "max_iters": config.max_iters,
            "no_improve_limit": config.no_improve_limit,
            "matcher": matcher or {"kind": config.matcher},
            "run_seed": config.run_seed,
            "runs": runs,
            "selected_seed": result.seed,
            "empty_cluster_policy": config.empty_cluster_policy,
            "verification_mode": config.verification_mode,
        },
        "dataset": dataset,
        "result": {
            "objective": result.objective,
            "best_iteration": result.best_iteration,
            "iterations": result.iterations,
            "assignment": [int(a) for a in result.assignment],
            "objective_trace": result.objective_trace,
            "matchings": {
                "init": result.init_matchings,
                "total": result.matchings_total,
                "per_iteration": [dict(h.matchings) for h in result.history],
            },
        },
        "verification": None if ver is None else {"checks": ver.checks, "violations": list(ver.violations)},
        "report": report.as_dict() if report is not None else None,
        "centroids": [graph_record(c, round_digits) for c in result.centroids],
        "centroid_d_v": result.centroids[0].d_v,
        "centroid_d_e": result.centroids[0].d_e,
        "centroid_rounding": round_digits,
    }


def save_manifest(manifest: dict, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise ConfigError(f"cannot write manifest {path}: {exc.strerror}") from None


def load_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed manifest: {exc.msg}", exc.lineno) from None
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ParseError(f"not a {MANIFEST_FORMAT} file")
    return manifest


def manifest_centroids(manifest: dict) -> list[AttributedGraph]:
    d_v = manifest["centroid_d_v"]
    out = []
    for rec in manifest["centroids"]:
        nodes = np.array(rec["nodes"], dtype=np.float64).reshape(len(rec["nodes"]), d_v)
        edges = [(i, j, a) for i, j, a in rec["edges"]]
        out.append(AttributedGraph.from_parts(nodes, edges, d_e=manifest["centroid_d_e"], id=rec.get("id"),
                                              label=rec.get("label")))
    return out


def manifest_speedup(manifest: dict, baseline: dict) -> tuple[float, float]:
    """(per-iteration, total) speedup of ``manifest`` relative to ``baseline``."""
    def per_iter(m):
        rows = m["result"]["matchings"]["per_iteration"]
        return sum(sum(r.values()) for r in rows) / len(rows)

    return per_iter(baseline) / per_iter(manifest), baseline["result"]["matchings"]["total"] / manifest["result"]["matchings"]["total"]
