"""Graph directory format and weighted-edge files.

A graph directory holds five UTF-8, tab-separated files:

``meta.tsv``      one line ``n<TAB>d<TAB>C``
``features.tsv``  n lines of d reals
``edges.tsv``     one ``i<TAB>j`` line per undirected edge, 0-indexed, i < j
``labels.tsv``    n lines with one integer each
``split.tsv``     n lines, each ``train``, ``test`` or ``none``

The loader trusts ``meta.tsv`` for the feature dimension; nothing about the
public citation datasets is hard-coded.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ValidationError
from .graph import Graph

# Node/edge/label counts of the usual benchmarks, for checking converted data.
DATASET_STATS = {
    "cora": {"nodes": 2708, "edges": 5429, "labels": 7},
    "citeseer": {"nodes": 3327, "edges": 4732, "labels": 6},
    "polblogs": {"nodes": 1490, "edges": 19090, "labels": 2},
}

GRAPH_FILES = ("meta.tsv", "features.tsv", "edges.tsv", "labels.tsv", "split.tsv")


def _fmt(x: float) -> str:
    return repr(float(x))


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise FileNotFoundError(f"missing graph file: {path}")
    return [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]


def load_graph(directory) -> Graph:
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"graph directory not found: {root}")
    meta = _read_lines(root / "meta.tsv")
    try:
        n, d, C = (int(v) for v in meta[0].split("\t"))
    except (IndexError, ValueError) as exc:
        raise ValidationError(f"malformed meta.tsv in {root}") from exc

    rows = _read_lines(root / "features.tsv")
    if len(rows) != n:
        raise ValidationError(f"features.tsv has {len(rows)} rows, expected {n}")
    X = np.array([[float(v) for v in r.split("\t")] for r in rows]).reshape(n, d)

    A = np.zeros((n, n))
    for ln in _read_lines(root / "edges.tsv"):
        i, j = (int(v) for v in ln.split("\t"))
        if not 0 <= i < j < n:
            raise ValidationError(f"bad edge line {ln!r}: need 0 <= i < j < n")
        A[i, j] = A[j, i] = 1.0

    labels = np.array([int(v) for v in _read_lines(root / "labels.tsv")], dtype=np.int64)
    split = _read_lines(root / "split.tsv")
    if len(labels) != n or len(split) != n:
        raise ValidationError("labels.tsv and split.tsv must have n lines")
    bad = set(split) - {"train", "test", "none"}
    if bad:
        raise ValidationError(f"unknown split values {sorted(bad)}")
    split = np.array(split)
    return Graph(X, A, labels, C, split == "train", split == "test", name=root.name)


def save_graph(graph: Graph, directory) -> Path:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    (root / "meta.tsv").write_text(f"{graph.n}\t{graph.d}\t{graph.num_classes}\n", encoding="utf-8")
    (root / "features.tsv").write_text(
        "".join("\t".join(_fmt(v) for v in row) + "\n" for row in graph.features), encoding="utf-8")
    iu, ju = np.nonzero(np.triu(graph.adjacency, 1))
    (root / "edges.tsv").write_text(
        "".join(f"{i}\t{j}\n" for i, j in zip(iu, ju)), encoding="utf-8")
    (root / "labels.tsv").write_text("".join(f"{y}\n" for y in graph.labels), encoding="utf-8")
    split = np.where(graph.train_mask, "train", np.where(graph.test_mask, "test", "none"))
    (root / "split.tsv").write_text("".join(f"{s}\n" for s in split), encoding="utf-8")
    return root


def save_weighted_edges(W: np.ndarray, path) -> Path:
    """Write the upper-triangle nonzeros of a symmetric matrix as ``i j w`` lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = W.shape[0]
    iu, ju = np.nonzero(np.triu(W, 1))
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"# n\t{n}\n")
        for i, j in zip(iu, ju):
            fh.write(f"{i}\t{j}\t{_fmt(W[i, j])}\n")
    return path


def load_weighted_edges(path, n: int | None = None) -> np.ndarray:
    lines = _read_lines(Path(path))
    if lines and lines[0].startswith("# n"):
        file_n = int(lines[0].split("\t")[1])
        if n is not None and n != file_n:
            raise ValidationError(f"adjacency file is for n={file_n}, graph has n={n}")
        n = file_n
        lines = lines[1:]
    if n is None:
        raise ValidationError("node count unknown for weighted edge file")
    W = np.zeros((n, n))
    for ln in lines:
        i, j, w = ln.split("\t")
        W[int(i), int(j)] = W[int(j), int(i)] = float(w)
    return W
