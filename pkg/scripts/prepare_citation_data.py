#!/usr/bin/env python3
"""Fetch the standard citation-network files and convert them to the text
dataset layout this package reads (edges.tsv / features.csv / labels.csv /
splits.json).

The source is the widely mirrored pickled split of Cora, Citeseer, and
PubMed (files ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}). Run on a
machine with network access:

    python scripts/prepare_citation_data.py --name all --out-root data

or point --source-dir at a directory that already holds the ind.* files.
PubMed's features.csv is ~150 MB of text; the other two are small.
"""

import argparse
import json
import pickle
import sys
import urllib.request
from pathlib import Path

import numpy as np
from scipy import sparse

BASE_URL = "https://github.com/kimiyoung/planetoid/raw/master/data"
PIECES = ["x", "y", "tx", "ty", "allx", "ally", "graph", "test.index"]
NAMES = ["cora", "citeseer", "pubmed"]


def download(name: str, dest: Path) -> None:
    dest.mkdir(parents=True, exist_ok=True)
    for piece in PIECES:
        fname = f"ind.{name}.{piece}"
        target = dest / fname
        if target.is_file():
            continue
        url = f"{BASE_URL}/{fname}"
        print(f"fetching {url}")
        with urllib.request.urlopen(url) as resp:
            target.write_bytes(resp.read())


def _load_pickle(path: Path):
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def convert(source_dir: Path, name: str, out_dir: Path) -> None:
    """Convert ind.<name>.* files into the text dataset layout."""
    x, y, tx, ty, allx, ally, graph = (
        _load_pickle(source_dir / f"ind.{name}.{piece}")
        for piece in ("x", "y", "tx", "ty", "allx", "ally", "graph")
    )
    test_idx = np.array(
        [int(line) for line in
         (source_dir / f"ind.{name}.test.index").read_text().split()],
        dtype=np.int64,
    )
    test_sorted = np.sort(test_idx)

    if int(test_sorted[-1]) - int(test_sorted[0]) + 1 != test_sorted.size:
        # isolated test nodes are missing from the index (citeseer):
        # extend with zero rows over the full contiguous range
        lo, hi = int(test_sorted[0]), int(test_sorted[-1])
        full = hi - lo + 1
        tx_ext = sparse.lil_matrix((full, x.shape[1]))
        tx_ext[test_sorted - lo, :] = tx
        tx = tx_ext.tocsr()
        ty_ext = np.zeros((full, y.shape[1]))
        ty_ext[test_sorted - lo, :] = ty
        ty = ty_ext

    features = sparse.vstack((allx, tx)).tolil()
    features[test_idx, :] = features[test_sorted, :]
    features = np.asarray(features.todense(), dtype=np.float64)

    onehot = np.vstack((ally, ty))
    onehot[test_idx, :] = onehot[test_sorted, :]
    labels = onehot.argmax(axis=1).astype(np.int64)

    num_nodes = features.shape[0]
    train = list(range(y.shape[0]))
    # standard protocol: the 500 nodes after the training block; capped at
    # the labeled+unlabeled pool so tiny inputs stay valid
    val_end = min(y.shape[0] + 500, allx.shape[0])
    val = list(range(y.shape[0], val_end))
    test = [int(i) for i in test_sorted]

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "edges.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for u in sorted(graph):
            for v in sorted(set(graph[u])):
                if u < v and u < num_nodes and v < num_nodes:
                    fh.write(f"{u}\t{v}\n")
    with open(out_dir / "features.csv", "w", encoding="utf-8", newline="\n") as fh:
        for row in features:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")
    with open(out_dir / "labels.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{int(c)}\n" for c in labels)
    with open(out_dir / "splits.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"train": train, "val": val, "test": test}, fh)
        fh.write("\n")
    print(f"{name}: {num_nodes} nodes, {features.shape[1]} features, "
          f"{labels.max() + 1} classes -> {out_dir}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--name", choices=NAMES + ["all"], default="all")
    parser.add_argument("--out-root", default="data", help="output root directory")
    parser.add_argument("--source-dir",
                        help="directory with pre-downloaded ind.* files "
                             "(skips the network)")
    parser.add_argument("--cache-dir", default="data/_raw",
                        help="where downloads are stored")
    args = parser.parse_args(argv)

    names = NAMES if args.name == "all" else [args.name]
    for name in names:
        if args.source_dir:
            source = Path(args.source_dir)
        else:
            source = Path(args.cache_dir)
            download(name, source)
        convert(source, name, Path(args.out_root) / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
