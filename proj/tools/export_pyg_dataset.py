#!/usr/bin/env python3
"""Export a PyTorch Geometric dataset into the directory layout read by np2l.

    python tools/export_pyg_dataset.py cora data/cora
    python tools/export_pyg_dataset.py texas data/texas --root /tmp/pyg

Writes edges.tsv, features.csv, labels.txt and manifest.json. Needs
torch_geometric and network access for the first download.
"""

import argparse
import json
from pathlib import Path

PLANETOID = {"cora": "Cora", "citeseer": "CiteSeer", "pubmed": "PubMed"}
WEBKB = {"texas": "Texas", "cornell": "Cornell", "wisconsin": "Wisconsin"}
AMAZON = {"photo": "Photo", "computers": "Computers"}
COAUTHOR = {"cs": "CS"}


def load(name, root):
    import torch_geometric.datasets as pyg

    key = name.lower()
    if key in PLANETOID:
        return pyg.Planetoid(root, PLANETOID[key])[0]
    if key in WEBKB:
        return pyg.WebKB(root, WEBKB[key])[0]
    if key in AMAZON:
        return pyg.Amazon(root, AMAZON[key])[0]
    if key in COAUTHOR:
        return pyg.Coauthor(root, COAUTHOR[key])[0]
    raise SystemExit(f"unknown dataset {name}")


def export(data, name, out):
    out.mkdir(parents=True, exist_ok=True)
    n = int(data.num_nodes)
    x = data.x.numpy()
    y = data.y.numpy().astype(int)

    # undirected, no self loops, each pair once
    pairs = set()
    for u, v in data.edge_index.t().tolist():
        if u != v:
            pairs.add((min(u, v), max(u, v)))
    with open(out / "edges.tsv", "w") as f:
        for u, v in sorted(pairs):
            f.write(f"{u}\t{v}\n")

    with open(out / "features.csv", "w") as f:
        for row in x:
            f.write(",".join(f"{v:g}" for v in row) + "\n")

    with open(out / "labels.txt", "w") as f:
        f.writelines(f"{c}\n" for c in y)

    manifest = {
        "name": name.lower(),
        "n": n,
        "m": int(x.shape[1]),
        "num_classes": int(y.max()) + 1,
        "directed_edges": 2 * len(pairs),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"{name}: {n} nodes, {len(pairs)} edges, {x.shape[1]} features -> {out}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("dataset")
    ap.add_argument("out", type=Path)
    ap.add_argument("--root", default="/tmp/pyg", help="PyG download cache")
    args = ap.parse_args()
    export(load(args.dataset, args.root), args.dataset, args.out)


if __name__ == "__main__":
    main()
