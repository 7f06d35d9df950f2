"""Build the desk-scale Fashion-MNIST CSV from the ``fashion-mnist`` npm package.

The npm package ships the 70k Fashion-MNIST images as one JSON file per class
(``src/clothes/<label>.json`` holding ``{"data": [[784 ints], ...]}``).  This
script draws a class-balanced, seed-pinned subset and writes it as the usual
``label,pixel0,...,pixel783`` CSV (gzip).

    npm pack fashion-mnist && tar xzf fashion-mnist-*.tgz
    python scripts/make_fashion_subset.py package/src/clothes data/fashion_mnist_1200.csv.gz
"""
import argparse
import csv
import gzip
import json
from pathlib import Path

import numpy as np


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("clothes_dir", type=Path)
    parser.add_argument("out", type=Path)
    parser.add_argument("--per-class", type=int, default=120)
    parser.add_argument("--seed", type=int, default=2021)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    rows = []
    for label in range(10):
        images = json.loads((args.clothes_dir / f"{label}.json").read_text())["data"]
        for i in rng.choice(len(images), size=args.per_class, replace=False):
            rows.append([label, *images[i]])
    rng.shuffle(rows)

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with gzip.open(args.out, "wt", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", *(f"pixel{i}" for i in range(784))])
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
