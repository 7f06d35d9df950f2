"""Train the encrypted CNN classifier on the bundled Fashion-MNIST subset.

    python3 scripts/run_fashion.py --epochs 5 --out runs/fashion.csv
"""
import argparse
import sys
import time
from pathlib import Path

from fhegraph.builders import build_sphira
from fhegraph.data import load_csv
from fhegraph.training import TrainConfig, parameterise_graph, train, write_metrics_csv

DATA = Path(__file__).resolve().parents[1] / "data" / "fashion_mnist_1200.csv.gz"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data", type=Path, default=DATA)
    parser.add_argument("--test-size", type=int, default=200)
    parser.add_argument("--limit", type=int)
    parser.add_argument("--stride", type=int, default=1)
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--lr", type=float, default=0.003, help="0.01 diverges at stride 1")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--data-kind", choices=["plaintext", "ciphertext"], default="plaintext")
    parser.add_argument("--out", type=Path)
    args = parser.parse_args(argv)

    ds = load_csv(args.data, test_size=args.test_size, seed=args.seed, limit=args.limit)
    g = build_sphira(stride=args.stride, seed=args.seed)
    if args.data_kind == "ciphertext":
        parameterise_graph(g)

    def show(row):
        metric = "accuracy" if "accuracy" in row else "mape"
        print(f"epoch {row['epoch']:>3} {row['split']:<5} loss {row['loss']:.4f} "
              f"{metric} {row[metric]:.4f}  [{time.perf_counter() - start:.0f}s]", flush=True)

    start = time.perf_counter()
    cfg = TrainConfig(epochs=args.epochs, lr=args.lr, seed=args.seed, data_kind=args.data_kind)
    history = train(g, ds, cfg, on_row=show)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(history, args.out)
    else:
        write_metrics_csv(history, sys.stdout)


if __name__ == "__main__":
    main()
