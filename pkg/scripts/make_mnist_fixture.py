"""Build the small MNIST IDX fixture used by the tests.

Input is a CSV with one image per row: 784 pixel values (0-255) followed by
the label, e.g. the 5000-sample ``mnist_5k.csv.gz`` that ships with mlxtend.

    python scripts/make_mnist_fixture.py mnist_5k.csv.gz tests/data --per-class 20

That CSV is sorted by label, so a fixed number of rows is drawn per class
(seeded) and the result interleaved in label order 0, 1, ..., 9, 0, 1, ...
"""
import argparse
import gzip
from pathlib import Path

import numpy as np

from amem.data import write_idx_images, write_idx_labels


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv")
    ap.add_argument("outdir")
    ap.add_argument("--per-class", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    opener = gzip.open if args.csv.endswith(".gz") else open
    with opener(args.csv, "rt") as fh:
        table = np.loadtxt(fh, delimiter=",")
    rng = np.random.default_rng(args.seed)
    picks = [rng.choice(np.flatnonzero(table[:, -1] == c), args.per_class, replace=False) for c in range(10)]
    rows = table[np.stack(picks, axis=1).ravel()]
    pixels = rows[:, :-1].astype(np.uint8).reshape(-1, 28, 28)
    labels = rows[:, -1].astype(np.uint8)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_idx_images(out / "mnist-images.idx3-ubyte", pixels)
    write_idx_labels(out / "mnist-labels.idx1-ubyte", labels)
    print(f"wrote {len(labels)} images to {out}")


if __name__ == "__main__":
    main()
