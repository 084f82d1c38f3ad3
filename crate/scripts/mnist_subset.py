#!/usr/bin/env python3
"""Convert the 10,000-digit MNIST sample shipped in the npm `mnist` package
into IDX files (8,000 train / 2,000 test, stratified per class).

usage: mnist_subset.py <package/src/digits dir> <out dir>
"""
import json
import random
import struct
import sys
from pathlib import Path


def write_idx(out, images, labels, prefix):
    with open(out / f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))
    with open(out / f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    train, test = [], []
    for digit in range(10):
        data = json.load(open(src / f"{digit}.json"))["data"]
        n = len(data) // 784
        imgs = [
            [min(255, max(0, round(v * 255))) for v in data[i * 784:(i + 1) * 784]]
            for i in range(n)
        ]
        cut = n * 4 // 5
        train += [(img, digit) for img in imgs[:cut]]
        test += [(img, digit) for img in imgs[cut:]]
    rng = random.Random(20250101)
    rng.shuffle(train)
    rng.shuffle(test)
    for prefix, rows in (("train", train), ("t10k", test)):
        write_idx(out, [r[0] for r in rows], [r[1] for r in rows], prefix)
        print(prefix, len(rows))


if __name__ == "__main__":
    main()
