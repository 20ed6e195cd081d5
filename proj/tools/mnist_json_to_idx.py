#!/usr/bin/env python3
"""Convert the 10,000-digit sample shipped in the npm ``mnist`` package into
IDX files laid out the way ``bordernet --data-dir`` expects.

The package stores each digit class as ``src/digits/<k>.json`` holding a flat
list of 784-value rasters with grey levels quantized to ``byte/255``.  The
bytes are recovered exactly with ``round(v * 255)``.

Usage:
    npm pack mnist            # or any copy of mnist-1.1.0.tgz
    python3 tools/mnist_json_to_idx.py mnist-1.1.0.tgz data/mnist --test 2000
"""

import argparse
import io
import json
import random
import struct
import tarfile
from pathlib import Path


def read_digits(tgz_path):
    images, labels = [], []
    with tarfile.open(tgz_path, "r:gz") as tar:
        for digit in range(10):
            member = tar.getmember(f"package/src/digits/{digit}.json")
            values = json.load(io.TextIOWrapper(tar.extractfile(member)))["data"]
            if len(values) % 784:
                raise ValueError(f"{member.name}: {len(values)} values is not a multiple of 784")
            for k in range(0, len(values), 784):
                raster = bytes(min(255, max(0, round(v * 255))) for v in values[k:k + 784])
                images.append(raster)
                labels.append(digit)
    return images, labels


def write_images(path, images):
    with open(path, "wb") as out:
        out.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for raster in images:
            out.write(raster)


def write_labels(path, labels):
    with open(path, "wb") as out:
        out.write(struct.pack(">II", 0x00000801, len(labels)))
        out.write(bytes(labels))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("tgz")
    parser.add_argument("out_dir")
    parser.add_argument("--test", type=int, default=2000, help="images held out for the test split")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    images, labels = read_digits(args.tgz)
    order = list(range(len(images)))
    random.Random(args.seed).shuffle(order)
    n_train = len(order) - args.test
    train, test = order[:n_train], order[n_train:]

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", [images[i] for i in train])
    write_labels(out / "train-labels-idx1-ubyte", [labels[i] for i in train])
    write_images(out / "t10k-images-idx3-ubyte", [images[i] for i in test])
    write_labels(out / "t10k-labels-idx1-ubyte", [labels[i] for i in test])
    print(f"wrote {n_train} train / {len(test)} test images to {out}")


if __name__ == "__main__":
    main()
