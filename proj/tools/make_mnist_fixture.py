#!/usr/bin/env python3
"""Build small IDX3/IDX1 MNIST files from the digit JSON shipped in the npm `mnist` package.

The npm package (https://github.com/cazala/mnist) stores MNIST intensities
divided by 255 and rounded to three decimals, one JSON file per digit. That
rounding is finer than 1/255, so multiplying by 255 and rounding recovers the
original bytes.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_fixture.py package/src/digits tests/data --per-digit 100

Images are written grouped by digit (all zeros first, then ones, ...).
"""
import argparse
import json
import pathlib
import struct

SIZE = 28 * 28


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir", type=pathlib.Path)
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--per-digit", type=int, default=100)
    args = ap.parse_args()

    images = bytearray()
    labels = bytearray()
    for digit in range(10):
        data = json.loads((args.digits_dir / f"{digit}.json").read_text())["data"]
        count = min(args.per_digit, len(data) // SIZE)
        for k in range(count):
            px = data[k * SIZE:(k + 1) * SIZE]
            images.extend(max(0, min(255, round(v * 255))) for v in px)
            labels.append(digit)

    n = len(labels)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    with open(args.out_dir / "mnist-subset-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        f.write(images)
    with open(args.out_dir / "mnist-subset-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(labels)
    print(f"wrote {n} images")


if __name__ == "__main__":
    main()
