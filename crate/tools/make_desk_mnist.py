"""Build the desk-scale MNIST IDX files from the `mnist` npm package.

The npm package (MIT, github.com/cazala/mnist) ships 10000 MNIST digits as
JSON arrays of floats in [0, 1] rounded to three decimals. This script
re-quantizes them to bytes and writes standard IDX files.

usage: python3 tools/make_desk_mnist.py <path-to-npm-package> <out-dir>
"""
import json
import random
import struct
import sys
from pathlib import Path

N_TRAIN = 4000
N_TEST = 1000


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    pkg, out = Path(sys.argv[1]), Path(sys.argv[2])
    samples = []
    for digit in range(10):
        data = json.loads((pkg / "src" / "digits" / f"{digit}.json").read_text())["data"]
        assert len(data) % 784 == 0
        for k in range(len(data) // 784):
            px = [min(255, max(0, int(round(v * 255)))) for v in data[k * 784:(k + 1) * 784]]
            samples.append((px, digit))
    random.Random(20190415).shuffle(samples)
    train, test = samples[:N_TRAIN], samples[N_TRAIN:N_TRAIN + N_TEST]
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", [s[0] for s in train])
    write_labels(out / "train-labels-idx1-ubyte", [s[1] for s in train])
    write_images(out / "t10k-images-idx3-ubyte", [s[0] for s in test])
    write_labels(out / "t10k-labels-idx1-ubyte", [s[1] for s in test])
    print(f"{len(samples)} digits available, wrote {len(train)} train / {len(test)} test")


if __name__ == "__main__":
    main()
