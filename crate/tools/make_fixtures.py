"""Write grayscale P5 PGM fixtures from scikit-image's bundled sample photos.

usage: python3 tools/make_fixtures.py <out-dir>
"""
import sys
from pathlib import Path

import numpy as np
from skimage import data


def write_pgm(path, img):
    img = np.asarray(img, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        f.write(img.tobytes())


def main():
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    write_pgm(out / "camera.pgm", data.camera())
    write_pgm(out / "moon.pgm", data.moon())


if __name__ == "__main__":
    main()
