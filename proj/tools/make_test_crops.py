#!/usr/bin/env python3
"""Cut the 128x128 grayscale test crops in tests/data from scikit-image's
bundled sample images (public domain / CC0)."""
import argparse
import hashlib
import pathlib

import numpy as np
from skimage import data, io
from skimage.color import rgb2gray
from skimage.util import img_as_ubyte

# name -> (loader, row, col)
CROPS = {
    "brick": (data.brick, 64, 192),
    "flag": (data.astronaut, 130, 0),
    "whiskers": (data.chelsea, 172, 0),
}
SIZE = 128
# expected digests of the written PNGs
SHA256 = {
    "brick": "7336d976ce274fb657fd529ab44b408d256ed23b8a0fa20ee1d7296f6ced1dd3",
    "flag": "15e6b4865b282bffc18c6285609462a169f5e721aabe5d992bfdc53bef0f6094",
    "whiskers": "045f31db8a67ca118485390417773ec8611bdf2b39aa698d4755639c3e5f974b",
}


def gray_u8(img):
    if img.ndim == 3:
        # Rec.601 luma, same weights as the library
        img = np.clip(img[..., :3] @ np.array([0.299, 0.587, 0.114]), 0, 255)
        return np.floor(img + 0.5).astype(np.uint8)
    return img_as_ubyte(img)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parents[1] / "tests" / "data"))
    parser.add_argument("--verify", action="store_true",
                        help="only check the existing crops against the recorded digests")
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    if args.verify:
        bad = [n for n in CROPS
               if not (out / f"{n}.png").exists()
               or hashlib.sha256((out / f"{n}.png").read_bytes()).hexdigest() != SHA256[n]]
        for n in bad:
            print("mismatch", n)
        raise SystemExit(1 if bad else 0)
    out.mkdir(parents=True, exist_ok=True)
    for name, (loader, r, c) in CROPS.items():
        crop = gray_u8(loader())[r:r + SIZE, c:c + SIZE]
        assert crop.shape == (SIZE, SIZE), name
        path = out / f"{name}.png"
        io.imsave(path, crop, check_contrast=False)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        note = "" if digest == SHA256[name] else "  (differs from the recorded digest)"
        print(digest, path.name + note)


if __name__ == "__main__":
    main()
