#!/usr/bin/env python3
"""Rebuild data/desk from sample images bundled with scikit-image,
scikit-learn and matplotlib.

Every image is center-cropped to 3:2 and resized to 256x171 so a transfer
at working size 256 runs at native resolution.
"""
import argparse
import json
import pathlib

import cv2
import matplotlib
import numpy as np
import skimage
import sklearn

SKIMAGE = pathlib.Path(skimage.__file__).parent / "data"
SKLEARN = pathlib.Path(sklearn.__file__).parent / "datasets" / "images"
MPL = pathlib.Path(matplotlib.get_data_path()) / "sample_data"

# name -> (source file, license note)
SOURCES = {
    "astronaut": (SKIMAGE / "astronaut.png", "public domain (NASA)"),
    "chelsea": (SKIMAGE / "chelsea.png", "CC0, Stefan van der Walt"),
    "coffee": (SKIMAGE / "coffee.png", "CC0, Rachel Michetti"),
    "rocket": (SKIMAGE / "rocket.jpg", "public domain (SpaceX)"),
    "hubble": (SKIMAGE / "hubble_deep_field.jpg", "public domain (NASA)"),
    "retina": (SKIMAGE / "retina.jpg", "CC0 1.0 (Wikimedia Commons, Mikael Haggstrom)"),
    "camera": (SKIMAGE / "camera.png", "CC0, Lav Varshney"),
    "grace_hopper": (MPL / "grace_hopper.jpg", "public domain (U.S. Navy)"),
    "china": (SKLEARN / "china.jpg", "CC BY 2.0, danielbuechele, https://www.flickr.com/photos/danielbuechele/6061409035"),
    "flower": (SKLEARN / "flower.jpg", "CC BY 2.0, vultilion, https://www.flickr.com/photos/vultilion/6056698931"),
}

PAIRS = [
    ("p01", "astronaut", "rocket"),
    ("p02", "chelsea", "coffee"),
    ("p03", "coffee", "china"),
    ("p04", "rocket", "hubble"),
    ("p05", "china", "flower"),
    ("p06", "flower", "chelsea"),
    ("p07", "hubble", "retina"),
    ("p08", "grace_hopper", "astronaut"),
    ("p09", "camera", "china"),
    ("p10", "retina", "coffee"),
]

# A toy tagged corpus over the same images for trying out `senti index`.
CORPUS = [
    ("astronaut", "person", "happy"),
    ("grace_hopper", "person", "serious"),
    ("camera", "person", "calm"),
    ("chelsea", "cat", "cute"),
    ("coffee", "cup", "warm"),
    ("rocket", "sky", "clear"),
    ("hubble", "sky", "dark"),
    ("china", "building", "bright"),
    ("flower", "flower", "bright"),
    ("retina", "eye", "dark"),
]

WIDTH, HEIGHT = 256, 171


def crop_3_2(img):
    h, w = img.shape[:2]
    if w * 2 >= h * 3:
        cw, ch = h * 3 // 2, h
    else:
        cw, ch = w, w * 2 // 3
    y0, x0 = (h - ch) // 2, (w - cw) // 2
    return img[y0:y0 + ch, x0:x0 + cw]


def load(path):
    img = cv2.imread(str(path), cv2.IMREAD_COLOR | cv2.IMREAD_IGNORE_ORIENTATION)
    if img is None:
        raise SystemExit(f"cannot read {path}")
    return img


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=pathlib.Path(__file__).resolve().parents[1] / "data" / "desk", type=pathlib.Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for name, (src, _) in SOURCES.items():
        img = cv2.resize(crop_3_2(load(src)), (WIDTH, HEIGHT), interpolation=cv2.INTER_AREA)
        cv2.imwrite(str(args.out / f"{name}.png"), img, [cv2.IMWRITE_PNG_COMPRESSION, 9])

    with open(args.out / "pairs.jsonl", "w") as f:
        for pair_id, inp, ref in PAIRS:
            f.write(json.dumps({"pair_id": pair_id, "input": f"{inp}.png", "reference": f"{ref}.png"}) + "\n")
    with open(args.out / "corpus.jsonl", "w") as f:
        for name, noun, adjective in CORPUS:
            f.write(json.dumps({"id": name, "path": f"{name}.png", "noun": noun, "adjective": adjective}) + "\n")
    with open(args.out / "ATTRIBUTION.md", "w") as f:
        f.write("# Desk set image sources\n\n")
        f.write(f"All images are center-cropped to 3:2 and resized to {WIDTH}x{HEIGHT}.\n\n")
        f.write("| file | origin | license |\n|---|---|---|\n")
        for name, (src, note) in SOURCES.items():
            f.write(f"| {name}.png | {src.parent.parent.name}/{src.parent.name}/{src.name} | {note} |\n")
        f.write("\nThe two CC BY 2.0 photographs (china.png, flower.png) are modified"
                " (cropped and downscaled) versions of the originals.\n")


if __name__ == "__main__":
    main()
