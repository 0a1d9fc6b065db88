#!/usr/bin/env python3
"""Regenerates the committed test fixtures under tests/data.

toy/     12 synthetic pseudocolor scans plus annotations.json. Four classes;
         "nonmetal_lighter" holds 2 instances against 21 for the largest
         class, so it is the only tail class at threshold 0.1.
blend/   target/source pairs and golden outputs. The golden images come from
         a dense solve written here in numpy, independent of the C++ code.

Usage: python3 tests/data/make_fixtures.py
"""

import json
import pathlib

import numpy as np
from PIL import Image

HERE = pathlib.Path(__file__).resolve().parent

# (name, count, base gray level, tint)
CLASSES = [
    (1, "gun", 21, 45, (0.6, 0.8, 1.0)),
    (2, "knife", 10, 95, (0.7, 0.9, 1.0)),
    (3, "battery", 6, 70, (1.0, 0.7, 0.5)),
    (4, "nonmetal_lighter", 2, 170, (1.0, 0.8, 0.4)),
]
NUM_IMAGES = 12
W, H = 128, 96


def draw_object(img, rng, x, y, w, h, level, tint):
    yy, xx = np.mgrid[0:h, 0:w]
    stripes = 18.0 * np.sin(xx * 0.9 + yy * 0.4)
    noise = rng.normal(0.0, 6.0, size=(h, w))
    gray = np.clip(level + stripes + noise, 0, 255)
    for c in range(3):
        img[y:y + h, x:x + w, c] = np.clip(gray * tint[c] + 20 * (1 - tint[c]), 0, 255)


def overlaps(a, b, pad=3):
    return not (a[0] + a[2] + pad <= b[0] or b[0] + b[2] + pad <= a[0] or
                a[1] + a[3] + pad <= b[1] or b[1] + b[3] + pad <= a[1])


def make_toy():
    rng = np.random.default_rng(20240611)
    out = HERE / "toy"
    (out / "images").mkdir(parents=True, exist_ok=True)

    # Per image list of category ids: spread the head classes, put the two
    # tail instances in images 3 and 8.
    labels = [[] for _ in range(NUM_IMAGES)]
    pool = []
    for cid, _, count, _, _ in CLASSES:
        if cid != 4:
            pool += [cid] * count
    for i, cid in enumerate(pool):
        labels[i % NUM_IMAGES].append(cid)
    labels[3].append(4)
    labels[8].append(4)

    images, annotations = [], []
    ann_id = 1
    for i in range(NUM_IMAGES):
        img = np.empty((H, W, 3), dtype=np.float64)
        base = 225 + rng.normal(0.0, 4.0, size=(H, W))
        for c, t in enumerate((0.97, 1.0, 0.93)):
            img[:, :, c] = base * t
        boxes = []
        for cid in labels[i]:
            _, _, _, level, tint = CLASSES[cid - 1]
            for _ in range(1000):
                w = int(rng.integers(14, 30))
                h = int(rng.integers(12, 26))
                x = int(rng.integers(2, W - w - 2))
                y = int(rng.integers(2, H - h - 2))
                if not any(overlaps((x, y, w, h), b) for b in boxes):
                    break
            else:
                raise RuntimeError("could not place object")
            boxes.append((x, y, w, h))
            draw_object(img, rng, x, y, w, h, level, tint)
            annotations.append({"id": ann_id, "image_id": i + 1, "category_id": cid,
                                "bbox": [x, y, w, h]})
            ann_id += 1
        name = f"scan_{i + 1:02d}.png"
        Image.fromarray(np.round(img).astype(np.uint8), "RGB").save(
            out / "images" / name, optimize=False, compress_level=6)
        images.append({"id": i + 1, "file_name": name, "width": W, "height": H})

    ds = {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": c[0], "name": c[1]} for c in CLASSES],
    }
    (out / "annotations.json").write_text(json.dumps(ds, indent=2) + "\n")


def dense_blend(target, source, mask, dx, dy):
    """Seamless clone with a dense solve. Arrays are HxWxC float64."""
    sh, sw = mask.shape
    pix = [(u, v) for v in range(sh) for u in range(sw) if mask[v, u]]
    index = {p: i for i, p in enumerate(pix)}
    n = len(pix)
    a = np.zeros((n, n))
    out = target.copy()
    for c in range(target.shape[2]):
        b = np.zeros(n)
        for i, (u, v) in enumerate(pix):
            a[i, i] = 4.0
            for du, dv in ((0, -1), (-1, 0), (1, 0), (0, 1)):
                ru, rv = u + du, v + dv
                if 0 <= ru < sw and 0 <= rv < sh:
                    b[i] += source[v, u, c] - source[rv, ru, c]
                if (ru, rv) in index:
                    a[i, index[(ru, rv)]] = -1.0
                else:
                    b[i] += target[rv + dy, ru + dx, c]
        x = np.linalg.solve(a, b)
        for i, (u, v) in enumerate(pix):
            out[v + dy, u + dx, c] = np.floor(np.clip(x[i], 0, 255) + 0.5)
    return out


def make_blend():
    rng = np.random.default_rng(7)
    out = HERE / "blend"
    out.mkdir(parents=True, exist_ok=True)

    yy, xx = np.mgrid[0:24, 0:32]
    target = np.stack([90 + 3 * xx, 200 - 2 * yy, 120 + 40 * np.sin(xx / 5.0)], axis=2)
    target = np.round(np.clip(target + rng.normal(0, 5, target.shape), 0, 255))
    source = np.round(rng.uniform(0, 255, size=(10, 12, 3)))
    Image.fromarray(target.astype(np.uint8), "RGB").save(out / "target.png")
    Image.fromarray(source.astype(np.uint8), "RGB").save(out / "source.png")

    # Default region: the source minus its one-pixel edge ring.
    inset = np.zeros((10, 12), dtype=bool)
    inset[1:-1, 1:-1] = True
    golden = dense_blend(target, source, inset, 9, 6)
    Image.fromarray(golden.astype(np.uint8), "RGB").save(out / "golden_patch.png")

    # Explicit elliptical mask strictly inside the source.
    vv, uu = np.mgrid[0:10, 0:12]
    ellipse = ((uu - 5.5) / 4.6) ** 2 + ((vv - 4.5) / 3.6) ** 2 <= 1.0
    Image.fromarray((ellipse * 255).astype(np.uint8), "L").save(out / "mask.png")
    golden = dense_blend(target, source, ellipse, 15, 10)
    Image.fromarray(golden.astype(np.uint8), "RGB").save(out / "golden_mask.png")


if __name__ == "__main__":
    make_toy()
    make_blend()
