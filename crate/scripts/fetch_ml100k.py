#!/usr/bin/env python3
"""Materialize the MovieLens 100K files (u.data, u.user, u.item) locally.

GroupLens downloads are not always reachable, so this rebuilds the three raw
files from the copy bundled inside the `recbole` wheel on PyPI:

  * u.data and u.user are reproduced field-for-field.
  * u.item is rebuilt from (id, title, release year, genre list): the release
    date becomes 01-Jan-<year> (empty when unknown), the video date and URL
    are left empty, and the 19 genre flags are re-encoded in the documented
    MovieLens genre order.

Usage: python3 scripts/fetch_ml100k.py [OUT_DIR] [RECBOLE_WHEEL]
  OUT_DIR defaults to data/ml-100k; pass a wheel path to skip the download.
"""
import glob
import os
import subprocess
import sys
import tempfile
import zipfile

GENRES = [
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
    "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
]
PREFIX = "recbole/dataset_example/ml-100k/"


def read_atomic(zf, name):
    with zf.open(PREFIX + name) as fh:
        lines = fh.read().decode("utf-8").splitlines()
    return [line.split("\t") for line in lines[1:] if line]


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join("data", "ml-100k")
    os.makedirs(out, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        if len(sys.argv) > 2:
            wheel = sys.argv[2]
        else:
            subprocess.run(
                [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
                 "recbole==1.2.1", "-d", tmp],
                check=True,
            )
            wheel = glob.glob(os.path.join(tmp, "recbole-*.whl"))[0]
        with zipfile.ZipFile(wheel) as zf:
            inter = read_atomic(zf, "ml-100k.inter")
            users = read_atomic(zf, "ml-100k.user")
            items = read_atomic(zf, "ml-100k.item")

    with open(os.path.join(out, "u.data"), "w", newline="\n") as fh:
        for u, i, r, t in inter:
            fh.write(f"{u}\t{i}\t{int(float(r))}\t{int(float(t))}\n")
    with open(os.path.join(out, "u.user"), "w", newline="\n") as fh:
        for row in users:
            fh.write("|".join(row) + "\n")
    with open(os.path.join(out, "u.item"), "w", newline="\n") as fh:
        for row in items:
            row = row + [""] * (4 - len(row))
            item_id, title, year, classes = row[:4]
            date = f"01-Jan-{year}" if year.strip() else ""
            tokens = classes.split(" ") if classes.strip() else []
            flags = ["1" if g in tokens else "0" for g in GENRES]
            unknown = [t for t in tokens if t not in GENRES]
            if unknown:
                raise SystemExit(f"item {item_id}: unrecognized genres {unknown}")
            title = title.replace("|", "/")
            fh.write("|".join([item_id, title, date, "", ""] + flags) + "\n")
    print(f"wrote {len(inter)} ratings, {len(users)} users, {len(items)} items to {out}")


if __name__ == "__main__":
    main()
