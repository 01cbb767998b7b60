#!/usr/bin/env python3
"""Build an interactions.tsv / kg.tsv pair from MovieLens-100k.

Downloads ml-100k (or uses --zip), keeps each user's earliest 19 ratings
so the cold-start filter (< 20 interactions) retains everyone, and
derives a small knowledge graph from the item metadata: genre flags and
the release decade. Output matches the loader formats:

  interactions.tsv  user<TAB>item<TAB>rating<TAB>timestamp
  kg.tsv            head<TAB>relation<TAB>tail

Usage:
  python3 scripts/make_ml100k_dataset.py --out data/ml100k [--zip ml-100k.zip]

Then:
  URIR_ML_DATA=data/ml100k ./build/tests/urir_acceptance
"""

import argparse
import io
import os
import sys
import urllib.request
import zipfile

URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"

GENRES = [
    "unknown", "action", "adventure", "animation", "children", "comedy",
    "crime", "documentary", "drama", "fantasy", "film-noir", "horror",
    "musical", "mystery", "romance", "sci-fi", "thriller", "war", "western",
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--zip", help="pre-downloaded ml-100k.zip (skips the download)")
    ap.add_argument("--max-per-user", type=int, default=19,
                    help="earliest ratings kept per user (default 19, below the cold-start cap)")
    args = ap.parse_args()

    if args.zip:
        blob = open(args.zip, "rb").read()
    else:
        print(f"downloading {URL} ...", file=sys.stderr)
        blob = urllib.request.urlopen(URL, timeout=120).read()
    zf = zipfile.ZipFile(io.BytesIO(blob))

    ratings = []
    with zf.open("ml-100k/u.data") as f:
        for line in io.TextIOWrapper(f, encoding="utf-8"):
            user, item, rating, ts = line.split("\t")
            ratings.append((user, item, rating, int(ts)))

    by_user = {}
    for user, item, rating, ts in ratings:
        by_user.setdefault(user, []).append((ts, item, rating))

    os.makedirs(args.out, exist_ok=True)
    kept = 0
    with open(os.path.join(args.out, "interactions.tsv"), "w", encoding="utf-8") as out:
        for user in sorted(by_user, key=int):
            rows = sorted(by_user[user])[: args.max_per_user]
            for ts, item, rating in rows:
                out.write(f"{user}\t{item}\t{rating}\t{ts}\n")
                kept += 1

    edges = 0
    with zf.open("ml-100k/u.item") as f, \
            open(os.path.join(args.out, "kg.tsv"), "w", encoding="utf-8") as out:
        for line in io.TextIOWrapper(f, encoding="latin-1"):
            fields = line.rstrip("\n").split("|")
            item = fields[0]
            date = fields[2]
            if date:
                decade = date.rsplit("-", 1)[-1][:3] + "0s"
                out.write(f"{item}\tdecade\tdecade:{decade}\n")
                edges += 1
            flags = fields[5:24]
            for genre, flag in zip(GENRES, flags):
                if flag == "1":
                    out.write(f"{item}\tgenre\tgenre:{genre}\n")
                    edges += 1

    print(f"wrote {kept} interactions and {edges} kg edges to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
