#!/usr/bin/env python3
"""Convert public benchmark datasets into the condrnn manifest format.

HAR and DSADS are read from the numpy release layout
(X_train.npy, y_train.npy, X_test.npy, y_test.npy); Turbofan is read from
the CMAPSS text files (train_FD002.txt, test_FD002.txt, RUL_FD002.txt).

    python3 tools/convert_datasets.py har SRC_DIR OUT_DIR
    python3 tools/convert_datasets.py dsads SRC_DIR OUT_DIR
    python3 tools/convert_datasets.py turbofan SRC_DIR OUT_DIR [--subset FD002]

All instances go into a single all.jsonl; condrnn draws its own splits.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

FORMAT = "condrnn-dataset"
VERSION = 1


def write_dataset(out_dir, name, reference, sensors, task, num_classes, normalization, records):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(out / "all.jsonl", "w") as f:
        for rec in records:
            f.write(json.dumps(rec, separators=(",", ":")) + "\n")
            count += 1
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "name": name,
        "reference": reference,
        "sensors": sensors,
        "task": task,
        "num_classes": num_classes,
        "normalization": normalization,
        "target_stats": "train-minmax" if task == "regression" else "none",
        "files": {"all": "all.jsonl"},
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    print(f"wrote {count} instances to {out}")


def load_npy_split(src, split, d):
    x = np.load(Path(src) / f"X_{split}.npy")
    y = np.load(Path(src) / f"y_{split}.npy").reshape(-1)
    if x.ndim != 3:
        sys.exit(f"X_{split}.npy: expected a 3-d array, got shape {x.shape}")
    # Releases store either (N, d, T) or (N, T, d); the result is (N, T, d).
    if x.shape[1] == d and x.shape[2] != d:
        x = np.transpose(x, (0, 2, 1))
    elif x.shape[2] != d:
        sys.exit(f"X_{split}.npy: no axis of size {d} in shape {x.shape}")
    return x, y


def convert_classification(src, out, name, d, k):
    sensors = [f"{name.lower()}_{j}" for j in range(d)]
    xs, ys = zip(*(load_npy_split(src, s, d) for s in ("train", "test")))
    x = np.concatenate(xs)
    y = np.concatenate(ys).astype(np.int64)
    y = y - y.min()
    if y.max() >= k:
        sys.exit(f"labels span {y.max() + 1} classes, expected {k}")

    def records():
        for i in range(x.shape[0]):
            yield {
                "id": f"{name.lower()}{i}",
                "active": sensors,
                "target": int(y[i]),
                "values": x[i].tolist(),
            }

    write_dataset(out, name, name, sensors, "classification", k, "zscore", records())


def read_cmapss(path):
    table = np.loadtxt(path)
    engines = {}
    for row in table:
        engines.setdefault(int(row[0]), []).append(row[5:26])
    return [(unit, np.asarray(rows)) for unit, rows in sorted(engines.items())]


def convert_turbofan(src, out, subset):
    src = Path(src)
    sensors = [f"s{j}" for j in range(1, 22)]
    train = read_cmapss(src / f"train_{subset}.txt")
    test = read_cmapss(src / f"test_{subset}.txt")
    rul = np.loadtxt(src / f"RUL_{subset}.txt").reshape(-1)
    if len(rul) != len(test):
        sys.exit(f"RUL_{subset}.txt has {len(rul)} entries for {len(test)} test engines")

    def records():
        for unit, values in train:
            yield {
                "id": f"train{unit}",
                "source": f"train{unit}",
                "active": sensors,
                "target": 0.0,
                "total_life": float(len(values)),
                "offset": 0,
                "values": values.tolist(),
            }
        for (unit, values), remaining in zip(test, rul):
            yield {
                "id": f"test{unit}",
                "source": f"test{unit}",
                "active": sensors,
                "target": float(remaining),
                "total_life": float(len(values) + remaining),
                "offset": 0,
                "values": values.tolist(),
            }

    write_dataset(out, f"Turbofan {subset}", "Turbofan", sensors, "regression", 0, "minmax", records())


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("dataset", choices=["har", "dsads", "turbofan"])
    parser.add_argument("src")
    parser.add_argument("out")
    parser.add_argument("--subset", default="FD002", help="CMAPSS subset for turbofan")
    args = parser.parse_args()
    if args.dataset == "har":
        convert_classification(args.src, args.out, "HAR", 9, 6)
    elif args.dataset == "dsads":
        convert_classification(args.src, args.out, "DSADS", 45, 19)
    else:
        convert_turbofan(args.src, args.out, args.subset)


if __name__ == "__main__":
    main()
