"""Write the UCI Adult census table as a headered CSV.

The raw ``adult.data``/``adult.test`` files are taken from the ``responsibly``
wheel, which ships them verbatim, so no direct UCI access is needed::

    pip download --no-deps responsibly -d /tmp/wheels
    python scripts/fetch_adult.py /tmp/wheels/responsibly-*.whl data/adult.csv

``?`` cells become empty so the loader drops those rows.
"""

import csv
import sys
import zipfile

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]


def _rows(text):
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("|"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(COLUMNS):
            continue
        cells = ["" if c == "?" else c for c in cells]
        cells[-1] = cells[-1].rstrip(".")  # adult.test labels end with '.'
        yield cells


def main(wheel, out):
    with zipfile.ZipFile(wheel) as zf:
        parts = [
            zf.read(f"responsibly/dataset/adult/{name}").decode("utf-8")
            for name in ("adult.data", "adult.test")
        ]
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        n = 0
        for part in parts:
            for row in _rows(part):
                writer.writerow(row)
                n += 1
    print(f"wrote {n} rows to {out}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit("usage: fetch_adult.py <responsibly wheel> <out.csv>")
    main(sys.argv[1], sys.argv[2])
