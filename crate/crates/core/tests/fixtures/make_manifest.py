"""Writes tiny.manifest.json from tiny.svm with a plain line-by-line parser.

Triplets are (row, column, folded value) with 0-based indices, where the
folded value is label * raw value. Rows are sorted by row then column.
"""
import json
from pathlib import Path

here = Path(__file__).parent
labels, triplets, p = [], [], 0
for line in (here / "tiny.svm").read_text().splitlines():
    line = line.strip()
    if not line or line.startswith("#"):
        continue
    head, *pairs = line.split()
    label = 1.0 if float(head) > 0 else -1.0
    row = len(labels)
    labels.append(label)
    for pair in pairs:
        idx, val = pair.split(":")
        col = int(idx) - 1
        p = max(p, col + 1)
        triplets.append([row, col, label * float(val)])

manifest = {
    "m": len(labels),
    "p": p,
    "labels": labels,
    "m_plus": sum(1 for b in labels if b > 0),
    "m_minus": sum(1 for b in labels if b < 0),
    "triplets": sorted(triplets),
}
(here / "tiny.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
