"""Binary and text file formats.

EMB1  embeddings: magic "EMB1", u32 rows, u32 cols, then rows*cols f32,
      row-major, all little-endian.  Values widen to float64 in memory.
WHT1  whitening transform: magic, u32 n_t, n_c, s_sig, u8 warning, then
      mean (n_t f64), projection (n_c*n_t f64), spectrum (n_t f64).
STU1  student head: magic, u32 n_s, n_base, then bias (n_s f64) and
      weight (n_s*n_base f64).
labels.csv has header "id,label" with ids 0..rows-1 in order.  TSV writers
cover angle histograms (9 significant digits), training history, and metric
reports (6 decimals).
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from . import errors
from .distill import StudentHead
from .whitening import WhiteningTransform

EMB_MAGIC = b"EMB1"
WHT_MAGIC = b"WHT1"
STU_MAGIC = b"STU1"


def _read_exact(f, count, path):
    data = f.read(count)
    if len(data) != count:
        raise errors.CorruptFile(f"{path}: truncated (wanted {count} bytes, got {len(data)})")
    return data


def _read_f64(f, count, path):
    return np.frombuffer(_read_exact(f, 8 * count, path), dtype="<f8").copy()


def write_embeddings(path, m) -> None:
    m = np.asarray(m, dtype=np.float64)
    with open(path, "wb") as f:
        f.write(EMB_MAGIC)
        f.write(struct.pack("<II", m.shape[0], m.shape[1]))
        f.write(np.ascontiguousarray(m, dtype="<f4").tobytes())


def read_embeddings(path) -> np.ndarray:
    with open(path, "rb") as f:
        if _read_exact(f, 4, path) != EMB_MAGIC:
            raise errors.CorruptFile(f"{path}: not an EMB1 file")
        rows, cols = struct.unpack("<II", _read_exact(f, 8, path))
        flat = np.frombuffer(_read_exact(f, 4 * rows * cols, path), dtype="<f4")
        if f.read(1):
            raise errors.CorruptFile(f"{path}: trailing bytes after {rows}x{cols} payload")
    out = flat.astype(np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(out)):
        raise errors.CorruptFile(f"{path}: contains NaN or Inf")
    return out


def write_transform(path, t: WhiteningTransform) -> None:
    with open(path, "wb") as f:
        f.write(WHT_MAGIC)
        f.write(struct.pack("<IIIB", t.n_t, t.n_c, t.significant, int(t.warning)))
        f.write(np.ascontiguousarray(t.mean, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(t.projection, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(t.spectrum, dtype="<f8").tobytes())


def read_transform(path) -> WhiteningTransform:
    with open(path, "rb") as f:
        if _read_exact(f, 4, path) != WHT_MAGIC:
            raise errors.CorruptFile(f"{path}: not a WHT1 file")
        n_t, n_c, s_sig, warn = struct.unpack("<IIIB", _read_exact(f, 13, path))
        mean = _read_f64(f, n_t, path)
        projection = _read_f64(f, n_c * n_t, path).reshape(n_c, n_t)
        spectrum = _read_f64(f, n_t, path)
        if f.read(1):
            raise errors.CorruptFile(f"{path}: trailing bytes")
    return WhiteningTransform(
        mean=mean,
        projection=projection,
        spectrum=spectrum,
        significant=s_sig,
        n_c=n_c,
        warning=bool(warn),
    )


def write_student(path, head: StudentHead) -> None:
    with open(path, "wb") as f:
        f.write(STU_MAGIC)
        f.write(struct.pack("<II", head.n_s, head.n_base))
        f.write(np.ascontiguousarray(head.bias, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(head.weight, dtype="<f8").tobytes())


def read_student(path) -> StudentHead:
    with open(path, "rb") as f:
        if _read_exact(f, 4, path) != STU_MAGIC:
            raise errors.CorruptFile(f"{path}: not a STU1 file")
        n_s, n_base = struct.unpack("<II", _read_exact(f, 8, path))
        bias = _read_f64(f, n_s, path)
        weight = _read_f64(f, n_s * n_base, path).reshape(n_s, n_base)
        if f.read(1):
            raise errors.CorruptFile(f"{path}: trailing bytes")
    return StudentHead(weight=weight, bias=bias)


def write_labels(path, labels) -> None:
    labels = np.asarray(labels)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "label"])
        for i, lab in enumerate(labels):
            writer.writerow([i, int(lab)])


def read_labels(path) -> np.ndarray:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["id", "label"]:
            raise errors.CorruptFile(f"{path}: expected header id,label")
        labels = []
        for row_num, row in enumerate(reader):
            if len(row) != 2 or int(row[0]) != row_num:
                raise errors.CorruptFile(f"{path}: bad row {row_num}")
            labels.append(int(row[1]))
    return np.asarray(labels, dtype=np.int64)


def write_histogram_tsv(path, centers, density) -> None:
    """Two-column angle histogram, 9 significant digits."""
    with open(path, "w") as f:
        f.write("bin_center\tdensity\n")
        for c, d in zip(centers, density):
            f.write(f"{c:.9g}\t{d:.9g}\n")


def write_history_tsv(path, history) -> None:
    """Training history rows (step, lr, loss)."""
    with open(path, "w") as f:
        f.write("step\tlr\tloss\n")
        for step, lr, loss in history:
            f.write(f"{step}\t{lr:.9g}\t{loss:.9g}\n")


def read_history_tsv(path):
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if header != "step\tlr\tloss":
            raise errors.CorruptFile(f"{path}: expected history header")
        rows = []
        for line in f:
            step, lr, loss = line.rstrip("\n").split("\t")
            rows.append((int(step), float(lr), float(loss)))
    return rows


def write_metrics_tsv(path, metric_values) -> None:
    """Metric report rows (name, value), 6 decimal places."""
    with open(path, "w") as f:
        f.write("metric\tvalue\n")
        for name, value in metric_values:
            f.write(f"{name}\t{value:.6f}\n")


def ensure_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
