"""One-way importers from public archive formats into :class:`~bdesn.data_io.TimeSeries`.

Supported sources:

``ts``
    The sktime/UEA ``.ts`` text format (``@`` header lines, then one case per
    line: dimensions separated by ``:``, values by ``,``, class label last,
    ``?`` for missing). Timestamped data is not supported. This is how the
    Japanese Vowels recipe works: ``JapaneseVowels_TRAIN.ts`` /
    ``JapaneseVowels_TEST.ts`` (270 / 370 cases, 12 variables, lengths 7-29).
``ucr``
    UCR 2018 ``*_TRAIN.tsv`` / ``*_TEST.tsv`` univariate files: label first,
    then the values, tab- or comma-separated. Trailing ``NaN`` padding of
    variable-length sets is stripped.
``jpvow``
    The original UCI ``ae.train`` / ``ae.test`` files: blocks of 12 LPC
    coefficients per row separated by blank lines. Labels are the speaker
    index, assigned by block counts (30 per speaker for training; 31, 35, 88,
    44, 29, 24, 40, 50, 29 for testing).
"""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .data_io import Dataset, TimeSeries, make_dataset, save_dataset
from .errors import FormatError, ParameterError

JPVOW_TRAIN_COUNTS = (30,) * 9
JPVOW_TEST_COUNTS = (31, 35, 88, 44, 29, 24, 40, 50, 29)


def _float_or_nan(text: str, line: int, path) -> float:
    text = text.strip()
    if text in ("?", "", "NaN", "nan"):
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"not a number: {text!r}", line=line, path=path) from None


def read_ts(path, split: str = "s") -> list[TimeSeries]:
    path = Path(path)
    series = []
    in_data = False
    has_labels = True
    for line_no, raw in enumerate(path.read_text(encoding="utf-8", errors="replace").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@"):
            tag, *rest = line[1:].split()
            tag = tag.lower()
            if tag == "timestamps" and rest and rest[0].lower() == "true":
                raise FormatError("timestamped .ts data is not supported", line=line_no, path=path)
            if tag == "classlabel":
                has_labels = bool(rest) and rest[0].lower() == "true"
            if tag == "data":
                in_data = True
            continue
        if not in_data:
            raise FormatError("data before @data", line=line_no, path=path)
        fields = line.split(":")
        if has_labels:
            label, fields = fields[-1].strip(), fields[:-1]
        else:
            raise FormatError("unlabelled .ts files cannot be imported", line=line_no, path=path)
        dims = [[_float_or_nan(v, line_no, path) for v in f.split(",")] for f in fields]
        lengths = {len(d) for d in dims}
        if len(lengths) != 1:
            raise FormatError(f"dimensions have unequal lengths {sorted(lengths)}", line=line_no, path=path)
        series.append(TimeSeries(f"{split}{len(series)}", label, np.array(dims, dtype=np.float64).T))
    if not series:
        raise FormatError("no cases found", path=path)
    return series


def read_ucr(path, split: str = "s") -> list[TimeSeries]:
    path = Path(path)
    series = []
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip():
            continue
        cells = re.split(r"[\t,]", raw.strip())
        label = cells[0].strip()
        if re.fullmatch(r"-?\d+\.0+", label):
            label = label.split(".")[0]
        values = np.array([_float_or_nan(c, line_no, path) for c in cells[1:]])
        observed = np.flatnonzero(~np.isnan(values))
        if observed.size == 0:
            raise FormatError("series has no values", line=line_no, path=path)
        values = values[: observed[-1] + 1]
        series.append(TimeSeries(f"{split}{len(series)}", label, values[:, None]))
    if not series:
        raise FormatError("no series found", path=path)
    return series


def read_jpvow(path, counts, split: str = "s") -> list[TimeSeries]:
    path = Path(path)
    blocks, rows = [], []
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip():
            if rows:
                blocks.append(np.array(rows))
                rows = []
            continue
        values = [_float_or_nan(v, line_no, path) for v in raw.split()]
        if len(values) != 12:
            raise FormatError(f"expected 12 coefficients, found {len(values)}", line=line_no, path=path)
        rows.append(values)
    if rows:
        blocks.append(np.array(rows))
    if len(blocks) != sum(counts):
        raise FormatError(f"expected {sum(counts)} blocks, found {len(blocks)}", path=path)
    labels = [str(k + 1) for k, c in enumerate(counts) for _ in range(c)]
    return [TimeSeries(f"{split}{i}", lab, b) for i, (lab, b) in enumerate(zip(labels, blocks))]


FORMATS = ("ts", "ucr", "jpvow")


def import_archive(fmt: str, train_path, test_path, name: str) -> Dataset:
    if fmt == "ts":
        train, test = read_ts(train_path, "train"), read_ts(test_path, "test")
    elif fmt == "ucr":
        train, test = read_ucr(train_path, "train"), read_ucr(test_path, "test")
    elif fmt == "jpvow":
        train = read_jpvow(train_path, JPVOW_TRAIN_COUNTS, "train")
        test = read_jpvow(test_path, JPVOW_TEST_COUNTS, "test")
    else:
        raise ParameterError(f"unknown archive format {fmt!r}; expected one of {FORMATS}")
    return make_dataset(train, test, name=name)


def canonical_paths(out_dir, name: str) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    return out_dir / f"{name}_TRAIN.csv", out_dir / f"{name}_TEST.csv"


def import_to_csv(fmt: str, train_path, test_path, out_dir, name: str) -> tuple[Path, Path]:
    """Convert an archive pair to ``<out_dir>/<name>_TRAIN.csv`` and ``_TEST.csv``."""
    ds = import_archive(fmt, train_path, test_path, name)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    train_csv, test_csv = canonical_paths(out_dir, name)
    save_dataset(ds, train_csv, test_csv)
    return train_csv, test_csv
