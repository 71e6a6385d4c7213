import math

import numpy as np
import pytest

from bdesn.data_io import load_dataset
from bdesn.errors import FormatError
from bdesn.importers import (
    JPVOW_TEST_COUNTS,
    JPVOW_TRAIN_COUNTS,
    import_to_csv,
    read_jpvow,
    read_ts,
    read_ucr,
)

TS_TEXT = """# comment
@problemName Toy
@timeStamps false
@missing true
@univariate false
@dimensions 2
@equalLength false
@classLabel true 1 2
@data
1,2,3:4,5,6:1
0.5,?:1.5,2:2
"""


def test_read_ts(tmp_path):
    path = tmp_path / "toy.ts"
    path.write_text(TS_TEXT)
    cases = read_ts(path, "train")
    assert [c.label for c in cases] == ["1", "2"]
    np.testing.assert_array_equal(cases[0].values, [[1, 4], [2, 5], [3, 6]])
    assert cases[1].values.shape == (2, 2) and math.isnan(cases[1].values[1, 0])


def test_read_ts_rejects_timestamps(tmp_path):
    path = tmp_path / "t.ts"
    path.write_text("@timeStamps true\n@data\n1:1\n")
    with pytest.raises(FormatError, match="timestamp"):
        read_ts(path)


def test_read_ts_unequal_dimensions(tmp_path):
    path = tmp_path / "t.ts"
    path.write_text("@classLabel true a\n@data\n1,2:3:a\n")
    with pytest.raises(FormatError, match="line 3"):
        read_ts(path)


def test_read_ucr_strips_padding(tmp_path):
    path = tmp_path / "X_TRAIN.tsv"
    path.write_text("1.0\t0.5\t0.25\tNaN\tNaN\n2\t1\t2\t3\t4\n")
    cases = read_ucr(path)
    assert [c.label for c in cases] == ["1", "2"]
    assert cases[0].length == 2 and cases[1].length == 4


def _jpvow_file(path, counts, rng):
    lines = []
    for _ in range(sum(counts)):
        for _ in range(int(rng.integers(7, 30))):
            lines.append(" ".join(f"{v:.6f}" for v in rng.standard_normal(12)))
        lines.append("")
    path.write_text("\n".join(lines) + "\n")


def test_read_jpvow_counts(tmp_path):
    rng = np.random.default_rng(0)
    _jpvow_file(tmp_path / "ae.test", JPVOW_TEST_COUNTS, rng)
    cases = read_jpvow(tmp_path / "ae.test", JPVOW_TEST_COUNTS)
    assert len(cases) == 370
    labels = [c.label for c in cases]
    assert [labels.count(str(k + 1)) for k in range(9)] == list(JPVOW_TEST_COUNTS)
    assert all(c.n_vars == 12 for c in cases)


def test_read_jpvow_wrong_block_count(tmp_path):
    rng = np.random.default_rng(1)
    _jpvow_file(tmp_path / "ae.train", (3,), rng)
    with pytest.raises(FormatError, match="270"):
        read_jpvow(tmp_path / "ae.train", JPVOW_TRAIN_COUNTS)


def test_import_to_canonical_csv(tmp_path):
    (tmp_path / "a.ts").write_text(TS_TEXT)
    (tmp_path / "b.ts").write_text(TS_TEXT)
    train_csv, test_csv = import_to_csv("ts", tmp_path / "a.ts", tmp_path / "b.ts", tmp_path / "out", "Toy")
    assert (train_csv.name, test_csv.name) == ("Toy_TRAIN.csv", "Toy_TEST.csv")
    ds = load_dataset(train_csv, test_csv)
    assert ds.name == "Toy" and ds.n_vars == 2 and len(ds.train) == 2
    np.testing.assert_array_equal(ds.train[0].values, [[1, 4], [2, 5], [3, 6]])
