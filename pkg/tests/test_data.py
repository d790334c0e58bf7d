import numpy as np
import pytest

from cxbench.data import Dataset, read_dataset, stratified, write_dataset
from cxbench.rfgen import RfCondition, make_dataset


def test_roundtrip(tmp_path):
    s = make_dataset(RfCondition("mixed", seed=2), (4, 2, 2))
    p = write_dataset(tmp_path / "d.cxds", s)
    back = read_dataset(p)
    for a, b in zip(s, back):
        np.testing.assert_allclose(b.x, a.x.astype(np.complex64), atol=0)
        np.testing.assert_array_equal(a.y, b.y)
    assert back.header["domain"] == "rf"
    assert back.train.class_names == s.train.class_names


def test_bad_magic(tmp_path):
    p = tmp_path / "x.cxds"
    p.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(ValueError):
        read_dataset(p)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 1, 4)), [0, 3], ("a", "b"))
    with pytest.raises(ValueError):
        Dataset(np.full((1, 1, 4), np.nan), [0], ("a",))
    assert stratified(8) == (8, 2, 2)
