import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ychannel.io import ContainerError, MAGIC, dump_json, matrix_from_json, matrix_to_json, read_matrices, write_matrices

complex_mats = arrays(np.complex128, st.tuples(st.integers(0, 5), st.integers(0, 5)),
                      elements=st.complex_numbers(allow_nan=False, allow_infinity=False, max_magnitude=1e6))


@settings(max_examples=50)
@given(st.lists(complex_mats, min_size=0, max_size=4))
def test_round_trip(tmp_path_factory, mats):
    path = tmp_path_factory.mktemp("io") / "m.ycm"
    named = {f"m{k}": m for k, m in enumerate(mats)}
    write_matrices(path, named, {"note": "x"})
    meta, back = read_matrices(path)
    assert meta == {"note": "x"}
    assert list(back) == list(named)
    for k in named:
        assert back[k].shape == named[k].shape
        assert np.array_equal(back[k], named[k])


def test_layout(tmp_path):
    path = tmp_path / "m.ycm"
    write_matrices(path, {"A": np.array([[1 + 2j, 3]])})
    raw = path.read_bytes()
    assert raw[:4] == MAGIC
    version, hlen = struct.unpack_from("<II", raw, 4)
    assert version == 1
    payload = raw[12 + hlen:]
    assert struct.unpack("<4d", payload) == (1.0, 2.0, 3.0, 0.0)


def test_rejects_garbage(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(b"nope")
    with pytest.raises(ContainerError):
        read_matrices(path)


def test_rejects_truncated(tmp_path):
    path = tmp_path / "m.ycm"
    write_matrices(path, {"A": np.ones((3, 3))})
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ContainerError, match="truncated"):
        read_matrices(path)


def test_rejects_non_matrix(tmp_path):
    with pytest.raises(ContainerError):
        write_matrices(tmp_path / "m", {"v": np.ones(3)})


def test_json_matrix():
    m = np.array([[1 + 1j, 2], [0, -1j]])
    assert np.array_equal(matrix_from_json(matrix_to_json(m)), m)


def test_dump_json_sorted():
    assert dump_json({"b": 1, "a": 2}).index('"a"') < dump_json({"b": 1, "a": 2}).index('"b"')
