import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smatch.conv import ConvTensor, conv_sample, conv_sample_pair, sample_columns
from smatch.errors import DegenerateNeuronError, FormatError, InvalidInputError, ParseError
from smatch.formats import (
    apply_zero_policy,
    load_binary,
    load_csv,
    load_matrix,
    save_binary,
    save_matrix,
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestCsv:
    def test_identity(self, tmp_path):
        got = load_csv(write(tmp_path, "a.csv", "1,0\n0,1\n"))
        assert got.dtype == np.float64 and got.tolist() == [[1.0, 0.0], [0.0, 1.0]]

    def test_ragged_row_reports_line(self, tmp_path):
        with pytest.raises(ParseError, match="line 2"):
            load_csv(write(tmp_path, "a.csv", "1,0\n0,1,2\n"))

    def test_comments_and_blank_lines(self, tmp_path):
        got = load_csv(write(tmp_path, "a.csv", "# header\n1,2\n\n# mid\n3,4\n"))
        assert got.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_non_numeric(self, tmp_path):
        with pytest.raises(ParseError, match="line 1"):
            load_csv(write(tmp_path, "a.csv", "1,abc\n"))

    def test_non_finite(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, "a.csv", "1,nan\n"))

    def test_empty(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, "a.csv", "# nothing\n"))


class TestBinary:
    def test_round_trip_is_bit_exact(self, tmp_path):
        m = np.random.default_rng(0).normal(size=(5, 7))
        save_binary(m, tmp_path / "m.smat")
        back = load_binary(tmp_path / "m.smat")
        assert back.tobytes() == m.tobytes()

    def test_header_layout(self, tmp_path):
        save_binary(np.ones((2, 3)), tmp_path / "m.smat")
        data = (tmp_path / "m.smat").read_bytes()
        assert data[:24] == struct.pack("<4sIQQ", b"SMAT", 1, 2, 3)
        assert len(data) == 24 + 6 * 8

    def test_bad_magic(self, tmp_path):
        (tmp_path / "m.smat").write_bytes(struct.pack("<4sIQQ", b"XMAT", 1, 1, 1) + b"\0" * 8)
        with pytest.raises(FormatError, match="magic"):
            load_binary(tmp_path / "m.smat")

    def test_bad_version(self, tmp_path):
        (tmp_path / "m.smat").write_bytes(struct.pack("<4sIQQ", b"SMAT", 2, 1, 1) + b"\0" * 8)
        with pytest.raises(FormatError, match="version"):
            load_binary(tmp_path / "m.smat")

    @pytest.mark.parametrize("cut", [3, 10, 24 + 8, 24 + 47])
    def test_truncated(self, tmp_path, cut):
        save_binary(np.ones((2, 3)), tmp_path / "m.smat")
        data = (tmp_path / "m.smat").read_bytes()
        (tmp_path / "t.smat").write_bytes(data[:cut])
        with pytest.raises(FormatError):
            load_binary(tmp_path / "t.smat")

    def test_non_finite_payload(self, tmp_path):
        (tmp_path / "m.smat").write_bytes(
            struct.pack("<4sIQQ", b"SMAT", 1, 1, 1) + struct.pack("<d", float("inf"))
        )
        with pytest.raises(FormatError):
            load_binary(tmp_path / "m.smat")


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=finite))
def test_csv_round_trip(tmp_path_factory, m):
    path = tmp_path_factory.mktemp("csv") / "m.csv"
    save_matrix(m, path)
    back = load_matrix(path)
    assert np.allclose(back, m, rtol=1e-15, atol=0)


def test_dispatch_by_extension(tmp_path):
    m = np.eye(2)
    save_matrix(m, tmp_path / "m.txt")
    assert (tmp_path / "m.txt").read_text().startswith("1.0,0.0")
    save_matrix(m, tmp_path / "m.bin")
    assert (tmp_path / "m.bin").read_bytes()[:4] == b"SMAT"
    assert np.array_equal(load_matrix(tmp_path / "m.bin"), m)


class TestZeroPolicy:
    M = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 2.0]])

    def test_reject(self):
        with pytest.raises(DegenerateNeuronError) as info:
            apply_zero_policy(self.M, "reject", "y")
        assert info.value.index == 1 and info.value.side == "y"

    def test_drop(self):
        m, kept = apply_zero_policy(self.M, "drop")
        assert kept == [0, 2] and m.tolist() == [[1.0, 0.0], [0.0, 2.0]]

    def test_keep(self):
        m, kept = apply_zero_policy(self.M, "keep")
        assert kept == [0, 1, 2] and m is self.M

    def test_unknown(self):
        with pytest.raises(InvalidInputError):
            apply_zero_policy(self.M, "ignore")


class TestConv:
    def tensor(self, rows=3, h=2, w=2, images=3, seed=0):
        vals = np.random.default_rng(seed).normal(size=(rows, h * w * images))
        return ConvTensor(vals, h, w, images)

    def test_layout_validation(self):
        with pytest.raises(InvalidInputError):
            ConvTensor(np.ones((2, 5)), 2, 2, 1)
        with pytest.raises(InvalidInputError):
            ConvTensor(np.ones((2, 4)), 0, 2, 2)

    def test_full_sample_is_a_permutation(self):
        cols = sample_columns(12, 12, 1, seed=3)[0]
        assert sorted(cols.tolist()) == list(range(12))

    def test_same_seed_selects_same_columns(self):
        a, b = self.tensor(seed=0), self.tensor(seed=1)
        for (sx, sy), cols in zip(conv_sample_pair(a, b, 5, repeats=2, seed=9), sample_columns(12, 5, 2, 9)):
            assert np.array_equal(sx, a.values[:, cols]) and np.array_equal(sy, b.values[:, cols])
        assert all(np.array_equal(u, v) for u, v in zip(conv_sample(a, 5, 2, 9), conv_sample(a, 5, 2, 9)))

    def test_repeats_differ(self):
        sets = [frozenset(c.tolist()) for c in sample_columns(12, 4, 3, seed=0)]
        assert len(set(sets)) == 3

    def test_bounds(self):
        with pytest.raises(InvalidInputError):
            conv_sample(self.tensor(), 13)
        with pytest.raises(InvalidInputError):
            conv_sample(self.tensor(), 0)
        with pytest.raises(InvalidInputError):
            conv_sample(self.tensor(), 4, repeats=0)
        with pytest.raises(InvalidInputError):
            conv_sample_pair(self.tensor(), self.tensor(h=3, w=1, images=4), 4)
