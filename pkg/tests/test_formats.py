import struct

import numpy as np
import pytest

from simdistill import errors, formats
from simdistill.distill import StudentHead
from simdistill.whitening import WhiteningTransform


class TestEmbeddings:
    def test_round_trip_exact_for_f32_values(self, tmp_path):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((7, 5)).astype(np.float32).astype(np.float64)
        p = tmp_path / "e.emb"
        formats.write_embeddings(p, m)
        np.testing.assert_array_equal(formats.read_embeddings(p), m)

    def test_storage_is_f32(self, tmp_path):
        # a value outside f32 precision comes back rounded, not preserved
        m = np.array([[1.0 + 1e-12, 0.0]])
        p = tmp_path / "e.emb"
        formats.write_embeddings(p, m)
        back = formats.read_embeddings(p)
        assert back[0, 0] == np.float32(1.0 + 1e-12)
        assert p.stat().st_size == 4 + 8 + 4 * 2

    def test_read_returns_float64(self, tmp_path):
        p = tmp_path / "e.emb"
        formats.write_embeddings(p, np.ones((2, 2)))
        assert formats.read_embeddings(p).dtype == np.float64

    def test_wrong_magic(self, tmp_path):
        p = tmp_path / "e.emb"
        p.write_bytes(b"NOPE" + struct.pack("<II", 1, 1) + b"\x00" * 4)
        with pytest.raises(errors.CorruptFile):
            formats.read_embeddings(p)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "e.emb"
        formats.write_embeddings(p, np.ones((3, 3)))
        data = p.read_bytes()
        p.write_bytes(data[:-2])
        with pytest.raises(errors.CorruptFile, match="truncated"):
            formats.read_embeddings(p)

    def test_trailing_bytes(self, tmp_path):
        p = tmp_path / "e.emb"
        formats.write_embeddings(p, np.ones((2, 2)))
        p.write_bytes(p.read_bytes() + b"x")
        with pytest.raises(errors.CorruptFile, match="trailing"):
            formats.read_embeddings(p)

    def test_nan_payload_rejected(self, tmp_path):
        p = tmp_path / "e.emb"
        formats.write_embeddings(p, np.array([[np.nan, 1.0]]))
        with pytest.raises(errors.CorruptFile, match="NaN"):
            formats.read_embeddings(p)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.emb"
        p.write_bytes(b"")
        with pytest.raises(errors.CorruptFile):
            formats.read_embeddings(p)


class TestTransform:
    def make(self, warning=False):
        rng = np.random.default_rng(1)
        return WhiteningTransform(
            mean=rng.standard_normal(6),
            projection=rng.standard_normal((4, 6)),
            spectrum=np.sort(rng.uniform(0.1, 2.0, 6))[::-1].copy(),
            significant=5,
            n_c=4,
            warning=warning,
        )

    def test_round_trip(self, tmp_path):
        t = self.make()
        p = tmp_path / "t.wht"
        formats.write_transform(p, t)
        back = formats.read_transform(p)
        np.testing.assert_array_equal(back.mean, t.mean)
        np.testing.assert_array_equal(back.projection, t.projection)
        np.testing.assert_array_equal(back.spectrum, t.spectrum)
        assert back.significant == t.significant
        assert back.n_c == t.n_c
        assert back.warning is False

    def test_warning_flag_survives(self, tmp_path):
        p = tmp_path / "t.wht"
        formats.write_transform(p, self.make(warning=True))
        assert formats.read_transform(p).warning is True

    def test_wrong_magic(self, tmp_path):
        p = tmp_path / "t.wht"
        formats.write_embeddings(p, np.ones((2, 2)))
        with pytest.raises(errors.CorruptFile, match="WHT1"):
            formats.read_transform(p)

    def test_truncation(self, tmp_path):
        p = tmp_path / "t.wht"
        formats.write_transform(p, self.make())
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(errors.CorruptFile):
            formats.read_transform(p)


class TestStudent:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        head = StudentHead(weight=rng.standard_normal((3, 5)), bias=rng.standard_normal(3))
        p = tmp_path / "s.stu"
        formats.write_student(p, head)
        back = formats.read_student(p)
        np.testing.assert_array_equal(back.weight, head.weight)
        np.testing.assert_array_equal(back.bias, head.bias)

    def test_wrong_magic(self, tmp_path):
        p = tmp_path / "s.stu"
        p.write_bytes(b"EMB1" + b"\x00" * 16)
        with pytest.raises(errors.CorruptFile, match="STU1"):
            formats.read_student(p)

    def test_trailing_bytes(self, tmp_path):
        head = StudentHead(weight=np.ones((2, 2)), bias=np.zeros(2))
        p = tmp_path / "s.stu"
        formats.write_student(p, head)
        p.write_bytes(p.read_bytes() + b"\x00")
        with pytest.raises(errors.CorruptFile, match="trailing"):
            formats.read_student(p)


class TestLabels:
    def test_round_trip(self, tmp_path):
        labels = np.array([4, 4, 0, 2, 2, 2])
        p = tmp_path / "labels.csv"
        formats.write_labels(p, labels)
        back = formats.read_labels(p)
        np.testing.assert_array_equal(back, labels)
        assert back.dtype == np.int64

    def test_header_text(self, tmp_path):
        p = tmp_path / "labels.csv"
        formats.write_labels(p, [1, 2])
        assert p.read_text().splitlines()[0] == "id,label"

    def test_bad_header(self, tmp_path):
        p = tmp_path / "labels.csv"
        p.write_text("idx,label\n0,1\n")
        with pytest.raises(errors.CorruptFile, match="header"):
            formats.read_labels(p)

    def test_out_of_order_ids(self, tmp_path):
        p = tmp_path / "labels.csv"
        p.write_text("id,label\n0,1\n2,1\n")
        with pytest.raises(errors.CorruptFile, match="bad row"):
            formats.read_labels(p)


class TestTsv:
    def test_histogram_format(self, tmp_path):
        p = tmp_path / "h.tsv"
        formats.write_histogram_tsv(p, [0.5, 1.5], [0.123456789123, 2.0])
        lines = p.read_text().splitlines()
        assert lines[0] == "bin_center\tdensity"
        assert lines[1] == "0.5\t0.123456789"
        assert lines[2] == "1.5\t2"

    def test_history_round_trip(self, tmp_path):
        history = [(0, 1e-3, 2.345678), (1, 9.87e-4, 2.1)]
        p = tmp_path / "hist.tsv"
        formats.write_history_tsv(p, history)
        back = formats.read_history_tsv(p)
        assert back[0][0] == 0 and back[1][0] == 1
        np.testing.assert_allclose([r[1] for r in back], [1e-3, 9.87e-4], rtol=1e-8)
        np.testing.assert_allclose([r[2] for r in back], [2.345678, 2.1], rtol=1e-8)

    def test_history_bad_header(self, tmp_path):
        p = tmp_path / "hist.tsv"
        p.write_text("step\tloss\n0\t1.0\n")
        with pytest.raises(errors.CorruptFile):
            formats.read_history_tsv(p)

    def test_metrics_six_decimals(self, tmp_path):
        p = tmp_path / "m.tsv"
        formats.write_metrics_tsv(p, [("map", 0.123456789), ("mrr", 1.0)])
        lines = p.read_text().splitlines()
        assert lines[0] == "metric\tvalue"
        assert lines[1] == "map\t0.123457"
        assert lines[2] == "mrr\t1.000000"

    def test_ensure_dir(self, tmp_path):
        target = tmp_path / "a" / "b"
        out = formats.ensure_dir(target)
        assert out == target and target.is_dir()
        formats.ensure_dir(target)
