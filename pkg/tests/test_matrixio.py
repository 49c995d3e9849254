"""Tests for matrix/table parsing and result serialization."""

import io
import json

import numpy as np
import pytest

from cnvscan import (
    Detection,
    IntensityMatrix,
    MatrixFormatError,
    read_detections_table,
    read_matrix,
    read_pedigree,
    result_document,
    write_matrix,
    write_table,
)


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestReadMatrix:
    def test_tab_separated_with_header(self, tmp_path):
        path = _write(
            tmp_path,
            "m.tsv",
            "sample\t101\t205\t310\nA\t0.5\t-1.25\t2.0\nB\t1.0\t0.0\t-0.5\n",
        )
        mat = read_matrix(path)
        assert mat.sample_ids == ["A", "B"]
        assert mat.probe_positions.tolist() == [101, 205, 310]
        np.testing.assert_array_equal(mat.values, [[0.5, -1.25, 2.0], [1.0, 0.0, -0.5]])

    def test_comma_separated(self, tmp_path):
        path = _write(tmp_path, "m.csv", "sample,1,2\nA,0.5,1.5\n")
        mat = read_matrix(path)
        assert mat.values.shape == (1, 2)
        assert mat.values[0, 1] == 1.5

    def test_whitespace_separated(self, tmp_path):
        path = _write(tmp_path, "m.txt", "A 0.5 1.5 2.5\nB   1.0  2.0\t3.0\n")
        mat = read_matrix(path)
        assert mat.values.shape == (2, 3)
        # no header: positions default to 1..T
        assert mat.probe_positions.tolist() == [1, 2, 3]

    def test_string_probe_ids_header(self, tmp_path):
        # non-numeric probe IDs mark a header but carry no positions
        path = _write(tmp_path, "m.tsv", "sample\trs1\trs2\nA\t0.5\t1.5\n")
        mat = read_matrix(path)
        assert mat.sample_ids == ["A"]
        assert mat.probe_positions.tolist() == [1, 2]

    def test_no_header_first_row_is_data(self, tmp_path):
        # decreasing integers cannot be positions, so the row is data
        path = _write(tmp_path, "m.tsv", "A\t3\t2\t1\nB\t1\t2\t3\n")
        mat = read_matrix(path)
        assert mat.values.shape == (2, 3)
        assert mat.sample_ids == ["A", "B"]

    def test_continuous_first_row_kept(self, tmp_path):
        # typical intensities never form a strictly increasing integer row
        path = _write(tmp_path, "m.tsv", "A\t0.53\t-0.21\t1.7\nB\t0.1\t0.2\t0.3\n")
        mat = read_matrix(path)
        assert mat.values.shape == (2, 3)

    def test_blank_lines_skipped(self, tmp_path):
        path = _write(tmp_path, "m.tsv", "\nA\t0.5\t1.5\n\nB\t1.0\t2.0\n\n")
        mat = read_matrix(path)
        assert mat.sample_ids == ["A", "B"]

    def test_empty_file(self, tmp_path):
        path = _write(tmp_path, "m.tsv", "\n\n")
        with pytest.raises(MatrixFormatError, match="empty"):
            read_matrix(path)

    def test_ragged_row_reports_line(self, tmp_path):
        path = _write(tmp_path, "m.tsv", "A\t0.5\t0.25\t0.125\nB\t1\t2\n")
        with pytest.raises(MatrixFormatError, match=r":2:"):
            read_matrix(path)

    def test_non_numeric_value_reports_line(self, tmp_path):
        path = _write(tmp_path, "m.tsv", "sample\t1\t2\nA\t0.5\toops\n")
        with pytest.raises(MatrixFormatError, match=r":2:"):
            read_matrix(path)

    def test_header_width_mismatch(self, tmp_path):
        path = _write(tmp_path, "m.tsv", "sample\t1\t2\t3\nA\t0.5\t1.5\n")
        with pytest.raises(MatrixFormatError, match="header length"):
            read_matrix(path)

    def test_lone_field_row(self, tmp_path):
        path = _write(tmp_path, "m.txt", "A\n")
        with pytest.raises(MatrixFormatError, match="sample ID and values"):
            read_matrix(path)

    def test_non_increasing_integers_are_data(self, tmp_path):
        # equal integers cannot be probe positions, so the ambiguous
        # first row falls back to being a data row
        path = _write(tmp_path, "m.tsv", "sample\t5\t5\nA\t0.5\t1.5\n")
        mat = read_matrix(path)
        assert mat.sample_ids == ["sample", "A"]
        assert mat.values[0].tolist() == [5.0, 5.0]


class TestRoundTrip:
    def test_write_read_exact(self, tmp_path):
        rng = np.random.default_rng(5)
        mat = IntensityMatrix(
            rng.standard_normal((4, 7)) * np.pi,
            sample_ids=["a", "b", "c", "d"],
            probe_positions=np.arange(10, 80, 10),
        )
        path = tmp_path / "round.tsv"
        write_matrix(path, mat)
        back = read_matrix(path)
        # 17 significant digits give bit-exact doubles back
        np.testing.assert_array_equal(back.values, mat.values)
        assert back.sample_ids == mat.sample_ids
        np.testing.assert_array_equal(back.probe_positions, mat.probe_positions)

    def test_write_to_stream(self):
        mat = IntensityMatrix(np.array([[1.0, 2.0]]), sample_ids=["x"])
        buf = io.StringIO()
        write_matrix(buf, mat)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "sample\t1\t2"
        assert lines[1] == "x\t1\t2"

    def test_extreme_values_survive(self, tmp_path):
        vals = np.array([[1e-300, 1e300, -0.1, np.pi, 2.0 ** -52]])
        mat = IntensityMatrix(vals)
        path = tmp_path / "ext.tsv"
        write_matrix(path, mat)
        np.testing.assert_array_equal(read_matrix(path).values, vals)


class TestResultDocument:
    def _dets(self):
        return [
            Detection(tau1=3, tau2=9, score=31.25, p_value=0.0012,
                      carriers=frozenset({2, 0})),
            Detection(tau1=40, tau2=44, score=18.5, p_value=0.04,
                      carriers=frozenset({1})),
        ]

    def test_byte_determinism(self):
        ids = ["s0", "s1", "s2"]
        cfg = {"alpha": 0.05, "statistic": "mixture"}
        a = result_document("0.1.0", cfg, self._dets(), ids)
        b = result_document("0.1.0", dict(cfg), list(self._dets()), list(ids))
        assert a == b

    def test_schema_and_carrier_names(self):
        doc = json.loads(result_document("0.1.0", {"alpha": 0.05}, self._dets(),
                                         ["s0", "s1", "s2"]))
        assert doc["tool"] == "cnvscan"
        assert doc["version"] == "0.1.0"
        assert doc["config"] == {"alpha": 0.05}
        assert len(doc["detections"]) == 2
        first = doc["detections"][0]
        assert first["tau1"] == 3 and first["tau2"] == 9
        assert first["carriers"] == ["s0", "s2"]
        assert first["score"] == 31.25

    def test_no_detections(self):
        doc = json.loads(result_document("0.1.0", {}, [], ["s0"]))
        assert doc["detections"] == []

    def test_parseable_and_newline_terminated(self):
        text = result_document("0.1.0", {"t0": 1}, self._dets(), ["a", "b", "c"])
        assert text.endswith("\n")
        json.loads(text)


class TestDetectionsTable:
    def test_basic(self, tmp_path):
        path = _write(
            tmp_path,
            "d.tsv",
            "# comment\nA\t10\t20\nA\t35\t40\nB\t10\t18\nC\n",
        )
        table = read_detections_table(path)
        assert table == {"A": [(10, 20), (35, 40)], "B": [(10, 18)], "C": []}

    def test_whitespace_fields(self, tmp_path):
        path = _write(tmp_path, "d.txt", "A 10 20\n")
        assert read_detections_table(path) == {"A": [(10, 20)]}

    def test_bad_field_count(self, tmp_path):
        path = _write(tmp_path, "d.tsv", "A\t10\n")
        with pytest.raises(MatrixFormatError, match=r":1:"):
            read_detections_table(path)

    def test_non_integer_bounds(self, tmp_path):
        path = _write(tmp_path, "d.tsv", "A\t10\ttwenty\n")
        with pytest.raises(MatrixFormatError, match=r":1:"):
            read_detections_table(path)


class TestPedigree:
    def test_pairs_and_trios(self, tmp_path):
        path = _write(
            tmp_path,
            "ped.txt",
            "# family file\npair A A2\ntrio C P1 P2\nPAIR B B2\n",
        )
        ped = read_pedigree(path)
        assert ped.replicate_pairs == (("A", "A2"), ("B", "B2"))
        assert ped.trios == (("C", "P1", "P2"),)
        assert ped.sample_ids() == {"A", "A2", "B", "B2", "C", "P1", "P2"}

    def test_bad_line(self, tmp_path):
        path = _write(tmp_path, "ped.txt", "duo A B\n")
        with pytest.raises(MatrixFormatError, match=r":1:"):
            read_pedigree(path)

    def test_wrong_arity(self, tmp_path):
        path = _write(tmp_path, "ped.txt", "trio C P1\n")
        with pytest.raises(MatrixFormatError, match=r":1:"):
            read_pedigree(path)


class TestWriteTable:
    def test_mixed_types(self):
        buf = io.StringIO()
        write_table(buf, ["len", "power"], [(10, 0.5), (20, 0.25)])
        lines = buf.getvalue().splitlines()
        assert lines[0] == "len\tpower"
        assert lines[1] == "10\t0.5"
        assert lines[2] == "20\t0.25"

    def test_float_precision(self):
        buf = io.StringIO()
        write_table(buf, ["x"], [(float(np.pi),)])
        assert float(buf.getvalue().splitlines()[1]) == float(np.pi)
