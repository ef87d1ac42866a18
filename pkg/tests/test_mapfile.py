"""
Tests for MapFile parsing, serialization and oracle building.
"""

import json

import numpy as np
import pytest

from choi_ladder.constructions import DiagonalDampingOracle
from choi_ladder.errors import ParseError
from choi_ladder.mapfile import (
    BuiltinDocument,
    ChoiDocument,
    DilationDocument,
    KrausDocument,
    Matrix,
    OperatorDocument,
    build_oracle,
    dump_mapfile,
    load_mapfile,
    parse_mapfile,
)
from choi_ladder.maps import ChoiOracle, KrausMap, KrausOracle, choi_from_kraus


def _matrix(a):
    return Matrix.from_array(a).model_dump()


def _kraus_doc(**overrides):
    doc = {
        "type": "kraus",
        "dim_in": 2,
        "dim_out": 2,
        "operators": [_matrix(np.eye(2))],
    }
    doc.update(overrides)
    return doc


class TestMatrix:
    """Test the [re, im] matrix encoding."""

    def test_encoding(self):
        m = Matrix.from_array([[1 + 2j, 0], [0, -1j]])

        assert m.rows == 2
        assert m.cols == 2
        assert m.data == [(1.0, 2.0), (0.0, 0.0), (0.0, 0.0), (0.0, -1.0)]
        np.testing.assert_array_equal(m.to_array(), [[1 + 2j, 0], [0, -1j]])

    def test_data_length_checked(self):
        with pytest.raises(ValueError, match="expected rows\\*cols"):
            Matrix(rows=2, cols=2, data=[(1.0, 0.0)])


class TestParseMapfile:
    """Test strict parsing with path-bearing errors."""

    def test_kraus_document(self):
        doc = parse_mapfile(json.dumps(_kraus_doc()))

        assert isinstance(doc, KrausDocument)
        K = doc.to_kraus()
        np.testing.assert_array_equal(K.operators[0], np.eye(2))

    def test_round_trip(self):
        docs = [
            KrausDocument.from_kraus(KrausMap.from_operators([np.eye(2), 1j * np.eye(2)])),
            ChoiDocument.from_choi(
                choi_from_kraus(KrausMap.from_operators([np.array([[1.0], [1j]])]))
            ),
            BuiltinDocument(name="diagonal-damping", params={"gamma": 0.5}, dim_in=3, dim_out=3),
            OperatorDocument(matrix=Matrix.from_array([[0.125, 1e-300], [-2.5, 3]])),
        ]

        for doc in docs:
            assert parse_mapfile(dump_mapfile(doc)) == doc

    def test_choi_document_preserves_blocks(self, sample_kraus):
        C = choi_from_kraus(sample_kraus)

        doc = ChoiDocument.from_choi(C)

        assert (doc.n, doc.m) == (3, 4)
        np.testing.assert_array_equal(doc.to_choi().matrix, C.matrix)

    def test_dilation_aliases(self):
        raw = {
            "type": "dilation",
            "dim_K": 1,
            "dim_H": 2,
            "U": _matrix(np.eye(2)),
            "b": _matrix(np.diag([1.0, 0.0])),
            "Q": _matrix(np.eye(1)),
        }

        doc = parse_mapfile(json.dumps(raw))

        assert isinstance(doc, DilationDocument)
        assert (doc.dim_k, doc.dim_h) == (1, 2)
        assert json.loads(dump_mapfile(doc))["dim_K"] == 1
        assert doc.to_spec().environment[0, 0] == 1

    def test_malformed_json(self):
        with pytest.raises(ParseError) as exc_info:
            parse_mapfile("{not json")

        assert exc_info.value.path == "$"
        assert str(exc_info.value).startswith("ParseError at $")

    def test_unknown_type(self):
        with pytest.raises(ParseError) as exc_info:
            parse_mapfile(json.dumps({"type": "superoperator"}))

        assert exc_info.value.path == "$.type"

    def test_unknown_field(self):
        with pytest.raises(ParseError) as exc_info:
            parse_mapfile(json.dumps(_kraus_doc(comment="hi")))

        assert exc_info.value.path == "$.comment"

    def test_bad_entry_path(self):
        doc = _kraus_doc()
        doc["operators"][0]["data"][0] = ["1", 0]

        with pytest.raises(ParseError) as exc_info:
            parse_mapfile(json.dumps(doc))

        assert exc_info.value.path == "$.operators[0].data[0][0]"

    def test_inconsistent_dimensions(self):
        with pytest.raises(ParseError, match="operators\\[0\\] is 2x2, expected 3x2"):
            parse_mapfile(json.dumps(_kraus_doc(dim_out=3)))

    def test_empty_operator_list(self):
        with pytest.raises(ParseError) as exc_info:
            parse_mapfile(json.dumps(_kraus_doc(operators=[])))

        assert exc_info.value.path == "$.operators"

    def test_choi_size_checked(self):
        raw = {"type": "choi", "n": 2, "m": 2, "matrix": _matrix(np.eye(3))}

        with pytest.raises(ParseError, match="matrix is 3x3, expected 4x4"):
            parse_mapfile(json.dumps(raw))

    def test_load_from_file(self, write_doc):
        path = write_doc(_kraus_doc())

        assert isinstance(load_mapfile(path), KrausDocument)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_mapfile(tmp_path / "missing.json")


class TestBuildOracle:
    """Test documents become the maps they describe."""

    def test_kraus(self):
        oracle = build_oracle(parse_mapfile(json.dumps(_kraus_doc())))
        assert isinstance(oracle, KrausOracle)

    def test_choi(self):
        oracle = build_oracle(ChoiDocument(n=1, m=2, matrix=Matrix.from_array(np.eye(2))))

        assert isinstance(oracle, ChoiOracle)
        assert (oracle.dim_in, oracle.dim_out) == (1, 2)

    def test_builtin(self):
        doc = BuiltinDocument(
            name="diagonal-damping", params={"gamma": 0.5}, dim_in=3, dim_out=3
        )

        oracle = build_oracle(doc)

        assert isinstance(oracle, DiagonalDampingOracle)
        assert oracle.gamma == 0.5

    def test_dilation(self):
        doc = DilationDocument(
            dim_K=1,
            dim_H=2,
            U=Matrix.from_array(np.eye(2)),
            b=Matrix.from_array(np.diag([1.0, 0.0])),
            Q=Matrix.from_array(np.eye(1)),
        )

        oracle = build_oracle(doc)

        assert oracle.name == "traceout"
        assert (oracle.dim_in, oracle.dim_out) == (1, 2)

    def test_operator_is_not_a_map(self):
        with pytest.raises(ParseError, match="do not describe a map"):
            build_oracle(OperatorDocument(matrix=Matrix.from_array(np.eye(2))))
