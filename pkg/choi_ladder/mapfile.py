"""
MapFile documents: JSON descriptions of maps, dilations and probe operators.

A document carries a "type" discriminator. Matrices are encoded as
{"rows": r, "cols": c, "data": [[re, im], ...]} in row-major order. Parsing is strict:
unknown fields, non-finite numbers and inconsistent dimensions are rejected with a
ParseError naming the offending JSON path.
"""

from pathlib import Path
from typing import Annotated, Any, Literal

import numpy as np
import numpy.typing as npt
import structlog
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator

from .constructions import DilationSpec, builtin_oracle, traceout_channel
from .errors import ParseError
from .linalg import ComplexMatrix, as_complex_matrix
from .maps import ChoiBlockMatrix, ChoiOracle, KrausMap, KrausOracle, MapOracle

logger = structlog.get_logger(__name__)


class _Document(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False, populate_by_name=True)


class Matrix(_Document):
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    data: list[tuple[float, float]]

    @model_validator(mode="after")
    def _check_size(self) -> "Matrix":
        if len(self.data) != self.rows * self.cols:
            raise ValueError(
                f"data holds {len(self.data)} entries, expected rows*cols = "
                f"{self.rows * self.cols}"
            )
        return self

    def to_array(self) -> ComplexMatrix:
        pairs = np.asarray(self.data, dtype=np.float64).reshape(self.rows, self.cols, 2)
        return pairs[..., 0] + 1j * pairs[..., 1]

    @classmethod
    def from_array(cls, a: npt.ArrayLike) -> "Matrix":
        arr = as_complex_matrix(a)
        flat = arr.reshape(-1)
        return cls(
            rows=arr.shape[0],
            cols=arr.shape[1],
            data=[(float(z.real), float(z.imag)) for z in flat],
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols


def _require_shape(matrix: Matrix, shape: tuple[int, int], what: str) -> None:
    if matrix.shape != shape:
        raise ValueError(f"{what} is {matrix.rows}x{matrix.cols}, expected {shape[0]}x{shape[1]}")


class KrausDocument(_Document):
    type: Literal["kraus"] = "kraus"
    dim_in: int = Field(ge=1)
    dim_out: int = Field(ge=1)
    operators: list[Matrix] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_dims(self) -> "KrausDocument":
        for i, op in enumerate(self.operators):
            _require_shape(op, (self.dim_out, self.dim_in), f"operators[{i}]")
        return self

    def to_kraus(self) -> KrausMap:
        return KrausMap(
            dim_in=self.dim_in,
            dim_out=self.dim_out,
            operators=tuple(op.to_array() for op in self.operators),
        )

    @classmethod
    def from_kraus(cls, K: KrausMap) -> "KrausDocument":
        return cls(
            dim_in=K.dim_in,
            dim_out=K.dim_out,
            operators=[Matrix.from_array(op) for op in K.operators],
        )


class ChoiDocument(_Document):
    type: Literal["choi"] = "choi"
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    matrix: Matrix

    @model_validator(mode="after")
    def _check_dims(self) -> "ChoiDocument":
        size = self.n * self.m
        _require_shape(self.matrix, (size, size), "matrix")
        return self

    def to_choi(self) -> ChoiBlockMatrix:
        return ChoiBlockMatrix(n=self.n, m=self.m, matrix=self.matrix.to_array())

    @classmethod
    def from_choi(cls, C: ChoiBlockMatrix) -> "ChoiDocument":
        return cls(n=C.n, m=C.m, matrix=Matrix.from_array(C.matrix))


class BuiltinDocument(_Document):
    type: Literal["builtin"] = "builtin"
    name: str
    params: dict[str, Any] = Field(default_factory=dict)
    dim_in: int = Field(ge=1)
    dim_out: int = Field(ge=1)


class DilationDocument(_Document):
    type: Literal["dilation"] = "dilation"
    dim_k: int = Field(ge=1, alias="dim_K")
    dim_h: int = Field(ge=1, alias="dim_H")
    unitary: Matrix = Field(alias="U")
    environment: Matrix = Field(alias="b")
    projection: Matrix = Field(alias="Q")

    @model_validator(mode="after")
    def _check_dims(self) -> "DilationDocument":
        total = self.dim_k * self.dim_h
        _require_shape(self.unitary, (total, total), "U")
        _require_shape(self.environment, (self.dim_h, self.dim_h), "b")
        _require_shape(self.projection, (self.dim_k, self.dim_k), "Q")
        return self

    def to_spec(self) -> DilationSpec:
        return DilationSpec(
            dim_k=self.dim_k,
            dim_h=self.dim_h,
            unitary=self.unitary.to_array(),
            environment=self.environment.to_array(),
            projection=self.projection.to_array(),
        )


class OperatorDocument(_Document):
    type: Literal["operator"] = "operator"
    matrix: Matrix


MapFile = Annotated[
    KrausDocument | ChoiDocument | BuiltinDocument | DilationDocument | OperatorDocument,
    Field(discriminator="type"),
]
_ADAPTER: TypeAdapter[MapFile] = TypeAdapter(MapFile)
_TAGS = {"kraus", "choi", "builtin", "dilation", "operator"}


def _json_path(error: dict[str, Any]) -> str:
    if error["type"].startswith("union_tag"):
        return "$.type"
    loc = list(error["loc"])
    if loc and loc[0] in _TAGS:
        loc = loc[1:]
    path = "$"
    for part in loc:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def parse_mapfile(text: str | bytes) -> MapFile:
    """Parse and validate a MapFile document.

    Raises:
        ParseError: malformed JSON, unknown type or field, or inconsistent dimensions
    """
    try:
        return _ADAPTER.validate_json(text, strict=True)
    except ValidationError as e:
        first = e.errors()[0]
        path = _json_path(first)
        logger.debug("MapFile rejected", path=path, errors=e.error_count())
        raise ParseError(path, first["msg"]) from e


def load_mapfile(path: str | Path) -> MapFile:
    return parse_mapfile(Path(path).read_bytes())


def dump_mapfile(doc: MapFile) -> str:
    return doc.model_dump_json(by_alias=True, indent=2)


def write_mapfile(doc: MapFile, path: str | Path) -> None:
    Path(path).write_text(dump_mapfile(doc) + "\n", encoding="utf-8")


def build_oracle(doc: MapFile, seed: int | None = None) -> MapOracle:
    """The map a document describes; dilations become their trace-out channel."""
    match doc:
        case KrausDocument():
            return KrausOracle(doc.to_kraus())
        case ChoiDocument():
            return ChoiOracle(doc.to_choi())
        case BuiltinDocument():
            return builtin_oracle(doc.name, doc.params, (doc.dim_in, doc.dim_out), seed)
        case DilationDocument():
            return KrausOracle(traceout_channel(doc.to_spec()), name="traceout")
    raise ParseError("$.type", f"{doc.type!r} documents do not describe a map")
