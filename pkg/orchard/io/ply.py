#!/usr/bin/env python3
"""
PLY reader and writer for colored vertex clouds.

Reads ASCII and binary (little or big endian) files with ``x, y, z`` and
``red, green, blue`` vertex properties plus any number of extra scalar
properties (``semlabel`` and ``treeid`` carry ground truth). Elements other
than ``vertex`` are skipped. Writes binary little endian by default.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Dict, List, Optional, Tuple, Union

import numpy as np

from ..core.cloud import ColorPointCloud
from ..exceptions import ParseError, ShapeError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_TYPES = {
    "char": "i1",
    "int8": "i1",
    "uchar": "u1",
    "uint8": "u1",
    "short": "i2",
    "int16": "i2",
    "ushort": "u2",
    "uint16": "u2",
    "int": "i4",
    "int32": "i4",
    "uint": "u4",
    "uint32": "u4",
    "float": "f4",
    "float32": "f4",
    "double": "f8",
    "float64": "f8",
}
_FORMATS = {"ascii": None, "binary_little_endian": "<", "binary_big_endian": ">"}
_COORDS = ("x", "y", "z")
_COLORS = ("red", "green", "blue")


@dataclass
class _Element:
    name: str
    count: int
    properties: List[Tuple[str, str]] = field(default_factory=list)
    has_list: bool = False

    def dtype(self, endian: str) -> np.dtype:
        return np.dtype([(name, endian + kind) for name, kind in self.properties])


@dataclass
class PlyData:
    """Cloud plus the extra per-vertex scalars found in the file"""

    cloud: ColorPointCloud
    scalars: Dict[str, np.ndarray] = field(default_factory=dict)

    def scalar(self, name: str) -> Optional[np.ndarray]:
        return self.scalars.get(name)


def _parse_header(stream: BinaryIO) -> Tuple[Optional[str], List[_Element], int]:
    """(endianness or None for ascii, elements, header line count)"""
    first = stream.readline()
    if first.strip() != b"ply":
        raise ParseError("line 1: missing 'ply' magic")
    endian = "?"
    elements: List[_Element] = []
    line_no = 1
    while True:
        raw = stream.readline()
        line_no += 1
        if not raw:
            raise ParseError(f"line {line_no}: header ended without 'end_header'")
        words = raw.decode("ascii", errors="replace").split()
        if not words or words[0] in ("comment", "obj_info"):
            continue
        keyword = words[0]
        if keyword == "end_header":
            break
        if keyword == "format":
            if len(words) != 3 or words[1] not in _FORMATS:
                raise ParseError(f"line {line_no}: unsupported format {' '.join(words[1:])!r}")
            endian = _FORMATS[words[1]]
        elif keyword == "element":
            if len(words) != 3 or not words[2].isdigit():
                raise ParseError(f"line {line_no}: malformed element declaration")
            elements.append(_Element(words[1], int(words[2])))
        elif keyword == "property":
            if not elements:
                raise ParseError(f"line {line_no}: property before any element")
            if len(words) >= 2 and words[1] == "list":
                elements[-1].has_list = True
                continue
            if len(words) != 3 or words[1] not in _TYPES:
                raise ParseError(f"line {line_no}: unsupported property {' '.join(words[1:])!r}")
            elements[-1].properties.append((words[2], _TYPES[words[1]]))
        else:
            raise ParseError(f"line {line_no}: unknown header keyword {keyword!r}")
    if endian == "?":
        raise ParseError("header has no 'format' line")
    return endian, elements, line_no


def _read_binary(stream: BinaryIO, elements: List[_Element], endian: str, offset: int) -> np.ndarray:
    for element in elements:
        if element.has_list and element.name != "vertex":
            raise ParseError(f"vertex data after list element {element.name!r} is not supported")
        dtype = element.dtype(endian)
        expected = dtype.itemsize * element.count
        body = stream.read(expected)
        if len(body) < expected:
            raise ParseError(
                f"byte offset {offset}: truncated {element.name} data, "
                f"expected {expected} bytes, got {len(body)}"
            )
        if element.name == "vertex":
            return np.frombuffer(body, dtype=dtype)
        offset += expected
    raise ParseError("file has no vertex element")


def _read_ascii(stream: BinaryIO, elements: List[_Element], line_no: int) -> np.ndarray:
    for element in elements:
        rows = []
        width = len(element.properties)
        for _ in range(element.count):
            raw = stream.readline()
            line_no += 1
            if not raw:
                raise ParseError(
                    f"line {line_no}: file ended after {len(rows)} of {element.count} {element.name} rows"
                )
            if element.name != "vertex":
                continue
            tokens = raw.decode("ascii", errors="replace").split()
            if len(tokens) != width:
                raise ParseError(f"line {line_no}: expected {width} values, found {len(tokens)}")
            rows.append(tokens)
        if element.name == "vertex":
            dtype = element.dtype("<")
            try:
                values = np.array(rows, dtype=np.float64).reshape(-1, width)
            except ValueError as e:
                raise ParseError(f"vertex rows after line {line_no - element.count}: {e}") from e
            data = np.empty(element.count, dtype=dtype)
            for i, (name, _) in enumerate(element.properties):
                data[name] = values[:, i]
            return data
    raise ParseError("file has no vertex element")


def read_ply(path: PathLike) -> PlyData:
    """Load a colored vertex cloud and its extra scalar properties"""
    path = Path(path)
    with path.open("rb") as stream:
        endian, elements, line_no = _parse_header(stream)
        vertex = next((e for e in elements if e.name == "vertex"), None)
        if vertex is None:
            raise ParseError(f"{path}: no vertex element")
        if vertex.has_list:
            raise ParseError(f"{path}: list properties on vertices are not supported")
        names = [name for name, _ in vertex.properties]
        missing = [n for n in _COORDS + _COLORS if n not in names]
        if missing:
            raise ParseError(f"{path}: vertex element lacks {', '.join(missing)}")
        if endian is None:
            data = _read_ascii(stream, elements, line_no)
        else:
            data = _read_binary(stream, elements, endian, stream.tell())

    points = np.column_stack([data[n].astype(np.float64) for n in _COORDS])
    colors = np.column_stack([data[n] for n in _COLORS])
    scalars = {n: np.array(data[n]) for n in names if n not in _COORDS + _COLORS}
    logger.debug(f"Read {len(points)} vertices from {path}")
    try:
        return PlyData(ColorPointCloud(points, colors), scalars)
    except ShapeError as e:
        raise ParseError(f"{path}: {e.detail}") from e


def _scalar_type(values: np.ndarray) -> Tuple[str, str]:
    """(ply type name, numpy code) of an extra scalar array"""
    if np.issubdtype(values.dtype, np.integer) or values.dtype == bool:
        return "int", "i4"
    return "double", "f8"


def write_ply(
    path: PathLike,
    cloud: ColorPointCloud,
    scalars: Optional[Dict[str, np.ndarray]] = None,
    binary: bool = True,
) -> Path:
    """Write ``cloud`` with optional per-vertex integer or float scalars"""
    path = Path(path)
    scalars = dict(scalars or {})
    for name, values in scalars.items():
        if len(values) != len(cloud):
            raise ShapeError(f"scalar {name!r} has {len(values)} values for {len(cloud)} vertices")

    properties = [(n, "float", "f4") for n in _COORDS] + [(n, "uchar", "u1") for n in _COLORS]
    for name, values in scalars.items():
        properties.append((name, *_scalar_type(np.asarray(values))))

    header = ["ply", f"format {'binary_little_endian' if binary else 'ascii'} 1.0"]
    header.append(f"element vertex {len(cloud)}")
    header += [f"property {kind} {name}" for name, kind, _ in properties]
    header.append("end_header")

    data = np.empty(len(cloud), dtype=[(name, "<" + code) for name, _, code in properties])
    for i, name in enumerate(_COORDS):
        data[name] = cloud.points[:, i]
        data[_COLORS[i]] = cloud.colors[:, i]
    for name, values in scalars.items():
        data[name] = np.asarray(values)

    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as stream:
        stream.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            stream.write(data.tobytes())
        else:
            for row in data:
                stream.write((" ".join(_ascii_value(v) for v in row) + "\n").encode("ascii"))
    logger.debug(f"Wrote {len(cloud)} vertices to {path}")
    return path


def _ascii_value(value) -> str:
    if isinstance(value, np.floating):
        return f"{float(value):.17g}"
    return str(int(value))
