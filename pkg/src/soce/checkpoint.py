"""Checkpoint container I/O in the safetensors byte layout.

Layout: 8-byte little-endian unsigned header length N, then N bytes of
JSON mapping tensor name -> {"dtype", "shape", "data_offsets"} plus an
optional "__metadata__" string map, then the concatenated tensor buffer.
Saving is byte-deterministic: names are sorted, the header JSON is
canonical, and offsets are assigned in name order.

bf16 has no native numpy dtype; it is carried as raw 2-byte elements and
widened through uint32 bit-shifts, with round-to-nearest-even on store.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

#: dtype name -> (bytes per element, numpy dtype or None for bf16)
DTYPES: dict[str, tuple[int, np.dtype | None]] = {
    "f32": (4, np.dtype("<f4")),
    "f16": (2, np.dtype("<f2")),
    "bf16": (2, None),
    "f64": (8, np.dtype("<f8")),
}

_CONTAINER_NAMES = {"f32": "F32", "f16": "F16", "bf16": "BF16", "f64": "F64"}
_FROM_CONTAINER = {v: k for k, v in _CONTAINER_NAMES.items()}
_FROM_CONTAINER.update({k: k for k in DTYPES})


def bf16_to_f64(buf: bytes) -> np.ndarray:
    u16 = np.frombuffer(buf, dtype="<u2")
    return (u16.astype(np.uint32) << 16).view(np.float32).astype(np.float64)


def f64_to_bf16(arr: np.ndarray) -> bytes:
    # Round-to-nearest-even via the f32 bit pattern.
    u32 = np.ascontiguousarray(arr, dtype=np.float32).view(np.uint32)
    bias = 0x7FFF + ((u32 >> 16) & 1)
    return ((u32 + bias) >> 16).astype("<u2").tobytes()


@dataclass(frozen=True)
class TensorEntry:
    dtype: str
    shape: tuple[int, ...]
    data: bytes

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if self.dtype not in DTYPES:
            raise ValidationError(f"unsupported dtype {self.dtype!r}")
        if any(s < 0 for s in self.shape):
            raise ValidationError("negative tensor extent")
        width, _ = DTYPES[self.dtype]
        expected = int(np.prod(self.shape, dtype=np.int64)) * width
        if len(self.data) != expected:
            raise ValidationError(
                f"tensor data length {len(self.data)} != shape product {expected}"
            )

    def to_f64(self) -> np.ndarray:
        """Widen to float64 regardless of storage dtype."""
        if self.dtype == "bf16":
            flat = bf16_to_f64(self.data)
        else:
            flat = np.frombuffer(self.data, dtype=DTYPES[self.dtype][1]).astype(np.float64)
        return flat.reshape(self.shape)

    @classmethod
    def from_f64(cls, arr: np.ndarray, dtype: str) -> "TensorEntry":
        arr = np.asarray(arr, dtype=np.float64)
        if dtype == "bf16":
            data = f64_to_bf16(arr)
        else:
            data = np.ascontiguousarray(arr.astype(DTYPES[dtype][1])).tobytes()
        return cls(dtype, arr.shape, data)


@dataclass(frozen=True)
class TensorMap:
    """Named tensors plus a string metadata map; iterates in name order."""

    tensors: dict[str, TensorEntry] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "tensors", {k: self.tensors[k] for k in sorted(self.tensors)}
        )
        object.__setattr__(
            self, "metadata", {str(k): str(v) for k, v in self.metadata.items()}
        )

    def names(self) -> list[str]:
        return list(self.tensors)

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray], dtype: str = "f32", metadata=None) -> "TensorMap":
        return cls(
            {name: TensorEntry.from_f64(np.asarray(a), dtype) for name, a in arrays.items()},
            dict(metadata or {}),
        )


def save_checkpoint(m: TensorMap, path) -> None:
    """Write the container; identical maps produce identical bytes."""
    header: dict = {}
    if m.metadata:
        header["__metadata__"] = dict(sorted(m.metadata.items()))
    offset = 0
    chunks = []
    for name, entry in m.tensors.items():
        if name == "__metadata__":
            raise ValidationError('"__metadata__" is reserved and cannot name a tensor')
        end = offset + len(entry.data)
        header[name] = {
            "dtype": _CONTAINER_NAMES[entry.dtype],
            "shape": list(entry.shape),
            "data_offsets": [offset, end],
        }
        chunks.append(entry.data)
        offset = end
    header_bytes = json.dumps(header, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for chunk in chunks:
            fh.write(chunk)


def load_checkpoint(path) -> TensorMap:
    """Read and validate a container file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8:
        raise ValidationError("truncated buffer: missing header length")
    (header_len,) = struct.unpack("<Q", blob[:8])
    if 8 + header_len > len(blob):
        raise ValidationError("truncated buffer: header extends past end of file")
    try:
        header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"malformed header: {exc}") from None
    if not isinstance(header, dict):
        raise ValidationError("malformed header: not a JSON object")
    buffer = blob[8 + header_len :]

    metadata = header.pop("__metadata__", {})
    if not isinstance(metadata, dict) or any(
        not isinstance(v, str) for v in metadata.values()
    ):
        raise ValidationError("malformed header: __metadata__ must map strings to strings")

    tensors: dict[str, TensorEntry] = {}
    extents: list[tuple[int, int, str]] = []
    for name, info in header.items():
        if not isinstance(info, dict) or not {"dtype", "shape", "data_offsets"} <= info.keys():
            raise ValidationError(f"malformed header: bad entry for {name!r}")
        dtype = _FROM_CONTAINER.get(info["dtype"])
        if dtype is None:
            raise ValidationError(f"unsupported dtype {info['dtype']!r} for {name!r}")
        begin, end = info["data_offsets"]
        if not (0 <= begin <= end):
            raise ValidationError(f"malformed header: bad offsets for {name!r}")
        if end > len(buffer):
            raise ValidationError(f"truncated buffer: tensor {name!r} extends past end of file")
        extents.append((begin, end, name))
        tensors[name] = TensorEntry(dtype, tuple(info["shape"]), buffer[begin:end])

    extents.sort()
    for (b0, e0, n0), (b1, e1, n1) in zip(extents, extents[1:]):
        if b1 < e0:
            raise ValidationError(f"overlapping tensor extents: {n0!r} and {n1!r}")

    return TensorMap(tensors, metadata)
