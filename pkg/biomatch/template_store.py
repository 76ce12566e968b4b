"""
The database module: identifier generation, a capacity-bounded gallery of
(identifier, embedding) records, and the BMDB store file.

BMDB layout (little-endian):

    magic     4 bytes  b"BMDB"
    version   u16      1
    lambda    u16      identifier length in bits (multiple of 8)
    capacity  u32
    space     kind u8, dimension u32, orientation u8
    count     u32
    records   sorted by identifier: id (lambda/8 raw bytes), then the embedding
              - real vectors: dimension x f64
              - bit strings:  dimension bits packed MSB-first, padded to a byte
              - symbol strings: u32 byte length + UTF-8 bytes
"""

import logging
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Dict, Iterator, List, Optional, Union

import numpy as np

from biomatch.errors import (
    CapacityExceeded,
    CapacityExhausted,
    CorruptReason,
    CorruptStore,
    DuplicateId,
)
from biomatch.spaces import MetricPoint, Orientation, PointKind, SpaceDescriptor, SpaceKind

logger = logging.getLogger(__name__)

MAGIC = b"BMDB"
VERSION = 1
MIN_LAMBDA = 16
MAX_ID_ATTEMPTS = 100

KIND_CODES = {
    SpaceKind.HAMMING: 1,
    SpaceKind.LEVENSHTEIN: 2,
    SpaceKind.EUCLIDEAN: 3,
    SpaceKind.CHEBYSHEV: 4,
    SpaceKind.COSINE: 5,
}
KINDS = {code: kind for kind, code in KIND_CODES.items()}
ORIENTATION_CODES = {Orientation.DISTANCE: 0, Orientation.SIMILARITY: 1}
ORIENTATIONS = {code: o for o, code in ORIENTATION_CODES.items()}


def check_lambda(lambda_bits: int) -> int:
    if lambda_bits < MIN_LAMBDA or lambda_bits % 8:
        raise ValueError(f"lambda must be a multiple of 8 and at least {MIN_LAMBDA}, got {lambda_bits}")
    return lambda_bits


@dataclass(frozen=True)
class TemplateRecord:
    identifier: bytes
    embedding: MetricPoint

    @property
    def id_hex(self) -> str:
        return self.identifier.hex()


def generate_id(lambda_bits: int, existing: Collection[bytes], rng) -> bytes:
    """
    Draw a uniform lambda-bit identifier, resampling on collision.

    ``rng`` needs a ``bytes(n)`` method, as ``numpy.random.Generator`` has.
    """
    check_lambda(lambda_bits)
    size = lambda_bits // 8
    for _ in range(MAX_ID_ATTEMPTS):
        candidate = bytes(rng.bytes(size))
        if candidate not in existing:
            return candidate
        logger.debug("identifier collision on %s, resampling", candidate.hex())
    raise CapacityExhausted(f"no fresh {lambda_bits}-bit identifier after {MAX_ID_ATTEMPTS} draws")


def parse_id(text: str) -> bytes:
    try:
        return bytes.fromhex(text)
    except ValueError as e:
        raise ValueError(f"identifier must be hex, got {text!r}") from e


class Gallery:
    """
    Identifier-keyed template records under one space, at most ``capacity``.

    A single lock serialises writers and gives readers a consistent snapshot.
    """

    def __init__(self, space: SpaceDescriptor, capacity: int, lambda_bits: int):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.space = space
        self.capacity = int(capacity)
        self.lambda_bits = check_lambda(lambda_bits)
        self._records: Dict[bytes, TemplateRecord] = {}
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, identifier: bytes) -> bool:
        return identifier in self._records

    def __iter__(self) -> Iterator[TemplateRecord]:
        return iter(self.records())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Gallery):
            return NotImplemented
        return (
            self.space == other.space
            and self.capacity == other.capacity
            and self.lambda_bits == other.lambda_bits
            and self.records() == other.records()
        )

    @property
    def full(self) -> bool:
        return len(self._records) >= self.capacity

    def ids(self) -> List[bytes]:
        with self._lock:
            return sorted(self._records)

    def records(self) -> List[TemplateRecord]:
        with self._lock:
            return [self._records[key] for key in sorted(self._records)]

    def insert(self, record: TemplateRecord) -> "Gallery":
        if len(record.identifier) * 8 != self.lambda_bits:
            raise ValueError(f"identifier must be {self.lambda_bits} bits, got {len(record.identifier) * 8}")
        self.space.conform(record.embedding)
        with self._lock:
            if record.identifier in self._records:
                raise DuplicateId(f"identifier {record.id_hex} is already enrolled")
            if self.full:
                raise CapacityExceeded(f"gallery holds its capacity of {self.capacity} records")
            self._records[record.identifier] = record
        return self

    def lookup(self, identifier: bytes) -> Optional[TemplateRecord]:
        with self._lock:
            return self._records.get(identifier)

    def remove(self, identifier: bytes) -> bool:
        with self._lock:
            return self._records.pop(identifier, None) is not None


def encode_embedding(point: MetricPoint) -> bytes:
    if point.kind == PointKind.REAL_VECTOR:
        return np.ascontiguousarray(point.data, dtype="<f8").tobytes()
    if point.kind == PointKind.BIT_STRING:
        return np.packbits(point.data).tobytes()
    raw = point.data.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def encode_gallery(gallery: Gallery) -> bytes:
    space = gallery.space
    records = gallery.records()
    parts = [
        MAGIC,
        struct.pack(
            "<HHIBIBI",
            VERSION,
            gallery.lambda_bits,
            gallery.capacity,
            KIND_CODES[space.kind],
            space.dimension,
            ORIENTATION_CODES[space.orientation],
            len(records),
        ),
    ]
    for record in records:
        parts.append(record.identifier)
        parts.append(encode_embedding(record.embedding))
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise CorruptStore(CorruptReason.TRUNCATED, f"needed {size} bytes at offset {self.offset}")
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _decode_embedding(reader: _Reader, space: SpaceDescriptor) -> MetricPoint:
    if space.point_kind == PointKind.REAL_VECTOR:
        values = np.frombuffer(reader.take(8 * space.dimension), dtype="<f8")
        return MetricPoint.vector(values)
    if space.point_kind == PointKind.BIT_STRING:
        packed = np.frombuffer(reader.take((space.dimension + 7) // 8), dtype=np.uint8)
        return MetricPoint.bits(np.unpackbits(packed)[: space.dimension])
    (length,) = reader.unpack("<I")
    try:
        return MetricPoint.symbols(reader.take(length).decode("utf-8"))
    except UnicodeDecodeError as e:
        raise CorruptStore(CorruptReason.MALFORMED, "symbol string is not UTF-8") from e


def decode_gallery(data: bytes) -> Gallery:
    reader = _Reader(data)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CorruptStore(CorruptReason.BAD_MAGIC)
    (version,) = reader.unpack("<H")
    if version != VERSION:
        raise CorruptStore(CorruptReason.BAD_VERSION, f"unsupported version {version}")
    lambda_bits, capacity, kind, dimension, orientation, count = reader.unpack("<HIBIBI")
    if kind not in KINDS or orientation not in ORIENTATIONS:
        raise CorruptStore(CorruptReason.MALFORMED, "unknown space descriptor codes")
    try:
        space = SpaceDescriptor(kind=KINDS[kind], dimension=dimension, orientation=ORIENTATIONS[orientation])
        gallery = Gallery(space, capacity, lambda_bits)
        for _ in range(count):
            identifier = reader.take(lambda_bits // 8)
            gallery.insert(TemplateRecord(identifier, _decode_embedding(reader, space)))
    except CorruptStore:
        raise
    except (ValueError, CapacityExceeded) as e:
        raise CorruptStore(CorruptReason.MALFORMED, str(e)) from e
    if reader.offset != len(data):
        raise CorruptStore(CorruptReason.MALFORMED, f"{len(data) - reader.offset} trailing bytes")
    return gallery


def save(gallery: Gallery, destination: Union[str, Path]) -> None:
    Path(destination).write_bytes(encode_gallery(gallery))


def load(source: Union[str, Path]) -> Gallery:
    return decode_gallery(Path(source).read_bytes())
