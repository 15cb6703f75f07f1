"""Portable graymap and optical flow file formats.

PGM covers both the ASCII (P2) and binary (P5) flavors; samples are
normalized to [0, 1] on load by dividing through the stored maxval.  Flow
fields are written in the little-endian Middlebury format (magic "PIEH",
two int32 extents, interleaved float32 pairs in row-major order) with a
plain CSV writer as fallback.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PgmImage",
    "FlowField",
    "PgmParseError",
    "read_pgm",
    "write_pgm",
    "write_flo",
    "write_flow_csv",
]

FLO_MAGIC = b"PIEH"


class PgmParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


@dataclass
class PgmImage:
    """Grayscale image; samples are row-major floats in [0, 1]."""

    width: int
    height: int
    maxval: int
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.width < 1 or self.height < 1:
            raise ValueError("image extents must be positive")
        if not 1 <= self.maxval <= 65535:
            raise ValueError(f"maxval must be in [1, 65535], got {self.maxval}")
        if self.samples.shape[0] != self.width * self.height:
            raise ValueError(
                f"{self.samples.shape[0]} samples do not fill "
                f"{self.width}x{self.height}"
            )

    def as_array(self) -> np.ndarray:
        """Samples as a (height, width) array."""
        return self.samples.reshape(self.height, self.width)

    @classmethod
    def from_array(cls, array, maxval: int = 255) -> "PgmImage":
        a = np.asarray(array, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("image array must be 2-d")
        return cls(a.shape[1], a.shape[0], maxval, a.reshape(-1))


class _Scanner:
    # whitespace/comment-aware tokenizer over the header bytes
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_separators(self):
        d = self.data
        while self.pos < len(d):
            c = d[self.pos : self.pos + 1]
            if c in b" \t\r\n\x0b\x0c":
                self.pos += 1
            elif c == b"#":
                while self.pos < len(d) and d[self.pos : self.pos + 1] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def token(self, what: str) -> bytes:
        self.skip_separators()
        start = self.pos
        d = self.data
        while self.pos < len(d) and d[self.pos : self.pos + 1] not in b" \t\r\n\x0b\x0c#":
            self.pos += 1
        if self.pos == start:
            raise PgmParseError(f"expected {what}", start)
        return d[start : self.pos]

    def integer(self, what: str) -> int:
        start = self.pos
        tok = self.token(what)
        try:
            return int(tok)
        except ValueError:
            raise PgmParseError(
                f"expected integer {what}, got {tok[:20]!r}", start
            ) from None


def read_pgm(path) -> PgmImage:
    with open(path, "rb") as fh:
        data = fh.read()
    sc = _Scanner(data)
    magic = sc.token("magic number")
    if magic not in (b"P2", b"P5"):
        raise PgmParseError(f"unsupported magic {magic[:20]!r}", 0)
    width = sc.integer("width")
    height = sc.integer("height")
    maxval = sc.integer("maxval")
    if width < 1 or height < 1:
        raise PgmParseError(f"bad extents {width}x{height}", sc.pos)
    if not 1 <= maxval <= 65535:
        raise PgmParseError(f"maxval {maxval} out of range", sc.pos)
    count = width * height
    if magic == b"P2":
        raw = np.empty(count, dtype=np.int64)
        for k in range(count):
            raw[k] = sc.integer("sample")
        sc.skip_separators()
        if sc.pos != len(data):
            raise PgmParseError("trailing data after raster", sc.pos)
    else:
        if sc.pos >= len(data):
            raise PgmParseError("missing raster", sc.pos)
        # exactly one separator byte between maxval and binary raster
        if data[sc.pos : sc.pos + 1] not in b" \t\r\n\x0b\x0c":
            raise PgmParseError("expected separator before raster", sc.pos)
        sc.pos += 1
        per = 1 if maxval < 256 else 2
        need = count * per
        got = len(data) - sc.pos
        if got < need:
            raise PgmParseError(
                f"raster truncated, need {need} bytes, have {got}", len(data)
            )
        if got > need:
            raise PgmParseError("trailing data after raster", sc.pos + need)
        buf = data[sc.pos :]
        dt = np.dtype(np.uint8) if per == 1 else np.dtype(">u2")
        raw = np.frombuffer(buf, dtype=dt).astype(np.int64)
    if raw.size and raw.max() > maxval:
        raise PgmParseError(
            f"sample {int(raw.max())} exceeds maxval {maxval}", sc.pos
        )
    if raw.size and raw.min() < 0:
        raise PgmParseError("negative sample", sc.pos)
    samples = raw.astype(np.float64) / float(maxval)
    return PgmImage(width, height, maxval, samples)


def write_pgm(image: PgmImage, path, binary: bool = True):
    """Quantize samples to the image's maxval and write P5 (or P2)."""
    levels = np.rint(np.clip(image.samples, 0.0, 1.0) * image.maxval).astype(
        np.int64
    )
    header = f"P5\n{image.width} {image.height}\n{image.maxval}\n"
    if binary:
        dt = np.dtype(np.uint8) if image.maxval < 256 else np.dtype(">u2")
        payload = levels.astype(dt).tobytes()
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(payload)
        return
    lines = [f"P2\n{image.width} {image.height}\n{image.maxval}\n"]
    for r in range(image.height):
        row = levels[r * image.width : (r + 1) * image.width]
        lines.append(" ".join(str(int(v)) for v in row) + "\n")
    with open(path, "w", encoding="ascii") as fh:
        fh.writelines(lines)


@dataclass
class FlowField:
    """Dense 2-d flow; ``u`` is the horizontal and ``v`` the vertical
    displacement, each shaped (height, width)."""

    width: int
    height: int
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64).reshape(
            self.height, self.width
        )
        self.v = np.asarray(self.v, dtype=np.float64).reshape(
            self.height, self.width
        )
        if self.width < 1 or self.height < 1:
            raise ValueError("flow extents must be positive")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise ValueError("flow values must be finite")


def write_flo(field: FlowField, path):
    interleaved = np.empty((field.height, field.width, 2), dtype="<f4")
    interleaved[:, :, 0] = field.u
    interleaved[:, :, 1] = field.v
    with open(path, "wb") as fh:
        fh.write(FLO_MAGIC)
        fh.write(struct.pack("<ii", field.width, field.height))
        fh.write(interleaved.tobytes())


def write_flow_csv(field: FlowField, path):
    """One "u,v" pair per line, row-major."""
    with open(path, "w", encoding="ascii") as fh:
        for r in range(field.height):
            for c in range(field.width):
                fh.write(f"{float(field.u[r, c])!r},{float(field.v[r, c])!r}\n")
