"""File formats: 16-bit PGM images, the SPKL1 measurement container, CSV logs.

SPKL1 layout (little-endian throughout):

    offset  size      field
    0       6         magic "SPKL1\\0"
    6       1         u8 version (1)
    7       1         u8 flags, bit0 = complex data
    8       4*3       u32 m, n, L
    20      8*2       f64 sigma_w, sigma_z
    36      ...       A row-major, f64 (re, im) pairs; re only when real
    ...     ...       L look vectors, each m entries, same element layout

The container is self-delimiting, so any length mismatch is reported with
the byte offset at which the file ends or the expected size.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import BadShapeError, CorruptFileError
from .measurement import LookSet, SceneImage, SensingMatrix

SPKL_MAGIC = b"SPKL1\x00"
SPKL_VERSION = 1
PGM_MAXVAL = 65535


# ---------------------------------------------------------------- PGM


def write_pgm(path, image) -> None:
    """Write a scene as binary 16-bit PGM (P5, maxval 65535, big-endian)."""
    pixels = image.pixels if isinstance(image, SceneImage) else np.asarray(image, float)
    if pixels.ndim != 2:
        raise BadShapeError("PGM image must be 2-d")
    quant = np.rint(np.clip(pixels, 0.0, 1.0) * PGM_MAXVAL).astype(">u2")
    header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n{PGM_MAXVAL}\n".encode("ascii")
    Path(path).write_bytes(header + quant.tobytes())


def _pgm_tokens(data: bytes):
    """Yield header tokens, skipping whitespace and # comments."""
    i = 0
    while True:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise CorruptFileError(f"PGM header ended unexpectedly at byte {start}")
        yield data[start:i], i


def read_pgm(path) -> SceneImage:
    """Read a binary PGM (maxval 255 or 65535) into a unit-range scene."""
    data = Path(path).read_bytes()
    tokens = _pgm_tokens(data)
    try:
        magic, _ = next(tokens)
        if magic != b"P5":
            raise CorruptFileError(f"not a binary PGM (magic {magic!r} at byte 0)")
        (width, _), (height, _), (maxval, end) = (
            (int(tok), pos) for tok, pos in (next(tokens), next(tokens), next(tokens))
        )
    except (StopIteration, ValueError) as exc:
        raise CorruptFileError(f"malformed PGM header: {exc}") from exc
    if maxval not in (255, PGM_MAXVAL):
        raise CorruptFileError(f"unsupported PGM maxval {maxval}")
    start = end + 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval == PGM_MAXVAL else np.dtype("u1")
    need = height * width * dtype.itemsize
    raw = data[start : start + need]
    if len(raw) < need:
        raise CorruptFileError(f"PGM truncated at byte {len(data)}, expected {start + need}")
    pixels = np.frombuffer(raw, dtype=dtype).reshape(height, width).astype(float) / maxval
    return SceneImage(pixels)


# ---------------------------------------------------------------- SPKL1


def _spkl_expected_size(m: int, n: int, L: int, complex_data: bool) -> int:
    per = 16 if complex_data else 8
    return 36 + m * n * per + L * m * per


def write_spkl(path, A: SensingMatrix, looks: LookSet) -> None:
    """Serialize a sensing matrix and its look set."""
    complex_data = not looks.real_valued
    if not complex_data and not A.is_real():
        raise BadShapeError("real-valued container cannot hold a complex sensing matrix")
    if A.m != looks.m:
        raise BadShapeError(f"A has m={A.m} but looks have m={looks.m}")
    header = SPKL_MAGIC + struct.pack(
        "<BBIII d d",
        SPKL_VERSION,
        1 if complex_data else 0,
        A.m,
        A.n,
        looks.L,
        looks.sigma_w,
        looks.sigma_z,
    )
    if complex_data:
        body = A.matrix.astype("<c16").tobytes() + looks.looks.astype("<c16").tobytes()
    else:
        body = A.re.astype("<f8").tobytes() + looks.looks.real.astype("<f8").tobytes()
    Path(path).write_bytes(header + body)


def read_spkl(path) -> tuple[SensingMatrix, LookSet]:
    data = Path(path).read_bytes()
    if len(data) < 36:
        raise CorruptFileError(f"SPKL1 truncated at byte {len(data)}, header needs 36")
    if data[:6] != SPKL_MAGIC:
        raise CorruptFileError("bad magic at byte 0, not an SPKL1 container")
    version, flags, m, n, L, sigma_w, sigma_z = struct.unpack("<BBIII d d", data[6:36])
    if version != SPKL_VERSION:
        raise CorruptFileError(f"unsupported SPKL1 version {version} at byte 6")
    complex_data = bool(flags & 1)
    expected = _spkl_expected_size(m, n, L, complex_data)
    if len(data) != expected:
        raise CorruptFileError(f"SPKL1 truncated at byte {len(data)}, expected {expected}")
    body = data[36:]
    if complex_data:
        matrix = np.frombuffer(body[: 16 * m * n], dtype="<c16").reshape(m, n)
        raw_looks = np.frombuffer(body[16 * m * n :], dtype="<c16").reshape(L, m)
    else:
        matrix = np.frombuffer(body[: 8 * m * n], dtype="<f8").reshape(m, n).astype(complex)
        raw_looks = np.frombuffer(body[8 * m * n :], dtype="<f8").reshape(L, m).astype(complex)
    A = SensingMatrix(matrix, "unspecified")
    looks = LookSet(raw_looks, sigma_w, sigma_z, real_valued=not complex_data)
    return A, looks


# ---------------------------------------------------------------- CSV

TRAJECTORY_COLUMNS = ("iteration", "inverse_mode", "nll", "dx_inf", "psnr", "ssim", "seconds")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trajectory_csv(path, records) -> None:
    """Write iteration records with the fixed column set."""
    lines = [",".join(TRAJECTORY_COLUMNS)]
    for r in records:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (r.iteration, r.inverse_mode, r.nll, r.dx_inf, r.psnr, r.ssim, r.seconds)
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_sweep_csv(path, cells) -> None:
    lines = ["n,m,k,L,median_mse,q25,q75,failures,slope"]
    for c in cells:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (c.n, c.m, c.k, c.L, c.median_mse, c.q25, c.q75, c.failures, c.slope)
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
