"""PGM (P2/P5) reading and writing, lossless at matching bit depth.

Values map to [0, 1] on read by dividing by maxval; write_pgm rounds back
to integers, so write(read(file)) reproduces the file's pixel values
exactly when the same maxval is used.
"""

import os

import numpy as np

from .validation import check_image


class PgmError(ValueError):
    """Malformed header or truncated payload."""


def _tokens(data):
    """Yield whitespace-separated header tokens, skipping '#' comments."""
    i = 0
    n = len(data)
    while i < n:
        c = data[i:i + 1]
        if c.isspace():
            i += 1
        elif c == b"#":
            j = data.find(b"\n", i)
            i = n if j < 0 else j + 1
        else:
            j = i
            while j < n and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
                j += 1
            yield data[i:j], j
            i = j


def read_pgm(path):
    """Read a P2 or P5 file; returns (image in [0, 1], maxval)."""
    with open(path, "rb") as fh:
        data = fh.read()
    toks = _tokens(data)
    try:
        magic, _ = next(toks)
        if magic not in (b"P2", b"P5"):
            raise PgmError(f"not a PGM file (magic {magic!r})")
        (wtok, _), (htok, _), (mtok, end) = next(toks), next(toks), next(toks)
        width, height, maxval = int(wtok), int(htok), int(mtok)
    except (StopIteration, ValueError) as exc:
        raise PgmError(f"malformed PGM header in {path}") from exc
    if width < 1 or height < 1 or not 0 < maxval <= 65535:
        raise PgmError(f"bad PGM dimensions {width}x{height} maxval {maxval}")

    count = width * height
    if magic == b"P2":
        try:
            values = np.array(data[end:].split(), dtype=np.int64)
        except ValueError as exc:
            raise PgmError("non-numeric sample in P2 payload") from exc
        if values.size != count:
            raise PgmError(f"expected {count} samples, got {values.size}")
    else:
        payload = data[end + 1:]  # single whitespace byte after maxval
        nbytes = count * (2 if maxval > 255 else 1)
        if len(payload) < nbytes:
            raise PgmError(f"truncated P5 payload ({len(payload)} of {nbytes} bytes)")
        raw = payload[:nbytes]
        dtype = ">u2" if maxval > 255 else np.uint8
        values = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    if values.min() < 0 or values.max() > maxval:
        raise PgmError("sample value outside [0, maxval]")
    img = values.reshape(height, width).astype(float) / maxval
    return img, maxval


def write_pgm(img, path, maxval=255, binary=True):
    """Write an image in [0, 1] as P5 (default) or P2; atomic on success."""
    img = check_image(img, "img")
    if not 0 < maxval <= 65535:
        raise ValueError(f"maxval must lie in (0, 65535], got {maxval}")
    q = np.clip(np.rint(img * maxval), 0, maxval).astype(np.int64)
    header = f"{'P5' if binary else 'P2'}\n{img.shape[1]} {img.shape[0]}\n{maxval}\n"
    if binary:
        body = q.astype(">u2" if maxval > 255 else np.uint8).tobytes()
        blob = header.encode("ascii") + body
    else:
        rows = "\n".join(" ".join(str(v) for v in row) for row in q)
        blob = (header + rows + "\n").encode("ascii")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)
