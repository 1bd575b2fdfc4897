"""Recording ingestion and time-series preprocessing.

A recording becomes a :class:`Sequence`, is amplitude-normalized, reduced to
an RMS envelope, and (for the lockstep measures) warped onto a common time
axis with :func:`dtw_align`. The usual chain is::

    read_wav -> z_normalize -> envelope

with window 256 and hop 128 at typical speech sample rates.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    BadParam,
    EmptyInput,
    FormatError,
    ParseError,
    TooShort,
    UnsupportedFormat,
    ZeroVariance,
)

DEFAULT_ENVELOPE_WINDOW = 256
DEFAULT_ENVELOPE_HOP = 128

# Relative spread below this is treated as zero variance; it absorbs the
# rounding residue of means computed over long constant runs.
_CONSTANT_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Sequence:
    """An ordered series of real samples with an optional sample rate."""

    samples: np.ndarray
    sample_rate: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise BadParam("samples must be one-dimensional")
        object.__setattr__(self, "samples", arr)
        if self.sample_rate is not None and self.sample_rate <= 0:
            raise BadParam("sample_rate must be positive")

    def __len__(self) -> int:
        return len(self.samples)

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self.samples.astype(dtype)
        return self.samples


def as_samples(x) -> np.ndarray:
    """Coerce a Sequence or array-like to a 1-D float64 array."""
    if isinstance(x, Sequence):
        return x.samples
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise BadParam("expected a one-dimensional series")
    return arr


def _is_effectively_constant(x: np.ndarray) -> bool:
    sd = float(np.std(x))
    return sd == 0.0 or sd < _CONSTANT_RTOL * max(1.0, abs(float(np.mean(x))))


def read_wav(path) -> Sequence:
    """Read a mono 16-bit PCM RIFF/WAVE file into a Sequence in [-1, 1).

    Integer samples are scaled by 1/32768. Big-endian files (RIFX) and
    structurally broken files raise FormatError; well-formed files with an
    unsupported encoding (non-PCM, stereo, non-16-bit) raise
    UnsupportedFormat.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12:
        raise FormatError("truncated RIFF header")
    magic = data[0:4]
    if magic == b"RIFX":
        raise FormatError("big-endian RIFX container not supported")
    if magic != b"RIFF":
        raise FormatError("missing RIFF magic")
    if data[8:12] != b"WAVE":
        raise FormatError("missing WAVE form type")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if body_start + size > len(data):
            raise FormatError(f"chunk {chunk_id!r} overruns file")
        if chunk_id == b"fmt ":
            if size < 16:
                raise FormatError("fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            payload = data[body_start : body_start + size]
        pos = body_start + size + (size & 1)

    if fmt is None:
        raise FormatError("missing fmt chunk")
    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1:
        raise UnsupportedFormat(f"compression code {audio_format}, expected PCM")
    if channels != 1:
        raise UnsupportedFormat(f"{channels} channels, expected mono")
    if bits != 16:
        raise UnsupportedFormat(f"{bits}-bit samples, expected 16")
    if sample_rate <= 0:
        raise FormatError("non-positive sample rate")
    if payload is None:
        raise FormatError("missing data chunk")
    if len(payload) % 2:
        raise FormatError("data chunk is not a whole number of samples")

    raw = np.frombuffer(payload, dtype="<i2")
    return Sequence(raw.astype(np.float64) / 32768.0, sample_rate=sample_rate)


def read_sequence_csv(path) -> Sequence:
    """Read one float per line; an optional leading "sample" header is skipped."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    values = []
    start = 0
    if lines and lines[0].strip().lower() == "sample":
        start = 1
    for lineno in range(start, len(lines)):
        text = lines[lineno].strip()
        if not text:
            raise ParseError("blank line", line=lineno + 1)
        try:
            value = float(text)
        except ValueError:
            raise ParseError(f"not a number: {text!r}", line=lineno + 1) from None
        if not np.isfinite(value):
            raise ParseError(f"non-finite value: {text!r}", line=lineno + 1)
        values.append(value)
    return Sequence(np.asarray(values, dtype=np.float64))


def z_normalize(seq) -> Sequence:
    """Center to mean 0 and scale to population standard deviation 1."""
    x = as_samples(seq)
    if len(x) == 0:
        raise EmptyInput("cannot normalize an empty sequence")
    if _is_effectively_constant(x):
        raise ZeroVariance("constant sequence has no scale")
    out = (x - np.mean(x)) / np.std(x)
    rate = seq.sample_rate if isinstance(seq, Sequence) else None
    return Sequence(out, sample_rate=rate)


def envelope(seq, window: int = DEFAULT_ENVELOPE_WINDOW, hop: int = DEFAULT_ENVELOPE_HOP) -> Sequence:
    """RMS energy over sliding windows: out[k] = RMS(x[k*hop : k*hop+window]).

    Output length is floor((n - window)/hop) + 1; trailing samples that do
    not fill a window are dropped.
    """
    x = as_samples(seq)
    if window < 1 or hop < 1:
        raise BadParam("window and hop must be at least 1")
    if len(x) < window:
        raise TooShort(f"need at least {window} samples, got {len(x)}")
    frames = np.lib.stride_tricks.sliding_window_view(x * x, window)[::hop]
    return Sequence(np.sqrt(frames.mean(axis=1)))


@njit(cache=True)
def _dtw_cost_matrix(a, b):  # pragma: no cover - exercised via dtw_align
    n = len(a)
    m = len(b)
    d = np.empty((n + 1, m + 1))
    d[0, 0] = 0.0
    for j in range(1, m + 1):
        d[0, j] = np.inf
    for i in range(1, n + 1):
        d[i, 0] = np.inf
        for j in range(1, m + 1):
            best = d[i - 1, j - 1]
            if d[i - 1, j] < best:
                best = d[i - 1, j]
            if d[i, j - 1] < best:
                best = d[i, j - 1]
            d[i, j] = abs(a[i - 1] - b[j - 1]) + best
    return d


@njit(cache=True)
def _dtw_backtrack(d):  # pragma: no cover - exercised via dtw_align
    n = d.shape[0] - 1
    m = d.shape[1] - 1
    cap = n + m - 1
    pi = np.empty(cap, np.int64)
    pj = np.empty(cap, np.int64)
    pos = cap
    i = n
    j = m
    while True:
        pos -= 1
        pi[pos] = i
        pj[pos] = j
        if i == 1 and j == 1:
            break
        if i > 1 and j > 1:
            diag = d[i - 1, j - 1]
            up = d[i - 1, j]
            left = d[i, j - 1]
            best = diag
            if up < best:
                best = up
            if left < best:
                best = left
            # on ties: diagonal first, then the step that advances a
            if diag == best:
                i -= 1
                j -= 1
            elif up == best:
                i -= 1
            else:
                j -= 1
        elif i > 1:
            i -= 1
        else:
            j -= 1
    return pi[pos:], pj[pos:]


def dtw_align(a, b) -> tuple[Sequence, Sequence]:
    """Expand both inputs along one optimal DTW warping path.

    The outputs have equal length L with max(n, m) <= L <= n + m - 1, and
    the elementwise absolute difference of the outputs sums to the DTW
    distance of the inputs. Ties between path steps prefer the diagonal,
    then the step that advances ``a``.
    """
    xa = as_samples(a)
    xb = as_samples(b)
    if len(xa) == 0 or len(xb) == 0:
        raise EmptyInput("cannot align an empty sequence")
    d = _dtw_cost_matrix(xa, xb)
    pi, pj = _dtw_backtrack(d)
    rate_a = a.sample_rate if isinstance(a, Sequence) else None
    rate_b = b.sample_rate if isinstance(b, Sequence) else None
    return (
        Sequence(xa[pi - 1], sample_rate=rate_a),
        Sequence(xb[pj - 1], sample_rate=rate_b),
    )


def preprocess(
    seq,
    *,
    normalize: bool = True,
    window: int = DEFAULT_ENVELOPE_WINDOW,
    hop: int = DEFAULT_ENVELOPE_HOP,
    apply_envelope: bool = True,
) -> Sequence:
    """Standard preparation chain: z-normalize, then reduce to an envelope."""
    out = seq if isinstance(seq, Sequence) else Sequence(as_samples(seq))
    if normalize:
        out = z_normalize(out)
    if apply_envelope:
        out = envelope(out, window=window, hop=hop)
    return out
