"""Arithmetic on the discretized torus Z_q and on R_q = Z_q[X]/(X^N + 1).

Torus words are unsigned 32-bit integers. For q < 2^32 only the low
``log2_q`` bits are ever set; wrapping uint32 arithmetic followed by a mask
is arithmetic mod q because q divides 2^32.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

from tfhe_edge.params import ParamSet

WORD = np.uint32


def as_torus_poly(values: Iterable[int] | np.ndarray, ps: ParamSet) -> np.ndarray:
    """Coerce integers (possibly negative) into a torus polynomial mod q."""
    arr = np.asarray(values)
    if arr.shape != (ps.N,):
        raise ValueError(f"expected {ps.N} coefficients, got shape {arr.shape}")
    if arr.dtype == WORD:
        return arr & WORD(ps.mask)
    wide = np.asarray([int(v) % ps.q for v in arr.tolist()], dtype=np.uint64)
    return wide.astype(WORD)


def zero_poly(ps: ParamSet) -> np.ndarray:
    return np.zeros(ps.N, dtype=WORD)


def _check_same_length(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")


def poly_add(x: np.ndarray, y: np.ndarray, ps: ParamSet) -> np.ndarray:
    _check_same_length(x, y)
    return (x.astype(WORD) + y.astype(WORD)) & WORD(ps.mask)


def poly_sub(x: np.ndarray, y: np.ndarray, ps: ParamSet) -> np.ndarray:
    _check_same_length(x, y)
    return (x.astype(WORD) - y.astype(WORD)) & WORD(ps.mask)


def poly_neg(x: np.ndarray, ps: ParamSet) -> np.ndarray:
    return (WORD(0) - x.astype(WORD)) & WORD(ps.mask)


def centered(x: np.ndarray | int, ps: ParamSet) -> np.ndarray | int:
    """Map words to signed representatives in [-q/2, q/2)."""
    if isinstance(x, (int, np.integer)):
        w = int(x) % ps.q
        return w - ps.q if w >= ps.q // 2 else w
    w = np.asarray(x).astype(np.int64)
    return w - np.int64(ps.q) * (w >= ps.q // 2)


def encode(m: int, ps: ParamSet) -> int:
    """Scale a message in Z_p onto the torus: Delta * m mod q."""
    if not 0 <= m < ps.p:
        raise ValueError(f"message {m} outside Z_{ps.p}")
    return (ps.delta * m) % ps.q


def decode(phi: int, ps: ParamSet) -> int:
    """Round a phase to the nearest multiple of Delta; exact midpoints round up."""
    shift = ps.log2_q - (ps.p.bit_length() - 1)
    half = (1 << shift) >> 1
    return ((int(phi) % ps.q + half) >> shift) % ps.p


def encode_poly(m: Sequence[int] | np.ndarray, ps: ParamSet) -> np.ndarray:
    m = np.asarray(m, dtype=np.int64)
    if m.shape != (ps.N,):
        raise ValueError(f"expected {ps.N} coefficients, got shape {m.shape}")
    if m.size and (m.min() < 0 or m.max() >= ps.p):
        raise ValueError(f"message coefficients outside Z_{ps.p}")
    return ((m.astype(np.uint64) * np.uint64(ps.delta)) & np.uint64(ps.mask)).astype(
        WORD
    )


def decode_poly(phi: np.ndarray, ps: ParamSet) -> np.ndarray:
    shift = ps.log2_q - (ps.p.bit_length() - 1)
    half = (1 << shift) >> 1
    wide = (np.asarray(phi).astype(np.uint64) & np.uint64(ps.mask)) + np.uint64(half)
    return ((wide >> np.uint64(shift)) % np.uint64(ps.p)).astype(np.int64)


def bits_to_message_poly(bits: Sequence[int] | np.ndarray, ps: ParamSet) -> list[np.ndarray]:
    """Pack a bit string into ceil(len/N) message polynomials, zero-padding the last."""
    if ps.p != 2:
        raise ValueError("bit packing requires p = 2")
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ValueError("bits must be 0 or 1")
    n_polys = -(-bits.size // ps.N)
    padded = np.zeros(n_polys * ps.N, dtype=np.int64)
    padded[: bits.size] = bits
    return [padded[j * ps.N : (j + 1) * ps.N] for j in range(n_polys)]


def message_polys_to_bits(polys: Sequence[np.ndarray], n_bits: int | None = None) -> np.ndarray:
    flat = np.concatenate([np.asarray(p, dtype=np.int64) for p in polys]) if polys else np.zeros(0, np.int64)
    return flat if n_bits is None else flat[:n_bits]


def bytes_to_bits(data: bytes) -> np.ndarray:
    """Unpack bytes LSB-first."""
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little").astype(np.int64)


def bits_to_bytes(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()
