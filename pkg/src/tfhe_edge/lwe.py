"""TLWE: scalar torus LWE with n = N, one message per ciphertext."""

from __future__ import annotations

import dataclasses
import time
from collections.abc import Iterator, MutableMapping, Sequence

import numpy as np

from tfhe_edge.params import ParamSet
from tfhe_edge.rng import GaussianSampler, RandomStream, gaussian_poly, uniform_bits, uniform_poly
from tfhe_edge.torus import decode, decode_poly, encode


@dataclasses.dataclass(frozen=True, eq=False)
class LweSecretKey:
    s: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=np.uint8)
        if s.ndim != 1 or (s.size and s.max() > 1):
            raise ValueError("TLWE key must be a binary vector")
        s.flags.writeable = False
        object.__setattr__(self, "s", s)

    def __eq__(self, other):
        return isinstance(other, LweSecretKey) and np.array_equal(self.s, other.s)

    @property
    def N(self) -> int:
        return self.s.shape[0]


@dataclasses.dataclass(frozen=True, eq=False)
class TLWECiphertext:
    a: np.ndarray
    b: int

    def __eq__(self, other):
        return (
            isinstance(other, TLWECiphertext)
            and int(self.b) == int(other.b)
            and np.array_equal(self.a, other.a)
        )

    @property
    def N(self) -> int:
        return self.a.shape[0]


class TlweBatch(Sequence):
    """Many TLWE ciphertexts stored as an (count, N) mask matrix plus a b-vector."""

    def __init__(self, a: np.ndarray, b: np.ndarray):
        a = np.asarray(a, dtype=np.uint32)
        b = np.asarray(b, dtype=np.uint32)
        if a.ndim != 2 or b.shape != (a.shape[0],):
            raise ValueError(f"inconsistent batch shapes {a.shape} and {b.shape}")
        self.a = a
        self.b = b

    @classmethod
    def from_ciphertexts(cls, cts: Sequence[TLWECiphertext], N: int | None = None) -> TlweBatch:
        if isinstance(cts, TlweBatch):
            return cts
        if not cts:
            return cls(np.zeros((0, N or 0), np.uint32), np.zeros(0, np.uint32))
        lengths = {ct.a.shape[0] for ct in cts}
        if len(lengths) != 1:
            raise ValueError(f"inconsistent N across batch: {sorted(lengths)}")
        return cls(np.stack([ct.a for ct in cts]), np.array([ct.b for ct in cts]))

    @classmethod
    def concat(cls, batches: Sequence[TlweBatch], N: int) -> TlweBatch:
        if not batches:
            return cls(np.zeros((0, N), np.uint32), np.zeros(0, np.uint32))
        return cls(
            np.concatenate([bt.a for bt in batches]), np.concatenate([bt.b for bt in batches])
        )

    @property
    def N(self) -> int:
        return self.a.shape[1]

    def __len__(self) -> int:
        return self.a.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return TlweBatch(self.a[i], self.b[i])
        return TLWECiphertext(self.a[i], int(self.b[i]))

    def __iter__(self) -> Iterator[TLWECiphertext]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if isinstance(other, TlweBatch):
            return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)
        return NotImplemented

    def phases(self, key: LweSecretKey, ps: ParamSet) -> np.ndarray:
        if self.N != key.N:
            raise ValueError(f"key length {key.N} does not match ciphertext length {self.N}")
        dots = self.a.astype(np.uint64) @ key.s.astype(np.uint64)
        return ((self.b.astype(np.uint64) - dots) & np.uint64(ps.mask)).astype(np.uint32)

    def decrypt(self, key: LweSecretKey, ps: ParamSet) -> np.ndarray:
        return decode_poly(self.phases(key, ps), ps)


def lwe_keygen(s: RandomStream, ps: ParamSet) -> LweSecretKey:
    return LweSecretKey(uniform_bits(s, ps.N))


def _dot(a: np.ndarray, s: np.ndarray, ps: ParamSet) -> int:
    return int(a.astype(np.uint64) @ s.astype(np.uint64)) & ps.mask


def tlwe_encrypt(
    m: int,
    key: LweSecretKey,
    s: RandomStream,
    g: GaussianSampler,
    ps: ParamSet,
    phases: MutableMapping[str, float] | None = None,
) -> TLWECiphertext:
    """b = <a, s> + Delta*m + e with a uniform and e Gaussian.

    If ``phases`` is given, time spent per stage is accumulated into it
    under the keys "uniform", "gaussian" and "polymul" (the inner product).
    """
    mu = encode(m, ps)
    t0 = time.perf_counter()
    a = uniform_poly(s, ps)
    t1 = time.perf_counter()
    e = int(gaussian_poly(g, s, count=1)[0])
    t2 = time.perf_counter()
    dot = _dot(a, key.s, ps)
    t3 = time.perf_counter()
    if phases is not None:
        phases["uniform"] = phases.get("uniform", 0.0) + (t1 - t0)
        phases["gaussian"] = phases.get("gaussian", 0.0) + (t2 - t1)
        phases["polymul"] = phases.get("polymul", 0.0) + (t3 - t2)
    return TLWECiphertext(a, (dot + mu + e) & ps.mask)


def tlwe_phase(ct: TLWECiphertext, key: LweSecretKey, ps: ParamSet) -> int:
    if ct.N != key.N:
        raise ValueError(f"key length {key.N} does not match ciphertext length {ct.N}")
    return (int(ct.b) - _dot(ct.a, key.s, ps)) & ps.mask


def tlwe_decrypt(ct: TLWECiphertext, key: LweSecretKey, ps: ParamSet) -> int:
    return decode(tlwe_phase(ct, key, ps), ps)


def tlwe_add(ct1: TLWECiphertext, ct2: TLWECiphertext, ps: ParamSet) -> TLWECiphertext:
    if ct1.N != ct2.N:
        raise ValueError(f"length mismatch: {ct1.N} vs {ct2.N}")
    a = (ct1.a.astype(np.uint32) + ct2.a.astype(np.uint32)) & np.uint32(ps.mask)
    return TLWECiphertext(a, (int(ct1.b) + int(ct2.b)) & ps.mask)
