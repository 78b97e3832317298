"""TRLWE (k = 1): N plaintext coefficients per ciphertext.

Encryption multiplies the fresh uniform mask by the secret key through the
weighted transform, reusing the key's cached spectrum so each call performs
a single forward transform once the cache is warm.
"""

from __future__ import annotations

import dataclasses
import time
from collections.abc import MutableMapping

import numpy as np

from tfhe_edge import polymul
from tfhe_edge.params import ParamSet
from tfhe_edge.rng import GaussianSampler, RandomStream, gaussian_poly, uniform_bits, uniform_poly
from tfhe_edge.torus import decode_poly, encode_poly, poly_add, poly_sub


@dataclasses.dataclass(frozen=True, eq=False)
class RlweSecretKey:
    S: np.ndarray
    fourier: polymul.FourierKeyCache = dataclasses.field(init=False, repr=False)

    def __post_init__(self):
        S = np.array(self.S, dtype=np.uint8)
        if S.ndim != 1 or (S.size and S.max() > 1):
            raise ValueError("TRLWE key must be a binary polynomial")
        S.flags.writeable = False
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "fourier", polymul.FourierKeyCache(S))

    def __eq__(self, other):
        return isinstance(other, RlweSecretKey) and np.array_equal(self.S, other.S)

    @property
    def N(self) -> int:
        return self.S.shape[0]


@dataclasses.dataclass(frozen=True, eq=False)
class TRLWECiphertext:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        if self.A.shape != self.B.shape or self.A.ndim != 1:
            raise ValueError(f"A and B must be equal-length vectors: {self.A.shape}, {self.B.shape}")

    def __eq__(self, other):
        return (
            isinstance(other, TRLWECiphertext)
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
        )

    @property
    def N(self) -> int:
        return self.A.shape[0]


def rlwe_keygen(s: RandomStream, ps: ParamSet) -> RlweSecretKey:
    return RlweSecretKey(uniform_bits(s, ps.N))


def trlwe_encrypt(
    M: np.ndarray,
    key: RlweSecretKey,
    s: RandomStream,
    g: GaussianSampler,
    ps: ParamSet,
    key_ft: polymul.FourierKeyCache | None = None,
    phases: MutableMapping[str, float] | None = None,
) -> TRLWECiphertext:
    """B = A*S + Delta*M + E.

    ``key_ft`` overrides the key's own cache; passing a fresh
    ``FourierKeyCache`` reproduces on-the-fly key transformation.
    """
    if key.N != ps.N:
        raise ValueError(f"key has N={key.N}, parameters have N={ps.N}")
    mu = encode_poly(M, ps)
    cache = key.fourier if key_ft is None else key_ft
    plan = polymul.get_plan(ps.N)
    t0 = time.perf_counter()
    A = uniform_poly(s, ps)
    t1 = time.perf_counter()
    E = gaussian_poly(g, s, ps)
    t2 = time.perf_counter()
    AS = polymul.negacyclic_mul(A, cache, plan, ps)
    t3 = time.perf_counter()
    if phases is not None:
        phases["uniform"] = phases.get("uniform", 0.0) + (t1 - t0)
        phases["gaussian"] = phases.get("gaussian", 0.0) + (t2 - t1)
        phases["polymul"] = phases.get("polymul", 0.0) + (t3 - t2)
    return TRLWECiphertext(A, poly_add(poly_add(AS, mu, ps), E, ps))


def trlwe_phase(ct: TRLWECiphertext, key: RlweSecretKey, ps: ParamSet) -> np.ndarray:
    """B - A*S computed with the exact integer product."""
    if ct.N != key.N:
        raise ValueError(f"key has N={key.N}, ciphertext has N={ct.N}")
    return poly_sub(ct.B, polymul.negacyclic_mul_naive(ct.A, key.S, ps), ps)


def trlwe_decrypt(ct: TRLWECiphertext, key: RlweSecretKey, ps: ParamSet) -> np.ndarray:
    return decode_poly(trlwe_phase(ct, key, ps), ps)


def trlwe_add(ct1: TRLWECiphertext, ct2: TRLWECiphertext, ps: ParamSet) -> TRLWECiphertext:
    return TRLWECiphertext(poly_add(ct1.A, ct2.A, ps), poly_add(ct1.B, ct2.B, ps))
