"""Server-side conversion of TRLWE ciphertexts into TLWE ciphertexts.

Sample extraction only permutes and negates mask coefficients, so it needs
no key material and leaves the noise untouched: the TLWE phase of output h
equals coefficient h of the TRLWE phase, word for word.
"""

from __future__ import annotations

import functools
from collections.abc import Iterable, Sequence

import numpy as np

from tfhe_edge.lwe import LweSecretKey, TLWECiphertext, TlweBatch
from tfhe_edge.params import ParamSet
from tfhe_edge.rlwe import RlweSecretKey, TRLWECiphertext


def extract_key(rk: RlweSecretKey) -> LweSecretKey:
    return LweSecretKey(rk.S.copy())


def sample_extract(ct: TRLWECiphertext, h: int, ps: ParamSet) -> TLWECiphertext:
    N = ct.N
    if not 0 <= h < N:
        raise IndexError(f"coefficient index {h} outside 0..{N - 1}")
    A = ct.A.astype(np.uint32)
    a = np.empty(N, dtype=np.uint32)
    # a[i] = A[h - i] for i <= h
    a[: h + 1] = A[h::-1]
    # a[i] = -A[N + h - i] for i > h
    a[h + 1 :] = (np.uint32(0) - A[:h:-1]) & np.uint32(ps.mask)
    return TLWECiphertext(a, int(ct.B[h]))


@functools.lru_cache(maxsize=8)
def _extraction_layout(N: int) -> tuple[np.ndarray, np.ndarray]:
    h = np.arange(N)[:, None]
    i = np.arange(N)[None, :]
    idx = ((h - i) % N).astype(np.intp)
    negate = i > h
    idx.flags.writeable = False
    negate.flags.writeable = False
    return idx, negate


def trlwe_to_tlwes(
    ct: TRLWECiphertext, ps: ParamSet, indices: Iterable[int] | slice | None = None
) -> TlweBatch:
    """Extract every coefficient (or the selected ``indices``) in order."""
    N = ct.N
    idx, negate = _extraction_layout(N)
    if indices is not None:
        rows = np.arange(N)[indices] if isinstance(indices, slice) else np.asarray(list(indices), dtype=np.intp)
        if rows.size and (rows.min() < 0 or rows.max() >= N):
            raise IndexError(f"coefficient indices must lie in 0..{N - 1}")
        idx, negate = idx[rows], negate[rows]
    else:
        rows = slice(None)
    a = ct.A.astype(np.uint32)[idx]
    neg = (np.uint32(0) - a) & np.uint32(ps.mask)
    a = np.where(negate, neg, a)
    return TlweBatch(a, ct.B.astype(np.uint32)[rows])


def trlwe_batch_to_tlwes(cts: Sequence[TRLWECiphertext], ps: ParamSet) -> TlweBatch:
    """Concatenated extractions of a batch, in source order."""
    return TlweBatch.concat([trlwe_to_tlwes(ct, ps) for ct in cts], ps.N)
