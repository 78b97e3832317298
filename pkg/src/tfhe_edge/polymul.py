"""Negacyclic multiplication in Z_q[X]/(X^N + 1).

The fast path is a discrete weighted transform: twist coefficient x by
w_x = exp(i*pi*x/N), take a length-N FFT, multiply pointwise, invert and
untwist. Because w_x^N = -1 the cyclic convolution of the twisted inputs is
the negacyclic convolution of the originals.

Torus words enter the transform as centered signed integers, so each
output coefficient before reduction is bounded by N * 2^(log2_q - 1). That
is 2^41 at lvl1, well inside the 53-bit double mantissa, and rounding the
inverse transform recovers the exact integer product.
"""

from __future__ import annotations

import dataclasses
import functools
import math

import numpy as np

from tfhe_edge.params import ParamSet
from tfhe_edge.torus import centered

MANTISSA_BITS = 53
# Largest admissible log2 of an unreduced product coefficient.
EXACT_PRODUCT_BITS = 42


class PrecisionError(ValueError):
    """The transform path cannot guarantee an exact product for these parameters."""


class CacheError(ValueError):
    pass


@dataclasses.dataclass(eq=False)
class DwtPlan:
    N: int
    weights: np.ndarray
    inv_weights: np.ndarray
    # instrumentation only
    forward_count: int = 0
    inverse_count: int = 0

    @property
    def twiddles(self) -> np.ndarray:
        return np.exp(-2j * np.pi * np.arange(self.N) / self.N)


@functools.lru_cache(maxsize=None)
def get_plan(N: int) -> DwtPlan:
    if N <= 0 or N & (N - 1):
        raise ValueError(f"N must be a power of two, got {N}")
    x = np.arange(N)
    w = np.exp(1j * np.pi * x / N)
    return DwtPlan(N=N, weights=w, inv_weights=np.conj(w))


def _check_len(v: np.ndarray, plan: DwtPlan) -> None:
    if v.shape != (plan.N,):
        raise ValueError(f"length mismatch: plan N={plan.N}, input shape {v.shape}")


def dwt_forward(f: np.ndarray, plan: DwtPlan, ps: ParamSet | None = None) -> np.ndarray:
    """Weighted transform of a polynomial.

    Torus words (uint32) are centered using ``ps`` (q = 2^32 if omitted);
    signed or small inputs such as binary keys are used as-is.
    """
    f = np.asarray(f)
    _check_len(f, plan)
    if f.dtype == np.uint32:
        if ps is None:
            vals = f.astype(np.int64) - (np.int64(1) << 32) * (f >= (1 << 31))
        else:
            vals = centered(f, ps)
        vals = vals.astype(np.float64)
    else:
        vals = f.astype(np.float64)
    plan.forward_count += 1
    return np.fft.fft(vals * plan.weights)


def dwt_inverse(F: np.ndarray, plan: DwtPlan) -> np.ndarray:
    """Real coefficient vector of the inverse weighted transform (not rounded)."""
    F = np.asarray(F)
    _check_len(F, plan)
    plan.inverse_count += 1
    return (np.fft.ifft(F) * plan.inv_weights).real


def pointwise_mul(F: np.ndarray, G: np.ndarray) -> np.ndarray:
    if F.shape != G.shape:
        raise ValueError(f"length mismatch: {F.shape} vs {G.shape}")
    return F * G


def round_to_torus(real: np.ndarray, ps: ParamSet) -> np.ndarray:
    """Nearest integer (ties toward +inf), reduced mod q."""
    ints = np.floor(real + 0.5).astype(np.int64)
    return (ints.astype(np.uint64) & np.uint64(ps.mask)).astype(np.uint32)


class FourierKeyCache:
    """Transformed secret key, computed once on first use and then reused."""

    def __init__(self, key: np.ndarray):
        self.key = np.asarray(key)
        self.N = self.key.shape[0]
        self._spectrum: np.ndarray | None = None

    @property
    def warm(self) -> bool:
        return self._spectrum is not None

    def spectrum(self, plan: DwtPlan) -> np.ndarray:
        if plan.N != self.N:
            raise CacheError(f"cache built for N={self.N}, plan has N={plan.N}")
        if self._spectrum is None:
            sp = dwt_forward(self.key, plan)
            sp.flags.writeable = False
            self._spectrum = sp
        return self._spectrum


def check_precision(ps: ParamSet) -> None:
    bits = (ps.log2_q - 1) + int(math.log2(ps.N))
    if bits > EXACT_PRODUCT_BITS:
        raise PrecisionError(
            f"products need {bits} bits; exactness is only guaranteed up to "
            f"{EXACT_PRODUCT_BITS} (< {MANTISSA_BITS}-bit mantissa)"
        )


def negacyclic_mul_real(
    x: np.ndarray, key_ft: FourierKeyCache, plan: DwtPlan, ps: ParamSet
) -> np.ndarray:
    """Transform-path product before rounding."""
    check_precision(ps)
    if not isinstance(key_ft, FourierKeyCache):
        raise CacheError("key_ft must be a FourierKeyCache")
    key_sp = key_ft.spectrum(plan)
    return dwt_inverse(pointwise_mul(dwt_forward(x, plan, ps), key_sp), plan)


def negacyclic_mul(
    x: np.ndarray, key_ft: FourierKeyCache, plan: DwtPlan, ps: ParamSet
) -> np.ndarray:
    """x * key in R_q via the weighted transform; bit-exact for valid parameters."""
    return round_to_torus(negacyclic_mul_real(x, key_ft, plan, ps), ps)


def negacyclic_convolve_exact(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact unreduced negacyclic product of two integer vectors.

    Uses int64 when the result provably fits, Python integers otherwise.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    n = x.shape[0]
    xi = x.astype(np.int64)
    yi = y.astype(np.int64)
    bound = int(np.abs(xi).max(initial=0)) * int(np.abs(yi).sum())
    if bound < (1 << 62):
        full = np.convolve(xi, yi)
    else:
        full = np.convolve(xi.astype(object), yi.astype(object))
    out = full[:n].copy()
    out[: n - 1] -= full[n:]
    return out


def negacyclic_mul_naive(x: np.ndarray, y: np.ndarray, ps: ParamSet) -> np.ndarray:
    """Ground-truth O(N^2) integer product in R_q."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != (ps.N,) or y.shape != (ps.N,):
        raise ValueError(f"expected length {ps.N}, got {x.shape} and {y.shape}")
    prod = negacyclic_convolve_exact(centered(x.astype(np.uint32), ps), y)
    if prod.dtype == object:
        return np.array([int(v) % ps.q for v in prod], dtype=np.uint64).astype(np.uint32)
    return (prod.astype(np.uint64) & np.uint64(ps.mask)).astype(np.uint32)


def rrmse(X: np.ndarray, Y: np.ndarray) -> float:
    """sqrt(mean |X - Y|^2) / sqrt(sum |X|^2)."""
    X = np.asarray(X, dtype=np.complex128 if np.iscomplexobj(X) else np.float64)
    Y = np.asarray(Y, dtype=X.dtype)
    if X.shape != Y.shape or X.size == 0:
        raise ValueError("rrmse needs equal, non-empty lengths")
    denom = math.sqrt(float(np.sum(np.abs(X) ** 2)))
    if denom == 0.0:
        raise ZeroDivisionError("reference vector is all zeros")
    return math.sqrt(float(np.mean(np.abs(X - Y) ** 2))) / denom
