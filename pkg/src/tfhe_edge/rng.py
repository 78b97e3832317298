"""Random streams and samplers.

``RandomStream`` expands a 32-byte seed with BLAKE2b in counter mode:
block i is BLAKE2b-512(seed || le64(i)). ``OsEntropyStream`` exposes the
same interface but reads the OS entropy device once per drawn word, which
is the slow configuration the hash stream replaces.

Gaussian samplers turn 64-bit words into standard normals, scale them by
``sigma_q`` and round to torus words. Two algorithms are provided: the
Marsaglia polar method (reference) and a 256-layer Ziggurat (default).
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
import os
from typing import Literal

import numpy as np

from tfhe_edge.params import ParamSet

SEED_BYTES = 32
BLOCK_BYTES = 64
MAX_BLOCKS = 1 << 64

_TWO_M53 = 2.0**-53
_POLAR_ACCEPT = math.pi / 4


class StreamExhausted(RuntimeError):
    """The 64-bit block counter would wrap."""


class InsufficientSamples(ValueError):
    pass


def new_seed() -> bytes:
    return os.urandom(SEED_BYTES)


class RandomStream:
    """Deterministic byte stream expanded from a seed with BLAKE2b."""

    def __init__(self, seed: bytes):
        seed = bytes(seed)
        if len(seed) != SEED_BYTES:
            raise ValueError(f"seed must be {SEED_BYTES} bytes, got {len(seed)}")
        self.seed = seed
        self.block_counter = 0
        self.uniforms_consumed = 0
        self.gaussians_emitted = 0
        self._prefix = hashlib.blake2b(seed, digest_size=BLOCK_BYTES)
        self._buffer = b""

    @classmethod
    def from_hex(cls, seed_hex: str) -> RandomStream:
        return cls(bytes.fromhex(seed_hex))

    def _blocks(self, count: int) -> bytes:
        start = self.block_counter
        if start + count > MAX_BLOCKS:
            raise StreamExhausted("block counter exhausted (2^64 blocks)")
        prefix = self._prefix
        out = []
        for i in range(start, start + count):
            h = prefix.copy()
            h.update(i.to_bytes(8, "little"))
            out.append(h.digest())
        self.block_counter = start + count
        return b"".join(out)

    def fill(self, n: int) -> bytes:
        """Return the next ``n`` bytes of the stream."""
        if n < 0:
            raise ValueError("negative byte count")
        buf = self._buffer
        if len(buf) < n:
            need = n - len(buf)
            buf += self._blocks(-(-need // BLOCK_BYTES))
        out, self._buffer = buf[:n], buf[n:]
        return out

    def words32(self, count: int) -> np.ndarray:
        return np.frombuffer(self.fill(4 * count), dtype="<u4").astype(np.uint32)

    def words64(self, count: int) -> np.ndarray:
        return np.frombuffer(self.fill(8 * count), dtype="<u8").astype(np.uint64)


class OsEntropyStream(RandomStream):
    """Reads the platform entropy device directly for every drawn word.

    Not deterministic; used only as the unoptimized benchmark baseline.
    """

    def __init__(self, device: str = "/dev/urandom"):
        self.seed = b""
        self.block_counter = 0
        self.uniforms_consumed = 0
        self.gaussians_emitted = 0
        self._buffer = b""
        try:
            self._dev = open(device, "rb", buffering=0)
            self._read = self._dev.read
        except OSError:
            self._dev = None
            self._read = os.urandom

    def close(self) -> None:
        if self._dev is not None:
            self._dev.close()
            self._dev = None

    def __del__(self):
        self.close()

    def fill(self, n: int) -> bytes:
        # one device read per 64-bit draw
        read = self._read
        return b"".join([read(8) for _ in range(-(-n // 8))])[:n]

    def words32(self, count: int) -> np.ndarray:
        read = self._read
        data = b"".join([read(4) for _ in range(count)])
        return np.frombuffer(data, dtype="<u4").astype(np.uint32)

    def words64(self, count: int) -> np.ndarray:
        read = self._read
        data = b"".join([read(8) for _ in range(count)])
        return np.frombuffer(data, dtype="<u8").astype(np.uint64)


def stream_new(seed: bytes | None = None) -> RandomStream:
    return RandomStream(new_seed() if seed is None else seed)


def uniform_word(s: RandomStream, ps: ParamSet) -> int:
    """One uniform torus word: 4 little-endian bytes, masked to log2_q bits."""
    return int(uniform_poly(s, ps, count=1)[0])


def uniform_poly(s: RandomStream, ps: ParamSet, count: int | None = None) -> np.ndarray:
    n = ps.N if count is None else count
    words = s.words32(n) & np.uint32(ps.mask)
    s.uniforms_consumed += n
    return words


def uniform_bits(s: RandomStream, n: int) -> np.ndarray:
    """n independent fair bits (8 per stream byte, LSB-first)."""
    raw = np.frombuffer(s.fill(-(-n // 8)), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(np.uint8)


def _unit_open(w: np.ndarray) -> np.ndarray:
    """Uniform doubles in (0, 1] from the top 53 bits of each word."""
    return ((w >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_M53


def _signed_unit(w: np.ndarray) -> np.ndarray:
    """Uniform doubles in [-1, 1) from the top 53 bits of each word."""
    return (w >> np.uint64(11)).astype(np.float64) * (2.0 * _TWO_M53) - 1.0


# 256-layer ziggurat for exp(-x^2/2): tail start R and common layer area V.
ZIGGURAT_LAYERS = 256
ZIGGURAT_R = 3.6541528853610088
ZIGGURAT_V = 0.00492867323399


def ziggurat_tables(
    layers: int = ZIGGURAT_LAYERS, r: float = ZIGGURAT_R, v: float = ZIGGURAT_V
) -> tuple[np.ndarray, np.ndarray]:
    """Layer right edges x[0..layers] and fast-path ratios x[i+1]/x[i].

    x[0] = v / f(r) is the pseudo-width of the base strip (which carries the
    tail), x[1] = r, and x[layers] = 0.
    """
    f = math.exp(-0.5 * r * r)
    x = [v / f, r]
    for _ in range(2, layers):
        x.append(math.sqrt(-2.0 * math.log(v / x[-1] + f)))
        f = math.exp(-0.5 * x[-1] * x[-1])
    x.append(0.0)
    x = np.array(x)
    return x, x[1:] / x[:-1]


_ZIG_X, _ZIG_RATIO = ziggurat_tables()
_ZIG_XL, _ZIG_RATIOL = _ZIG_X.tolist(), _ZIG_RATIO.tolist()


@dataclasses.dataclass(eq=False)
class GaussianSampler:
    """Discrete Gaussian over Z_q: round(N(0, sigma_q^2)) mod q.

    Counters measure raw uniform draws (64-bit words), sampling attempts and
    attempts accepted without fallback.
    """

    sigma_q: float
    algorithm: Literal["ziggurat", "polar"] = "ziggurat"
    log2_q: int = 32
    uniforms_used: int = 0
    attempts: int = 0
    fast_accepts: int = 0
    gaussians_emitted: int = 0
    _spare: np.ndarray = dataclasses.field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.algorithm not in ("ziggurat", "polar"):
            raise ValueError(f"unknown sampler algorithm {self.algorithm!r}")
        if not self.sigma_q >= 0:
            raise ValueError("sigma_q must be non-negative")

    @classmethod
    def for_params(cls, ps: ParamSet, algorithm: str = "ziggurat") -> GaussianSampler:
        return cls(sigma_q=ps.sigma_q, algorithm=algorithm, log2_q=ps.log2_q)

    def standard_normals(self, s: RandomStream, count: int) -> np.ndarray:
        if self.algorithm == "ziggurat":
            out = self._ziggurat(s, count)
        else:
            out = self._polar(s, count)
        self.gaussians_emitted += count
        return out

    def _ziggurat(self, s: RandomStream, count: int) -> np.ndarray:
        # One 64-bit word per attempt: the low byte picks the layer, the top
        # 53 bits give the signed abscissa.
        data = s.fill(8 * count)
        w = np.frombuffer(data, dtype="<u8")
        layer = np.frombuffer(data, dtype=np.uint8)[::8]
        u = (w >> np.uint64(11)) * (2.0 * _TWO_M53) - 1.0
        out = u * _ZIG_X[layer]
        slow = np.flatnonzero(np.abs(u) >= _ZIG_RATIO[layer])
        self.uniforms_used += count
        self.attempts += count
        self.fast_accepts += count - slow.size
        if slow.size:
            out[slow] = self._ziggurat_fallback(s, u[slow], layer[slow].astype(np.intp))
        return out

    def _ziggurat_fallback(self, s: RandomStream, u: np.ndarray, layer: np.ndarray) -> list[float]:
        """Resolve the few attempts that missed the fast path.

        Base-strip misses go to the tail sampler, the rest to the wedge test;
        a wedge rejection starts a fresh attempt.
        """
        xt, ratio = _ZIG_XL, _ZIG_RATIOL
        us, ls = u.tolist(), layer.tolist()
        n_wedge = sum(1 for i in ls if i)
        vs = _unit_open(s.words64(n_wedge)).tolist()[::-1]
        self.uniforms_used += n_wedge
        out = []
        for uj, i in zip(us, ls):
            while True:
                if i == 0:
                    out.append(self._tail(s, uj < 0))
                    break
                x = uj * xt[i]
                f0 = math.exp(-0.5 * (xt[i] * xt[i] - x * x))
                f1 = math.exp(-0.5 * (xt[i + 1] * xt[i + 1] - x * x))
                if vs:
                    v = vs.pop()
                else:
                    v = ((int(s.words64(1)[0]) >> 11) + 1.0) * _TWO_M53
                    self.uniforms_used += 1
                if f1 + v * (f0 - f1) < 1.0:
                    out.append(x)
                    break
                w = int(s.words64(1)[0])
                self.uniforms_used += 1
                self.attempts += 1
                i = w & 0xFF
                uj = (w >> 11) * (2.0 * _TWO_M53) - 1.0
                if abs(uj) < ratio[i]:
                    self.fast_accepts += 1
                    out.append(uj * xt[i])
                    break
        return out

    def _tail(self, s: RandomStream, negative: bool) -> float:
        """Marsaglia's exponential-rejection sampler for |x| > R."""
        r = ZIGGURAT_R
        while True:
            u1, u2 = _unit_open(s.words64(2)).tolist()
            self.uniforms_used += 2
            x = -math.log(u1) / r
            if -2.0 * math.log(u2) >= x * x:
                return -(r + x) if negative else r + x

    def _polar(self, s: RandomStream, count: int) -> np.ndarray:
        parts = [self._spare[:count]]
        have = parts[0].size
        self._spare = self._spare[have:]
        while have < count:
            need_pairs = -(-(count - have) // 2)
            m = int(need_pairs / _POLAR_ACCEPT) + 2
            w = s.words64(2 * m)
            u = _signed_unit(w).reshape(m, 2)
            r2 = u[:, 0] * u[:, 0] + u[:, 1] * u[:, 1]
            ok = (r2 < 1.0) & (r2 > 0.0)
            self.uniforms_used += 2 * m
            self.attempts += m
            self.fast_accepts += int(np.count_nonzero(ok))
            u, r2 = u[ok], r2[ok]
            scale = np.sqrt(-2.0 * np.log(r2) / r2)
            z = (u * scale[:, None]).reshape(-1)
            parts.append(z)
            have += z.size
        flat = np.concatenate(parts)
        self._spare = np.concatenate([flat[count:], self._spare])
        return flat[:count]


def gaussian_poly(
    g: GaussianSampler, s: RandomStream, ps: ParamSet | None = None, count: int | None = None
) -> np.ndarray:
    """``count`` (default N) discrete Gaussian torus words."""
    n = (ps.N if ps is not None else 1) if count is None else count
    mask = np.uint64((1 << g.log2_q) - 1)
    s.gaussians_emitted += n
    if g.sigma_q == 0:
        g.gaussians_emitted += n
        return np.zeros(n, dtype=np.uint32)
    x = g.standard_normals(s, n) * g.sigma_q
    ints = np.floor(x + 0.5).astype(np.int64)
    return (ints.astype(np.uint64) & mask).astype(np.uint32)


def gaussian_word(g: GaussianSampler, s: RandomStream) -> int:
    return int(gaussian_poly(g, s, count=1)[0])


def sampler_stats(g: GaussianSampler, min_samples: int = 100_000) -> dict[str, float]:
    if g.gaussians_emitted < min_samples or g.attempts == 0:
        raise InsufficientSamples(
            f"need at least {min_samples} gaussians, have {g.gaussians_emitted}"
        )
    fast_rate = g.fast_accepts / g.attempts
    return {
        "uniforms_per_gaussian": g.uniforms_used / g.gaussians_emitted,
        "fast_path_rate": fast_rate,
        "fallback_rate": 1.0 - fast_rate,
    }
