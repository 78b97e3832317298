"""Parameter sets for the torus (R)LWE schemes."""

from __future__ import annotations

import dataclasses

MAX_N = 1 << 15  # N must fit the 2-byte wire field


class ParamError(ValueError):
    """Raised when a parameter set violates its invariants."""


@dataclasses.dataclass(frozen=True)
class ParamSet:
    # q = 2**log2_q is the modulus for discretizing the torus
    log2_q: int
    # ring dimension of TRLWE, and also the TLWE length (n = N)
    N: int
    # fresh-noise standard deviation as a fraction of the torus
    sigma: float
    # plaintext modulus, power of two dividing q
    p: int = 2
    # number of mask polynomials; only k = 1 is supported
    k: int = 1

    @property
    def q(self) -> int:
        return 1 << self.log2_q

    @property
    def delta(self) -> int:
        return self.q // self.p

    @property
    def sigma_q(self) -> float:
        """Noise standard deviation in integer (torus word) units."""
        return self.sigma * self.q

    @property
    def mask(self) -> int:
        return self.q - 1


def lvl1_default() -> ParamSet:
    """The 128-bit security set: q = 2^32, N = 1024, sigma = 2^-25, p = 2."""
    return validate(ParamSet(log2_q=32, N=1024, sigma=2.0**-25, p=2, k=1))


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


def validate(ps: ParamSet) -> ParamSet:
    if not isinstance(ps.log2_q, int) or not 1 <= ps.log2_q <= 32:
        raise ParamError(f"log2_q must be an integer in 1..32, got {ps.log2_q!r}")
    if not isinstance(ps.N, int) or not _is_pow2(ps.N):
        raise ParamError(f"N must be a power of two, got {ps.N!r}")
    if ps.N > MAX_N:
        raise ParamError(f"N must be at most {MAX_N}, got {ps.N}")
    if ps.k != 1:
        raise ParamError(f"only k = 1 is supported, got k = {ps.k!r}")
    if not isinstance(ps.p, int) or ps.p < 2 or ps.p > ps.q or ps.q % ps.p != 0:
        raise ParamError(f"p = {ps.p!r} must be >= 2 and divide q = 2^{ps.log2_q}")
    if not ps.sigma * ps.q >= 1.0:
        raise ParamError(
            f"sigma * q = {ps.sigma * ps.q!r} < 1; noise is not representable"
        )
    return ps
