"""Benchmark suites: noise sampling, polynomial multiplication, encryption.

Timings are per iteration in milliseconds (mean over iterations, so phase
columns add up to at most the total). Counter
columns come from instrumentation, not from timing, and are exact.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import statistics
import time
import tracemalloc
from collections.abc import Callable, Sequence

import numpy as np

from tfhe_edge import polymul, wire
from tfhe_edge.adapter import extract_key
from tfhe_edge.lwe import tlwe_encrypt
from tfhe_edge.params import ParamSet, lvl1_default
from tfhe_edge.rlwe import rlwe_keygen, trlwe_encrypt
from tfhe_edge.rng import (
    GaussianSampler,
    OsEntropyStream,
    RandomStream,
    gaussian_poly,
    new_seed,
    uniform_poly,
)
from tfhe_edge.torus import bits_to_message_poly

SUITES = ("sampler", "polymul", "encrypt")
DEFAULT_SIZES = (256, 1024, 4096, 8192)

COLUMNS = (
    "suite",
    "config",
    "bits",
    "iterations",
    "uniform_ms",
    "gaussian_ms",
    "polymul_ms",
    "forward_ms",
    "pointwise_ms",
    "inverse_ms",
    "total_ms",
    "wall_ms",
    "uniform_words",
    "gaussian_words",
    "forward_transforms",
    "bytes",
    "peak_kib",
)


@dataclasses.dataclass
class BenchRow:
    suite: str
    config: str
    iterations: int
    total_ms: float
    wall_ms: float
    phases: dict[str, float] = dataclasses.field(default_factory=dict)
    counters: dict[str, int] = dataclasses.field(default_factory=dict)
    bits: int | None = None
    bytes: int | None = None
    peak_kib: float | None = None

    def flat(self) -> dict:
        out = {c: None for c in COLUMNS}
        out.update(
            suite=self.suite,
            config=self.config,
            bits=self.bits,
            iterations=self.iterations,
            total_ms=self.total_ms,
            wall_ms=self.wall_ms,
            bytes=self.bytes,
            peak_kib=self.peak_kib,
        )
        for k, v in self.phases.items():
            out[f"{k}_ms"] = v
        out.update(self.counters)
        return out


@dataclasses.dataclass
class BenchReport:
    rows: list[BenchRow] = dataclasses.field(default_factory=list)
    notices: list[str] = dataclasses.field(default_factory=list)

    def find(self, config: str, bits: int | None = None) -> BenchRow:
        for row in self.rows:
            if row.config == config and (bits is None or row.bits == bits):
                return row
        raise KeyError(config)

    def to_json(self) -> str:
        return json.dumps(
            {"rows": [r.flat() for r in self.rows], "notices": self.notices}, indent=2
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v)
                             for k, v in row.flat().items()})
        return buf.getvalue()

    def to_text(self) -> str:
        lines = []
        for r in self.rows:
            size = f" {r.bits}b" if r.bits is not None else ""
            phases = " ".join(f"{k}={v:.4f}" for k, v in r.phases.items())
            counters = " ".join(f"{k}={v}" for k, v in r.counters.items())
            lines.append(f"{r.suite:8s} {r.config:28s}{size:7s} total={r.total_ms:.4f}ms {phases} {counters}".rstrip())
        lines.extend(f"note: {n}" for n in self.notices)
        return "\n".join(lines)


def _peak_kib(fn: Callable[[], object]) -> float:
    tracemalloc.start()
    try:
        fn()
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return peak / 1024.0


def _repeat(
    fn: Callable[[dict], None], iterations: int, max_seconds: float | None
) -> tuple[int, list[float], dict[str, list[float]], float]:
    """Run fn up to ``iterations`` times (at least once) within a time budget."""
    totals: list[float] = []
    phases: dict[str, list[float]] = {}
    start = time.perf_counter()
    for _ in range(max(1, iterations)):
        ph: dict[str, float] = {}
        t0 = time.perf_counter()
        fn(ph)
        totals.append(time.perf_counter() - t0)
        for k, v in ph.items():
            phases.setdefault(k, []).append(v)
        if max_seconds is not None and time.perf_counter() - start > max_seconds:
            break
    return len(totals), totals, phases, time.perf_counter() - start


def _ms(values: Sequence[float]) -> float:
    return statistics.fmean(values) * 1e3


def _stream(kind: str, seed: bytes | None) -> RandomStream:
    if kind == "os-entropy":
        return OsEntropyStream()
    return RandomStream(seed if seed is not None else new_seed())


def bench_sampler(
    ps: ParamSet,
    iterations: int = 100,
    seed: bytes | None = None,
    max_seconds: float | None = None,
    memory: bool = True,
) -> BenchReport:
    """N uniform words, or N Gaussian words, per iteration."""
    report = BenchReport()
    for stream_kind in ("os-entropy", "hash-stream"):
        s = _stream(stream_kind, seed)
        n, totals, _, wall = _repeat(lambda ph: uniform_poly(s, ps), iterations, max_seconds)
        report.rows.append(
            BenchRow(
                suite="sampler",
                config=f"uniform/{stream_kind}",
                iterations=n,
                total_ms=_ms(totals),
                wall_ms=wall * 1e3,
                phases={"uniform": _ms(totals)},
                counters={"uniform_words": s.uniforms_consumed // n, "gaussian_words": 0},
                peak_kib=_peak_kib(lambda: uniform_poly(s, ps)) if memory else None,
            )
        )
    for stream_kind in ("os-entropy", "hash-stream"):
        for algorithm in ("polar", "ziggurat"):
            s = _stream(stream_kind, seed)
            g = GaussianSampler.for_params(ps, algorithm)
            n, totals, _, wall = _repeat(lambda ph: gaussian_poly(g, s, ps), iterations, max_seconds)
            report.rows.append(
                BenchRow(
                    suite="sampler",
                    config=f"gaussian/{stream_kind}/{algorithm}",
                    iterations=n,
                    total_ms=_ms(totals),
                    wall_ms=wall * 1e3,
                    phases={"gaussian": _ms(totals)},
                    counters={"uniform_words": 0, "gaussian_words": s.gaussians_emitted // n},
                    peak_kib=_peak_kib(lambda: gaussian_poly(g, s, ps)) if memory else None,
                )
            )
    return report


def bench_polymul(
    ps: ParamSet,
    iterations: int = 100,
    seed: bytes | None = None,
    max_seconds: float | None = None,
    memory: bool = True,
) -> BenchReport:
    """Stage timings of mask * key with and without the cached key spectrum."""
    report = BenchReport()
    s = RandomStream(seed if seed is not None else new_seed())
    key = rlwe_keygen(s, ps)
    plan = polymul.get_plan(ps.N)
    warm = polymul.FourierKeyCache(key.S)
    warm.spectrum(plan)

    def run(cache_factory):
        def once(ph):
            A = uniform_poly(s, ps)
            cache = cache_factory()
            t0 = time.perf_counter()
            FA = polymul.dwt_forward(A, plan, ps)
            FS = cache.spectrum(plan)
            t1 = time.perf_counter()
            prod = polymul.pointwise_mul(FA, FS)
            t2 = time.perf_counter()
            polymul.round_to_torus(polymul.dwt_inverse(prod, plan), ps)
            t3 = time.perf_counter()
            ph["forward"] = t1 - t0
            ph["pointwise"] = t2 - t1
            ph["inverse"] = t3 - t2
            ph["polymul"] = t3 - t0

        return once

    configs = {
        "on-the-fly": lambda: polymul.FourierKeyCache(key.S),
        "reuse": lambda: warm,
    }
    for name, factory in configs.items():
        once = run(factory)
        before = plan.forward_count
        once({})
        per_call = plan.forward_count - before
        n, _, phases, wall = _repeat(once, iterations, max_seconds)
        report.rows.append(
            BenchRow(
                suite="polymul",
                config=name,
                iterations=n,
                total_ms=_ms(phases["polymul"]),
                wall_ms=wall * 1e3,
                phases={k: _ms(phases[k]) for k in ("forward", "pointwise", "inverse")},
                counters={"forward_transforms": per_call},
                peak_kib=_peak_kib(lambda: once({})) if memory else None,
            )
        )
    return report


ENCRYPT_CONFIGS = {
    # name: (scheme, stream, sampler, reuse key spectrum)
    "tlwe-baseline": ("tlwe", "os-entropy", "polar", False),
    "trlwe-unoptimized": ("trlwe", "os-entropy", "polar", False),
    "trlwe-optimized": ("trlwe", "hash-stream", "ziggurat", True),
}


def encrypt_bits(
    bits: np.ndarray, config: str, ps: ParamSet, s: RandomStream, g: GaussianSampler, key, phases=None
) -> bytes:
    """Encrypt a bit string under one of ENCRYPT_CONFIGS and serialize it."""
    scheme, _, _, reuse = ENCRYPT_CONFIGS[config]
    if scheme == "tlwe":
        lkey = extract_key(key)
        cts = [tlwe_encrypt(int(b), lkey, s, g, ps, phases=phases) for b in bits]
        return wire.serialize_tlwe_batch(cts, ps)
    cts = []
    for M in bits_to_message_poly(bits, ps):
        cache = None if reuse else polymul.FourierKeyCache(key.S)
        cts.append(trlwe_encrypt(M, key, s, g, ps, key_ft=cache, phases=phases))
    return wire.serialize_trlwe_batch(cts, ps)


def bench_encrypt(
    ps: ParamSet,
    iterations: int = 100,
    seed: bytes | None = None,
    sizes: Sequence[int] = DEFAULT_SIZES,
    max_seconds: float | None = 5.0,
    configs: Sequence[str] = tuple(ENCRYPT_CONFIGS),
    memory: bool = True,
) -> BenchReport:
    report = BenchReport()
    key = rlwe_keygen(RandomStream(seed if seed is not None else new_seed()), ps)
    plan = polymul.get_plan(ps.N)
    key.fourier.spectrum(plan)
    bit_rng = np.random.default_rng(0)
    for bits_len in sizes:
        bits = bit_rng.integers(0, 2, bits_len)
        for config in configs:
            _, stream_kind, algorithm, _ = ENCRYPT_CONFIGS[config]
            s = _stream(stream_kind, seed)
            g = GaussianSampler.for_params(ps, algorithm)
            u0, g0, f0 = s.uniforms_consumed, s.gaussians_emitted, plan.forward_count
            size = len(encrypt_bits(bits, config, ps, s, g, key))
            counters = {
                "uniform_words": s.uniforms_consumed - u0,
                "gaussian_words": s.gaussians_emitted - g0,
                "forward_transforms": plan.forward_count - f0,
            }
            n, totals, phases, wall = _repeat(
                lambda ph: encrypt_bits(bits, config, ps, s, g, key, phases=ph),
                iterations,
                max_seconds,
            )
            report.rows.append(
                BenchRow(
                    suite="encrypt",
                    config=config,
                    bits=bits_len,
                    iterations=n,
                    total_ms=_ms(totals),
                    wall_ms=wall * 1e3,
                    phases={k: _ms(phases[k]) for k in ("uniform", "gaussian", "polymul")},
                    counters=counters,
                    bytes=size,
                    peak_kib=_peak_kib(lambda: encrypt_bits(bits, config, ps, s, g, key))
                    if memory
                    else None,
                )
            )
    return report


def run_suite(suite: str, ps: ParamSet | None = None, **kwargs) -> BenchReport:
    ps = ps or lvl1_default()
    runners = {"sampler": bench_sampler, "polymul": bench_polymul, "encrypt": bench_encrypt}
    if suite not in runners:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    report = runners[suite](ps, **kwargs)
    if not kwargs.get("memory", True):
        report.notices.append("peak memory not measured (disabled)")
    return report
