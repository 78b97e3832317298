"""Command-line interface.

Exit codes: 0 success, 1 usage, 2 I/O, 3 format, 4 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from tfhe_edge import bench, service, wire
from tfhe_edge.adapter import extract_key, trlwe_batch_to_tlwes
from tfhe_edge.params import ParamError, ParamSet, lvl1_default
from tfhe_edge.rlwe import rlwe_keygen, trlwe_decrypt
from tfhe_edge.rng import GaussianSampler, RandomStream, new_seed
from tfhe_edge.torus import bits_to_bytes, bytes_to_bits

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_FORMAT = 3
EXIT_VERIFY = 4


class UsageError(Exception):
    pass


class VerificationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text: str | None) -> bytes:
    if text is None:
        return new_seed()
    try:
        seed = bytes.fromhex(text)
    except ValueError:
        raise UsageError(f"--seed must be hex, got {text!r}") from None
    if len(seed) != 32:
        raise UsageError(f"--seed must be 64 hex digits (32 bytes), got {len(seed)} bytes")
    return seed


def _params(args) -> ParamSet:
    path = getattr(args, "params_file", None)
    if path:
        return wire.deserialize_params(Path(path).read_bytes())
    return lvl1_default()


def _load_key(path: str):
    key, hdr = wire.deserialize_secret_key(Path(path).read_bytes())
    return key, hdr


def _read_bits(args) -> np.ndarray:
    if args.bits is not None:
        text = args.bits.strip()
        if text.strip("01"):
            raise UsageError("--bits must contain only 0 and 1")
        bits = np.array([int(c) for c in text], dtype=np.int64)
    else:
        bits = bytes_to_bits(Path(args.input).read_bytes())
    if bits.size == 0:
        raise wire.FormatError("nothing to encrypt: input is empty")
    return bits


def cmd_params(args) -> int:
    Path(args.out).write_bytes(wire.serialize_params(_params(args)))
    return EXIT_OK


def cmd_keygen(args) -> int:
    ps = _params(args)
    key = rlwe_keygen(RandomStream(_seed(args.seed)), ps)
    Path(args.out).write_bytes(wire.serialize_secret_key(key, ps))
    return EXIT_OK


def cmd_encrypt(args) -> int:
    key, hdr = _load_key(args.key)
    ps = _params(args)
    if hdr.N != ps.N:
        raise wire.FormatError(f"key has N={hdr.N}, parameters have N={ps.N}")
    bits = _read_bits(args)
    s = RandomStream(_seed(args.seed))
    g = GaussianSampler.for_params(ps, args.sampler)
    config = "tlwe-baseline" if args.baseline_tlwe else "trlwe-optimized"
    data = bench.encrypt_bits(bits, config, ps, s, g, key)
    Path(args.out).write_bytes(data)
    return EXIT_OK


def _params_from_header(hdr: wire.Header) -> ParamSet:
    # sigma is irrelevant for extraction and decryption
    return ParamSet(log2_q=hdr.log2_q, N=hdr.N, sigma=1.0, p=hdr.p)


def cmd_extract(args) -> int:
    data = Path(args.input).read_bytes()
    cts, hdr = wire.deserialize_trlwe_batch(data)
    ps = _params_from_header(hdr)
    Path(args.out).write_bytes(wire.serialize_tlwe_batch(trlwe_batch_to_tlwes(cts, ps), ps))
    return EXIT_OK


def cmd_decrypt(args) -> int:
    key, key_hdr = _load_key(args.key)
    data = Path(args.input).read_bytes()
    hdr = wire.read_header(data)
    if hdr.kind == wire.Kind.TRLWE_BATCH:
        cts, hdr = wire.deserialize_trlwe_batch(data)
        ps = _params_from_header(hdr)
        if key_hdr.N != hdr.N:
            raise wire.FormatError(f"key has N={key_hdr.N}, ciphertexts have N={hdr.N}")
        parts = [trlwe_decrypt(ct, key, ps) for ct in cts]
        bits = np.concatenate(parts) if parts else np.zeros(0, np.int64)
    elif hdr.kind == wire.Kind.TLWE_BATCH:
        batch, hdr = wire.deserialize_tlwe_batch(data)
        ps = _params_from_header(hdr)
        if key_hdr.N != hdr.N:
            raise wire.FormatError(f"key has N={key_hdr.N}, ciphertexts have N={hdr.N}")
        bits = batch.decrypt(extract_key(key), ps)
    else:
        raise wire.BadKindError(f"cannot decrypt a {hdr.kind.name} object")
    if args.nbits is not None:
        bits = bits[: args.nbits]
    if args.expect is not None or args.expect_bits is not None:
        if args.expect is not None:
            expected = bytes_to_bits(Path(args.expect).read_bytes())
        else:
            expected = np.array([int(c) for c in args.expect_bits.strip()], dtype=np.int64)
        got = bits[: expected.size]
        if got.size != expected.size or not np.array_equal(got, expected):
            wrong = int(np.count_nonzero(got != expected[: got.size])) + expected.size - got.size
            raise VerificationError(f"{wrong} of {expected.size} bits differ from the expected plaintext")
    if args.out:
        Path(args.out).write_bytes(bits_to_bytes(bits))
    else:
        print("".join(map(str, bits.tolist())))
    return EXIT_OK


def cmd_serve(args) -> int:
    ps = _params(args)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    service.serve(args.bind, ps)
    return EXIT_OK


def cmd_send(args) -> int:
    ps = _params(args)
    cts, hdr = wire.deserialize_trlwe_batch(Path(args.input).read_bytes())
    if hdr.N != ps.N:
        raise wire.FormatError(f"ciphertexts have N={hdr.N}, parameters have N={ps.N}")
    batch = service.client_extract(args.connect, cts, ps, timeout=args.timeout_ms / 1000)
    Path(args.out).write_bytes(wire.serialize_tlwe_batch(batch, ps))
    return EXIT_OK


def _pin_one_cpu() -> None:
    if hasattr(os, "sched_setaffinity"):
        try:
            os.sched_setaffinity(0, {min(os.sched_getaffinity(0))})
        except OSError:
            pass


def cmd_bench(args) -> int:
    ps = _params(args)
    _pin_one_cpu()
    kwargs = dict(iterations=args.iterations, memory=not args.no_memory)
    if args.seed is not None:
        kwargs["seed"] = _seed(args.seed)
    if args.max_seconds is not None:
        kwargs["max_seconds"] = args.max_seconds
    if args.suite == "encrypt" and args.sizes:
        kwargs["sizes"] = [int(x) for x in args.sizes.split(",")]
    report = bench.run_suite(args.suite, ps, **kwargs)
    if args.json:
        text = report.to_json()
    elif args.csv:
        text = report.to_csv()
    else:
        text = report.to_text()
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tfhe-edge", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params-file", help="ParamSet wire file (default: lvl1)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("params", parents=[common], help="write the parameter set to a file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("keygen", parents=[common], help="generate a secret key")
    p.add_argument("--seed", help="64 hex digits; OS entropy if omitted")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("encrypt", parents=[common], help="encrypt bits (TRLWE by default)")
    p.add_argument("--key", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--bits", help="plaintext as a string of 0/1")
    src.add_argument("--in", dest="input", help="plaintext file, bits taken LSB-first per byte")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", help="64 hex digits; OS entropy if omitted")
    p.add_argument("--baseline-tlwe", action="store_true", help="one TLWE ciphertext per bit")
    p.add_argument("--sampler", choices=("ziggurat", "polar"), default="ziggurat")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("extract", help="convert a TRLWE batch file to a TLWE batch file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("decrypt", help="decrypt a TRLWE or TLWE batch")
    p.add_argument("--key", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", help="write plaintext bytes here (default: print bits)")
    p.add_argument("--nbits", type=int, help="keep only the first NBITS bits")
    exp = p.add_mutually_exclusive_group()
    exp.add_argument("--expect", help="plaintext file to verify against (exit 4 on mismatch)")
    exp.add_argument("--expect-bits", help="plaintext bit string to verify against")
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("serve", parents=[common], help="run the extraction server")
    p.add_argument("--bind", default="127.0.0.1:7878", help="host:port")
    p.add_argument("--params", choices=("lvl1",), default="lvl1")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("send", parents=[common], help="extract a TRLWE batch on a remote server")
    p.add_argument("--connect", required=True, help="host:port")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--params", choices=("lvl1",), default="lvl1")
    p.add_argument("--timeout-ms", type=int, default=10000)
    p.set_defaults(func=cmd_send)

    p = sub.add_parser("bench", parents=[common], help="run a benchmark suite")
    p.add_argument("suite", choices=bench.SUITES)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")
    p.add_argument("--out")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--seed", help="64 hex digits for the hash-stream configurations")
    p.add_argument("--sizes", help="comma-separated plaintext sizes in bits (encrypt suite)")
    p.add_argument("--max-seconds", type=float, help="time budget per row")
    p.add_argument("--no-memory", action="store_true", help="skip peak-memory measurement")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (wire.WireError, ParamError) as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except service.ServiceError as exc:
        print(f"server error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (OSError, service.ProtocolError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
