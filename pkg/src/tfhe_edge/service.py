"""Length-prefixed TCP protocol for remote sample extraction.

Frame layout: ``length`` (uint32 LE, payload bytes, at most 64 MiB),
``opcode`` (uint8), then ``length`` payload bytes. Requests carry a TRLWE
batch wire object; responses carry the concatenated TLWE batch. The server
never sees key material.
"""

from __future__ import annotations

import enum
import logging
import socket
import socketserver
import struct
import threading
from collections.abc import Sequence

from tfhe_edge import wire
from tfhe_edge.adapter import trlwe_batch_to_tlwes
from tfhe_edge.lwe import TlweBatch
from tfhe_edge.params import ParamSet
from tfhe_edge.rlwe import TRLWECiphertext

log = logging.getLogger(__name__)

FRAME_HEADER = struct.Struct("<IB")
MAX_PAYLOAD = 64 * 1024 * 1024
DEFAULT_TIMEOUT = 10.0


class Opcode(enum.IntEnum):
    PING = 1
    EXTRACT_REQUEST = 2
    EXTRACT_RESPONSE = 3
    ERROR = 4


class ProtocolError(Exception):
    pass


class FrameTooLarge(ProtocolError):
    pass


class ConnectionClosed(ProtocolError):
    pass


class ServiceError(ProtocolError):
    """The server answered with an ERROR frame."""


def _recv_exact(sock: socket.socket, n: int, *, at_boundary: bool = False) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(min(n - len(buf), 1 << 20))
        if not chunk:
            if at_boundary and not buf:
                raise ConnectionClosed("peer closed the connection")
            raise ProtocolError(f"connection closed mid-frame ({len(buf)}/{n} bytes)")
        buf += chunk
    return bytes(buf)


def send_frame(sock: socket.socket, opcode: Opcode, payload: bytes = b"") -> None:
    if len(payload) > MAX_PAYLOAD:
        raise FrameTooLarge(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    sock.sendall(FRAME_HEADER.pack(len(payload), int(opcode)) + payload)


def recv_frame(sock: socket.socket) -> tuple[int, bytes]:
    length, opcode = FRAME_HEADER.unpack(_recv_exact(sock, FRAME_HEADER.size, at_boundary=True))
    if length > MAX_PAYLOAD:
        raise FrameTooLarge(f"peer announced {length} bytes, limit is {MAX_PAYLOAD}")
    return opcode, _recv_exact(sock, length)


def handle_request(opcode: int, payload: bytes, ps: ParamSet) -> tuple[Opcode, bytes]:
    """Pure request handler: one frame in, one frame out."""
    if opcode == Opcode.PING:
        return Opcode.EXTRACT_RESPONSE, b""
    if opcode != Opcode.EXTRACT_REQUEST:
        return Opcode.ERROR, f"unexpected opcode {opcode}".encode()
    try:
        cts, hdr = wire.deserialize_trlwe_batch(payload)
    except wire.WireError as exc:
        return Opcode.ERROR, f"{type(exc).__name__}: {exc}".encode()
    if (hdr.N, hdr.log2_q, hdr.p) != (ps.N, ps.log2_q, ps.p):
        return Opcode.ERROR, (
            f"parameter mismatch: got N={hdr.N} log2_q={hdr.log2_q} p={hdr.p}, "
            f"server runs N={ps.N} log2_q={ps.log2_q} p={ps.p}"
        ).encode()
    # each TRLWE ciphertext expands to N TLWE ciphertexts
    if wire.tlwe_bytes(ps.N, hdr.count * ps.N) > MAX_PAYLOAD:
        return Opcode.ERROR, f"response for {hdr.count} ciphertexts exceeds frame limit".encode()
    out = wire.serialize_tlwe_batch(trlwe_batch_to_tlwes(cts, ps), ps)
    return Opcode.EXTRACT_RESPONSE, out


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        sock: socket.socket = self.request
        ps: ParamSet = self.server.params
        while True:
            try:
                opcode, payload = recv_frame(sock)
            except ConnectionClosed:
                return
            except FrameTooLarge as exc:
                # the stream cannot be resynchronised after an oversized header
                send_frame(sock, Opcode.ERROR, str(exc).encode())
                return
            except (ProtocolError, OSError) as exc:
                log.info("dropping connection from %s: %s", self.client_address, exc)
                return
            reply_op, reply = handle_request(opcode, payload, ps)
            try:
                send_frame(sock, reply_op, reply)
            except OSError as exc:
                log.info("send to %s failed: %s", self.client_address, exc)
                return


class ExtractionServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address: tuple[str, int], ps: ParamSet):
        self.params = ps
        super().__init__(address, _Handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[:2]

    def start(self) -> ExtractionServer:
        """Serve from a background thread."""
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


def parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"expected host:port, got {text!r}")
    return host or "127.0.0.1", int(port)


def serve(bind_address: tuple[str, int] | str, ps: ParamSet) -> None:
    """Run the extraction server until interrupted."""
    if isinstance(bind_address, str):
        bind_address = parse_address(bind_address)
    server = ExtractionServer(bind_address, ps)
    log.info("serving on %s:%d", *server.address)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


class ServiceClient:
    """One connection, one outstanding request at a time."""

    def __init__(self, address: tuple[str, int] | str, timeout: float = DEFAULT_TIMEOUT):
        if isinstance(address, str):
            address = parse_address(address)
        self.sock = socket.create_connection(address, timeout=timeout)

    def close(self) -> None:
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _call(self, opcode: Opcode, payload: bytes = b"") -> bytes:
        send_frame(self.sock, opcode, payload)
        reply_op, reply = recv_frame(self.sock)
        if reply_op == Opcode.ERROR:
            raise ServiceError(reply.decode("utf-8", "replace"))
        if reply_op != Opcode.EXTRACT_RESPONSE:
            raise ProtocolError(f"unexpected reply opcode {reply_op}")
        return reply

    def ping(self) -> None:
        if self._call(Opcode.PING):
            raise ProtocolError("PING ack must be empty")

    def extract_raw(self, trlwe_wire: bytes) -> bytes:
        return self._call(Opcode.EXTRACT_REQUEST, trlwe_wire)

    def extract(self, cts: Sequence[TRLWECiphertext], ps: ParamSet) -> TlweBatch:
        """Extract a batch, split into as many requests as the frame limit needs."""
        per_ct = wire.payload_bytes(wire.Kind.TLWE_BATCH, ps.N, ps.N)
        chunk = max(1, (MAX_PAYLOAD - wire.HEADER_BYTES) // per_ct)
        parts = []
        for start in range(0, len(cts), chunk) if cts else [0]:
            req = wire.serialize_trlwe_batch(cts[start : start + chunk], ps)
            batch, hdr = wire.deserialize_tlwe_batch(self.extract_raw(req))
            if hdr.N != ps.N:
                raise ProtocolError(f"response has N={hdr.N}, expected {ps.N}")
            parts.append(batch)
        return TlweBatch.concat(parts, ps.N)


def client_extract(
    server_address: tuple[str, int] | str,
    cts: Sequence[TRLWECiphertext],
    ps: ParamSet,
    timeout: float = DEFAULT_TIMEOUT,
) -> TlweBatch:
    with ServiceClient(server_address, timeout) as client:
        return client.extract(list(cts), ps)
