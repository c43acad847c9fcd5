"""Binary framing for the remote test protocol.

Frame (big-endian)::

    "KBST" | version u8 | type u8 | payload length u32 | payload

Strings and octet strings carry a u16 length prefix.

=============  ====  =================================================
TEST_REQUEST   1     dut_id str, seed u32, pattern_count u32, digest_bits u16
TEST_RESPONSE  2     signature octets
DIAG_RESULT    3     verdict u8, count u16, fault id str * count
ERROR          4     code u16, detail str
=============  ====  =================================================
"""

from __future__ import annotations

import asyncio
import enum
import struct
from dataclasses import dataclass

MAGIC = b"KBST"
VERSION = 1
HEADER = struct.Struct(">4sBBI")
MAX_PAYLOAD = 16 * 1024 * 1024


class MsgType(enum.IntEnum):
    TEST_REQUEST = 1
    TEST_RESPONSE = 2
    DIAG_RESULT = 3
    ERROR = 4


class WireVerdict(enum.IntEnum):
    FAULT_FREE = 0
    FAULT = 1
    INVALID = 2


class ErrorCode(enum.IntEnum):
    MALFORMED = 1
    UNKNOWN_DUT = 2
    BAD_DIGEST_SIZE = 3
    UNEXPECTED_MESSAGE = 4
    INTERNAL = 5


class ProtocolError(ValueError):
    pass


class BadMagicError(ProtocolError):
    pass


class UnsupportedVersionError(ProtocolError):
    pass


class LengthOverflowError(ProtocolError):
    pass


class TruncatedFrameError(ProtocolError):
    pass


@dataclass(frozen=True)
class TestRequest:
    dut_id: str
    seed: int
    pattern_count: int
    digest_bits: int


@dataclass(frozen=True)
class TestResponse:
    signature: bytes


@dataclass(frozen=True)
class DiagResult:
    verdict: WireVerdict
    fault_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class ErrorMessage:
    code: int
    detail: str = ""


Message = TestRequest | TestResponse | DiagResult | ErrorMessage


def _octets(b: bytes) -> bytes:
    if len(b) > 0xFFFF:
        raise ProtocolError(f"field of {len(b)} octets exceeds the 16-bit length prefix")
    return struct.pack(">H", len(b)) + b


def _string(s: str) -> bytes:
    return _octets(s.encode("utf-8"))


def _check_range(name: str, value: int, bits: int) -> None:
    if not isinstance(value, int) or not 0 <= value < (1 << bits):
        raise ProtocolError(f"{name}={value!r} does not fit in {bits} bits")


def encode_payload(msg: Message) -> tuple[MsgType, bytes]:
    if isinstance(msg, TestRequest):
        _check_range("seed", msg.seed, 32)
        _check_range("pattern_count", msg.pattern_count, 32)
        _check_range("digest_bits", msg.digest_bits, 16)
        body = _string(msg.dut_id) + struct.pack(">IIH", msg.seed, msg.pattern_count, msg.digest_bits)
        return MsgType.TEST_REQUEST, body
    if isinstance(msg, TestResponse):
        return MsgType.TEST_RESPONSE, _octets(bytes(msg.signature))
    if isinstance(msg, DiagResult):
        _check_range("verdict", int(msg.verdict), 8)
        _check_range("fault count", len(msg.fault_ids), 16)
        body = struct.pack(">BH", msg.verdict, len(msg.fault_ids))
        return MsgType.DIAG_RESULT, body + b"".join(_string(f) for f in msg.fault_ids)
    if isinstance(msg, ErrorMessage):
        _check_range("error code", msg.code, 16)
        return MsgType.ERROR, struct.pack(">H", msg.code) + _string(msg.detail)
    raise TypeError(f"not a protocol message: {msg!r}")


def encode(msg: Message) -> bytes:
    kind, payload = encode_payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise LengthOverflowError(f"payload of {len(payload)} octets exceeds {MAX_PAYLOAD}")
    return HEADER.pack(MAGIC, VERSION, kind, len(payload)) + payload


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFrameError("payload ends inside a field")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def octets(self) -> bytes:
        (n,) = self.unpack(">H")
        return self.take(n)

    def string(self) -> str:
        try:
            return self.octets().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"string field is not UTF-8: {exc.reason}") from None


def decode_header(header: bytes) -> tuple[MsgType, int]:
    if len(header) < HEADER.size:
        raise TruncatedFrameError(f"frame header needs {HEADER.size} octets, got {len(header)}")
    magic, version, kind, length = HEADER.unpack(header[:HEADER.size])
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported protocol version {version}")
    if length > MAX_PAYLOAD:
        raise LengthOverflowError(f"payload length {length} exceeds {MAX_PAYLOAD}")
    try:
        return MsgType(kind), length
    except ValueError:
        raise ProtocolError(f"unknown message type {kind}") from None


def decode_payload(kind: MsgType, payload: bytes) -> Message:
    r = _Reader(payload)
    if kind is MsgType.TEST_REQUEST:
        dut = r.string()
        seed, count, d = r.unpack(">IIH")
        msg = TestRequest(dut, seed, count, d)
    elif kind is MsgType.TEST_RESPONSE:
        msg = TestResponse(r.octets())
    elif kind is MsgType.DIAG_RESULT:
        verdict, n = r.unpack(">BH")
        try:
            verdict = WireVerdict(verdict)
        except ValueError:
            raise ProtocolError(f"unknown verdict {verdict}") from None
        msg = DiagResult(verdict, tuple(r.string() for _ in range(n)))
    else:
        (code,) = r.unpack(">H")
        msg = ErrorMessage(code, r.string())
    if r.pos != len(payload):
        raise ProtocolError(f"{len(payload) - r.pos} stray octets after {kind.name} payload")
    return msg


def decode(frame: bytes) -> Message:
    kind, length = decode_header(frame)
    payload = frame[HEADER.size:]
    if len(payload) < length:
        raise TruncatedFrameError(f"payload has {len(payload)} of {length} octets")
    if len(payload) > length:
        raise ProtocolError(f"{len(payload) - length} octets after the frame")
    return decode_payload(kind, payload)


async def read_frame(reader: asyncio.StreamReader) -> bytes:
    """Read one raw frame; validates the header before reading the payload."""
    try:
        header = await reader.readexactly(HEADER.size)
    except asyncio.IncompleteReadError as exc:
        if not exc.partial:
            raise EOFError("connection closed") from None
        raise TruncatedFrameError("connection closed inside a frame header") from None
    _, length = decode_header(header)
    try:
        payload = await reader.readexactly(length)
    except asyncio.IncompleteReadError:
        raise TruncatedFrameError("connection closed inside a frame payload") from None
    return header + payload
