"""Trusted tester and DUT agent over plain TCP, one session per connection.

The tester owns the fault dictionary and picks the seed; the agent owns
the device key and the DUT model and only ever sends signatures back.
The channel itself is neither encrypted nor authenticated.
"""

from __future__ import annotations

import asyncio
import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

from ..dictionary import DictionaryKey, FaultDictionary, Verdict, lookup
from ..kmac import Signature
from ..testflow import SocConfig, UnknownDutError, dut_signature
from ..tpg import LfsrError
from .protocol import (DiagResult, ErrorCode, ErrorMessage, Message, ProtocolError, TestRequest,
                       TestResponse, WireVerdict, decode, encode, read_frame)

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0

_TO_WIRE = {Verdict.FAULT_FREE: WireVerdict.FAULT_FREE, Verdict.FAULT: WireVerdict.FAULT,
            Verdict.INVALID_SIGNATURE: WireVerdict.INVALID}


class RemoteError(RuntimeError):
    pass


@dataclass
class Transcript:
    """Every frame sent or received on one side, in order."""

    frames: list[tuple[str, bytes]] = field(default_factory=list)

    def add(self, direction: str, frame: bytes) -> None:
        self.frames.append((direction, frame))

    def raw(self) -> bytes:
        return b"".join(f for _, f in self.frames)


async def _send(writer: asyncio.StreamWriter, msg: Message, transcript: Transcript | None) -> None:
    frame = encode(msg)
    if transcript is not None:
        transcript.add("tx", frame)
    writer.write(frame)
    await writer.drain()


async def _recv(reader: asyncio.StreamReader, transcript: Transcript | None) -> Message:
    frame = await read_frame(reader)
    if transcript is not None:
        transcript.add("rx", frame)
    return decode(frame)


async def _close(writer: asyncio.StreamWriter) -> None:
    writer.close()
    try:
        await writer.wait_closed()
    except (ConnectionError, OSError):
        pass


# -- tester ------------------------------------------------------------------

@dataclass(frozen=True)
class SessionRecord:
    peer: str
    session: DictionaryKey
    verdict: WireVerdict | None
    fault_ids: tuple[str, ...] = ()
    error: str = ""


class Tester:
    """Session handler bound to one dictionary.

    Sessions take dictionary entries round-robin, or cycle through
    ``seeds`` when given.
    """

    def __init__(self, dictionary: FaultDictionary, seeds: Sequence[int] | None = None,
                 timeout: float = DEFAULT_TIMEOUT, transcript: Transcript | None = None):
        self.dictionary = dictionary
        if seeds:
            plan = [dictionary.session(s) for s in seeds]
        else:
            plan = dictionary.sessions
        if not plan:
            raise RemoteError("dictionary holds no test sessions")
        self._plan = itertools.cycle(plan)
        self.timeout = timeout
        self.transcript = transcript
        self.records: list[SessionRecord] = []

    async def handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        peer = str(writer.get_extra_info("peername"))
        k = next(self._plan)
        t = self.transcript
        try:
            await _send(writer, TestRequest(k.dut_id, k.seed, k.pattern_count, k.digest_bits), t)
            reply = await asyncio.wait_for(_recv(reader, t), self.timeout)
            if isinstance(reply, ErrorMessage):
                self._record(SessionRecord(peer, k, None, error=f"agent error {reply.code}: {reply.detail}"))
                return
            if not isinstance(reply, TestResponse):
                await _send(writer, ErrorMessage(ErrorCode.UNEXPECTED_MESSAGE,
                                                 f"expected TEST_RESPONSE, got {type(reply).__name__}"), t)
                self._record(SessionRecord(peer, k, None, error="unexpected message"))
                return
            if 8 * len(reply.signature) != k.digest_bits:
                await _send(writer, ErrorMessage(ErrorCode.BAD_DIGEST_SIZE,
                                                 f"expected {k.digest_bits}-bit signature"), t)
                self._record(SessionRecord(peer, k, None, error="signature length mismatch"))
                return
            diag = lookup(self.dictionary, k, Signature(reply.signature))
            wire = _TO_WIRE[diag.verdict]
            await _send(writer, DiagResult(wire, diag.fault_ids), t)
            self._record(SessionRecord(peer, k, wire, diag.fault_ids))
        except asyncio.TimeoutError:
            self._record(SessionRecord(peer, k, None, error="response timeout"))
        except ProtocolError as exc:
            try:
                await _send(writer, ErrorMessage(ErrorCode.MALFORMED, str(exc)), t)
            except (ConnectionError, OSError):
                pass
            self._record(SessionRecord(peer, k, None, error=f"malformed frame: {exc}"))
        except (EOFError, ConnectionError, OSError) as exc:
            self._record(SessionRecord(peer, k, None, error=f"transport: {exc}"))
        finally:
            await _close(writer)

    def _record(self, rec: SessionRecord) -> None:
        self.records.append(rec)
        if rec.verdict is None:
            log.warning("session %s seed=%#010x aborted: %s", rec.peer, rec.session.seed, rec.error)
        else:
            ids = " ".join(rec.fault_ids)
            log.info("session %s seed=%#010x %s %s", rec.peer, rec.session.seed, rec.verdict.name, ids)


async def start_tester(tester: Tester, host: str, port: int) -> asyncio.base_events.Server:
    return await asyncio.start_server(tester.handle, host, port)


async def tester_serve(dictionary: FaultDictionary, host: str, port: int, *,
                       seeds: Sequence[int] | None = None, timeout: float = DEFAULT_TIMEOUT,
                       max_sessions: int | None = None) -> list[SessionRecord]:
    """Serve until cancelled, or until ``max_sessions`` sessions have finished."""
    tester = Tester(dictionary, seeds, timeout)
    server = await start_tester(tester, host, port)
    log.info("tester listening on %s", ", ".join(str(s.getsockname()) for s in server.sockets))
    async with server:
        if max_sessions is None:
            await server.serve_forever()
        while len(tester.records) < max_sessions:
            await asyncio.sleep(0.01)
    return tester.records


# -- agent -------------------------------------------------------------------

def _answer(soc: SocConfig, req: TestRequest) -> Message:
    try:
        sig = dut_signature(soc, req.dut_id, req.seed, req.pattern_count, req.digest_bits)
    except UnknownDutError as exc:
        return ErrorMessage(ErrorCode.UNKNOWN_DUT, str(exc))
    except LfsrError as exc:
        return ErrorMessage(ErrorCode.MALFORMED, str(exc))
    except ValueError as exc:
        return ErrorMessage(ErrorCode.BAD_DIGEST_SIZE, str(exc))
    return TestResponse(sig.digest)


async def agent_session(soc: SocConfig, host: str, port: int, *,
                        transcript: Transcript | None = None,
                        timeout: float = DEFAULT_TIMEOUT) -> DiagResult | ErrorMessage:
    """Connect, answer test requests until the tester sends a verdict or an error."""
    reader, writer = await asyncio.open_connection(host, port)
    try:
        while True:
            try:
                msg = await asyncio.wait_for(_recv(reader, transcript), timeout)
            except EOFError:
                raise RemoteError("tester closed the session without a verdict") from None
            if isinstance(msg, TestRequest):
                reply = await asyncio.to_thread(_answer, soc, msg)
                await _send(writer, reply, transcript)
                if isinstance(reply, ErrorMessage):
                    return reply
            elif isinstance(msg, (DiagResult, ErrorMessage)):
                return msg
            else:
                await _send(writer, ErrorMessage(ErrorCode.UNEXPECTED_MESSAGE,
                                                 f"agent does not accept {type(msg).__name__}"), transcript)
                return ErrorMessage(ErrorCode.UNEXPECTED_MESSAGE, "unexpected message from tester")
    finally:
        await _close(writer)


async def agent_run(soc: SocConfig, host: str, port: int, *, sessions: int = 1, retries: int = 0,
                    transcript: Transcript | None = None,
                    timeout: float = DEFAULT_TIMEOUT) -> list[DiagResult | ErrorMessage]:
    """Run ``sessions`` sessions back to back.

    Transport failures are retried ``retries`` times per session, then
    raised as :class:`RemoteError`.
    """
    results = []
    for _ in range(sessions):
        for attempt in itertools.count():
            try:
                results.append(await agent_session(soc, host, port, transcript=transcript,
                                                   timeout=timeout))
                break
            except (OSError, ProtocolError, RemoteError, asyncio.TimeoutError) as exc:
                if attempt >= retries:
                    raise RemoteError(f"session failed: {exc or type(exc).__name__}") from exc
                log.warning("session failed (%s), retrying", exc)
    return results
