"""Remote test protocol: wire codec, trusted tester and DUT agent."""

from .protocol import (HEADER, MAGIC, MAX_PAYLOAD, VERSION, BadMagicError, DiagResult, ErrorCode,
                       ErrorMessage, LengthOverflowError, Message, MsgType, ProtocolError,
                       TestRequest, TestResponse, TruncatedFrameError, UnsupportedVersionError,
                       WireVerdict, decode, encode, read_frame)
from .service import (DEFAULT_TIMEOUT, RemoteError, SessionRecord, Tester, Transcript, agent_run,
                      agent_session, start_tester, tester_serve)

__all__ = [
    "HEADER", "MAGIC", "MAX_PAYLOAD", "VERSION", "BadMagicError", "DiagResult", "ErrorCode",
    "ErrorMessage", "LengthOverflowError", "Message", "MsgType", "ProtocolError", "TestRequest",
    "TestResponse", "TruncatedFrameError", "UnsupportedVersionError", "WireVerdict", "decode",
    "encode", "read_frame", "DEFAULT_TIMEOUT", "RemoteError", "SessionRecord", "Tester",
    "Transcript", "agent_run", "agent_session", "start_tester", "tester_serve",
]
