"""SHAKE128, cSHAKE128 and KMAC128 (FIPS 202, NIST SP 800-185)."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from .keccak import Sponge

RATE_128 = 168
SHAKE_SUFFIX = 0x1F
CSHAKE_SUFFIX = 0x04
DEFAULT_DIGEST_BITS = 256
MIN_KEY_BYTES = 8


class KmacError(ValueError):
    pass


def left_encode(x: int) -> bytes:
    n = max(1, (x.bit_length() + 7) // 8)
    return bytes([n]) + x.to_bytes(n, "big")


def right_encode(x: int) -> bytes:
    n = max(1, (x.bit_length() + 7) // 8)
    return x.to_bytes(n, "big") + bytes([n])


def encode_string(s: bytes) -> bytes:
    return left_encode(8 * len(s)) + s


def bytepad(x: bytes, w: int) -> bytes:
    z = left_encode(w) + x
    return z + bytes(-len(z) % w)


def check_digest_bits(d: int) -> int:
    if not isinstance(d, int) or d < 8 or d % 8:
        raise KmacError(f"digest size must be a positive multiple of 8 bits, got {d!r}")
    return d


@dataclass(frozen=True)
class Signature:
    digest: bytes

    @property
    def bit_length(self) -> int:
        return 8 * len(self.digest)

    def hex(self) -> str:
        return self.digest.hex()

    @classmethod
    def fromhex(cls, text: str) -> Signature:
        return cls(bytes.fromhex(text))

    def __str__(self):
        return self.digest.hex()


@dataclass(frozen=True)
class DeviceKey:
    """Device-specific MAC key. The key bytes are never shown by repr()."""

    key_bytes: bytes

    def __post_init__(self):
        if len(self.key_bytes) < MIN_KEY_BYTES:
            raise KmacError(
                f"device key must be at least {8 * MIN_KEY_BYTES} bits, "
                f"got {8 * len(self.key_bytes)}")

    @property
    def bit_length(self) -> int:
        return 8 * len(self.key_bytes)

    def __repr__(self):
        return f"DeviceKey(<{self.bit_length} bits>)"

    @classmethod
    def fromhex(cls, text: str) -> DeviceKey:
        try:
            return cls(bytes.fromhex("".join(text.split())))
        except ValueError as exc:
            raise KmacError(f"key is not valid hex: {exc}") from None


KEY_FILE_ENV = "KBIST_KEY_FILE"


def load_key(path: str | Path | None = None) -> DeviceKey:
    """Read a key file holding one line of hex octets.

    ``$KBIST_KEY_FILE`` overrides ``path`` when set.
    """
    path = os.environ.get(KEY_FILE_ENV) or path
    if path is None:
        raise KmacError(f"no key file given and ${KEY_FILE_ENV} is unset")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise KmacError(f"cannot read key file {path}: {exc.strerror}") from None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 1:
        raise KmacError(f"key file {path} must hold exactly one line of hex")
    return DeviceKey.fromhex(lines[0])


def _key_bytes(key: DeviceKey | bytes) -> bytes:
    kb = key.key_bytes if isinstance(key, DeviceKey) else bytes(key)
    if not kb:
        raise KmacError("KMAC key must not be empty")
    return kb


def shake128(message: bytes, d: int = DEFAULT_DIGEST_BITS) -> Signature:
    check_digest_bits(d)
    return Signature(Sponge(RATE_128, SHAKE_SUFFIX).update(message).read(d // 8))


def cshake_prefix(function_name: bytes, customization: bytes) -> bytes:
    return bytepad(encode_string(function_name) + encode_string(customization), RATE_128)


def cshake128(message: bytes, d: int = DEFAULT_DIGEST_BITS, function_name: bytes = b"",
              customization: bytes = b"") -> Signature:
    check_digest_bits(d)
    if not function_name and not customization:
        return shake128(message, d)
    sponge = Sponge(RATE_128, CSHAKE_SUFFIX)
    sponge.update(cshake_prefix(function_name, customization)).update(message)
    return Signature(sponge.read(d // 8))


class KMAC128:
    """Incremental KMAC128: ``KMAC128(key).update(a).update(b).signature()``."""

    def __init__(self, key: DeviceKey | bytes, d: int = DEFAULT_DIGEST_BITS,
                 customization: bytes = b""):
        self.d = check_digest_bits(d)
        self._sponge = Sponge(RATE_128, CSHAKE_SUFFIX)
        self._sponge.update(cshake_prefix(b"KMAC", customization))
        self._sponge.update(bytepad(encode_string(_key_bytes(key)), RATE_128))

    def update(self, data: bytes) -> KMAC128:
        self._sponge.update(data)
        return self

    def signature(self) -> Signature:
        s = self._sponge.copy()
        s.update(right_encode(self.d))
        return Signature(s.read(self.d // 8))


def kmac128(key: DeviceKey | bytes, message: bytes, d: int = DEFAULT_DIGEST_BITS,
            customization: bytes = b"") -> Signature:
    return KMAC128(key, d, customization).update(message).signature()


def prefix_mac(key: DeviceKey | bytes, message: bytes, d: int = DEFAULT_DIGEST_BITS) -> Signature:
    """Literal ``H(k || r)`` with SHAKE128; a compatibility mode, not the default."""
    return shake128(_key_bytes(key) + message, d)
