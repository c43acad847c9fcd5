"""Keccak-based hashing: SHAKE128, cSHAKE128 and KMAC128."""

from .batch import kmac128_batch
from .keccak import ROUND_CONSTANTS, Sponge, keccak_f1600
from .xof import (DEFAULT_DIGEST_BITS, KEY_FILE_ENV, KMAC128, DeviceKey, KmacError, Signature,
                  bytepad, check_digest_bits, cshake128, encode_string, kmac128, left_encode,
                  load_key, prefix_mac, right_encode, shake128)

__all__ = [
    "DEFAULT_DIGEST_BITS", "KEY_FILE_ENV", "KMAC128", "ROUND_CONSTANTS", "DeviceKey",
    "KmacError", "Signature", "Sponge", "bytepad", "check_digest_bits", "cshake128",
    "encode_string", "keccak_f1600", "kmac128", "kmac128_batch", "left_encode", "load_key",
    "prefix_mac", "right_encode", "shake128",
]
