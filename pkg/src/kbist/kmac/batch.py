"""Keccak sponge vectorised across many messages with NumPy.

Each of the 25 lanes is a ``uint64`` array with one element per message,
so a single pass of the round function permutes every state at once.
Messages in one call are grouped by length; all messages of a group move
through the sponge in lockstep.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Sequence

import numpy as np

from .keccak import PI_DEST, ROTATIONS, ROUND_CONSTANTS, Sponge
from .xof import (CSHAKE_SUFFIX, RATE_128, DeviceKey, Signature, _key_bytes, bytepad,
                  check_digest_bits, cshake_prefix, encode_string, right_encode)

_RC = [np.uint64(c) for c in ROUND_CONSTANTS]
_SHIFT = [(np.uint64(r), np.uint64(64 - r)) for r in ROTATIONS]

CHUNK = 1 << 15
CHUNK_BYTES = 1 << 25


def keccak_f1600_batch(a: np.ndarray) -> None:
    """Permute states in place; ``a`` has shape (25, N), dtype uint64."""
    b = np.empty_like(a)
    c = np.empty((5,) + a.shape[1:], dtype=np.uint64)
    d = np.empty_like(c)
    one, s63 = np.uint64(1), np.uint64(63)
    for rc in _RC:
        np.bitwise_xor.reduce(a.reshape(5, 5, -1), axis=0, out=c)
        rolled = (c << one) | (c >> s63)
        d[:] = np.roll(c, 1, axis=0) ^ np.roll(rolled, -1, axis=0)
        a.reshape(5, 5, -1)[:] ^= d
        for i in range(25):
            r, rr = _SHIFT[i]
            if ROTATIONS[i]:
                b[PI_DEST[i]] = (a[i] << r) | (a[i] >> rr)
            else:
                b[PI_DEST[i]] = a[i]
        bb = b.reshape(5, 5, -1)
        a.reshape(5, 5, -1)[:] = bb ^ (~np.roll(bb, -1, axis=1) & np.roll(bb, -2, axis=1))
        a[0] ^= rc


def _absorb(lanes: np.ndarray, data: np.ndarray, rate: int) -> None:
    """Absorb rows of ``data`` (shape (N, k*rate), uint8) into ``lanes``."""
    w = rate // 8
    for off in range(0, data.shape[1], rate):
        block = np.ascontiguousarray(data[:, off:off + rate]).view("<u8")
        lanes[:w] ^= block.T
        keccak_f1600_batch(lanes)


def _squeeze(lanes: np.ndarray, rate: int, nbytes: int) -> np.ndarray:
    w = rate // 8
    out = []
    have = 0
    while True:
        chunk = np.ascontiguousarray(lanes[:w].T).astype("<u8").view(np.uint8)
        out.append(chunk)
        have += rate
        if have >= nbytes:
            break
        keccak_f1600_batch(lanes)
    return np.concatenate(out, axis=1)[:, :nbytes]


def sponge_batch(prefix_state: Sponge, bodies: Sequence[bytes], nbytes: int) -> list[bytes]:
    """Continue ``prefix_state`` with each body and squeeze ``nbytes`` from each.

    ``prefix_state`` must sit on a block boundary (no buffered input).
    Bodies are grouped by length internally; output order follows input.
    """
    if prefix_state._buf:
        raise ValueError("prefix must end on a block boundary")
    rate, suffix = prefix_state.rate, prefix_state.suffix
    base = np.array(prefix_state.lanes, dtype=np.uint64)
    groups: dict[int, list[int]] = defaultdict(list)
    for i, body in enumerate(bodies):
        groups[len(body)].append(i)
    results: list[bytes] = [b""] * len(bodies)
    for length, idxs in groups.items():
        padlen = rate - length % rate
        pad = np.zeros(padlen, dtype=np.uint8)
        pad[0] ^= suffix
        pad[-1] ^= 0x80
        step = max(1, min(CHUNK, CHUNK_BYTES // (length + padlen)))
        for start in range(0, len(idxs), step):
            part = idxs[start:start + step]
            raw = np.frombuffer(b"".join(bodies[i] for i in part), dtype=np.uint8)
            data = np.empty((len(part), length + padlen), dtype=np.uint8)
            data[:, :length] = raw.reshape(len(part), length)
            data[:, length:] = pad
            lanes = np.repeat(base[:, None], len(part), axis=1)
            _absorb(lanes, data, rate)
            out = _squeeze(lanes, rate, nbytes)
            for j, i in enumerate(part):
                results[i] = out[j].tobytes()
    return results


def kmac128_batch(key: DeviceKey | bytes | Sequence[DeviceKey | bytes], messages: Sequence[bytes],
                  d: int = 256, customization: bytes = b"") -> list[Signature]:
    """KMAC128 over many messages.

    ``key`` is either one key shared by all messages or a sequence with one
    key per message. Bit-identical to :func:`kbist.kmac.kmac128`.
    """
    check_digest_bits(d)
    head = Sponge(RATE_128, CSHAKE_SUFFIX).update(cshake_prefix(b"KMAC", customization))
    tail = right_encode(d)
    if isinstance(key, (DeviceKey, bytes, bytearray)):
        head.update(bytepad(encode_string(_key_bytes(key)), RATE_128))
        bodies = [bytes(m) + tail for m in messages]
    else:
        if len(key) != len(messages):
            raise ValueError("need one key per message")
        bodies = [bytepad(encode_string(_key_bytes(k)), RATE_128) + bytes(m) + tail
                  for k, m in zip(key, messages)]
    return [Signature(x) for x in sponge_batch(head, bodies, d // 8)]
