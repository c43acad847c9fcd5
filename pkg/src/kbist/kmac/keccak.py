"""Keccak-f[1600] and a byte-oriented sponge (FIPS 202)."""

from __future__ import annotations

_M64 = (1 << 64) - 1


def _round_constants() -> tuple[int, ...]:
    # rc(t) from the degree-8 LFSR x^8 + x^6 + x^5 + x^4 + 1
    def rc(t):
        if t % 255 == 0:
            return 1
        r = 1
        for _ in range(t % 255):
            r <<= 1
            if r & 0x100:
                r ^= 0x171
        return r & 1

    consts = []
    for ir in range(24):
        c = 0
        for j in range(7):
            if rc(j + 7 * ir):
                c |= 1 << ((1 << j) - 1)
        consts.append(c)
    return tuple(consts)


def _rotation_offsets() -> tuple[int, ...]:
    off = [0] * 25
    x, y = 1, 0
    for t in range(24):
        off[x + 5 * y] = ((t + 1) * (t + 2) // 2) % 64
        x, y = y, (2 * x + 3 * y) % 5
    return tuple(off)


ROUND_CONSTANTS = _round_constants()
ROTATIONS = _rotation_offsets()
# pi: lane (x, y) moves to (y, 2x + 3y)
PI_DEST = tuple(y + 5 * ((2 * x + 3 * y) % 5) for y in range(5) for x in range(5))


def keccak_f1600(lanes: list[int]) -> list[int]:
    """Apply the 24-round permutation to 25 lanes (index ``x + 5*y``).

    Returns a new list; the argument is left untouched.
    """
    a = list(lanes)
    rot, dest = ROTATIONS, PI_DEST
    b = [0] * 25
    for rc in ROUND_CONSTANTS:
        # theta
        c0 = a[0] ^ a[5] ^ a[10] ^ a[15] ^ a[20]
        c1 = a[1] ^ a[6] ^ a[11] ^ a[16] ^ a[21]
        c2 = a[2] ^ a[7] ^ a[12] ^ a[17] ^ a[22]
        c3 = a[3] ^ a[8] ^ a[13] ^ a[18] ^ a[23]
        c4 = a[4] ^ a[9] ^ a[14] ^ a[19] ^ a[24]
        d = (c4 ^ (((c1 << 1) | (c1 >> 63)) & _M64),
             c0 ^ (((c2 << 1) | (c2 >> 63)) & _M64),
             c1 ^ (((c3 << 1) | (c3 >> 63)) & _M64),
             c2 ^ (((c4 << 1) | (c4 >> 63)) & _M64),
             c3 ^ (((c0 << 1) | (c0 >> 63)) & _M64))
        # rho + pi
        for i in range(25):
            v = a[i] ^ d[i % 5]
            r = rot[i]
            b[dest[i]] = ((v << r) | (v >> (64 - r))) & _M64 if r else v
        # chi
        for y in range(0, 25, 5):
            b0, b1, b2, b3, b4 = b[y:y + 5]
            a[y] = b0 ^ (~b1 & b2)
            a[y + 1] = b1 ^ (~b2 & b3)
            a[y + 2] = b2 ^ (~b3 & b4)
            a[y + 3] = b3 ^ (~b4 & b0)
            a[y + 4] = b4 ^ (~b0 & b1)
        # iota
        a[0] ^= rc
    return a


def _bytes_to_lanes(block: bytes) -> list[int]:
    return [int.from_bytes(block[i:i + 8], "little") for i in range(0, len(block), 8)]


def _lanes_to_bytes(lanes: list[int]) -> bytes:
    return b"".join(v.to_bytes(8, "little") for v in lanes)


class Sponge:
    """Keccak[c] sponge over octet strings.

    ``suffix`` holds the domain-separation bits plus the first padding bit,
    as one byte (0x1F for SHAKE, 0x04 for cSHAKE).
    """

    def __init__(self, rate: int, suffix: int):
        if rate % 8 or not 0 < rate < 200:
            raise ValueError(f"rate must be a multiple of 8 bytes below 200, got {rate}")
        self.rate = rate
        self.suffix = suffix
        self._lanes = [0] * 25
        self._buf = bytearray()
        self._squeezing = False
        self._out = b""

    def copy(self) -> Sponge:
        c = Sponge(self.rate, self.suffix)
        c._lanes = list(self._lanes)
        c._buf = bytearray(self._buf)
        c._squeezing = self._squeezing
        c._out = self._out
        return c

    @property
    def lanes(self) -> list[int]:
        return list(self._lanes)

    def _absorb_block(self, block: bytes):
        for i, v in enumerate(_bytes_to_lanes(block)):
            self._lanes[i] ^= v
        self._lanes = keccak_f1600(self._lanes)

    def update(self, data: bytes) -> Sponge:
        if self._squeezing:
            raise RuntimeError("cannot absorb after squeezing started")
        self._buf += data
        r = self.rate
        if len(self._buf) >= r:
            full = len(self._buf) - len(self._buf) % r
            for i in range(0, full, r):
                self._absorb_block(bytes(self._buf[i:i + r]))
            del self._buf[:full]
        return self

    def _finish(self):
        pad = bytearray(self.rate - len(self._buf))
        pad[0] ^= self.suffix
        pad[-1] ^= 0x80
        self._absorb_block(bytes(self._buf + pad))
        self._buf.clear()
        self._squeezing = True

    def read(self, n: int) -> bytes:
        """Squeeze ``n`` more output bytes."""
        if not self._squeezing:
            self._finish()
            self._out = _lanes_to_bytes(self._lanes)[:self.rate]
        out = bytearray()
        while len(out) < n:
            if not self._out:
                self._lanes = keccak_f1600(self._lanes)
                self._out = _lanes_to_bytes(self._lanes)[:self.rate]
            take = min(n - len(out), len(self._out))
            out += self._out[:take]
            self._out = self._out[take:]
        return bytes(out)
