"""Built-in self checks: standard hash vectors and the SISR counting oracle."""

from __future__ import annotations

import itertools
from collections import Counter
from collections.abc import Callable, Iterator
from fractions import Fraction

from .kmac import cshake128, kmac128, shake128
from .kmac.keccak import keccak_f1600
from .ora import SisrState, pa_sr, sisr_compact

_SEQ200 = bytes(range(200))
_KMAC_KEY = bytes(range(0x40, 0x60))

# (label, function, expected hex)
HASH_VECTORS: list[tuple[str, Callable[[], bytes], str]] = [
    ("SHAKE128 empty", lambda: shake128(b"", 256).digest,
     "7f9c2ba4e88f827d616045507605853ed73b8093f6efbc88eb1a6eacfa66ef26"),
    ("SHAKE128 cc", lambda: shake128(b"\xcc", 256).digest,
     "4dd4b0004a7d9e613a0f488b4846f804015f0f8ccdba5f7c16810bbc5a1c6fb2"),
    ("cSHAKE128 sample 1", lambda: cshake128(bytes(range(4)), 256, b"", b"Email Signature").digest,
     "c1c36925b6409a04f1b504fcbca9d82b4017277cb5ed2b2065fc1d3814d5aaf5"),
    ("cSHAKE128 sample 2", lambda: cshake128(_SEQ200, 256, b"", b"Email Signature").digest,
     "c5221d50e4f822d96a2e8881a961420f294b7b24fe3d2094baed2c6524cc166b"),
    ("KMAC128 sample 1", lambda: kmac128(_KMAC_KEY, bytes(range(4)), 256).digest,
     "e5780b0d3ea6f7d3a429c5706aa43a00fadbd7d49628839e3187243f456ee14e"),
    ("KMAC128 sample 2", lambda: kmac128(_KMAC_KEY, bytes(range(4)), 256, b"My Tagged Application").digest,
     "3b1fba963cd8b0b59e8c1a6d71888b7143651af8ba0a7070c0979e2811324aa5"),
    ("KMAC128 sample 3", lambda: kmac128(_KMAC_KEY, _SEQ200, 256, b"My Tagged Application").digest,
     "1f5b4e6cca02209e0dcb5ca635b89a15e271ecc760071dfd805faa38f9729230"),
    ("Keccak-f[1600] zero state", lambda: b"".join(v.to_bytes(8, "big") for v in keccak_f1600([0] * 25)[:2]),
     "f1258f7940e1dde784d5ccf933c0478a"),
]


def sisr_preimage_counts(n: int, L: int) -> Counter:
    """Number of L-bit responses mapping to each n-bit SISR signature."""
    counts: Counter = Counter()
    for bits in itertools.product((0, 1), repeat=L):
        counts[sisr_compact(SisrState(n), bits)] += 1
    return counts


def sisr_aliasing_exact(n: int, L: int) -> bool:
    """Exhaustive aliasing rate of an n-bit SISR equals the closed form.

    For a response r, the aliasing set is every other response with r's
    signature; averaged over all r this is sum(c*(c-1)) / (2**L * (2**L - 1)).
    """
    counts = sisr_preimage_counts(n, L)
    total = 2 ** L
    empirical = Fraction(sum(c * (c - 1) for c in counts.values()), total * (total - 1))
    return empirical == pa_sr(n, L)


def run_selftest() -> Iterator[tuple[str, bool]]:
    for label, fn, expected in HASH_VECTORS:
        yield label, fn().hex() == expected
    for n in (2, 3, 4):
        ok = all(sisr_aliasing_exact(n, L) for L in range(n + 1, 13))
        yield f"SISR n={n} exhaustive aliasing, L={n + 1}..12", ok
