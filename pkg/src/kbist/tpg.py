"""LFSR-based pseudo-random test pattern generation.

The generator is a Fibonacci LFSR. Taps are the exponents of the
connection polynomial ``1 + sum(x**t for t in taps)``; the degree is the
largest tap. Register bit 0 is the next output bit. Each step emits bit 0,
shifts right, and inserts the XOR of bits ``degree - t`` (for every tap
``t``) at the top. The sequence therefore obeys

    s[k + n] = XOR(s[k + n - t] for t in taps)

and the seed's bit ``i`` is ``s[i]``.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field

DEFAULT_DEGREE = 32
DEFAULT_TAPS = (32, 22, 2, 1)


class LfsrError(ValueError):
    pass


@dataclass
class LfsrState:
    degree: int
    taps: tuple[int, ...]
    state: int
    seed: int = field(init=False)

    def __post_init__(self):
        self.seed = self.state
        self._fb_mask = 0
        for t in self.taps:
            self._fb_mask |= 1 << (self.degree - t)

    def copy(self) -> LfsrState:
        c = lfsr_new(self.degree, self.taps, self.seed)
        c.state = self.state
        return c

    def step(self) -> int:
        s = self.state
        out = s & 1
        fb = (s & self._fb_mask).bit_count() & 1
        self.state = (s >> 1) | (fb << (self.degree - 1))
        return out


def lfsr_new(degree: int = DEFAULT_DEGREE, taps: Iterable[int] = DEFAULT_TAPS,
             seed: int = 1) -> LfsrState:
    taps = tuple(sorted({int(t) for t in taps}, reverse=True))
    if degree < 2:
        raise LfsrError(f"degree must be at least 2, got {degree}")
    if not taps:
        raise LfsrError("tap set is empty")
    if degree not in taps:
        taps = (degree,) + taps
    if any(t < 1 or t > degree for t in taps):
        raise LfsrError(f"taps must lie in 1..{degree}: {taps}")
    if seed == 0:
        raise LfsrError("seed 0 is the lockup state")
    if not 0 < seed < (1 << degree):
        raise LfsrError(f"seed {seed:#x} does not fit in {degree} bits")
    return LfsrState(degree, taps, seed)


def lfsr_bits(state: LfsrState, count: int) -> list[int]:
    """Emit ``count`` bits, advancing ``state`` in place."""
    if count < 0:
        raise LfsrError("count must be non-negative")
    step = state.step
    return [step() for _ in range(count)]


def gen_patterns(state: LfsrState, input_count: int, pattern_count: int) -> list[tuple[int, ...]]:
    """Slice the bit stream into ``pattern_count`` patterns of ``input_count`` bits.

    Bit ``j`` of each pattern drives primary input ``j`` (declaration order).
    """
    if input_count < 1:
        raise LfsrError("input_count must be at least 1")
    if pattern_count < 0:
        raise LfsrError("pattern_count must be non-negative")
    bits = lfsr_bits(state, input_count * pattern_count)
    return [tuple(bits[i:i + input_count]) for i in range(0, len(bits), input_count)]


def patterns_for_seed(seed: int, input_count: int, pattern_count: int,
                      taps: Iterable[int] = DEFAULT_TAPS, degree: int | None = None,
                      ) -> list[tuple[int, ...]]:
    """Fresh generator from ``seed``; the usual entry point for test sessions."""
    taps = tuple(taps)
    state = lfsr_new(degree or max(taps), taps, seed)
    return gen_patterns(state, input_count, pattern_count)


def parse_taps(text: str) -> tuple[int, ...]:
    """Parse ``"32,22,2,1"`` into a tap tuple."""
    try:
        taps = tuple(int(t) for t in text.replace(" ", "").split(",") if t)
    except ValueError:
        raise LfsrError(f"bad tap list {text!r}") from None
    if not taps:
        raise LfsrError("tap set is empty")
    return taps
