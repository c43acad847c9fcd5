"""Output response analysis.

KMAC128 signatures over DUT responses, SISR/MISR baselines, the aliasing
and compaction-rate formulas, and the fault-sweep aliasing experiment.

Response packing: the response bits are packed MSB-first into octets
(zero-padded in the low bits of the last octet) and the true bit length
is appended as an 8-octet big-endian trailer before hashing.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .faultsim import Fault, ResponseStream, enumerate_faults, sweep_faults
from .kmac import DEFAULT_DIGEST_BITS, DeviceKey, Signature, check_digest_bits
from .kmac.batch import kmac128_batch, sponge_batch
from .kmac.keccak import Sponge
from .kmac.xof import RATE_128, SHAKE_SUFFIX, _key_bytes
from .netlist import Netlist

SIGN_MODES = ("kmac", "prefix")

# Connection-polynomial taps of a primitive polynomial per degree.
PRIMITIVE_TAPS: dict[int, tuple[int, ...]] = {
    1: (1,), 2: (2, 1), 3: (3, 2), 4: (4, 3), 5: (5, 3), 6: (6, 5), 7: (7, 6),
    8: (8, 6, 5, 4), 9: (9, 5), 10: (10, 7), 11: (11, 9), 12: (12, 6, 4, 1),
    13: (13, 4, 3, 1), 14: (14, 5, 3, 1), 15: (15, 14), 16: (16, 15, 13, 4),
    17: (17, 14), 18: (18, 11), 19: (19, 6, 2, 1), 20: (20, 17), 21: (21, 19),
    22: (22, 21), 23: (23, 18), 24: (24, 23, 22, 17), 25: (25, 22), 26: (26, 6, 2, 1),
    27: (27, 5, 2, 1), 28: (28, 25), 29: (29, 27), 30: (30, 6, 4, 1), 31: (31, 28),
    32: (32, 22, 2, 1),
}


class DomainError(ValueError):
    """Formula evaluated outside its validity domain."""


# -- KMAC signatures ---------------------------------------------------------

def response_message(response: ResponseStream) -> bytes:
    return response.data + response.bit_length.to_bytes(8, "big")


def sign_responses(key: DeviceKey, responses: Sequence[ResponseStream],
                   d: int = DEFAULT_DIGEST_BITS, customization: bytes = b"",
                   mode: str = "kmac") -> list[Signature]:
    check_digest_bits(d)
    messages = [response_message(r) for r in responses]
    if mode == "kmac":
        return kmac128_batch(key, messages, d, customization)
    if mode == "prefix":
        kb = _key_bytes(key)
        out = sponge_batch(Sponge(RATE_128, SHAKE_SUFFIX), [kb + m for m in messages], d // 8)
        return [Signature(x) for x in out]
    raise ValueError(f"unknown signature mode {mode!r}; expected one of {SIGN_MODES}")


def sign_response(key: DeviceKey, response: ResponseStream, d: int = DEFAULT_DIGEST_BITS,
                  customization: bytes = b"", mode: str = "kmac") -> Signature:
    return sign_responses(key, [response], d, customization, mode)[0]


# -- signature registers -----------------------------------------------------

def _feedback_poly(width: int, taps: Sequence[int] | None) -> int:
    """Low ``width`` coefficients of the characteristic polynomial."""
    if width < 1:
        raise ValueError("register width must be at least 1")
    taps = tuple(taps) if taps is not None else PRIMITIVE_TAPS[width]
    if max(taps) != width:
        raise ValueError(f"taps {taps} do not describe a degree-{width} polynomial")
    poly = 1
    for t in taps:
        if t != width:
            poly |= 1 << t
    return poly


@dataclass
class SisrState:
    """Serial-input signature register (internal-XOR polynomial divider).

    The register holds the remainder of the bits shifted in so far, read
    as a polynomial with the first bit at the highest degree, modulo the
    characteristic polynomial ``x**width + sum(x**t for t in taps if t < width) + 1``.
    """

    width: int
    taps: tuple[int, ...] | None = None
    register: int = 0
    _poly: int = field(init=False, repr=False)

    def __post_init__(self):
        self._poly = _feedback_poly(self.width, self.taps)
        if self.taps is None:
            self.taps = PRIMITIVE_TAPS[self.width]


def _shift(reg: int, width: int, poly: int, bit: int) -> int:
    top = reg >> (width - 1)
    reg = ((reg << 1) & ((1 << width) - 1)) | bit
    return reg ^ poly if top else reg


def sisr_compact(state: SisrState, response: Sequence[int]) -> int:
    reg, w, poly = state.register, state.width, state._poly
    for b in response:
        reg = _shift(reg, w, poly, b & 1)
    state.register = reg
    return reg


def fold_slice(bits: Sequence[int], width: int) -> int:
    """Map an output vector onto ``width`` MISR inputs.

    Narrow vectors are zero-padded on the high side; wide vectors are
    XOR-folded so that output ``j`` lands on column ``j % width``.
    """
    v = 0
    for j, b in enumerate(bits):
        v ^= (b & 1) << (j % width)
    return v


def misr_compact(width: int, taps: Sequence[int] | None,
                 response_matrix: Sequence[Sequence[int] | int]) -> int:
    """Multiple-input signature register over pattern-major output slices.

    Each cycle shifts the register (with feedback, no serial input) and
    XORs the slice in. Slices may be bit sequences or ready-made integers.
    """
    poly = _feedback_poly(width, taps)
    reg = 0
    for s in response_matrix:
        word = s if isinstance(s, int) else fold_slice(s, width)
        reg = _shift(reg, width, poly, 0) ^ word
    return reg


# -- metric formulas ---------------------------------------------------------

def pa_sr(n: int, L: int) -> Fraction:
    """Aliasing probability of an n-bit SISR/MISR over L response bits."""
    if L <= n:
        raise DomainError(f"L={L} <= n={n}: invalid signature, the response is revealed")
    return Fraction(2 ** (L - n) - 1, 2 ** L - 1)


def cr_sr(n: int, L: int) -> Fraction:
    if L <= n:
        raise DomainError(f"L={L} <= n={n}: invalid signature, the response is revealed")
    return 1 - Fraction(n, L)


def sr_signature_valid(n: int, L: int) -> bool:
    return L > n


def pa_kmac(d: int) -> Fraction | float:
    """Aliasing probability of a d-bit KMAC signature, 2**(-d/2)."""
    if d < 1:
        raise ValueError("digest size must be positive")
    if d % 2:
        return 2.0 ** (-d / 2)
    return Fraction(1, 2 ** (d // 2))


def cr_kmac(d: int, L: int) -> Fraction:
    """Compaction rate 1 - d/L; negative whenever L < d."""
    if L <= 0:
        raise DomainError("response length must be positive")
    return 1 - Fraction(d, L)


# -- fault sweep and aliasing ------------------------------------------------

@dataclass
class ResponseClass:
    """Faults sharing one faulty response, and that response's signature."""

    fault_ids: list[str]
    signature: Signature
    response: ResponseStream | None = None


@dataclass
class SignatureSweep:
    golden: ResponseStream
    golden_signature: Signature
    faults: list[Fault]
    detected: list[bool]
    classes: list[ResponseClass]

    @property
    def detected_count(self) -> int:
        return sum(self.detected)


def signature_sweep(netlist: Netlist, patterns: Sequence[Sequence[int]], key: DeviceKey,
                    d: int = DEFAULT_DIGEST_BITS, *, customization: bytes = b"",
                    mode: str = "kmac", jobs: int = 1, keep_responses: bool = False,
                    ) -> SignatureSweep:
    """Simulate every fault, group detected faults by faulty response, sign each group."""
    check_digest_bits(d)
    faults = enumerate_faults(netlist)
    good, faulty = sweep_faults(netlist, patterns, faults, jobs=jobs)
    P = len(patterns)
    groups: dict[tuple[int, ...], list[str]] = {}
    detected = []
    for f, words in zip(faults, faulty):
        hit = words != good
        detected.append(hit)
        if hit:
            groups.setdefault(words, []).append(f.id)
    golden = ResponseStream.from_po_words(good, P)
    streams = [golden] + [ResponseStream.from_po_words(w, P) for w in groups]
    sigs = sign_responses(key, streams, d, customization, mode)
    classes = [ResponseClass(ids, sig, stream if keep_responses else None)
               for ids, sig, stream in zip(groups.values(), sigs[1:], streams[1:])]
    return SignatureSweep(golden, sigs[0], faults, detected, classes)


@dataclass(frozen=True)
class AliasingReport:
    circuit: str
    po_count: int
    pattern_count: int
    response_length_bits: int
    compaction_rate: float
    faults_total: int
    faults_detected: int
    aliased_fault_ids: tuple[str, ...]

    @property
    def aliasing_rate(self) -> float:
        if self.faults_detected == 0:
            return 0.0
        return len(self.aliased_fault_ids) / self.faults_detected

    def csv_row(self) -> list[str]:
        return [self.circuit, str(self.po_count), str(self.pattern_count),
                str(self.response_length_bits), f"{100 * self.compaction_rate:.2f}",
                f"{100 * self.aliasing_rate:.2f}"]


CSV_COLUMNS = ("circuit", "po_count", "pattern_count", "response_bits",
               "compaction_rate_pct", "aliasing_rate_pct")


def aliasing_analysis(netlist: Netlist, patterns: Sequence[Sequence[int]], key: DeviceKey,
                      d: int = DEFAULT_DIGEST_BITS, *, jobs: int = 1, mode: str = "kmac",
                      ) -> AliasingReport:
    """Full stuck-at sweep; a detected fault aliases if it signs like the golden response."""
    if not patterns:
        raise ValueError("aliasing analysis needs at least one pattern")
    sweep = signature_sweep(netlist, patterns, key, d, mode=mode, jobs=jobs)
    aliased = tuple(fid for c in sweep.classes if c.signature == sweep.golden_signature
                    for fid in c.fault_ids)
    L = sweep.golden.bit_length
    return AliasingReport(
        circuit=netlist.name,
        po_count=len(netlist.outputs),
        pattern_count=len(patterns),
        response_length_bits=L,
        compaction_rate=float(cr_kmac(d, L)),
        faults_total=len(sweep.faults),
        faults_detected=sweep.detected_count,
        aliased_fault_ids=aliased,
    )


def format_table(reports: Sequence[AliasingReport]) -> str:
    """Aligned text table: circuit, POs, patterns, L, CR%, aliasing%."""
    head = ("circuit", "POs", "#patterns", "L [bit]", "CR [%]", "aliasing [%]", "faults", "detected")
    rows = [(r.circuit, r.po_count, r.pattern_count, r.response_length_bits,
             f"{100 * r.compaction_rate:.2f}", f"{100 * r.aliasing_rate:.2f}",
             r.faults_total, r.faults_detected) for r in reports]
    cells = [tuple(str(c) for c in head)] + [tuple(str(c) for c in row) for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(head))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
