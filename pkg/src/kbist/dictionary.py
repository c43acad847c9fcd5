"""Golden references and device-specific fault dictionaries.

A dictionary maps each test session (DUT, seed, pattern count, digest
size) to the signature of the fault-free response plus one signature per
class of detected faults that share a faulty response. Raw responses are
not kept unless explicitly requested for debugging.
"""

from __future__ import annotations

import enum
import hashlib
import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from .faultsim import ResponseStream, simulate_batch
from .kmac import DEFAULT_DIGEST_BITS, DeviceKey, Signature, check_digest_bits
from .netlist import Netlist
from .ora import sign_responses, signature_sweep
from .tpg import DEFAULT_TAPS, patterns_for_seed

FORMAT_VERSION = 1
GOLDEN = "GOLDEN"
MAX_SEED = (1 << 32) - 1


class DictionaryError(ValueError):
    pass


class DictionaryFormatError(DictionaryError):
    pass


class DictionaryVersionError(DictionaryFormatError):
    pass


class DictionaryChecksumError(DictionaryFormatError):
    pass


class SignatureCollisionError(DictionaryError):
    """Two distinct responses of one session signed identically."""


class UnknownSessionError(DictionaryError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


@dataclass(frozen=True, order=True)
class DictionaryKey:
    dut_id: str
    seed: int
    pattern_count: int
    digest_bits: int


@dataclass(frozen=True)
class DictionaryEntry:
    key: DictionaryKey
    fault_ids: tuple[str, ...]
    signature: Signature
    response_length_bits: int
    response: ResponseStream | None = field(default=None, compare=False, repr=False)

    @property
    def is_golden(self) -> bool:
        return self.fault_ids == (GOLDEN,)


class Verdict(enum.IntEnum):
    FAULT_FREE = 0
    FAULT = 1
    INVALID_SIGNATURE = 2


@dataclass(frozen=True)
class Diagnosis:
    verdict: Verdict
    fault_ids: tuple[str, ...] = ()

    def __str__(self):
        if self.verdict is Verdict.FAULT:
            return "FAULT(" + ", ".join(self.fault_ids) + ")"
        return self.verdict.name


@dataclass(frozen=True)
class FaultDictionary:
    dut_id: str
    digest_bits: int
    lfsr_taps: tuple[int, ...]
    po_count: int
    entries: tuple[DictionaryEntry, ...]

    def __post_init__(self):
        index: dict[DictionaryKey, dict[bytes, DictionaryEntry]] = {}
        for e in self.entries:
            if e.key.dut_id != self.dut_id:
                raise DictionaryError(f"entry for DUT {e.key.dut_id!r} in dictionary of {self.dut_id!r}")
            by_sig = index.setdefault(e.key, {})
            if e.signature.digest in by_sig:
                other = by_sig[e.signature.digest]
                raise SignatureCollisionError(
                    f"session {e.key}: {other.fault_ids} and {e.fault_ids} share signature {e.signature}")
            by_sig[e.signature.digest] = e
        for k, by_sig in index.items():
            goldens = sum(e.is_golden for e in by_sig.values())
            if goldens != 1:
                raise DictionaryError(f"session {k} has {goldens} golden entries, expected 1")
        object.__setattr__(self, "_index", index)

    @property
    def sessions(self) -> list[DictionaryKey]:
        return sorted(self._index)

    def session(self, seed: int, pattern_count: int | None = None) -> DictionaryKey:
        """Find the session for ``seed``; ambiguous without ``pattern_count``."""
        hits = [k for k in self._index if k.seed == seed
                and (pattern_count is None or k.pattern_count == pattern_count)]
        if not hits:
            raise UnknownSessionError(f"seed {seed:#010x} not in dictionary for {self.dut_id}")
        if len(hits) > 1:
            raise DictionaryError(f"seed {seed:#010x} used with several pattern counts; give one")
        return hits[0]

    def golden(self, key: DictionaryKey) -> DictionaryEntry:
        return next(e for e in self._entries_for(key).values() if e.is_golden)

    def _entries_for(self, key: DictionaryKey) -> dict[bytes, DictionaryEntry]:
        try:
            return self._index[key]
        except KeyError:
            raise UnknownSessionError(f"no dictionary session {key}") from None

    @cached_property
    def fault_classes(self) -> dict[DictionaryKey, list[tuple[str, ...]]]:
        return {k: [e.fault_ids for e in v.values() if not e.is_golden] for k, v in self._index.items()}


def lookup(dictionary: FaultDictionary, key: DictionaryKey, observed: Signature) -> Diagnosis:
    entry = dictionary._entries_for(key).get(observed.digest)
    if entry is None:
        return Diagnosis(Verdict.INVALID_SIGNATURE)
    if entry.is_golden:
        return Diagnosis(Verdict.FAULT_FREE)
    return Diagnosis(Verdict.FAULT, entry.fault_ids)


# -- construction ------------------------------------------------------------

def _check_seeds(seeds: Sequence[int]) -> None:
    if not seeds:
        raise DictionaryError("seed list is empty")
    seen = set()
    for s in seeds:
        if s == 0:
            raise DictionaryError("seed 0 locks the LFSR up")
        if not 0 < s <= MAX_SEED:
            raise DictionaryError(f"seed {s:#x} is not a 32-bit value")
        if s in seen:
            raise DictionaryError(f"duplicate seed {s:#010x}")
        seen.add(s)


def build_golden(netlist: Netlist, seeds: Sequence[int], pattern_count: int, key: DeviceKey,
                 d: int = DEFAULT_DIGEST_BITS, *, dut_id: str | None = None,
                 taps: Sequence[int] = DEFAULT_TAPS) -> list[DictionaryEntry]:
    """One golden entry per seed."""
    check_digest_bits(d)
    _check_seeds(seeds)
    dut_id = dut_id or netlist.name
    width = len(netlist.inputs)
    responses = [simulate_batch(netlist, patterns_for_seed(s, width, pattern_count, taps))
                 for s in seeds]
    sigs = sign_responses(key, responses, d)
    return [DictionaryEntry(DictionaryKey(dut_id, s, pattern_count, d), (GOLDEN,), sig, r.bit_length)
            for s, r, sig in zip(seeds, responses, sigs)]


def build_fault_dictionary(netlist: Netlist, seeds: Sequence[int], pattern_count: int,
                           key: DeviceKey, d: int = DEFAULT_DIGEST_BITS, *,
                           dut_id: str | None = None, taps: Sequence[int] = DEFAULT_TAPS,
                           jobs: int = 1, keep_responses: bool = False) -> FaultDictionary:
    """Golden entry plus one entry per class of detected faults, for every seed.

    Raises :class:`SignatureCollisionError` if two different responses of
    one session end up with the same signature.
    """
    check_digest_bits(d)
    _check_seeds(seeds)
    dut_id = dut_id or netlist.name
    width = len(netlist.inputs)
    entries: list[DictionaryEntry] = []
    for s in seeds:
        k = DictionaryKey(dut_id, s, pattern_count, d)
        patterns = patterns_for_seed(s, width, pattern_count, taps)
        sweep = signature_sweep(netlist, patterns, key, d, jobs=jobs, keep_responses=keep_responses)
        L = sweep.golden.bit_length
        entries.append(DictionaryEntry(k, (GOLDEN,), sweep.golden_signature, L,
                                       sweep.golden if keep_responses else None))
        for c in sweep.classes:
            entries.append(DictionaryEntry(k, tuple(c.fault_ids), c.signature, L, c.response))
    return FaultDictionary(dut_id, d, tuple(taps), len(netlist.outputs), tuple(entries))


# -- persistence -------------------------------------------------------------

def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def dictionary_to_json(dictionary: FaultDictionary, *, include_responses: bool = False) -> str:
    entries = []
    for e in dictionary.entries:
        item = {"seed": e.key.seed, "pattern_count": e.key.pattern_count,
                "fault_ids": list(e.fault_ids), "signature_hex": e.signature.hex(),
                "response_bits": e.response_length_bits}
        if include_responses and e.response is not None:
            item["response_hex"] = e.response.data.hex()
        entries.append(item)
    body = {
        "header": {"format_version": FORMAT_VERSION, "dut_id": dictionary.dut_id,
                   "digest_bits": dictionary.digest_bits, "lfsr_taps": list(dictionary.lfsr_taps),
                   "po_count": dictionary.po_count},
        "entries": entries,
    }
    body["checksum"] = "sha256:" + hashlib.sha256(_canonical(body)).hexdigest()
    return json.dumps(body, indent=1) + "\n"


def save_dictionary(dictionary: FaultDictionary, path: str | Path, *,
                    include_responses: bool = False) -> None:
    Path(path).write_text(dictionary_to_json(dictionary, include_responses=include_responses))


def dictionary_from_json(text: str) -> FaultDictionary:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        # a cut-off file is the usual cause; it cannot carry a valid checksum
        raise DictionaryChecksumError(f"dictionary is not complete JSON ({exc.msg})") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("header"), dict):
        raise DictionaryFormatError("dictionary has no header")
    version = doc["header"].get("format_version")
    if version != FORMAT_VERSION:
        raise DictionaryVersionError(f"unsupported dictionary format version {version!r}")
    stored = doc.pop("checksum", None)
    expect = "sha256:" + hashlib.sha256(_canonical(doc)).hexdigest()
    if stored != expect:
        raise DictionaryChecksumError("dictionary checksum mismatch")
    h = doc["header"]
    try:
        dut_id, d, po = h["dut_id"], h["digest_bits"], h["po_count"]
        entries = []
        for item in doc["entries"]:
            k = DictionaryKey(dut_id, int(item["seed"]), int(item["pattern_count"]), d)
            L = int(item["response_bits"])
            resp = None
            if "response_hex" in item:
                resp = ResponseStream(bytes.fromhex(item["response_hex"]), L,
                                      k.pattern_count, po)
            entries.append(DictionaryEntry(k, tuple(item["fault_ids"]),
                                           Signature.fromhex(item["signature_hex"]), L, resp))
        return FaultDictionary(dut_id, d, tuple(h["lfsr_taps"]), po, tuple(entries))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DictionaryError):
            raise
        raise DictionaryFormatError(f"malformed dictionary: {exc!r}") from None


def load_dictionary(path: str | Path) -> FaultDictionary:
    return dictionary_from_json(Path(path).read_text())


def merge_dictionaries(parts: Iterable[FaultDictionary]) -> FaultDictionary:
    """Combine dictionaries of one DUT built for different sessions."""
    parts = list(parts)
    if not parts:
        raise DictionaryError("nothing to merge")
    first = parts[0]
    for p in parts[1:]:
        if (p.dut_id, p.digest_bits, p.lfsr_taps, p.po_count) != \
                (first.dut_id, first.digest_bits, first.lfsr_taps, first.po_count):
            raise DictionaryError("dictionaries describe different DUTs or configurations")
    return FaultDictionary(first.dut_id, first.digest_bits, first.lfsr_taps, first.po_count,
                           tuple(e for p in parts for e in p.entries))
