"""On-chip test flow: the CPU-side orchestration of a self-test session.

A session initialises the MAC with the device key, expands the seed into
patterns, runs the DUT, signs the response and compares the signature
against the locally stored dictionary.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from . import iscas85
from .dictionary import Diagnosis, DictionaryError, FaultDictionary, load_dictionary, lookup
from .faultsim import Fault, parse_fault, simulate_batch, simulate_faulty
from .kmac import DEFAULT_DIGEST_BITS, DeviceKey, Signature, check_digest_bits, load_key
from .netlist import Netlist, load_bench
from .ora import sign_response
from .tpg import DEFAULT_TAPS, patterns_for_seed


class TestFlowError(ValueError):
    pass


class UnknownDutError(TestFlowError):
    pass


@dataclass
class SocConfig:
    """DUTs of one SoC, its device key and the locally stored dictionaries.

    ``injected`` maps a DUT id to a stuck-at fault (object or id) that the
    simulated device carries, to emulate a defective part.
    """

    duts: dict[str, Netlist]
    key: DeviceKey
    digest_bits: int = DEFAULT_DIGEST_BITS
    lfsr_taps: tuple[int, ...] = DEFAULT_TAPS
    dictionaries: dict[str, FaultDictionary] = field(default_factory=dict)
    injected: dict[str, Fault] = field(default_factory=dict)

    def __post_init__(self):
        check_digest_bits(self.digest_bits)
        self.lfsr_taps = tuple(self.lfsr_taps)
        for dut_id, d in self.dictionaries.items():
            if dut_id not in self.duts or d.dut_id != dut_id:
                raise TestFlowError(f"dictionary for {d.dut_id!r} has no matching DUT")
        self.injected = {k: self._as_fault(k, f) for k, f in self.injected.items()}

    def _as_fault(self, dut_id: str, fault: Fault | str) -> Fault:
        net = self.netlist(dut_id)
        return parse_fault(net, fault) if isinstance(fault, str) else fault

    def netlist(self, dut_id: str) -> Netlist:
        try:
            return self.duts[dut_id]
        except KeyError:
            raise UnknownDutError(f"unknown DUT {dut_id!r}") from None

    def inject(self, dut_id: str, fault: Fault | str | None) -> None:
        if fault is None:
            self.injected.pop(dut_id, None)
        else:
            self.injected[dut_id] = self._as_fault(dut_id, fault)


def dut_signature(soc: SocConfig, dut_id: str, seed: int, pattern_count: int,
                  digest_bits: int | None = None) -> Signature:
    """Generate patterns, run the (possibly faulty) DUT, sign the response."""
    net = soc.netlist(dut_id)
    d = check_digest_bits(digest_bits or soc.digest_bits)
    patterns = patterns_for_seed(seed, len(net.inputs), pattern_count, soc.lfsr_taps)
    fault = soc.injected.get(dut_id)
    response = simulate_faulty(net, fault, patterns) if fault else simulate_batch(net, patterns)
    return sign_response(soc.key, response, d)


@dataclass(frozen=True)
class TestVerdict:
    dut_id: str
    seed: int
    diagnosis: Diagnosis | None
    signature: Signature | None
    duration: float
    skipped: bool = False
    note: str = ""

    def __str__(self):
        if self.skipped:
            return f"{self.dut_id} seed={self.seed:#010x} SKIPPED ({self.note})"
        return f"{self.dut_id} seed={self.seed:#010x} {self.diagnosis} [{self.duration * 1e3:.1f} ms]"


def run_onchip_test(soc: SocConfig, dut_id: str, seed: int,
                    pattern_count: int | None = None) -> TestVerdict:
    soc.netlist(dut_id)
    local = soc.dictionaries.get(dut_id)
    if local is None:
        raise TestFlowError(f"no local dictionary for DUT {dut_id!r}")
    session = local.session(seed, pattern_count)
    if session.digest_bits != soc.digest_bits:
        raise TestFlowError(f"dictionary uses d={session.digest_bits}, SoC uses {soc.digest_bits}")
    if local.lfsr_taps != soc.lfsr_taps:
        raise TestFlowError(f"dictionary LFSR taps {local.lfsr_taps} differ from SoC taps {soc.lfsr_taps}")
    t0 = time.perf_counter()
    sig = dut_signature(soc, dut_id, seed, session.pattern_count, session.digest_bits)
    diag = lookup(local, session, sig)
    return TestVerdict(dut_id, seed, diag, sig, time.perf_counter() - t0)


class Availability(enum.Enum):
    IDLE = "idle"
    BUSY = "busy"


def _idle(value) -> bool:
    if isinstance(value, Availability):
        return value is Availability.IDLE
    return str(value).lower() == "idle"


def schedule_tests(soc: SocConfig, availability: Mapping[str, Availability | str],
                   queue: Sequence[tuple[str, int]]) -> list[TestVerdict]:
    """Run queued tests on idle DUTs, in queue order.

    A DUT absent from ``availability`` counts as busy. Tests that cannot
    run are returned as skipped verdicts instead of raising.
    """
    out = []
    for dut_id, seed in queue:
        if not _idle(availability.get(dut_id, Availability.BUSY)):
            out.append(TestVerdict(dut_id, seed, None, None, 0.0, True, "DUT busy"))
            continue
        try:
            out.append(run_onchip_test(soc, dut_id, seed))
        except (TestFlowError, DictionaryError) as exc:
            out.append(TestVerdict(dut_id, seed, None, None, 0.0, True, str(exc)))
    return out


# -- config file -------------------------------------------------------------

def _load_dut(ref: str, base: Path) -> Netlist:
    if ref.startswith("iscas85:"):
        return iscas85.load(ref.split(":", 1)[1])
    return load_bench(base / ref)


def load_soc_config(path: str | Path) -> SocConfig:
    """Read a SoC description.

    JSON object with ``duts`` (id to bench path, or ``iscas85:<name>``),
    ``key_file``, and optional ``digest_bits``, ``lfsr_taps``,
    ``dictionaries`` (id to dictionary path) and ``inject`` (id to fault id).
    Relative paths are resolved against the config file's directory.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise TestFlowError(f"cannot read SoC config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise TestFlowError(f"SoC config {path} is not valid JSON: {exc}") from None
    base = path.parent
    if not isinstance(doc.get("duts"), dict) or not doc["duts"]:
        raise TestFlowError(f"SoC config {path} lists no DUTs")
    duts = {dut_id: _load_dut(ref, base) for dut_id, ref in doc["duts"].items()}
    for dut_id, net in duts.items():
        if net.name != dut_id:
            duts[dut_id] = dataclasses.replace(net, name=dut_id)
    key_file = doc.get("key_file")
    key = load_key(base / key_file if key_file else None)
    dicts = {dut_id: load_dictionary(base / p) for dut_id, p in doc.get("dictionaries", {}).items()}
    return SocConfig(duts, key, doc.get("digest_bits", DEFAULT_DIGEST_BITS),
                     tuple(doc.get("lfsr_taps", DEFAULT_TAPS)), dicts, dict(doc.get("inject", {})))
