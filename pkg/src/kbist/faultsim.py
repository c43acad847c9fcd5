"""Good-circuit and single stuck-at fault simulation.

Two simulators live here. :func:`simulate` evaluates one pattern gate by
gate and is kept as the reference. The batch functions pack every pattern
of a set into one Python integer per net (bit ``i`` is pattern ``i``) and
evaluate all patterns with a single pass of bitwise operations. Faulty
circuits are simulated serially, one fault at a time, re-evaluating only
the fault's fanout cone and only where a value actually changed.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .netlist import Netlist

Pattern = Sequence[int]

_AND, _NAND, _OR, _NOR, _XOR, _XNOR, _NOT, _BUF = range(8)
_KIND_CODE = {"AND": _AND, "NAND": _NAND, "OR": _OR, "NOR": _NOR,
              "XOR": _XOR, "XNOR": _XNOR, "NOT": _NOT, "BUF": _BUF}

_FAULT_RE = re.compile(r"^(?P<site>.+?)(?:\.in(?P<pin>\d+))?@sa(?P<v>[01])$")


class FaultSimError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Fault:
    """A single stuck-at fault.

    ``site`` is a net name. For a pin fault ``pin`` is set and ``site``
    names the gate (by its output net) whose ``pin``-th input is stuck;
    the net feeding that pin keeps its value for every other reader.
    """

    site: str
    stuck_at: int
    pin: int | None = None

    @property
    def id(self) -> str:
        if self.pin is None:
            return f"{self.site}@sa{self.stuck_at}"
        return f"{self.site}.in{self.pin}@sa{self.stuck_at}"

    def __str__(self):
        return self.id


def parse_fault(netlist: Netlist, fault_id: str) -> Fault:
    """Resolve a canonical fault id against ``netlist``."""
    m = _FAULT_RE.match(fault_id)
    if m is None:
        raise FaultSimError(f"malformed fault id {fault_id!r}")
    site, v = m.group("site"), int(m.group("v"))
    pin = m.group("pin")
    nets = netlist.net_index
    if pin is None or f"{site}.in{pin}" in nets:
        net = site if pin is None else f"{site}.in{pin}"
        if net not in nets:
            raise FaultSimError(f"unknown fault {fault_id!r}: no net {net!r}")
        return Fault(net, v)
    if site not in netlist.driver:
        raise FaultSimError(f"unknown fault {fault_id!r}: no gate drives {site!r}")
    if int(pin) >= len(netlist.gate_for(site).inputs):
        raise FaultSimError(f"unknown fault {fault_id!r}: gate {site!r} has no pin {pin}")
    return Fault(site, v, int(pin))


def enumerate_faults(netlist: Netlist) -> list[Fault]:
    """Uncollapsed fault universe.

    Order: primary inputs in declaration order, then gates in level order;
    for each gate its input pins in pin order, then its output net.
    Within a site stuck-at-0 precedes stuck-at-1.
    """
    faults = []
    for net in netlist.inputs:
        faults += [Fault(net, 0), Fault(net, 1)]
    for g in netlist.ordered_gates:
        for k in range(len(g.inputs)):
            faults += [Fault(g.output, 0, k), Fault(g.output, 1, k)]
        faults += [Fault(g.output, 0), Fault(g.output, 1)]
    return faults


@dataclass(frozen=True)
class ResponseStream:
    """Concatenated primary-output vectors, pattern-major.

    Bit ``i * po_count + j`` is output ``j`` under pattern ``i``. Bits are
    stored packed most-significant-bit first; the final octet is padded
    with zeros in its low bits.
    """

    data: bytes
    bit_length: int
    pattern_count: int
    po_count: int

    def __post_init__(self):
        if self.bit_length != self.pattern_count * self.po_count:
            raise ValueError("bit_length must equal pattern_count * po_count")
        if len(self.data) != (self.bit_length + 7) // 8:
            raise ValueError("packed data length does not match bit_length")

    @property
    def bits(self) -> list[int]:
        arr = np.unpackbits(np.frombuffer(self.data, dtype=np.uint8))
        return arr[: self.bit_length].tolist()

    def bit(self, i: int) -> int:
        if not 0 <= i < self.bit_length:
            raise IndexError(i)
        return (self.data[i >> 3] >> (7 - (i & 7))) & 1

    def vectors(self) -> list[tuple[int, ...]]:
        bits = self.bits
        n = self.po_count
        return [tuple(bits[i * n:(i + 1) * n]) for i in range(self.pattern_count)]

    @classmethod
    def from_bits(cls, bits: Sequence[int], pattern_count: int, po_count: int) -> ResponseStream:
        data = np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes() if len(bits) else b""
        return cls(data, len(bits), pattern_count, po_count)

    @classmethod
    def from_po_words(cls, words: Sequence[int], pattern_count: int) -> ResponseStream:
        """Build from per-output words where bit ``i`` of a word is pattern ``i``."""
        po = len(words)
        if pattern_count == 0 or po == 0:
            return cls(b"", 0, pattern_count, po)
        nb = (pattern_count + 7) // 8
        buf = b"".join(w.to_bytes(nb, "little") for w in words)
        cols = np.unpackbits(np.frombuffer(buf, dtype=np.uint8).reshape(po, nb),
                             axis=1, bitorder="little")[:, :pattern_count]
        return cls(np.packbits(cols.T.reshape(-1)).tobytes(), po * pattern_count,
                   pattern_count, po)


@dataclass(frozen=True)
class CoverageReport:
    total_faults: int
    detected_faults: int
    undetected: tuple[str, ...]

    @property
    def coverage(self) -> float:
        return self.detected_faults / self.total_faults if self.total_faults else 0.0


# -- scalar reference -------------------------------------------------------

def _gate_value(kind: str, vals: list[int]) -> int:
    if kind == "AND":
        return int(all(vals))
    if kind == "NAND":
        return int(not all(vals))
    if kind == "OR":
        return int(any(vals))
    if kind == "NOR":
        return int(not any(vals))
    if kind == "XOR":
        return sum(vals) & 1
    if kind == "XNOR":
        return 1 - (sum(vals) & 1)
    if kind == "NOT":
        return 1 - vals[0]
    return vals[0]


def _check_pattern(netlist: Netlist, pattern: Pattern) -> tuple[int, ...]:
    if len(pattern) != len(netlist.inputs):
        raise FaultSimError(
            f"pattern width {len(pattern)} does not match {len(netlist.inputs)} inputs")
    bits = tuple(int(b) for b in pattern)
    if any(b not in (0, 1) for b in bits):
        raise FaultSimError(f"pattern contains non-binary values: {pattern!r}")
    return bits


def simulate(netlist: Netlist, pattern: Pattern, fault: Fault | None = None) -> tuple[int, ...]:
    """Evaluate one pattern gate by gate; the reference implementation."""
    bits = _check_pattern(netlist, pattern)
    values = dict(zip(netlist.inputs, bits))
    if fault is not None and fault.pin is None and fault.site in values:
        values[fault.site] = fault.stuck_at
    for g in netlist.ordered_gates:
        ins = [values[n] for n in g.inputs]
        if fault is not None and fault.site == g.output and fault.pin is not None:
            ins[fault.pin] = fault.stuck_at
        v = _gate_value(g.kind, ins)
        if fault is not None and fault.pin is None and fault.site == g.output:
            v = fault.stuck_at
        values[g.output] = v
    return tuple(values[n] for n in netlist.outputs)


# -- bit-parallel path ------------------------------------------------------

def _eval_word(kind: int, vals: list[int], mask: int) -> int:
    if kind == _NOT:
        return vals[0] ^ mask
    if kind == _BUF:
        return vals[0]
    r = vals[0]
    if kind <= _NAND:
        for v in vals[1:]:
            r &= v
        return r if kind == _AND else r ^ mask
    if kind <= _NOR:
        for v in vals[1:]:
            r |= v
        return r if kind == _OR else r ^ mask
    for v in vals[1:]:
        r ^= v
    return r if kind == _XOR else r ^ mask


class CompiledNetlist:
    """Integer-indexed form of a :class:`Netlist` for word-level simulation."""

    def __init__(self, netlist: Netlist):
        self.netlist = netlist
        idx = netlist.net_index
        self.n_nets = len(idx)
        self.n_inputs = len(netlist.inputs)
        self.ops = [(idx[g.output], _KIND_CODE[g.kind], tuple(idx[n] for n in g.inputs))
                    for g in netlist.ordered_gates]
        self.op_of_net = {out: p for p, (out, _, _) in enumerate(self.ops)}
        self.po = [idx[n] for n in netlist.outputs]
        self.readers: list[list[int]] = [[] for _ in range(self.n_nets)]
        for p, (_, _, ins) in enumerate(self.ops):
            for i in set(ins):
                self.readers[i].append(p)
        self._cones: dict[int, list[int]] = {}

    def pack(self, patterns: Sequence[Pattern]) -> tuple[list[int], int]:
        """Pack patterns into one word per primary input; returns (words, mask)."""
        rows = [_check_pattern(self.netlist, p) for p in patterns]
        n = len(rows)
        if n == 0:
            return [0] * self.n_inputs, 0
        arr = np.asarray(rows, dtype=np.uint8)
        packed = np.packbits(arr.T, axis=1, bitorder="little")
        return [int.from_bytes(row.tobytes(), "little") for row in packed], (1 << n) - 1

    def run(self, pi_words: Sequence[int], mask: int) -> list[int]:
        values = list(pi_words) + [0] * (self.n_nets - self.n_inputs)
        for out, kind, ins in self.ops:
            values[out] = _eval_word(kind, [values[i] for i in ins], mask)
        return values

    def cone(self, net: int) -> list[int]:
        """Positions of ops in the transitive fanout of ``net``, in level order."""
        c = self._cones.get(net)
        if c is None:
            seen: set[int] = set()
            stack = [net]
            while stack:
                for p in self.readers[stack.pop()]:
                    if p not in seen:
                        seen.add(p)
                        stack.append(self.ops[p][0])
            c = self._cones[net] = sorted(seen)
        return c

    def faulty_po(self, good: list[int], fault: Fault, mask: int) -> tuple[int, ...]:
        """Primary-output words with ``fault`` injected, given good values."""
        stuck = mask if fault.stuck_at else 0
        changed: dict[int, int] = {}
        idx = self.netlist.net_index
        if fault.pin is None:
            net = idx[fault.site]
            if good[net] == stuck:
                return tuple(good[i] for i in self.po)
            changed[net] = stuck
            cone = self.cone(net)
        else:
            net = idx[fault.site]
            p = self.op_of_net[net]
            _, kind, ins = self.ops[p]
            vals = [good[i] for i in ins]
            vals[fault.pin] = stuck
            v = _eval_word(kind, vals, mask)
            if v == good[net]:
                return tuple(good[i] for i in self.po)
            changed[net] = v
            cone = self.cone(net)
        ops = self.ops
        for p in cone:
            out, kind, ins = ops[p]
            for i in ins:
                if i in changed:
                    break
            else:
                continue
            v = _eval_word(kind, [changed.get(i, good[i]) for i in ins], mask)
            if v != good[out]:
                changed[out] = v
        return tuple(changed.get(i, good[i]) for i in self.po)


def simulate_words(netlist: Netlist, patterns: Sequence[Pattern]) -> tuple[CompiledNetlist, list[int], int]:
    """Good-circuit simulation returning (compiled netlist, net values, mask)."""
    comp = CompiledNetlist(netlist)
    words, mask = comp.pack(patterns)
    return comp, comp.run(words, mask), mask


def simulate_batch(netlist: Netlist, patterns: Sequence[Pattern]) -> ResponseStream:
    comp, good, _ = simulate_words(netlist, patterns)
    return ResponseStream.from_po_words([good[i] for i in comp.po], len(patterns))


def simulate_faulty(netlist: Netlist, fault: Fault | str, patterns: Sequence[Pattern]) -> ResponseStream:
    if isinstance(fault, str):
        fault = parse_fault(netlist, fault)
    else:
        parse_fault(netlist, fault.id)
    comp, good, mask = simulate_words(netlist, patterns)
    return ResponseStream.from_po_words(comp.faulty_po(good, fault, mask), len(patterns))


def _sweep_chunk(args):
    netlist, patterns, faults = args
    comp, good, mask = simulate_words(netlist, patterns)
    return [comp.faulty_po(good, f, mask) for f in faults]


def sweep_faults(netlist: Netlist, patterns: Sequence[Pattern],
                 faults: Sequence[Fault] | None = None, jobs: int = 1,
                 ) -> tuple[tuple[int, ...], list[tuple[int, ...]]]:
    """Simulate every fault; returns (good PO words, faulty PO words per fault).

    Results are in the order of ``faults`` (default: :func:`enumerate_faults`)
    whatever ``jobs`` is.
    """
    if faults is None:
        faults = enumerate_faults(netlist)
    comp, good, mask = simulate_words(netlist, patterns)
    good_po = tuple(good[i] for i in comp.po)
    if jobs <= 1 or len(faults) < 2:
        return good_po, [comp.faulty_po(good, f, mask) for f in faults]
    size = -(-len(faults) // (jobs * 4))
    chunks = [(netlist, list(patterns), faults[i:i + size]) for i in range(0, len(faults), size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = [r for part in pool.map(_sweep_chunk, chunks) for r in part]
    return good_po, results


def fault_coverage(netlist: Netlist, patterns: Sequence[Pattern], jobs: int = 1) -> CoverageReport:
    if not patterns:
        raise FaultSimError("fault coverage needs at least one pattern")
    faults = enumerate_faults(netlist)
    good, faulty = sweep_faults(netlist, patterns, faults, jobs=jobs)
    undetected = tuple(f.id for f, r in zip(faults, faulty) if r == good)
    return CoverageReport(len(faults), len(faults) - len(undetected), undetected)


def load_patterns(path: str | Path, width: int | None = None) -> list[tuple[int, ...]]:
    """Read a pattern file: one 0/1 string per line, ``#`` comments allowed."""
    patterns = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if set(line) - {"0", "1"}:
            raise FaultSimError(f"{path}:{lineno}: pattern must be a 0/1 string")
        if width is not None and len(line) != width:
            raise FaultSimError(f"{path}:{lineno}: expected width {width}, got {len(line)}")
        patterns.append(tuple(int(c) for c in line))
    return patterns


def pattern_strings(patterns: Iterable[Pattern]) -> list[str]:
    return ["".join(str(int(b)) for b in p) for p in patterns]
