"""Parsing and validation of ISCAS-85 ``.bench`` netlists.

A :class:`Netlist` is an immutable, levelized, combinational gate graph.
Primary input and output declaration order is preserved exactly; it fixes
the bit order of test patterns and of output responses downstream.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

GATE_KINDS = ("AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT", "BUF")
_ALIASES = {"BUFF": "BUF", "INV": "NOT"}

_INPUT_RE = re.compile(r"^INPUT\s*\(\s*([^()\s]+)\s*\)$", re.IGNORECASE)
_OUTPUT_RE = re.compile(r"^OUTPUT\s*\(\s*([^()\s]+)\s*\)$", re.IGNORECASE)
_GATE_RE = re.compile(r"^([^=\s]+)\s*=\s*([A-Za-z_]\w*)\s*\(([^()]*)\)$")


class NetlistError(ValueError):
    """Base class for netlist parse and validation failures."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BenchSyntaxError(NetlistError):
    pass


class UnknownGateError(NetlistError):
    pass


class DuplicateDriverError(NetlistError):
    pass


class UndefinedNetError(NetlistError):
    pass


class CycleError(NetlistError):
    def __init__(self, net: str):
        self.net = net
        super().__init__(f"combinational cycle through net {net!r}")


@dataclass(frozen=True)
class Gate:
    output: str
    kind: str
    inputs: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise UnknownGateError(f"unknown gate kind {self.kind!r}")
        if self.kind in ("NOT", "BUF"):
            if len(self.inputs) != 1:
                raise NetlistError(f"{self.kind} gate {self.output!r} needs exactly 1 input")
        elif len(self.inputs) < 2:
            raise NetlistError(f"{self.kind} gate {self.output!r} needs at least 2 inputs")


@dataclass(frozen=True)
class Netlist:
    """Levelized combinational netlist.

    ``gates`` keeps source order; ``level_order`` holds indices into
    ``gates`` such that every gate comes after the gates driving it.
    """

    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    gates: tuple[Gate, ...]
    level_order: tuple[int, ...] = field(default=(), compare=False)

    @property
    def ordered_gates(self) -> list[Gate]:
        return [self.gates[i] for i in self.level_order]

    @cached_property
    def driver(self) -> dict[str, int]:
        """Map from gate-output net to the index of its gate."""
        return {g.output: i for i, g in enumerate(self.gates)}

    @cached_property
    def nets(self) -> tuple[str, ...]:
        """Every net: primary inputs first, then gate outputs in level order."""
        return self.inputs + tuple(self.gates[i].output for i in self.level_order)

    @cached_property
    def net_index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.nets)}

    @cached_property
    def depth(self) -> dict[str, int]:
        """Logic depth per net (primary inputs are depth 0)."""
        d = {n: 0 for n in self.inputs}
        for g in self.ordered_gates:
            d[g.output] = 1 + max(d[i] for i in g.inputs)
        return d

    def gate_for(self, net: str) -> Gate:
        return self.gates[self.driver[net]]

    def __str__(self):
        return (f"{self.name}: {len(self.inputs)} inputs, {len(self.outputs)} outputs, "
                f"{len(self.gates)} gates")


def _split_args(text: str) -> list[str]:
    return [a.strip() for a in text.split(",")]


def parse_bench(text: str, name: str = "netlist") -> Netlist:
    """Parse ``.bench`` text into a validated, levelized :class:`Netlist`."""
    inputs: list[str] = []
    outputs: list[tuple[str, int]] = []
    gates: list[Gate] = []
    drivers: dict[str, int] = {}  # net -> line of its definition

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _INPUT_RE.match(line):
            net = m.group(1)
            if net in drivers:
                raise DuplicateDriverError(
                    f"net {net!r} already driven (line {drivers[net]})", lineno)
            drivers[net] = lineno
            inputs.append(net)
        elif m := _OUTPUT_RE.match(line):
            outputs.append((m.group(1), lineno))
        elif m := _GATE_RE.match(line):
            out, kind, args = m.group(1), m.group(2).upper(), m.group(3)
            kind = _ALIASES.get(kind, kind)
            if kind not in GATE_KINDS:
                raise UnknownGateError(f"unknown gate kind {m.group(2)!r}", lineno)
            pins = _split_args(args)
            if any(not p or re.search(r"\s", p) for p in pins):
                raise BenchSyntaxError(f"malformed argument list {args!r}", lineno)
            if out in drivers:
                raise DuplicateDriverError(
                    f"net {out!r} already driven (line {drivers[out]})", lineno)
            drivers[out] = lineno
            try:
                gates.append(Gate(out, kind, tuple(pins)))
            except NetlistError as exc:
                raise NetlistError(str(exc), lineno) from None
        else:
            raise BenchSyntaxError(f"cannot parse {line!r}", lineno)

    gate_lines = {g.output: drivers[g.output] for g in gates}
    for g in gates:
        for net in g.inputs:
            if net not in drivers:
                raise UndefinedNetError(f"undefined net {net!r}", gate_lines[g.output])
    for net, lineno in outputs:
        if net not in drivers:
            raise UndefinedNetError(f"undefined net {net!r}", lineno)

    netlist = Netlist(name, tuple(inputs), tuple(n for n, _ in outputs), tuple(gates))
    return levelize(netlist)


def levelize(netlist: Netlist) -> Netlist:
    """Return ``netlist`` with ``level_order`` populated.

    Gates are sorted by logic depth; gates at equal depth keep their source
    order. Raises :class:`CycleError` naming one net on a cycle.
    """
    gates = netlist.gates
    driver = {g.output: i for i, g in enumerate(gates)}
    depth: dict[str, int] = {n: 0 for n in netlist.inputs}
    pending = [sum(1 for n in g.inputs if n in driver) for g in gates]
    fanout: dict[str, list[int]] = {}
    for i, g in enumerate(gates):
        for n in g.inputs:
            if n in driver:
                fanout.setdefault(n, []).append(i)

    ready = [i for i, p in enumerate(pending) if p == 0]
    done = 0
    while ready:
        nxt = []
        for i in ready:
            g = gates[i]
            depth[g.output] = 1 + max(depth[n] for n in g.inputs)
            done += 1
            for j in fanout.get(g.output, ()):
                pending[j] -= 1
                if pending[j] == 0:
                    nxt.append(j)
        ready = nxt

    if done < len(gates):
        raise CycleError(_find_cycle_net(gates, driver, depth))

    order = sorted(range(len(gates)), key=lambda i: (depth[gates[i].output], i))
    return replace(netlist, level_order=tuple(order))


def _find_cycle_net(gates, driver, resolved) -> str:
    # walk backwards through unresolved drivers until a net repeats
    net = next(g.output for g in gates if g.output not in resolved)
    seen = set()
    while net not in seen:
        seen.add(net)
        g = gates[driver[net]]
        net = next(n for n in g.inputs if n in driver and n not in resolved)
    return net


def to_bench(netlist: Netlist) -> str:
    """Serialize back to ``.bench`` text (gates in source order)."""
    lines = [f"# {netlist.name}"]
    lines += [f"INPUT({n})" for n in netlist.inputs]
    lines += [f"OUTPUT({n})" for n in netlist.outputs]
    lines += [f"{g.output} = {g.kind}({', '.join(g.inputs)})" for g in netlist.gates]
    return "\n".join(lines) + "\n"


def load_bench(path: str | Path) -> Netlist:
    path = Path(path)
    return parse_bench(path.read_text(), name=path.stem)
