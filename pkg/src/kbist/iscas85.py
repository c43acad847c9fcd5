"""Bundled ISCAS-85 benchmark netlists and reference figures.

``REFERENCE`` rows are (primary outputs, test patterns, response length
in bits, compaction rate in percent) for a 256-bit KMAC128 signature.
Pattern counts came from an external ATPG run and are used here only to
size LFSR pattern sets so that response lengths match.
"""

from __future__ import annotations

from importlib import resources
from typing import NamedTuple

from .netlist import Netlist, parse_bench


class ReferenceRow(NamedTuple):
    po_count: int
    pattern_count: int
    response_bits: int
    compaction_rate_pct: float


REFERENCE: dict[str, ReferenceRow] = {
    "c17": ReferenceRow(2, 7, 14, -1728.57),
    "c432": ReferenceRow(7, 63, 441, 41.95),
    "c499": ReferenceRow(32, 55, 1760, 85.45),
    "c880": ReferenceRow(26, 148, 3848, 93.35),
    "c1355": ReferenceRow(32, 100, 3200, 92.00),
    "c1908": ReferenceRow(25, 128, 3200, 92.00),
    "c2670": ReferenceRow(140, 444, 62160, 99.59),
    "c3540": ReferenceRow(22, 264, 5808, 95.59),
    "c5315": ReferenceRow(123, 599, 73677, 99.65),
    "c6288": ReferenceRow(32, 33, 1056, 75.76),
    "c7552": ReferenceRow(108, 455, 49140, 99.48),
}

CIRCUITS = tuple(REFERENCE)


def bench_text(name: str) -> str:
    if name not in REFERENCE:
        raise KeyError(f"no bundled circuit {name!r}; choose from {', '.join(CIRCUITS)}")
    return resources.files("kbist").joinpath(f"data/iscas85/{name}.bench").read_text()


def load(name: str) -> Netlist:
    """Parse one bundled circuit, e.g. ``load("c432")``."""
    return parse_bench(bench_text(name), name=name)
