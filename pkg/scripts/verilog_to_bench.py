#!/usr/bin/env python3
"""Convert the gate-level ISCAS-85 Verilog netlists shipped in the
``circuitgraph`` wheel into ``.bench`` files under ``src/kbist/data/iscas85``.

Usage::

    python scripts/verilog_to_bench.py circuitgraph-0.2.1-py3-none-any.whl

Only the subset of structural Verilog that appears in those files is
handled: one module, ``input``/``output``/``wire`` declarations, primitive
gate instances and ``assign`` of a net or a constant.
"""

import re
import sys
import zipfile
from pathlib import Path

CIRCUITS = ["c17", "c432", "c499", "c880", "c1355", "c1908",
            "c2670", "c3540", "c5315", "c6288", "c7552"]

PRIMS = {"and": "AND", "nand": "NAND", "or": "OR", "nor": "NOR",
         "xor": "XOR", "xnor": "XNOR", "not": "NOT", "buf": "BUFF"}

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "kbist" / "data" / "iscas85"


def _names(decl):
    return [n.strip() for n in decl.replace("\n", " ").split(",") if n.strip()]


def convert(name, text):
    text = re.sub(r"//.*", "", text)
    inputs = _names(re.search(r"\binput\s+([^;]*);", text).group(1))
    outputs = _names(re.search(r"\boutput\s+([^;]*);", text).group(1))
    lines = [f"# {name}", f"# {len(inputs)} inputs, {len(outputs)} outputs",
             "# converted from the circuitgraph gate-level Verilog netlist", ""]
    lines += [f"INPUT({n})" for n in inputs]
    lines.append("")
    lines += [f"OUTPUT({n})" for n in outputs]
    lines.append("")
    gates = 0
    for m in re.finditer(r"^\s*(\w+)\s+\w+\s*\(([^;]*)\)\s*;", text, re.M):
        prim = m.group(1)
        if prim in ("module", "input", "output", "wire"):
            continue
        pins = _names(m.group(2))
        lines.append(f"{pins[0]} = {PRIMS[prim]}({', '.join(pins[1:])})")
        gates += 1
    for m in re.finditer(r"^\s*assign\s+(\S+)\s*=\s*([^;]+);", text, re.M):
        lhs, rhs = m.group(1), m.group(2).strip()
        if rhs in ("1'b0", "1'b1"):
            # .bench has no constants: tie to x AND NOT x (or its complement)
            tie = f"{lhs}_tie"
            lines.append(f"{tie} = NOT({inputs[0]})")
            kind = "AND" if rhs == "1'b0" else "NAND"
            lines.append(f"{lhs} = {kind}({inputs[0]}, {tie})")
            gates += 2
        else:
            lines.append(f"{lhs} = BUFF({rhs})")
            gates += 1
    return "\n".join(lines) + "\n", len(inputs), len(outputs), gates


def main(argv):
    wheel = zipfile.ZipFile(argv[1])
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for name in CIRCUITS:
        src = wheel.read(f"circuitgraph/netlists/{name}.v").decode()
        bench, ni, no, ng = convert(name, src)
        (OUT_DIR / f"{name}.bench").write_text(bench)
        print(f"{name}: {ni} PI, {no} PO, {ng} gates")


if __name__ == "__main__":
    main(sys.argv)
