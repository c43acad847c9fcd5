"""Command-line driver.

Exit status: 0 success, 1 operational failure, 2 usage error. Seeds are
always read as hexadecimal (``0x`` prefix optional).
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from . import __version__, iscas85
from .dictionary import (DictionaryError, FaultDictionary, build_fault_dictionary, build_golden,
                         dictionary_to_json, load_dictionary, save_dictionary)
from .faultsim import FaultSimError, fault_coverage, load_patterns
from .kmac import DEFAULT_DIGEST_BITS, KmacError, check_digest_bits, load_key
from .netlist import Netlist, NetlistError, load_bench
from .ora import CSV_COLUMNS, aliasing_analysis, format_table
from .remote import ProtocolError, RemoteError, WireVerdict, agent_run, tester_serve
from .selftest import run_selftest
from .testflow import TestFlowError, load_soc_config, run_onchip_test
from .tpg import DEFAULT_TAPS, LfsrError, parse_taps, patterns_for_seed


class CliError(Exception):
    """Operational failure; reported on stderr with exit status 1."""


# -- argument types ----------------------------------------------------------

def _hex_seed(text: str) -> int:
    try:
        v = int(text, 16)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed {text!r} is not hexadecimal") from None
    if not 0 < v < 1 << 32:
        raise argparse.ArgumentTypeError(f"seed {text!r} must be a nonzero 32-bit value")
    return v


def _seed_list(text: str) -> list[int]:
    seeds = [_hex_seed(s) for s in text.split(",") if s.strip()]
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    if len(set(seeds)) != len(seeds):
        raise argparse.ArgumentTypeError("duplicate seed in list")
    return seeds


def _positive(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return v


def _digest_bits(text: str) -> int:
    v = _positive(text)
    try:
        return check_digest_bits(v)
    except KmacError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _taps(text: str) -> tuple[int, ...]:
    try:
        return parse_taps(text)
    except LfsrError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit() or not 0 <= int(port) < 65536:
        raise argparse.ArgumentTypeError(f"expected host:port, got {text!r}")
    return host or "127.0.0.1", int(port)


def _netlist(ref: str) -> Netlist:
    """A .bench path, or the name of a bundled ISCAS-85 circuit."""
    p = Path(ref)
    if p.exists():
        return load_bench(p)
    # bare "c432" or "c432.bench" falls back to the bundled copy
    name = p.stem if p.name == ref and p.suffix in ("", ".bench") else None
    if name in iscas85.REFERENCE:
        return iscas85.load(name)
    return load_bench(p)


def _patterns(args, net: Netlist) -> list[tuple[int, ...]]:
    if getattr(args, "pattern_file", None):
        return load_patterns(args.pattern_file, len(net.inputs))
    return patterns_for_seed(args.seed, len(net.inputs), args.patterns, args.taps)


# -- subcommands -------------------------------------------------------------

def cmd_parse(args) -> int:
    net = _netlist(args.bench)
    depth = max(net.depth.values(), default=0)
    print(f"{net.name}: {len(net.inputs)} inputs, {len(net.outputs)} outputs, "
          f"{len(net.gates)} gates, depth {depth}")
    return 0


def cmd_coverage(args) -> int:
    net = _netlist(args.bench)
    rep = fault_coverage(net, _patterns(args, net), jobs=args.jobs)
    print(f"{net.name}: {rep.detected_faults}/{rep.total_faults} faults detected "
          f"({100 * rep.coverage:.2f}%)")
    if args.list_undetected:
        for fid in rep.undetected:
            print(fid)
    return 0


def _write_dictionary(d: FaultDictionary, out: str | None, debug: bool = False) -> None:
    if out:
        save_dictionary(d, out, include_responses=debug)
        print(f"wrote {len(d.entries)} entries for {len(d.sessions)} session(s) to {out}")
    else:
        sys.stdout.write(dictionary_to_json(d, include_responses=debug))


def cmd_gen_golden(args) -> int:
    net = _netlist(args.bench)
    key = load_key(args.key)
    entries = build_golden(net, args.seeds, args.patterns, key, args.digest_bits,
                           dut_id=args.dut_id, taps=args.taps)
    d = FaultDictionary(entries[0].key.dut_id, args.digest_bits, tuple(args.taps),
                        len(net.outputs), tuple(entries))
    _write_dictionary(d, args.out)
    return 0


def cmd_build_dict(args) -> int:
    net = _netlist(args.bench)
    key = load_key(args.key)
    d = build_fault_dictionary(net, args.seeds, args.patterns, key, args.digest_bits,
                               dut_id=args.dut_id, taps=args.taps, jobs=args.jobs,
                               keep_responses=args.debug_responses)
    _write_dictionary(d, args.out, args.debug_responses)
    return 0


def cmd_test_onchip(args) -> int:
    soc = load_soc_config(args.soc)
    if args.inject_fault:
        soc.inject(args.dut, args.inject_fault)
    verdict = run_onchip_test(soc, args.dut, args.seed)
    print(verdict)
    return 0


def cmd_serve_tester(args) -> int:
    d = load_dictionary(args.dict)
    host, port = args.listen
    try:
        records = asyncio.run(tester_serve(d, host, port, seeds=args.seeds, timeout=args.timeout,
                                           max_sessions=args.max_sessions))
    except KeyboardInterrupt:
        return 0
    for r in records:
        if r.verdict is None:
            print(f"seed={r.session.seed:#010x} ABORTED {r.error}")
        else:
            print(f"seed={r.session.seed:#010x} {r.verdict.name} {' '.join(r.fault_ids)}".rstrip())
    return 0


def cmd_run_agent(args) -> int:
    soc = load_soc_config(args.soc)
    if args.inject_fault:
        if len(soc.duts) != 1 and not args.dut:
            raise CliError("--inject-fault needs --dut when the SoC has several DUTs")
        soc.inject(args.dut or next(iter(soc.duts)), args.inject_fault)
    host, port = args.connect
    results = asyncio.run(agent_run(soc, host, port, sessions=args.sessions, retries=args.retries,
                                    timeout=args.timeout))
    status = 0
    for r in results:
        if hasattr(r, "verdict"):
            print(f"{r.verdict.name} {' '.join(r.fault_ids)}".rstrip())
            if r.verdict is WireVerdict.INVALID:
                status = 1
        else:
            print(f"ERROR {r.code}: {r.detail}")
            status = 1
    return status


def cmd_analyze(args) -> int:
    key = load_key(args.key)
    if args.all:
        names = list(iscas85.CIRCUITS)
    elif args.circuit:
        names = args.circuit
    else:
        names = [args.bench]
    reports = []
    for ref in names:
        net = _netlist(ref)
        if args.patterns:
            count = args.patterns
        elif net.name in iscas85.REFERENCE:
            count = iscas85.REFERENCE[net.name].pattern_count
        else:
            raise CliError(f"{net.name} is not a bundled circuit; give --patterns")
        patterns = patterns_for_seed(args.seed, len(net.inputs), count, args.taps)
        reports.append(aliasing_analysis(net, patterns, key, args.digest_bits, jobs=args.jobs))
    print(format_table(reports))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            w.writerows(r.csv_row() for r in reports)
    return 0


def cmd_selftest(args) -> int:
    failed = 0
    for label, ok in run_selftest():
        print(f"{'PASS' if ok else 'FAIL'}  {label}")
        failed += not ok
    return 1 if failed else 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kbist", description="Keyed-signature logic BIST toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def bench(sp):
        sp.add_argument("--bench", required=True, help=".bench file or bundled circuit name")

    def lfsr(sp, seed_required=True):
        sp.add_argument("--seed", type=_hex_seed, required=seed_required, help="LFSR seed (hex)")
        sp.add_argument("--taps", type=_taps, default=DEFAULT_TAPS, help="LFSR taps, e.g. 32,22,2,1")

    def keyed(sp):
        sp.add_argument("--key", help="key file (one hex line); $KBIST_KEY_FILE overrides")
        sp.add_argument("-d", "--digest-bits", type=_digest_bits, default=DEFAULT_DIGEST_BITS)

    def jobs(sp):
        sp.add_argument("--jobs", type=_positive, default=1, help="fault-simulation workers")

    sp = sub.add_parser("parse", help="parse and levelize a netlist")
    sp.add_argument("bench", help=".bench file or bundled circuit name")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("coverage", help="stuck-at fault coverage of a pattern set")
    bench(sp)
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--patterns", type=_positive, help="number of LFSR patterns")
    src.add_argument("--pattern-file", help="file of 0/1 pattern strings")
    lfsr(sp, seed_required=False)
    sp.set_defaults(seed=1)
    sp.add_argument("--list-undetected", action="store_true")
    jobs(sp)
    sp.set_defaults(func=cmd_coverage)

    for name, func, helptext in (("gen-golden", cmd_gen_golden, "golden signatures per seed"),
                                 ("build-dict", cmd_build_dict, "device-specific fault dictionary")):
        sp = sub.add_parser(name, help=helptext)
        bench(sp)
        sp.add_argument("--seeds", type=_seed_list, required=True, help="comma-separated hex seeds")
        sp.add_argument("--patterns", type=_positive, required=True)
        sp.add_argument("--taps", type=_taps, default=DEFAULT_TAPS)
        sp.add_argument("--dut-id", help="DUT id stored in the dictionary (default: netlist name)")
        sp.add_argument("--out", help="output file (default: stdout)")
        keyed(sp)
        if name == "build-dict":
            jobs(sp)
            sp.add_argument("--debug-responses", action="store_true",
                            help="embed raw responses (testing only; leaks responses)")
        sp.set_defaults(func=func)

    sp = sub.add_parser("test-onchip", help="run one on-chip test session")
    sp.add_argument("--soc", required=True, help="SoC config JSON")
    sp.add_argument("--dut", required=True)
    sp.add_argument("--seed", type=_hex_seed, required=True)
    sp.add_argument("--inject-fault", help="fault id to inject, e.g. N22@sa0")
    sp.set_defaults(func=cmd_test_onchip)

    sp = sub.add_parser("serve-tester", help="trusted remote tester")
    sp.add_argument("--dict", required=True, help="fault dictionary file")
    sp.add_argument("--listen", type=_endpoint, required=True, help="host:port")
    sp.add_argument("--seeds", type=_seed_list, help="explicit seed order (default: round-robin)")
    sp.add_argument("--timeout", type=float, default=30.0, help="response timeout in seconds")
    sp.add_argument("--max-sessions", type=_positive, help="stop after this many sessions")
    sp.set_defaults(func=cmd_serve_tester)

    sp = sub.add_parser("run-agent", help="DUT-side agent")
    sp.add_argument("--soc", required=True, help="SoC config JSON")
    sp.add_argument("--connect", type=_endpoint, required=True, help="host:port")
    sp.add_argument("--inject-fault", help="fault id to inject")
    sp.add_argument("--dut", help="DUT receiving --inject-fault")
    sp.add_argument("--sessions", type=_positive, default=1)
    sp.add_argument("--retries", type=int, default=0, help="reconnect attempts per session")
    sp.add_argument("--timeout", type=float, default=30.0)
    sp.set_defaults(func=cmd_run_agent)

    sp = sub.add_parser("analyze", help="compaction and aliasing report")
    which = sp.add_mutually_exclusive_group(required=True)
    which.add_argument("--bench", help=".bench file or bundled circuit name")
    which.add_argument("--circuit", action="append", help="bundled circuit (repeatable)")
    which.add_argument("--all", action="store_true", help="every bundled circuit")
    sp.add_argument("--patterns", type=_positive,
                    help="pattern count (default for bundled circuits: reference count)")
    lfsr(sp)
    keyed(sp)
    jobs(sp)
    sp.add_argument("--csv", help="also write CSV here")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("selftest", help="hash test vectors and SISR oracle")
    sp.set_defaults(func=cmd_selftest)
    return p


_OPERATIONAL = (CliError, OSError, NetlistError, FaultSimError, LfsrError, KmacError,
                DictionaryError, TestFlowError, ProtocolError, RemoteError, KeyError)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _OPERATIONAL as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"kbist: error: {msg}", file=sys.stderr)
        return 1
