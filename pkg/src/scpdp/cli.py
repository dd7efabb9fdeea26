"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence, TextIO

from . import __version__
from .dualrail import (
    WIRING,
    GateKind,
    OutputRail,
    Rail,
    XOR_DIFFERENCES,
    XOR_UNIT_ON_VALID,
    boolean_difference,
    classify,
    gate_truth_check,
    nonvalid_input_violations,
    single_fault_exhaustive_gate,
)
from .faultsim import INPUT_POLICIES, MODES, POLARITIES, CampaignConfig, exhaustive_single_fault, run_campaign
from .netlist import NetlistError, SingleRailNetlist, expand_dual_rail, parse_netlist, simulate
from .report import area_report, summary_csv, summary_json, write_trials_csv
from .sbox import build_sbox_netlist, sbox_text, verify_sbox

OK, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def load_netlist(ref: str) -> SingleRailNetlist:
    if ref == "sbox":
        return build_sbox_netlist()
    path = Path(ref)
    if not path.is_file():
        raise UsageError(f"netlist {ref!r} is neither a file nor the builtin 'sbox'")
    try:
        return parse_netlist(path.read_text(encoding="utf-8"))
    except NetlistError as exc:
        raise UsageError(f"{ref}: {exc}") from None


def _mark(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def cmd_verify_gates(wiring=WIRING, out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    ok_all = True

    def line(ok: bool, text: str) -> None:
        nonlocal ok_all
        ok_all &= ok
        print(f"{_mark(ok)}  {text}", file=out)

    for kind in GateKind:
        line(gate_truth_check(kind, wiring), f"{kind.name:<3} truth table (4 valid inputs)")
    for kind in GateKind:
        for rail, rail_in in ((OutputRail.O, Rail.A), (OutputRail.O_BAR, Rail.A_BAR)):
            bd = boolean_difference(kind, rail, rail_in, wiring)
            line(bd.is_constant(0), f"{kind.name:<3} d{rail.label}/d{rail_in.label} = {bd.describe()} (expected 0)")
    for (rail, wrt), (text, fn) in XOR_DIFFERENCES.items():
        bd = boolean_difference(GateKind.XOR, rail, wrt, wiring)
        line(bd.matches(fn), f"XOR d{rail.label}/d{wrt.label} = {bd.describe()} (expected {text})")
    for rail, wrt in XOR_UNIT_ON_VALID:
        bd = boolean_difference(GateKind.XOR, rail, wrt, wiring)
        line(bd.is_constant_on_valid(1), f"XOR d{rail.label}/d{wrt.label} = 1 whenever B is validly encoded")
    print("Boolean differences, AND and OR (tabulated, not asserted):", file=out)
    for kind in (GateKind.AND, GateKind.OR):
        for rail in OutputRail:
            cells = [f"d/d{w.label}={boolean_difference(kind, rail, w, wiring).describe()}" for w in Rail]
            print(f"      {kind.name:<3} {rail.label:<5} " + "  ".join(cells), file=out)
    for kind in GateKind:
        m = single_fault_exhaustive_gate(kind, wiring)
        line(m.ok, f"{kind.name:<3} single stuck-at faults: {m.trials} trials, SDC = {len(m.sdc_cases)}")
        for site, pol, (a, b), got in m.sdc_cases:
            print(f"      counterexample: site {site.label} s-a-{pol}, A={a} B={b} -> output {got}", file=out)
    for kind in GateKind:
        bad = nonvalid_input_violations(kind, wiring)
        line(not bad, f"{kind.name:<3} non-valid inputs never produce a doubly-wrong valid output")
        for which, a, b, got in bad:
            print(f"      counterexample: A={a} B={b} -> {got}", file=out)
    print("all checks passed" if ok_all else "verification FAILED", file=out)
    return OK if ok_all else FAIL


def cmd_sbox(action: str, netlist: str | None = None, output: str | None = None, out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    if action == "emit":
        text = sbox_text()
        if output:
            Path(output).write_text(text, encoding="utf-8")
        else:
            out.write(text)
        return OK
    n = load_netlist(netlist or "sbox")
    try:
        check = verify_sbox(n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"{check.matches}/256 match", file=out)
    if check.first_mismatch is not None:
        print(f"first mismatch at input 0x{check.first_mismatch:02x}", file=out)
    print(f"bijective: {'yes' if check.bijective else 'no'}", file=out)
    return OK if check.ok else FAIL


# campaign options: name -> (type, default)
CAMPAIGN_KEYS = {
    "netlist": (str, "sbox"),
    "polarity": (str, "sa0"),
    "mode": (str, "random"),
    "trials": (int, 400_000),
    "sizes": (str, "1-14"),
    "seed": (int, 1),
    "input_policy": (str, "random"),
    "workers": (int, 1),
    "single_exhaustive": (bool, False),
    "input_budget": (int, None),
    "output": (str, None),
    "format": (str, "csv"),
    "trials_csv": (str, None),
}


def parse_sizes(text: str) -> tuple[int, ...]:
    sizes = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            sizes.extend(range(int(lo), int(hi) + 1))
        elif part:
            sizes.append(int(part))
    if not sizes:
        raise UsageError("empty fault size list")
    return tuple(sizes)


def _to_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def read_config(path: str) -> dict:
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CAMPAIGN_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        kind = CAMPAIGN_KEYS[key][0]
        try:
            values[key] = _to_bool(value) if kind is bool else kind(value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return values


def resolve_campaign(args: argparse.Namespace) -> dict:
    """Flags override the config file, which overrides the defaults."""
    cfg = {k: default for k, (_, default) in CAMPAIGN_KEYS.items()}
    if args.config:
        cfg.update(read_config(args.config))
    for key in CAMPAIGN_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def cmd_campaign(opts: dict, out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    n = load_netlist(opts["netlist"])
    d = expand_dual_rail(n)
    if opts["format"] not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {opts['format']!r}")
    counterexamples = None
    if opts["single_exhaustive"]:
        try:
            report, counterexamples = exhaustive_single_fault(d, opts["input_budget"], opts["seed"])
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        records = []
    else:
        cfg = CampaignConfig(
            polarity=opts["polarity"],
            mode=opts["mode"],
            sizes=parse_sizes(opts["sizes"]),
            trials=opts["trials"],
            seed=opts["seed"],
            input_policy=opts["input_policy"],
        )
        try:
            cfg.validate(d.site_count)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        report, records = run_campaign(d, cfg, workers=opts["workers"], keep_trials=bool(opts["trials_csv"]))
    text = summary_json(report) if opts["format"] == "json" else summary_csv(report)
    if opts["output"]:
        Path(opts["output"]).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    if opts["trials_csv"]:
        with open(opts["trials_csv"], "w", encoding="utf-8", newline="") as fh:
            write_trials_csv(records, d, fh)
    if counterexamples is not None:
        print(f"SDC counterexamples: {len(counterexamples)}", file=out)
        for c in counterexamples:
            print(f"  site {c.site} s-a-{c.polarity} input 0x{c.input:x}", file=out)
    total = report.total
    print(f"sites S = {d.site_count}; trials = {total.trials}; SDC = {total.sdc}", file=out)
    print(f"aggregate FC = {100 * total.fc:.3f}%", file=out)
    return OK


def cmd_area(ref: str, compare_dmr: bool = False, fmt: str = "text", out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    rep = area_report(load_netlist(ref), compare_dmr)
    if fmt == "json":
        out.write(json.dumps(rep.as_dict(), indent=2, sort_keys=True) + "\n")
    else:
        out.write(rep.text())
    return OK


def parse_fault(text: str) -> tuple[str, int]:
    site, sep, pol = text.rpartition(":")
    if not sep or pol not in ("0", "1") or not site:
        raise UsageError(f"fault must look like <site>:<0|1>, got {text!r}")
    return site, int(pol)


def cmd_simulate(ref: str, input_hex: str, faults: Sequence[str] = (), out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    n = load_netlist(ref)
    d = expand_dual_rail(n)
    try:
        vector = int(input_hex, 16)
    except ValueError:
        raise UsageError(f"input must be hexadecimal, got {input_hex!r}") from None
    if vector >> len(n.inputs):
        raise UsageError(f"input 0x{vector:x} does not fit {len(n.inputs)} input bits")
    bits = [(vector >> i) & 1 for i in range(len(n.inputs))]
    parsed = [parse_fault(f) for f in faults]
    try:
        good = simulate(d, bits)
        got = simulate(d, bits, parsed)
    except (KeyError, IndexError, ValueError) as exc:
        raise UsageError(str(exc).strip("'\"")) from None
    for name, pair in zip(n.outputs, got):
        print(f"{name} = {pair}{'' if pair.is_valid() else '  (non-valid)'}", file=out)
    print(f"outcome: {classify(good, got).value}", file=out)
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scpdp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="gate-level verification")
    v.add_argument("target", choices=["gates"])

    s = sub.add_parser("sbox", help="composite-field S-box netlist")
    s.add_argument("action", choices=["emit", "verify"])
    s.add_argument("--netlist", help="netlist file to verify instead of the generated one")
    s.add_argument("-o", "--output", help="write the emitted netlist here")

    c = sub.add_parser("campaign", help="stuck-at fault injection campaign")
    c.add_argument("--config", help="key = value file mirroring these flags")
    c.add_argument("--netlist", help="netlist file or 'sbox' (default)")
    c.add_argument("--polarity", choices=POLARITIES)
    c.add_argument("--mode", choices=MODES)
    c.add_argument("--trials", type=int, help="total trials, split evenly over fault sizes")
    c.add_argument("--sizes", help="fault sizes, e.g. 1-14 or 1,2,4")
    c.add_argument("--seed", type=int)
    c.add_argument("--input-policy", dest="input_policy", choices=INPUT_POLICIES)
    c.add_argument("--workers", type=int)
    c.add_argument("--single-exhaustive", dest="single_exhaustive", action="store_const", const=True)
    c.add_argument("--input-budget", dest="input_budget", type=int, help="input vectors per site above 20 inputs")
    c.add_argument("-o", "--output", help="summary file (default: stdout)")
    c.add_argument("--format", choices=["csv", "json"])
    c.add_argument("--trials-csv", dest="trials_csv", help="also write one row per trial here")

    a = sub.add_parser("area", help="technology-independent transistor count")
    a.add_argument("--netlist", default="sbox")
    a.add_argument("--compare-dmr", action="store_true")
    a.add_argument("--format", choices=["text", "json"], default="text")

    m = sub.add_parser("simulate", help="evaluate one input vector")
    m.add_argument("--netlist", default="sbox")
    m.add_argument("--input", required=True, help="input vector in hex, bit i = input i")
    m.add_argument("--fault", action="append", default=[], help="<site>:<0|1>, repeatable")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify_gates()
        if args.command == "sbox":
            return cmd_sbox(args.action, args.netlist, args.output)
        if args.command == "campaign":
            return cmd_campaign(resolve_campaign(args))
        if args.command == "area":
            return cmd_area(args.netlist, args.compare_dmr, args.format)
        return cmd_simulate(args.netlist, args.input, args.fault)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
