"""Single-rail netlist IR, text format, dual-rail expansion and simulation.

Text format, one statement per line, ``#`` comments::

    input a b
    output y
    gate xor y a b

Sections may interleave in any order.  ``const0`` and ``const1`` are reserved
signals bound by the simulator and never appear in the input vector.

Dual-rail expansion keeps one rail pair per signal.  ``and``/``or``/``xor``
become one self-checking gate, ``nand``/``nor``/``xnor`` become the base gate
with its output rails swapped, and ``not``/``buf`` are pure aliases of the
driving pair (swapped or not), so they add neither gates nor nets.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .dualrail import (
    INTERNAL_SITES_PER_GATE,
    WIRING,
    GateKind,
    LocalFaultSite,
    RailPair,
    eval_gate,
)

ARITY = {"and": 2, "or": 2, "xor": 2, "nand": 2, "nor": 2, "xnor": 2, "not": 1, "buf": 1}
BASE_KIND = {
    "and": (GateKind.AND, False),
    "or": (GateKind.OR, False),
    "xor": (GateKind.XOR, False),
    "nand": (GateKind.AND, True),
    "nor": (GateKind.OR, True),
    "xnor": (GateKind.XOR, True),
}
CONSTANTS = ("const0", "const1")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class NetlistError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class Gate(NamedTuple):
    kind: str
    out: str
    ins: tuple[str, ...]


@dataclass(frozen=True)
class SingleRailNetlist:
    """Validated combinational netlist; ``gates`` is in topological order."""

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    gates: tuple[Gate, ...]
    constants: tuple[str, ...] = ()

    @property
    def signals(self) -> list[str]:
        return list(self.constants) + list(self.inputs) + [g.out for g in self.gates]

    def gate_counts(self) -> dict[str, int]:
        counts = {k: 0 for k in ARITY}
        for g in self.gates:
            counts[g.kind] += 1
        return counts

    def evaluate(self, values: Sequence[int], mask: int = 1) -> list[int]:
        """Bit-parallel reference simulation on Python ints.

        ``values[i]`` holds the bits of input ``i`` across ``mask.bit_length()``
        independent vectors.
        """
        if len(values) != len(self.inputs):
            raise ValueError(f"expected {len(self.inputs)} input values, got {len(values)}")
        env = {"const0": 0, "const1": mask}
        env.update(zip(self.inputs, values))
        for g in self.gates:
            x = env[g.ins[0]]
            y = env[g.ins[1]] if len(g.ins) > 1 else 0
            k = g.kind
            if k == "and":
                v = x & y
            elif k == "or":
                v = x | y
            elif k == "xor":
                v = x ^ y
            elif k == "nand":
                v = ~(x & y) & mask
            elif k == "nor":
                v = ~(x | y) & mask
            elif k == "xnor":
                v = ~(x ^ y) & mask
            elif k == "not":
                v = ~x & mask
            else:
                v = x
            env[g.out] = v
        return [env[o] for o in self.outputs]

    def simulate(self, vector: int) -> int:
        """Evaluate one input vector (bit ``i`` = input ``i``); returns the output vector."""
        bits = [(vector >> i) & 1 for i in range(len(self.inputs))]
        outs = self.evaluate(bits)
        return sum(b << i for i, b in enumerate(outs))

    def truth_table(self) -> list[int]:
        """Output vector for every input vector, computed in one bit-parallel pass."""
        n = len(self.inputs)
        width = 1 << n
        mask = (1 << width) - 1
        cols = []
        for i in range(n):
            block = ((1 << (1 << i)) - 1) << (1 << i)
            period = 1 << (i + 1)
            word = 0
            for start in range(0, width, period):
                word |= block << start
            cols.append(word & mask)
        outs = self.evaluate(cols, mask)
        return [sum(((o >> v) & 1) << j for j, o in enumerate(outs)) for v in range(width)]


def _topo_order(gates: list[tuple[Gate, int]], driven: set[str]) -> list[Gate]:
    by_out = {g.out: (g, line) for g, line in gates}
    state: dict[str, int] = {}
    order: list[Gate] = []
    for g, line in gates:
        if state.get(g.out):
            continue
        stack = [(g.out, iter(g.ins))]
        state[g.out] = 1
        while stack:
            sig, it = stack[-1]
            for nxt in it:
                if nxt in driven or nxt in CONSTANTS:
                    continue
                st = state.get(nxt, 0)
                if st == 1:
                    raise NetlistError(f"combinational cycle through signal {nxt!r}", by_out[nxt][1])
                if st == 0:
                    state[nxt] = 1
                    stack.append((nxt, iter(by_out[nxt][0].ins)))
                    break
            else:
                stack.pop()
                state[sig] = 2
                order.append(by_out[sig][0])
    return order


def parse_netlist(text: str) -> SingleRailNetlist:
    inputs: list[str] = []
    outputs: list[tuple[str, int]] = []
    gates: list[tuple[Gate, int]] = []
    drivers: dict[str, int] = {}
    constants: set[str] = set()

    def check_name(name: str, lineno: int) -> None:
        if not _NAME.match(name):
            raise NetlistError(f"invalid signal name {name!r}", lineno)

    def drive(name: str, lineno: int) -> None:
        check_name(name, lineno)
        if name in CONSTANTS:
            raise NetlistError(f"{name!r} is a reserved constant and cannot be driven", lineno)
        if name in drivers:
            raise NetlistError(f"signal {name!r} already driven at line {drivers[name]}", lineno)
        drivers[name] = lineno

    for lineno, raw in enumerate(text.splitlines(), 1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        head, args = tokens[0], tokens[1:]
        if head == "input":
            for name in args:
                if name in CONSTANTS:
                    constants.add(name)
                    continue
                drive(name, lineno)
                inputs.append(name)
        elif head == "output":
            for name in args:
                check_name(name, lineno)
                outputs.append((name, lineno))
        elif head == "gate":
            if len(args) < 2:
                raise NetlistError("gate statement needs a kind and an output", lineno)
            kind, out, ins = args[0], args[1], tuple(args[2:])
            if kind not in ARITY:
                raise NetlistError(f"unknown gate kind {kind!r}", lineno)
            if len(ins) != ARITY[kind]:
                raise NetlistError(f"{kind} takes {ARITY[kind]} input(s), got {len(ins)}", lineno)
            for name in ins:
                check_name(name, lineno)
            drive(out, lineno)
            gates.append((Gate(kind, out, ins), lineno))
        else:
            raise NetlistError(f"unknown statement {head!r}", lineno)

    for g, lineno in gates:
        for name in g.ins:
            if name in CONSTANTS:
                constants.add(name)
            elif name not in drivers:
                raise NetlistError(f"undeclared signal {name!r}", lineno)
    for name, lineno in outputs:
        if name in CONSTANTS:
            constants.add(name)
        elif name not in drivers:
            raise NetlistError(f"output {name!r} is never driven", lineno)

    order = _topo_order(gates, set(inputs))
    return SingleRailNetlist(
        inputs=tuple(inputs),
        outputs=tuple(name for name, _ in outputs),
        gates=tuple(order),
        constants=tuple(c for c in CONSTANTS if c in constants),
    )


def serialize(n: SingleRailNetlist) -> str:
    lines = []
    if n.inputs:
        lines.append("input " + " ".join(n.inputs))
    if n.outputs:
        lines.append("output " + " ".join(n.outputs))
    for g in n.gates:
        lines.append(" ".join(("gate", g.kind, g.out) + g.ins))
    return "\n".join(lines) + "\n"


def netlist_hash(n: SingleRailNetlist) -> str:
    return hashlib.sha256(serialize(n).encode()).hexdigest()


# --------------------------------------------------------------------------
# dual rail


class DualGate(NamedTuple):
    kind: GateKind
    name: str  # single-rail output signal that produced this gate
    a: tuple[int, int]  # (A, A_bar) net indices
    b: tuple[int, int]
    o: tuple[int, int]  # (O, O_bar) net indices


class CircuitFaultSite(NamedTuple):
    """Either a whole rail net (``gate is None``) or one gate-internal node."""

    index: int
    id: str
    net: int | None = None
    gate: int | None = None
    node: LocalFaultSite | None = None


@dataclass
class DualRailNetlist:
    source: SingleRailNetlist
    nets: list[str] = field(default_factory=list)
    pairs: dict[str, tuple[int, int]] = field(default_factory=dict)
    gates: list[DualGate] = field(default_factory=list)
    #: signal -> single-rail kind that was realized as a rail swap
    swaps: dict[str, str] = field(default_factory=dict)

    @property
    def inputs(self) -> list[tuple[int, int]]:
        return [self.pairs[s] for s in self.source.inputs]

    @property
    def outputs(self) -> list[tuple[int, int]]:
        return [self.pairs[s] for s in self.source.outputs]

    @property
    def site_count(self) -> int:
        return len(self.nets) + INTERNAL_SITES_PER_GATE * len(self.gates)

    def gate_counts(self) -> dict[str, int]:
        counts = {k.value: 0 for k in GateKind}
        for g in self.gates:
            counts[g.kind.value] += 1
        return counts

    def _new_pair(self, signal: str) -> tuple[int, int]:
        hi = len(self.nets)
        self.nets.append(signal)
        self.nets.append(signal + ".bar")
        return hi, hi + 1

    def fault_sites(self) -> list[CircuitFaultSite]:
        return enumerate_fault_sites(self)

    def site_index(self, site_id: str) -> int:
        try:
            return self._site_ids()[site_id]
        except KeyError:
            raise KeyError(f"unknown fault site {site_id!r}") from None

    def _site_ids(self) -> dict[str, int]:
        cache = self.__dict__.get("_ids")
        if cache is None:
            cache = {s.id: s.index for s in enumerate_fault_sites(self)}
            self.__dict__["_ids"] = cache
        return cache

    def simulate(self, inputs: Sequence[int], faults: Iterable[tuple[int | str, int]] = ()) -> list[RailPair]:
        return simulate(self, inputs, faults)


def expand_dual_rail(n: SingleRailNetlist) -> DualRailNetlist:
    d = DualRailNetlist(source=n)
    for c in n.constants:
        d.pairs[c] = d._new_pair(c)
    for s in n.inputs:
        d.pairs[s] = d._new_pair(s)
    for g in n.gates:
        if g.kind in ("buf", "not"):
            hi, lo = d.pairs[g.ins[0]]
            if g.kind == "not":
                d.pairs[g.out] = (lo, hi)
                d.swaps[g.out] = "not"
            else:
                d.pairs[g.out] = (hi, lo)
            continue
        kind, inverted = BASE_KIND[g.kind]
        hi, lo = d._new_pair(g.out)
        if inverted:
            o = (lo, hi)
            d.swaps[g.out] = g.kind
        else:
            o = (hi, lo)
        d.pairs[g.out] = (hi, lo)
        d.gates.append(DualGate(kind, g.out, d.pairs[g.ins[0]], d.pairs[g.ins[1]], o))
    return d


def enumerate_fault_sites(d: DualRailNetlist) -> list[CircuitFaultSite]:
    """Rail nets in creation order, then the ten internal nodes of each gate in gate order."""
    sites = [CircuitFaultSite(i, name, net=i) for i, name in enumerate(d.nets)]
    base = len(d.nets)
    internal = [s for s in LocalFaultSite if 4 <= s < 14]
    for gi, g in enumerate(d.gates):
        for j, node in enumerate(internal):
            sites.append(
                CircuitFaultSite(base + INTERNAL_SITES_PER_GATE * gi + j, f"{g.name}.{node.label}", gate=gi, node=node)
            )
    return sites


def _resolve_faults(d: DualRailNetlist, faults: Iterable[tuple[int | str, int]]) -> dict[int, int]:
    out = {}
    for site, pol in faults:
        idx = d.site_index(site) if isinstance(site, str) else int(site)
        if not 0 <= idx < d.site_count:
            raise IndexError(f"fault site index {idx} out of range 0..{d.site_count - 1}")
        if pol not in (0, 1):
            raise ValueError(f"stuck-at polarity must be 0 or 1, got {pol!r}")
        out[idx] = pol
    return out


def simulate(d: DualRailNetlist, inputs: Sequence[int], faults: Iterable[tuple[int | str, int]] = ()) -> list[RailPair]:
    """Evaluate one input vector gate by gate through :func:`eval_gate`.

    ``inputs`` are the logical bits of the primary inputs; ``faults`` holds
    ``(site index or id, polarity)`` pairs.
    """
    n_in = len(d.source.inputs)
    if len(inputs) != n_in:
        raise ValueError(f"expected {n_in} input bits, got {len(inputs)}")
    fmap = _resolve_faults(d, faults)
    values = [0] * len(d.nets)

    def put(net: int, v: int) -> None:
        values[net] = fmap.get(net, v)

    env = {"const0": 0, "const1": 1}
    env.update(zip(d.source.inputs, inputs))
    for sig in d.source.constants + d.source.inputs:
        hi, lo = d.pairs[sig]
        bit = int(bool(env[sig]))
        put(hi, bit)
        put(lo, 1 - bit)
    base = len(d.nets)
    for gi, g in enumerate(d.gates):
        local = []
        for j in range(INTERNAL_SITES_PER_GATE):
            pol = fmap.get(base + INTERNAL_SITES_PER_GATE * gi + j)
            if pol is not None:
                local.append((LocalFaultSite(4 + j), pol))
        out = eval_gate(g.kind, RailPair(values[g.a[0]], values[g.a[1]]), RailPair(values[g.b[0]], values[g.b[1]]), local)
        put(g.o[0], out.hi)
        put(g.o[1], out.lo)
    return [RailPair(values[hi], values[lo]) for hi, lo in d.outputs]


def input_bits(vectors: np.ndarray, n_inputs: int) -> np.ndarray:
    """Unpack uint64 vectors of shape (B,) or (B, W) into a bool matrix (n_inputs, B)."""
    v = np.asarray(vectors, dtype=np.uint64)
    if v.ndim == 1:
        v = v[:, None]
    out = np.empty((n_inputs, v.shape[0]), dtype=bool)
    for i in range(n_inputs):
        out[i] = (v[:, i // 64] >> np.uint64(i % 64)) & np.uint64(1)
    return out


def simulate_batch(d: DualRailNetlist, bits: np.ndarray, sa0=None, sa1=None, return_nets: bool = False):
    """Bit-parallel simulation of B independent trials.

    ``bits`` is a bool matrix (n_inputs, B).  ``sa0``/``sa1`` map a site
    index to a bool mask of shape (B,) selecting the trials in which that
    site is stuck at 0/1.  Returns ``(hi, lo)`` bool matrices (n_outputs, B),
    plus the list of all net values when ``return_nets`` is set.
    """
    sa0 = sa0 or {}
    sa1 = sa1 or {}
    B = bits.shape[1]
    values: list = [None] * len(d.nets)

    def force(site: int, v):
        m = sa0.get(site)
        if m is not None:
            v = v & ~m
        m = sa1.get(site)
        if m is not None:
            v = v | m
        return v

    zeros = np.zeros(B, dtype=bool)
    for c in d.source.constants:
        hi, lo = d.pairs[c]
        v = zeros if c == "const0" else ~zeros
        values[hi] = force(hi, v)
        values[lo] = force(lo, ~v)
    for i, s in enumerate(d.source.inputs):
        hi, lo = d.pairs[s]
        values[hi] = force(hi, bits[i])
        values[lo] = force(lo, ~bits[i])

    faulty = bool(sa0) or bool(sa1)
    base = len(d.nets)
    for gi, g in enumerate(d.gates):
        rails = (values[g.a[0]], values[g.a[1]], values[g.b[0]], values[g.b[1]])
        site0 = base + INTERNAL_SITES_PER_GATE * gi
        for r, expr in enumerate(WIRING[g.kind]):
            p, q, rr, s = (rails[x] for x in expr)
            if faulty:
                k = site0 + 5 * r
                inv = force(k, ~p)
                prod1 = force(k + 1, inv & q)
                prod2 = force(k + 2, rr & s)
                total = force(k + 3, prod1 | prod2)
                out = force(k + 4, ~total)
            else:
                out = ~((~p & q) | (rr & s))
            net = g.o[r]
            values[net] = force(net, out) if faulty else out
    hi = np.array([values[h] for h, _ in d.outputs]).reshape(len(d.outputs), B)
    lo = np.array([values[l] for _, l in d.outputs]).reshape(len(d.outputs), B)
    if return_nets:
        return hi, lo, values
    return hi, lo


@dataclass
class EquivalenceResult:
    ok: bool
    vectors: int
    exhaustive: bool
    counterexample: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_equivalence(n: SingleRailNetlist, d: DualRailNetlist, budget: int = 4096, seed: int = 0) -> EquivalenceResult:
    """Compare fault-free dual-rail outputs against single-rail simulation.

    Exhaustive up to 20 inputs, otherwise ``budget`` seeded-random vectors.
    Every rail pair in the circuit must also be valid.
    """
    n_in = len(n.inputs)
    exhaustive = n_in <= 20
    if exhaustive:
        vectors = list(range(1 << n_in))
    else:
        rng = random.Random(seed)
        vectors = [rng.getrandbits(n_in) for _ in range(budget)]
    checked = 0
    for start in range(0, len(vectors), 1 << 16):
        chunk = vectors[start : start + (1 << 16)]
        words = np.array([[(v >> (64 * w)) & ((1 << 64) - 1) for w in range((n_in + 63) // 64 or 1)] for v in chunk], dtype=np.uint64)
        bits = input_bits(words, n_in)
        hi, lo, nets = simulate_batch(d, bits, return_nets=True)
        for sig, (h, l) in d.pairs.items():
            bad = np.flatnonzero(nets[h] == nets[l])
            if bad.size:
                return EquivalenceResult(False, checked, exhaustive, chunk[int(bad[0])], f"non-valid pair on {sig}")
        # single-rail reference, bit-parallel over the chunk
        cols = [sum(((v >> i) & 1) << j for j, v in enumerate(chunk)) for i in range(n_in)]
        ref = n.evaluate(cols, (1 << len(chunk)) - 1)
        for o, word in enumerate(ref):
            want = np.array([(word >> j) & 1 for j in range(len(chunk))], dtype=bool)
            bad = np.flatnonzero((hi[o] != want) | (hi[o] == lo[o]))
            if bad.size:
                return EquivalenceResult(False, checked, exhaustive, chunk[int(bad[0])], f"output {n.outputs[o]} mismatch")
        checked += len(chunk)
    return EquivalenceResult(True, checked, exhaustive)
