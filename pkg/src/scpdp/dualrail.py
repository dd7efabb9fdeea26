"""Logic-level model of the self-checking dual-rail AND/OR/XOR gate family.

Every gate reads two rail pairs ``(A, A_bar)`` and ``(B, B_bar)`` and drives
one rail pair ``(O, O_bar)``.  Each output rail is the same four-input cell

    rail = NOT( NOT(p)·q + r·s )

wired to different input rails, so a gate is fully described by the
selector table :data:`WIRING`.  Inversion is never a gate: it is a rail swap.

The five intermediate nodes of every rail cell (``inv``, ``prod1``, ``prod2``,
``sum``, ``out``) are fault sites in addition to the four input rails and the
two output terminals, giving 16 local sites per gate.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence


class RailPair(NamedTuple):
    """Two-rail value: ``hi`` is the true rail, ``lo`` the complement rail."""

    hi: int
    lo: int

    def is_valid(self) -> bool:
        return self.hi != self.lo

    @property
    def value(self) -> int:
        """Logical value of a valid pair."""
        if self.hi == self.lo:
            raise ValueError(f"non-valid rail pair {self.hi}{self.lo} has no logical value")
        return self.hi

    @classmethod
    def encode(cls, bit: int) -> "RailPair":
        bit = int(bool(bit))
        return cls(bit, 1 - bit)

    def __str__(self) -> str:
        return f"{self.hi}{self.lo}"


#: All four encodings, valid 0, valid 1, then the two non-valid codes.
ALL_PAIRS = (RailPair(0, 1), RailPair(1, 0), RailPair(0, 0), RailPair(1, 1))
VALID_PAIRS = ALL_PAIRS[:2]
NONVALID_PAIRS = ALL_PAIRS[2:]


def rail_not(x: RailPair) -> RailPair:
    return RailPair(x.lo, x.hi)


class GateKind(enum.Enum):
    AND = "and"
    OR = "or"
    XOR = "xor"

    def boolean(self, a: int, b: int) -> int:
        if self is GateKind.AND:
            return a & b
        if self is GateKind.OR:
            return a | b
        return a ^ b


class Rail(enum.IntEnum):
    """Input rail selectors, in the order used for truth-table rows."""

    A = 0
    A_BAR = 1
    B = 2
    B_BAR = 3

    @property
    def label(self) -> str:
        return ("A", "A_bar", "B", "B_bar")[self]


class OutputRail(enum.IntEnum):
    O = 0
    O_BAR = 1

    @property
    def label(self) -> str:
        return ("O", "O_bar")[self]


class RailExpression(NamedTuple):
    """Selectors for ``NOT( NOT(p)·q + r·s )``."""

    p: Rail
    q: Rail
    r: Rail
    s: Rail

    def reads(self) -> frozenset[Rail]:
        return frozenset(self)


_A, _Ab, _B, _Bb = Rail.A, Rail.A_BAR, Rail.B, Rail.B_BAR

#: (O expression, O_bar expression) per gate kind.
WIRING: Mapping[GateKind, tuple[RailExpression, RailExpression]] = {
    GateKind.AND: (RailExpression(_Bb, _Ab, _Bb, _Bb), RailExpression(_A, _A, _A, _B)),
    GateKind.OR: (RailExpression(_Ab, _Ab, _Ab, _Bb), RailExpression(_A, _B, _A, _A)),
    GateKind.XOR: (RailExpression(_Ab, _B, _Ab, _Bb), RailExpression(_A, _B, _A, _Bb)),
}

NODE_NAMES = ("inv", "prod1", "prod2", "sum", "out")


class LocalFaultSite(enum.IntEnum):
    """The 16 fault sites of one gate, in fixed enumeration order.

    Input rails first, then the five nodes of the O cell, then the five nodes
    of the O_bar cell, then the two output terminals.
    """

    A = 0
    A_BAR = 1
    B = 2
    B_BAR = 3
    O_INV = 4
    O_PROD1 = 5
    O_PROD2 = 6
    O_SUM = 7
    O_OUT = 8
    O_BAR_INV = 9
    O_BAR_PROD1 = 10
    O_BAR_PROD2 = 11
    O_BAR_SUM = 12
    O_BAR_OUT = 13
    O = 14
    O_BAR = 15

    @property
    def label(self) -> str:
        if self <= 3:
            return Rail(self).label
        if self >= 14:
            return OutputRail(self - 14).label
        rail, node = divmod(self - 4, 5)
        return f"{OutputRail(rail).label}.{NODE_NAMES[node]}"

    @classmethod
    def internal(cls, rail: OutputRail, node: int) -> "LocalFaultSite":
        return cls(4 + 5 * rail + node)

    @classmethod
    def from_label(cls, label: str) -> "LocalFaultSite":
        for site in cls:
            if site.label == label:
                return site
        raise ValueError(f"unknown local fault site {label!r}")


#: Number of gate-internal (non-rail) sites per gate.
INTERNAL_SITES_PER_GATE = 10


class Outcome(enum.Enum):
    MASKED = "masked"
    DETECTED = "detected"
    SDC = "sdc"


def _forced(value: int, site: LocalFaultSite, faults: Mapping[LocalFaultSite, int]) -> int:
    stuck = faults.get(site)
    return value if stuck is None else stuck


def eval_gate(
    kind: GateKind,
    a: RailPair,
    b: RailPair,
    faults: Iterable[tuple[LocalFaultSite, int]] = (),
    wiring: Mapping[GateKind, tuple[RailExpression, RailExpression]] = WIRING,
) -> RailPair:
    """Evaluate one gate node by node, overriding faulty nodes as they are produced.

    ``faults`` holds ``(site, polarity)`` pairs; polarity 0 is stuck-at-0.
    """
    fmap = {LocalFaultSite(site): int(pol) for site, pol in faults}
    rails = [
        _forced(a.hi, LocalFaultSite.A, fmap),
        _forced(a.lo, LocalFaultSite.A_BAR, fmap),
        _forced(b.hi, LocalFaultSite.B, fmap),
        _forced(b.lo, LocalFaultSite.B_BAR, fmap),
    ]
    outs = []
    for rail, expr in zip(OutputRail, wiring[kind]):
        site = lambda node: LocalFaultSite.internal(rail, node)  # noqa: E731
        inv = _forced(1 - rails[expr.p], site(0), fmap)
        prod1 = _forced(inv & rails[expr.q], site(1), fmap)
        prod2 = _forced(rails[expr.r] & rails[expr.s], site(2), fmap)
        total = _forced(prod1 | prod2, site(3), fmap)
        out = _forced(1 - total, site(4), fmap)
        outs.append(_forced(out, LocalFaultSite(14 + rail), fmap))
    return RailPair(*outs)


def rail_function(
    kind: GateKind,
    output: OutputRail,
    wiring: Mapping[GateKind, tuple[RailExpression, RailExpression]] = WIRING,
):
    """Return the fault-free output rail as a function of four independent rail bits."""

    def f(a: int, a_bar: int, b: int, b_bar: int) -> int:
        pair = eval_gate(kind, RailPair(a, a_bar), RailPair(b, b_bar), wiring=wiring)
        return pair[output]

    return f


def gate_truth_check(kind: GateKind, wiring=WIRING) -> bool:
    for a, b in itertools.product((0, 1), repeat=2):
        got = eval_gate(kind, RailPair.encode(a), RailPair.encode(b), wiring=wiring)
        if got != RailPair.encode(kind.boolean(a, b)):
            return False
    return True


@dataclass(frozen=True)
class BooleanDifference:
    """``f(wrt=0) XOR f(wrt=1)`` tabulated over the three remaining rails.

    ``variables`` lists the remaining rails in canonical order; row ``i`` of
    ``values`` assigns them the bits of ``i`` with the first variable as MSB.
    """

    kind: GateKind
    output: OutputRail
    wrt: Rail
    variables: tuple[Rail, ...]
    values: tuple[int, ...]

    def is_constant(self, bit: int) -> bool:
        return all(v == bit for v in self.values)

    def rows(self):
        for i, v in enumerate(self.values):
            bits = tuple((i >> (2 - j)) & 1 for j in range(3))
            yield dict(zip(self.variables, bits)), v

    def matches(self, fn) -> bool:
        """True iff ``fn(**{rail_label: bit})`` reproduces every row."""
        return all(fn(**{r.label: bit for r, bit in env.items()}) == v for env, v in self.rows())

    def valid_rows(self):
        """Rows where every input pair not containing ``wrt`` is validly encoded."""
        pairs = [(Rail.A, Rail.A_BAR), (Rail.B, Rail.B_BAR)]
        for env, v in self.rows():
            if all(env[h] != env[l] for h, l in pairs if self.wrt not in (h, l)):
                yield env, v

    def is_constant_on_valid(self, bit: int) -> bool:
        return all(v == bit for _, v in self.valid_rows())

    def describe(self) -> str:
        if self.is_constant(0):
            return "0"
        if self.is_constant(1):
            return "1"
        for var in self.variables:
            for neg in (False, True):
                if all(v == (env[var] ^ neg) for env, v in self.rows()):
                    return f"NOT({var.label})" if neg else var.label
        for i, x in enumerate(self.variables):
            for y in self.variables[i + 1 :]:
                if all(v == env[x] ^ env[y] for env, v in self.rows()):
                    return f"{x.label} XOR {y.label}"
        return "".join(map(str, self.values))


def boolean_difference(kind: GateKind, output: OutputRail, wrt: Rail, wiring=WIRING) -> BooleanDifference:
    f = rail_function(kind, output, wiring)
    others = tuple(r for r in Rail if r != wrt)
    values = []
    for bits in itertools.product((0, 1), repeat=3):
        env = dict(zip(others, bits))
        outs = []
        for w in (0, 1):
            env[wrt] = w
            outs.append(f(*(env[r] for r in Rail)))
        values.append(outs[0] ^ outs[1])
    return BooleanDifference(kind, output, wrt, others, tuple(values))


def classify(expected: Sequence[RailPair], actual: Sequence[RailPair]) -> Outcome:
    if len(expected) != len(actual):
        raise ValueError(f"expected {len(expected)} output pairs, got {len(actual)}")
    if any(p.hi == p.lo for p in actual):
        return Outcome.DETECTED
    if all(tuple(e) == tuple(x) for e, x in zip(expected, actual)):
        return Outcome.MASKED
    return Outcome.SDC


@dataclass
class GateFaultMatrix:
    """Outcome counts of the exhaustive single-fault sweep of one gate."""

    kind: GateKind
    counts: dict[LocalFaultSite, dict[Outcome, int]] = field(default_factory=dict)
    #: (site, polarity, (a, b), faulty output) for every silent corruption.
    sdc_cases: list[tuple[LocalFaultSite, int, tuple[int, int], RailPair]] = field(default_factory=list)

    @property
    def trials(self) -> int:
        return sum(sum(c.values()) for c in self.counts.values())

    def total(self, outcome: Outcome) -> int:
        return sum(c[outcome] for c in self.counts.values())

    @property
    def ok(self) -> bool:
        return not self.sdc_cases


def single_fault_exhaustive_gate(kind: GateKind, wiring=WIRING) -> GateFaultMatrix:
    result = GateFaultMatrix(kind)
    for site in LocalFaultSite:
        tally = {o: 0 for o in Outcome}
        for pol in (0, 1):
            for a, b in itertools.product((0, 1), repeat=2):
                ra, rb = RailPair.encode(a), RailPair.encode(b)
                good = eval_gate(kind, ra, rb, wiring=wiring)
                bad = eval_gate(kind, ra, rb, [(site, pol)], wiring=wiring)
                outcome = classify([good], [bad])
                tally[outcome] += 1
                if outcome is Outcome.SDC:
                    result.sdc_cases.append((site, pol, (a, b), bad))
        result.counts[site] = tally
    return result


#: Closed-form Boolean differences of the XOR gate, keyed by (output rail, rail).
XOR_DIFFERENCES = {
    (OutputRail.O, Rail.A): ("0", lambda A_bar, B, B_bar: 0),
    (OutputRail.O, Rail.B): ("NOT(A_bar)", lambda A, A_bar, B_bar: 1 - A_bar),
    (OutputRail.O, Rail.A_BAR): ("NOT(B) XOR NOT(B_bar)", lambda A, B, B_bar: (1 - B) ^ (1 - B_bar)),
    (OutputRail.O, Rail.B_BAR): ("A_bar", lambda A, A_bar, B: A_bar),
    (OutputRail.O_BAR, Rail.A): ("NOT(B) XOR NOT(B_bar)", lambda A_bar, B, B_bar: (1 - B) ^ (1 - B_bar)),
    (OutputRail.O_BAR, Rail.B): ("NOT(A)", lambda A, A_bar, B_bar: 1 - A),
    (OutputRail.O_BAR, Rail.A_BAR): ("0", lambda A, B, B_bar: 0),
    (OutputRail.O_BAR, Rail.B_BAR): ("A", lambda A, A_bar, B: A),
}


#: Differences that collapse to the constant 1 once the other input pair is valid.
XOR_UNIT_ON_VALID = ((OutputRail.O, Rail.A_BAR), (OutputRail.O_BAR, Rail.A))


def nonvalid_input_violations(kind: GateKind, wiring=WIRING) -> list[tuple[str, RailPair, RailPair, RailPair]]:
    """Cases where a non-valid input yields a valid output that is wrong for both possible true values."""
    bad = []
    for which in ("a", "b"):
        for corrupt in NONVALID_PAIRS:
            for other in VALID_PAIRS:
                a, b = (corrupt, other) if which == "a" else (other, corrupt)
                out = eval_gate(kind, a, b, wiring=wiring)
                if not out.is_valid():
                    continue
                plausible = {
                    kind.boolean(t, other.value) if which == "a" else kind.boolean(other.value, t) for t in (0, 1)
                }
                if out.value not in plausible:
                    bad.append((which, a, b, out))
    return bad
