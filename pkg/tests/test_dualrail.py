import itertools

import pytest
from hypothesis import given, strategies as st

from scpdp.dualrail import (
    ALL_PAIRS,
    NONVALID_PAIRS,
    VALID_PAIRS,
    WIRING,
    GateKind,
    LocalFaultSite,
    Outcome,
    OutputRail,
    Rail,
    RailExpression,
    RailPair,
    XOR_DIFFERENCES,
    boolean_difference,
    classify,
    eval_gate,
    gate_truth_check,
    nonvalid_input_violations,
    rail_not,
    single_fault_exhaustive_gate,
)


def n(x):
    return 1 - x


# Simplified right-hand sides of the gate equations, written independently of
# the wiring table and the node-by-node evaluator.
CLOSED_FORM = {
    GateKind.AND: (
        lambda A, Ab, B, Bb: n(Bb) & n(Ab),
        lambda A, Ab, B, Bb: n(A & B),
    ),
    GateKind.OR: (
        lambda A, Ab, B, Bb: n(Ab) | n(Bb),
        lambda A, Ab, B, Bb: n(A | B),
    ),
    GateKind.XOR: (
        lambda A, Ab, B, Bb: (Ab & n(Bb)) | (n(B) & n(Ab)),
        lambda A, Ab, B, Bb: (A & n(Bb)) | (n(B) & n(A)),
    ),
}

# Unsimplified forms: NOT( NOT(p)*q + r*s ) spelled out per gate.
RAW_FORM = {
    GateKind.AND: (
        lambda A, Ab, B, Bb: n((n(Bb) & Ab) | (Bb & Bb)),
        lambda A, Ab, B, Bb: n((n(A) & A) | (A & B)),
    ),
    GateKind.OR: (
        lambda A, Ab, B, Bb: n((n(Ab) & Ab) | (Ab & Bb)),
        lambda A, Ab, B, Bb: n((n(A) & B) | (A & A)),
    ),
    GateKind.XOR: (
        lambda A, Ab, B, Bb: n((n(Ab) & B) | (Ab & Bb)),
        lambda A, Ab, B, Bb: n((n(A) & B) | (A & Bb)),
    ),
}

kinds = pytest.mark.parametrize("kind", list(GateKind))


@kinds
def test_eval_matches_closed_forms_on_all_16_rail_combinations(kind):
    for a, b in itertools.product(ALL_PAIRS, repeat=2):
        got = eval_gate(kind, a, b)
        rails = (a.hi, a.lo, b.hi, b.lo)
        assert got.hi == CLOSED_FORM[kind][0](*rails) == RAW_FORM[kind][0](*rails)
        assert got.lo == CLOSED_FORM[kind][1](*rails) == RAW_FORM[kind][1](*rails)


@pytest.mark.parametrize(
    "kind, a, b, faults, expected",
    [
        (GateKind.AND, RailPair(1, 0), RailPair(1, 0), [], RailPair(1, 0)),
        (GateKind.AND, RailPair(1, 1), RailPair(1, 0), [], RailPair(0, 0)),
        (GateKind.AND, RailPair(0, 0), RailPair(0, 1), [], RailPair(0, 1)),
        (GateKind.XOR, RailPair(1, 0), RailPair(1, 0), [(LocalFaultSite.A_BAR, 1)], RailPair(1, 1)),
        (GateKind.OR, RailPair(0, 1), RailPair(0, 1), [], RailPair(0, 1)),
    ],
)
def test_eval_gate_examples(kind, a, b, faults, expected):
    assert eval_gate(kind, a, b, faults) == expected


def test_rail_not():
    assert rail_not(RailPair(1, 0)) == RailPair(0, 1)
    assert rail_not(RailPair(0, 0)) == RailPair(0, 0)
    for x in ALL_PAIRS:
        assert rail_not(rail_not(x)) == x
    for v in (0, 1):
        assert rail_not(RailPair.encode(v)) == RailPair.encode(1 - v)


def test_rail_pair_validity():
    assert [p.is_valid() for p in ALL_PAIRS] == [True, True, False, False]
    with pytest.raises(ValueError):
        RailPair(1, 1).value


@kinds
def test_truth_tables(kind):
    assert gate_truth_check(kind)
    table = {(a, b): eval_gate(kind, RailPair.encode(a), RailPair.encode(b)).value for a in (0, 1) for b in (0, 1)}
    expected = {
        GateKind.AND: {(0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): 1},
        GateKind.OR: {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 1},
        GateKind.XOR: {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0},
    }[kind]
    assert table == expected


def test_corrupted_wiring_fails_truth_check():
    bad = dict(WIRING)
    bad[GateKind.AND] = (RailExpression(Rail.B_BAR, Rail.A_BAR, Rail.B_BAR, Rail.B_BAR), RailExpression(Rail.A, Rail.A, Rail.A, Rail.A))
    assert not gate_truth_check(GateKind.AND, bad)


def test_wiring_read_sets():
    for kind, (o, o_bar) in WIRING.items():
        allowed_o = {Rail.A_BAR, Rail.B_BAR} | ({Rail.B} if kind is GateKind.XOR else set())
        assert o.reads() <= allowed_o
        assert Rail.A_BAR not in o_bar.reads()


def bd_oracle(fn, wrt):
    """Finite difference of a closed-form rail function, rows ordered like boolean_difference."""
    others = [r for r in Rail if r != wrt]
    out = []
    for bits in itertools.product((0, 1), repeat=3):
        env = dict(zip(others, bits))
        vals = []
        for w in (0, 1):
            env[wrt] = w
            vals.append(fn(*(env[r] for r in Rail)))
        out.append(vals[0] ^ vals[1])
    return tuple(out)


@kinds
@pytest.mark.parametrize("rail", list(OutputRail))
@pytest.mark.parametrize("wrt", list(Rail))
def test_boolean_difference_against_closed_form(kind, rail, wrt):
    assert boolean_difference(kind, rail, wrt).values == bd_oracle(CLOSED_FORM[kind][rail], wrt)


def test_boolean_difference_examples():
    assert boolean_difference(GateKind.XOR, OutputRail.O, Rail.A).is_constant(0)
    d = boolean_difference(GateKind.XOR, OutputRail.O, Rail.A_BAR)
    assert d.is_constant_on_valid(1)
    assert not d.is_constant(1)  # equals B XOR B_bar once B and B_bar vary independently
    assert boolean_difference(GateKind.XOR, OutputRail.O_BAR, Rail.B).matches(lambda A, A_bar, B_bar: 1 - A)
    assert boolean_difference(GateKind.XOR, OutputRail.O_BAR, Rail.A_BAR).is_constant(0)
    assert boolean_difference(GateKind.AND, OutputRail.O, Rail.A).is_constant(0)


def test_xor_differences_table():
    for (rail, wrt), (_, fn) in XOR_DIFFERENCES.items():
        assert boolean_difference(GateKind.XOR, rail, wrt).matches(fn), (rail, wrt)


@kinds
def test_unread_rails_have_zero_difference(kind):
    assert boolean_difference(kind, OutputRail.O, Rail.A).is_constant(0)
    assert boolean_difference(kind, OutputRail.O_BAR, Rail.A_BAR).is_constant(0)


@kinds
def test_single_fault_exhaustive(kind):
    m = single_fault_exhaustive_gate(kind)
    assert m.trials == 128
    assert m.total(Outcome.SDC) == 0 and m.ok
    assert m.total(Outcome.MASKED) + m.total(Outcome.DETECTED) == 128


def test_single_fault_examples():
    out = eval_gate(GateKind.XOR, RailPair(1, 0), RailPair(1, 0), [(LocalFaultSite.A_BAR, 1)])
    assert classify([eval_gate(GateKind.XOR, RailPair(1, 0), RailPair(1, 0))], [out]) is Outcome.DETECTED
    out = eval_gate(GateKind.AND, RailPair(0, 1), RailPair(0, 1), [(LocalFaultSite.A, 1)])
    assert classify([RailPair(0, 1)], [out]) is Outcome.MASKED


def test_corrupted_wiring_produces_sdc():
    bad = dict(WIRING)
    # O_bar cell reads B only: a fault on B now flips both rails together
    bad[GateKind.AND] = (WIRING[GateKind.AND][0], RailExpression(Rail.B, Rail.B, Rail.B, Rail.B))
    m = single_fault_exhaustive_gate(GateKind.AND, bad)
    assert not m.ok


def test_local_site_labels_round_trip():
    assert len(LocalFaultSite) == 16
    for s in LocalFaultSite:
        assert LocalFaultSite.from_label(s.label) is s
    assert LocalFaultSite.O_BAR_PROD2.label == "O_bar.prod2"


@pytest.mark.parametrize(
    "actual, expected",
    [([RailPair(1, 1)], Outcome.DETECTED), ([RailPair(1, 0)], Outcome.MASKED), ([RailPair(0, 1)], Outcome.SDC)],
)
def test_classify_examples(actual, expected):
    assert classify([RailPair(1, 0)], actual) is expected


def test_classify_length_mismatch():
    with pytest.raises(ValueError):
        classify([RailPair(1, 0)], [])


@kinds
def test_nonvalid_inputs_never_doubly_wrong(kind):
    assert nonvalid_input_violations(kind) == []
    for corrupt in NONVALID_PAIRS:
        for other in VALID_PAIRS:
            for a, b in ((corrupt, other), (other, corrupt)):
                out = eval_gate(kind, a, b)
                assert out in ALL_PAIRS


pairs = st.sampled_from(ALL_PAIRS)
faults = st.lists(st.tuples(st.sampled_from(list(LocalFaultSite)), st.integers(0, 1)), max_size=6)


@given(st.sampled_from(list(GateKind)), pairs, pairs, faults)
def test_eval_gate_total_and_outcome_exclusive(kind, a, b, fs):
    out = eval_gate(kind, a, b, fs)
    assert out.hi in (0, 1) and out.lo in (0, 1)
    if a.is_valid() and b.is_valid():
        good = eval_gate(kind, a, b)
        outcome = classify([good], [out])
        assert (outcome is Outcome.DETECTED) == (not out.is_valid())
        assert (outcome is Outcome.MASKED) == (out == good)


@given(st.sampled_from(list(GateKind)), pairs, pairs, st.sampled_from(list(LocalFaultSite)), st.integers(0, 1))
def test_output_terminal_fault_equals_out_node_fault(kind, a, b, _site, pol):
    assert eval_gate(kind, a, b, [(LocalFaultSite.O, pol)]) == eval_gate(kind, a, b, [(LocalFaultSite.O_OUT, pol)])
    assert eval_gate(kind, a, b, [(LocalFaultSite.O_BAR, pol)]) == eval_gate(kind, a, b, [(LocalFaultSite.O_BAR_OUT, pol)])
