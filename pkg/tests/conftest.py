import random

import pytest
from hypothesis import strategies as st

from scpdp.netlist import ARITY, expand_dual_rail, parse_netlist
from scpdp.sbox import build_sbox_netlist

KINDS = sorted(ARITY)

XOR_TEXT = "input a b\noutput y\ngate xor y a b\n"
NOT_TEXT = "input a\noutput y\ngate not y a\n"
NAND_TEXT = "input a b\noutput y\ngate nand y a b\n"


def random_netlist_text(rng: random.Random, n_inputs: int, n_gates: int, n_outputs: int = 2) -> str:
    signals = [f"i{j}" for j in range(n_inputs)]
    lines = ["input " + " ".join(signals)]
    for g in range(n_gates):
        kind = rng.choice(KINDS)
        ins = [rng.choice(signals) for _ in range(ARITY[kind])]
        out = f"n{g}"
        lines.append(f"gate {kind} {out} {' '.join(ins)}")
        signals.append(out)
    outs = rng.sample(signals[n_inputs:] or signals, min(n_outputs, len(signals[n_inputs:]) or 1))
    lines.append("output " + " ".join(outs))
    return "\n".join(lines) + "\n"


@st.composite
def netlist_texts(draw, max_inputs=5, max_gates=12):
    seed = draw(st.integers(0, 2**32 - 1))
    n_in = draw(st.integers(1, max_inputs))
    n_g = draw(st.integers(1, max_gates))
    return random_netlist_text(random.Random(seed), n_in, n_g, draw(st.integers(1, 3)))


@pytest.fixture(scope="session")
def sbox():
    return build_sbox_netlist()


@pytest.fixture(scope="session")
def sbox_dual(sbox):
    return expand_dual_rail(sbox)


@pytest.fixture
def xor_dual():
    return expand_dual_rail(parse_netlist(XOR_TEXT))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
