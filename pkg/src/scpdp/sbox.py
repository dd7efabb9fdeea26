"""Composite-field AES S-box: arithmetic oracles and gate-level generator.

GF(2^8) uses the AES polynomial x^8+x^4+x^3+x+1.  The composite field is
GF((2^4)^2) with GF(2^4) reduced by x^4+x+1 and the extension x^2+x+lambda;
an element is packed as ``high << 4 | low`` meaning ``high*X + low``.

The generated datapath::

    x -> delta -> (h, l)
    d  = lambda*h^2 ^ (h ^ l)*l
    h' = h * d^-1 ;  l' = (h ^ l) * d^-1
    y  = (affine . delta^-1)(h', l') ^ 0x63

The inverse isomorphism and the affine matrix are pre-multiplied into one
output matrix.  The GF(2^4) inverter is a two-level XOR-of-ANDs network
derived from its algebraic normal form.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .netlist import Gate, SingleRailNetlist, parse_netlist, serialize

AES_POLY = 0x11B
GF16_POLY = 0x13
AFFINE_CONST = 0x63


def gf_mul(a: int, b: int, poly: int, bits: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> bits:
            a ^= poly
    return r


def gf256_mul(a: int, b: int) -> int:
    return gf_mul(a, b, AES_POLY, 8)


def gf16_mul(a: int, b: int, poly: int = GF16_POLY) -> int:
    return gf_mul(a, b, poly, 4)


@lru_cache(maxsize=None)
def _gf256_inverse_table() -> tuple[int, ...]:
    # brute force: x * y == 1
    table = [0] * 256
    for x in range(1, 256):
        table[x] = next(y for y in range(1, 256) if gf256_mul(x, y) == 1)
    return tuple(table)


def gf256_inverse(x: int) -> int:
    return _gf256_inverse_table()[x]


def gf16_inverse(x: int, poly: int = GF16_POLY) -> int:
    if x == 0:
        return 0
    return next(y for y in range(1, 16) if gf16_mul(x, y, poly) == 1)


def parity(x: int) -> int:
    return bin(x).count("1") & 1


def mat_apply(rows: Sequence[int], x: int) -> int:
    """Apply a GF(2) matrix given as row bitmasks (row i -> output bit i)."""
    return sum(parity(r & x) << i for i, r in enumerate(rows))


def mat_mul(a: Sequence[int], b: Sequence[int]) -> list[int]:
    """Rows of ``a @ b``."""
    n = len(b)
    cols = [mat_apply(b, 1 << j) for j in range(n)]  # columns of b as ints
    return [sum(parity(r & cols[j]) << j for j in range(n)) for r in a]


def mat_from_map(fn, n: int) -> list[int]:
    """Matrix of a linear map on n-bit vectors, from its values on the basis."""
    cols = [fn(1 << j) for j in range(n)]
    return [sum(((cols[j] >> i) & 1) << j for j in range(n)) for i in range(n)]


def mat_inverse(rows: Sequence[int]) -> list[int]:
    n = len(rows)
    aug = [(rows[i], 1 << i) for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if (aug[r][0] >> col) & 1), None)
        if piv is None:
            raise ValueError("matrix is singular over GF(2)")
        aug[col], aug[piv] = aug[piv], aug[col]
        for r in range(n):
            if r != col and (aug[r][0] >> col) & 1:
                aug[r] = (aug[r][0] ^ aug[col][0], aug[r][1] ^ aug[col][1])
    return [aug[i][1] for i in range(n)]


AFFINE_MATRIX = tuple(
    sum(1 << ((i + k) % 8) for k in (0, 4, 5, 6, 7)) for i in range(8)
)


def affine(x: int) -> int:
    return mat_apply(AFFINE_MATRIX, x) ^ AFFINE_CONST


def canonical_sbox(x: int) -> int:
    """AES SubBytes: GF(2^8) inverse (0 -> 0) followed by the affine transform."""
    return affine(gf256_inverse(x & 0xFF))


def composite_mul(x: int, y: int, lam: int, poly: int = GF16_POLY) -> int:
    h1, l1, h2, l2 = x >> 4, x & 15, y >> 4, y & 15
    hh = gf16_mul(h1, h2, poly)
    high = hh ^ gf16_mul(h1, l2, poly) ^ gf16_mul(l1, h2, poly)
    low = gf16_mul(hh, lam, poly) ^ gf16_mul(l1, l2, poly)
    return high << 4 | low


def extension_irreducible(lam: int, poly: int = GF16_POLY) -> bool:
    """x^2 + x + lam has no root in GF(2^4)."""
    return all(gf16_mul(t, t, poly) ^ t != lam for t in range(16))


@dataclass(frozen=True)
class CompositeFieldParams:
    delta: tuple[int, ...]
    delta_inv: tuple[int, ...]
    lam: int
    gf16_poly: int = GF16_POLY
    affine: tuple[int, ...] = AFFINE_MATRIX
    affine_const: int = AFFINE_CONST

    def to_composite(self, x: int) -> int:
        return mat_apply(self.delta, x)

    def from_composite(self, y: int) -> int:
        return mat_apply(self.delta_inv, y)

    @property
    def output_matrix(self) -> list[int]:
        return mat_mul(self.affine, self.delta_inv)

    def validate(self) -> None:
        if not extension_irreducible(self.lam, self.gf16_poly):
            raise ValueError(f"x^2+x+{self.lam:#x} is reducible over GF(2^4)")
        if mat_mul(self.delta, self.delta_inv) != [1 << i for i in range(8)]:
            raise ValueError("delta and delta_inv are not inverse matrices")
        for x in (0x02, 0x03, 0x53, 0xCA):
            for y in (0x02, 0x1F, 0x80):
                if self.to_composite(gf256_mul(x, y)) != composite_mul(
                    self.to_composite(x), self.to_composite(y), self.lam, self.gf16_poly
                ):
                    raise ValueError("delta is not a field isomorphism")


def default_params() -> CompositeFieldParams:
    """Smallest irreducible lambda; delta maps x to the smallest root of the AES polynomial."""
    lam = next(l for l in range(1, 16) if extension_irreducible(l))

    def pw(b: int, e: int) -> int:
        r = 1
        for _ in range(e):
            r = composite_mul(r, b, lam)
        return r

    def aes_poly_at(b: int) -> int:
        acc = 0
        for e in (8, 4, 3, 1, 0):
            acc ^= pw(b, e)
        return acc

    beta = next(b for b in range(2, 256) if aes_poly_at(b) == 0)
    delta = mat_from_map(lambda v: _xor_all(pw(beta, i) for i in range(8) if (v >> i) & 1), 8)
    params = CompositeFieldParams(tuple(delta), tuple(mat_inverse(delta)), lam)
    params.validate()
    return params


def _xor_all(values) -> int:
    acc = 0
    for v in values:
        acc ^= v
    return acc


def composite_inverse(x: int, params: CompositeFieldParams) -> int:
    """Inverse in GF(2^8) computed through the composite-field identity."""
    y = params.to_composite(x)
    h, l = y >> 4, y & 15
    p = params.gf16_poly
    d = gf16_mul(gf16_mul(h, h, p), params.lam, p) ^ gf16_mul(h ^ l, l, p)
    di = gf16_inverse(d, p)
    return params.from_composite(gf16_mul(h, di, p) << 4 | gf16_mul(h ^ l, di, p))


# --------------------------------------------------------------------------
# gate-level construction


class NetlistBuilder:
    """Accumulates 2-input gates with generated signal names."""

    def __init__(self, prefix: str = "t"):
        self.prefix = prefix
        self.gates: list[Gate] = []
        self._n = 0
        self._and_cache: dict[frozenset, str] = {}

    def fresh(self) -> str:
        self._n += 1
        return f"{self.prefix}{self._n}"

    def gate(self, kind: str, *ins: str, out: str | None = None) -> str:
        out = out or self.fresh()
        self.gates.append(Gate(kind, out, tuple(ins)))
        return out

    def xor_tree(self, terms: Sequence[str], invert: bool = False, out: str | None = None) -> str:
        terms = list(terms)
        if not terms:
            terms = ["const0"]
        if len(terms) == 1:
            if invert or out is not None:
                return self.gate("not" if invert else "buf", terms[0], out=out)
            return terms[0]
        while len(terms) > 2:
            nxt = [self.gate("xor", terms[i], terms[i + 1]) for i in range(0, len(terms) - 1, 2)]
            if len(terms) % 2:
                nxt.append(terms[-1])
            terms = nxt
        return self.gate("xnor" if invert else "xor", terms[0], terms[1], out=out)

    def linear(self, rows: Sequence[int], ins: Sequence[str], const: int = 0, outs: Sequence[str] | None = None) -> list[str]:
        result = []
        for i, row in enumerate(rows):
            terms = [ins[j] for j in range(len(ins)) if (row >> j) & 1]
            result.append(self.xor_tree(terms, bool((const >> i) & 1), outs[i] if outs else None))
        return result

    def monomial(self, variables: Sequence[str]) -> str:
        key = frozenset(variables)
        if len(key) == 1:
            return next(iter(key))
        if key not in self._and_cache:
            ordered = sorted(key, key=list(variables).index)
            self._and_cache[key] = self.gate("and", self.monomial(ordered[:-1]), ordered[-1])
        return self._and_cache[key]

    # GF(2^4) blocks, nibble bit 0 first

    def gf16_mul(self, a: Sequence[str], b: Sequence[str], poly: int = GF16_POLY) -> list[str]:
        coeff = []
        for k in range(7):
            terms = [self.gate("and", a[i], b[k - i]) for i in range(4) if 0 <= k - i < 4]
            coeff.append(self.xor_tree(terms))
        reduced = [x_power_mod(k, poly) for k in range(7)]
        return [self.xor_tree([coeff[k] for k in range(7) if (reduced[k] >> m) & 1]) for m in range(4)]

    def gf16_square(self, a: Sequence[str], poly: int = GF16_POLY) -> list[str]:
        return self.linear(mat_from_map(lambda v: gf16_mul(v, v, poly), 4), a)

    def gf16_scale(self, a: Sequence[str], lam: int, poly: int = GF16_POLY) -> list[str]:
        return self.linear(mat_from_map(lambda v: gf16_mul(v, lam, poly), 4), a)

    def gf16_invert(self, a: Sequence[str], poly: int = GF16_POLY) -> list[str]:
        outs = []
        for m, monos in enumerate(anf([gf16_inverse(v, poly) for v in range(16)], 4)):
            terms = [self.monomial([a[j] for j in range(4) if (mono >> j) & 1]) for mono in monos]
            outs.append(self.xor_tree(terms))
        return outs

    def netlist(self, inputs: Sequence[str], outputs: Sequence[str]) -> SingleRailNetlist:
        text = "input " + " ".join(inputs) + "\noutput " + " ".join(outputs) + "\n"
        text += "".join(f"gate {g.kind} {g.out} {' '.join(g.ins)}\n" for g in self.gates)
        return parse_netlist(text)


def x_power_mod(k: int, poly: int = GF16_POLY) -> int:
    r = 1
    for _ in range(k):
        r = gf16_mul(r, 2, poly)
    return r


def anf(table: Sequence[int], n: int, n_out: int | None = None) -> list[list[int]]:
    """Algebraic normal form per output bit: the monomials (input bitmasks) with coefficient 1."""
    result = []
    for m in range(n if n_out is None else n_out):
        coeffs = [(t >> m) & 1 for t in table]
        for i in range(n):  # binary Moebius transform
            for v in range(1 << n):
                if v >> i & 1:
                    coeffs[v] ^= coeffs[v ^ (1 << i)]
        result.append([v for v in range(1 << n) if coeffs[v]])
    return result


GF16_OPS = ("multiply", "square", "scale_lambda", "invert")


def gf16_ops(kind: str, params: CompositeFieldParams | None = None) -> SingleRailNetlist:
    """Stand-alone netlist for one GF(2^4) block over nibbles ``a0..a3`` (and ``b0..b3``)."""
    params = params or default_params()
    b = NetlistBuilder()
    a = [f"a{i}" for i in range(4)]
    ins = list(a)
    if kind == "multiply":
        bb = [f"b{i}" for i in range(4)]
        ins += bb
        res = b.gf16_mul(a, bb, params.gf16_poly)
    elif kind == "square":
        res = b.gf16_square(a, params.gf16_poly)
    elif kind == "scale_lambda":
        res = b.gf16_scale(a, params.lam, params.gf16_poly)
    elif kind == "invert":
        res = b.gf16_invert(a, params.gf16_poly)
    else:
        raise ValueError(f"unknown GF(2^4) block {kind!r}; expected one of {GF16_OPS}")
    outs = [f"y{i}" for i in range(4)]
    for r, o in zip(res, outs):
        b.gate("buf", r, out=o)
    return b.netlist(ins, outs)


def build_sbox_netlist(params: CompositeFieldParams | None = None) -> SingleRailNetlist:
    """8-input/8-output S-box netlist; input ``x0`` and output ``y0`` are the LSBs."""
    params = params or default_params()
    params.validate()
    p = params.gf16_poly
    b = NetlistBuilder()
    x = [f"x{i}" for i in range(8)]
    mapped = b.linear(params.delta, x)
    lo, hi = mapped[:4], mapped[4:]
    sq = b.gf16_square(hi, p)
    sl = b.gf16_scale(sq, params.lam, p)
    s = [b.gate("xor", hi[i], lo[i]) for i in range(4)]
    m = b.gf16_mul(s, lo, p)
    d = [b.gate("xor", sl[i], m[i]) for i in range(4)]
    di = b.gf16_invert(d, p)
    hi_inv = b.gf16_mul(hi, di, p)
    lo_inv = b.gf16_mul(s, di, p)
    y = [f"y{i}" for i in range(8)]
    b.linear(params.output_matrix, lo_inv + hi_inv, params.affine_const, y)
    return b.netlist(x, y)


def sbox_text(params: CompositeFieldParams | None = None) -> str:
    return serialize(build_sbox_netlist(params))


@dataclass
class SboxCheck:
    matches: int
    first_mismatch: int | None
    bijective: bool

    @property
    def ok(self) -> bool:
        return self.first_mismatch is None and self.bijective


def verify_sbox(n: SingleRailNetlist) -> SboxCheck:
    if len(n.inputs) != 8 or len(n.outputs) != 8:
        raise ValueError("S-box netlist must have 8 inputs and 8 outputs")
    table = n.truth_table()
    bad = [x for x in range(256) if table[x] != canonical_sbox(x)]
    return SboxCheck(256 - len(bad), bad[0] if bad else None, sorted(table) == list(range(256)))
