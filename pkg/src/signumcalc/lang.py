"""Expression language: tokenizer, recursive-descent parser, printers.

Grammar (resolved against a concrete dimension m at parse time):

    expr   := ["-"] term (("+"|"-") term)*
    term   := primary ("*" primary | "/" primary)*
    primary:= OP "(" expr ")" | FAMILY "(" lam ")" | "delta" ["[" ints "]"]
            | "xmono" "[" ints "]" primary | coeff-atom
    coeff  := number | "m" | "L" | "a_m" ["^" int] | "pi" "^" "(" frac ")"
            | "i" | "c" digits | "(" coeff-expr ")"
    lam    := linear combination of rationals, "m" and "L"

A term may contain at most one distribution-valued primary; the remaining
primaries multiply into its coefficient.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .canon import (
    DIST, SIG, DeltaDeriv, DistExpr, OmegaDelta, RadT, SigT, Term,
    mono_zero, normalize,
)
from .clifford import blade_indices
from .scalars import Coefficient, ExclusionSet, Lambda


class SyntaxErrorAt(Exception):
    def __init__(self, message: str, pos: int, expected=()):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos
        self.expected = tuple(expected)


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LamAst:
    lcoef: int
    mcoef: int
    const: Fraction


@dataclass(frozen=True)
class CoeffAtom:
    kind: str            # num | m | L | am | pi | i | c
    value: Union[Fraction, int, str, None] = None


@dataclass(frozen=True)
class FamilyAtom:
    tag: str
    lam: LamAst


@dataclass(frozen=True)
class DeltaAtom:
    beta: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class XMono:
    indices: tuple[int, ...]
    inner: "Factor"


@dataclass(frozen=True)
class OpApp:
    op: str
    axis: Optional[int]
    inner: "ExprAst"


Factor = Union[FamilyAtom, DeltaAtom, XMono, OpApp]


@dataclass(frozen=True)
class TermAst:
    coeffs: tuple[CoeffAtom, ...]
    inv: tuple[bool, ...]          # per coefficient atom: divided?
    factor: Optional[Factor]
    negated: bool = False


@dataclass(frozen=True)
class ExprAst:
    terms: tuple[TermAst, ...]


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<num>\d+(?:/\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()\[\],])
  | (?P<ws>\s+)
""", re.VERBOSE)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        mobj = _TOKEN_RE.match(text, pos)
        if not mobj:
            raise SyntaxErrorAt(f"unexpected character {text[pos]!r}", pos)
        kind = mobj.lastgroup
        if kind != "ws":
            out.append((kind, mobj.group(), pos))
        pos = mobj.end()
    out.append(("eof", "", len(text)))
    return out


FAMILIES = ("Tstar", "Ustar", "sTstar", "sUstar", "T", "U", "sT", "sU")

_PLAIN_OPS = (
    "mulx", "mulr2", "mulr", "mulomega", "euler", "dirac", "dop", "gamma",
    "gammaconj", "laplace", "lapbel", "zstar", "z", "divx", "divr2", "divr",
    "omegadr", "invrdomegaconj", "invrdomega", "dr2", "dr", "domega",
    "invrdr", "invr2lb", "invr2zstar", "vee", "wedge",
)
_AXIS_OPS = ("mulx", "partial", "dj", "mulomega", "domega", "divxjr2",
             "lblade", "rblade")


def resolve_op_name(name: str) -> Optional[tuple[str, Optional[int]]]:
    """Map a surface operator name to (catalog id, axis)."""
    for base in _AXIS_OPS:
        if name.startswith(base) and name[len(base):].isdigit():
            axis = int(name[len(base):])
            cid = {"mulx": "mulxj", "partial": "partialxj", "dj": "dj",
                   "mulomega": "mulomegaj", "domega": "domegaj",
                   "divxjr2": "divxjr2", "lblade": "lblade",
                   "rblade": "rblade"}[base]
            return cid, axis
    if name in _PLAIN_OPS:
        return name, None
    return None


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str):
        kind, tok, pos = self.next()
        if tok != value:
            raise SyntaxErrorAt(f"expected {value!r}, found {tok!r}", pos,
                                 expected=(value,))
        return tok

    # -- lambda expressions -------------------------------------------------

    def parse_lam(self) -> LamAst:
        lcoef, mcoef, const = 0, 0, Fraction(0)
        sign = 1
        expect_operand = True
        while True:
            kind, tok, pos = self.peek()
            if tok == "-" :
                self.next()
                sign = -sign
                expect_operand = True
                continue
            if tok == "+":
                self.next()
                expect_operand = True
                continue
            if kind == "num":
                self.next()
                val = Fraction(tok)
                nk, nt, _ = self.peek()
                if nt == "*":
                    self.next()
                    k2, t2, p2 = self.next()
                    if t2 == "m":
                        mcoef += sign * int(val)
                    elif t2 == "L":
                        lcoef += sign * int(val)
                    else:
                        raise SyntaxErrorAt("expected m or L", p2)
                else:
                    const += sign * val
                sign = 1
                expect_operand = False
            elif tok == "m":
                self.next()
                mcoef += sign
                sign = 1
                expect_operand = False
            elif tok == "L":
                self.next()
                lcoef += sign
                sign = 1
                expect_operand = False
            elif tok == "(":
                self.next()
                inner = self.parse_lam()
                self.expect(")")
                lcoef += sign * inner.lcoef
                mcoef += sign * inner.mcoef
                const += sign * inner.const
                sign = 1
                expect_operand = False
            else:
                if expect_operand:
                    raise SyntaxErrorAt("expected a lambda operand", pos)
                return LamAst(lcoef, mcoef, const)

    # -- multi-indices --------------------------------------------------------

    def parse_indices(self) -> tuple[int, ...]:
        self.expect("[")
        vals = []
        while True:
            kind, tok, pos = self.next()
            if kind != "num":
                raise SyntaxErrorAt("expected an exponent", pos)
            vals.append(int(tok))
            kind, tok, pos = self.next()
            if tok == "]":
                return tuple(vals)
            if tok != ",":
                raise SyntaxErrorAt("expected ',' or ']'", pos)

    # -- terms / factors -------------------------------------------------------

    def parse_expr(self) -> ExprAst:
        terms = []
        negate = False
        kind, tok, _ = self.peek()
        if tok == "-":
            self.next()
            negate = True
        terms.append(self.parse_term(negate))
        while True:
            kind, tok, _ = self.peek()
            if tok == "+":
                self.next()
                terms.append(self.parse_term(False))
            elif tok == "-":
                self.next()
                terms.append(self.parse_term(True))
            else:
                return ExprAst(tuple(terms))

    def parse_term(self, negated: bool) -> TermAst:
        coeffs: list[CoeffAtom] = []
        invs: list[bool] = []
        factor: Optional[Factor] = None
        divide_next = False
        while True:
            item = self.parse_primary()
            if isinstance(item, CoeffAtom):
                coeffs.append(item)
                invs.append(divide_next)
            else:
                if factor is not None:
                    raise SyntaxErrorAt("product of two distribution factors",
                                        self.peek()[2])
                if divide_next:
                    raise SyntaxErrorAt("cannot divide by a distribution",
                                        self.peek()[2])
                factor = item
            kind, tok, _ = self.peek()
            if tok == "*":
                self.next()
                divide_next = False
            elif tok == "/":
                self.next()
                divide_next = True
            else:
                return TermAst(tuple(coeffs), tuple(invs), factor, negated)

    def parse_primary(self):
        kind, tok, pos = self.peek()
        if kind == "num":
            self.next()
            return CoeffAtom("num", Fraction(tok))
        if tok == "(":
            self.next()
            inner = self.parse_coeff_expr()
            self.expect(")")
            return inner
        if kind != "name":
            raise SyntaxErrorAt(f"unexpected token {tok!r}", pos)
        if tok in FAMILIES:
            self.next()
            self.expect("(")
            lam = self.parse_lam()
            self.expect(")")
            return FamilyAtom(tok, lam)
        if tok == "delta":
            self.next()
            kind2, tok2, _ = self.peek()
            beta = self.parse_indices() if tok2 == "[" else None
            return DeltaAtom(beta)
        if tok == "xmono":
            self.next()
            idx = self.parse_indices()
            inner = self.parse_primary()
            if isinstance(inner, CoeffAtom):
                raise SyntaxErrorAt("xmono needs a distribution factor", pos)
            return XMono(idx, inner)
        resolved = resolve_op_name(tok)
        if resolved is not None:
            self.next()
            self.expect("(")
            inner = self.parse_expr()
            self.expect(")")
            return OpApp(resolved[0], resolved[1], inner)
        if tok == "a_m":
            self.next()
            exp = 1
            if self.peek()[1] == "^":
                self.next()
                neg = False
                if self.peek()[1] == "-":
                    self.next()
                    neg = True
                k2, t2, p2 = self.next()
                if k2 != "num":
                    raise SyntaxErrorAt("expected integer exponent", p2)
                exp = -int(t2) if neg else int(t2)
            return CoeffAtom("am", exp)
        if tok == "pi":
            self.next()
            self.expect("^")
            self.expect("(")
            neg = False
            if self.peek()[1] == "-":
                self.next()
                neg = True
            k2, t2, p2 = self.next()
            if k2 != "num":
                raise SyntaxErrorAt("expected exponent", p2)
            q = Fraction(t2)
            self.expect(")")
            if neg:
                q = -q
            if (2 * q).denominator != 1:
                raise SyntaxErrorAt("pi exponents live in (1/2)Z", p2)
            return CoeffAtom("pi", q)
        if tok == "i":
            self.next()
            return CoeffAtom("i")
        if tok == "m":
            self.next()
            return CoeffAtom("m")
        if tok == "L":
            self.next()
            return CoeffAtom("L")
        if re.fullmatch(r"c\d+", tok):
            self.next()
            return CoeffAtom("c", tok)
        raise SyntaxErrorAt(f"unknown name {tok!r}", pos)

    def parse_coeff_expr(self) -> CoeffAtom:
        """A parenthesized rational/m/L combination folded to one atom."""
        lam = self.parse_lam()
        return CoeffAtom("mexpr", (lam.lcoef, lam.mcoef, lam.const))


def parse(text: str) -> ExprAst:
    p = _Parser(text)
    ast = p.parse_expr()
    kind, tok, pos = p.peek()
    if kind != "eof":
        raise SyntaxErrorAt(f"trailing input {tok!r}", pos)
    return ast


# ---------------------------------------------------------------------------
# AST -> DistExpr evaluation
# ---------------------------------------------------------------------------

def _coeff_value(atom: CoeffAtom, inv: bool, m: int) -> Coefficient:
    if atom.kind == "num":
        c = Coefficient.rational(atom.value)
    elif atom.kind == "m":
        c = Coefficient.rational(m)
    elif atom.kind == "L":
        c = Coefficient.lam_poly([0, 1])
    elif atom.kind == "am":
        c = Coefficient.unit(am=atom.value)
    elif atom.kind == "pi":
        c = Coefficient.unit(pi_half=int(2 * atom.value))
    elif atom.kind == "i":
        c = Coefficient.i()
    elif atom.kind == "c":
        c = Coefficient.sym(atom.value)
    elif atom.kind == "mexpr":
        lcoef, mcoef, const = atom.value
        base = Coefficient.rational(const + mcoef * m)
        if lcoef:
            base = base + Coefficient.lam_poly([0, lcoef])
        c = base
    else:
        raise ValueError(f"unknown coefficient atom {atom.kind}")
    return c.inverse() if inv else c


def _lam_value(lam: LamAst, m: int) -> Lambda:
    return Lambda(lam.lcoef, lam.const + lam.mcoef * m)


def ast_uses_generic(ast: ExprAst) -> bool:
    def factor_generic(f) -> bool:
        if isinstance(f, FamilyAtom):
            return f.lam.lcoef != 0
        if isinstance(f, XMono):
            return factor_generic(f.inner)
        if isinstance(f, OpApp):
            return any(term_generic(t) for t in f.inner.terms)
        return False

    def term_generic(t: TermAst) -> bool:
        if any(c.kind == "L" or (c.kind == "mexpr" and c.value[0])
               for c in t.coeffs):
            return True
        return t.factor is not None and factor_generic(t.factor)

    return any(term_generic(t) for t in ast.terms)


def to_expr(ast: ExprAst, m: int, mode: Optional[str] = None) -> DistExpr:
    from .families import make
    from .ops import apply

    if mode is None:
        mode = "generic" if ast_uses_generic(ast) else "concrete"

    def eval_factor(f: Factor) -> DistExpr:
        if isinstance(f, FamilyAtom):
            return make(f.tag, _lam_value(f.lam, m), m, mode)
        if isinstance(f, DeltaAtom):
            beta = f.beta or ()
            if len(beta) > m:
                raise SyntaxErrorAt("delta multi-index longer than m", 0)
            beta = tuple(beta) + (0,) * (m - len(beta))
            return DistExpr((Term(Coefficient.one(), 0, mono_zero(m),
                                  DeltaDeriv(beta)),), DIST, m, mode)
        if isinstance(f, XMono):
            inner = eval_factor(f.inner)
            idx = tuple(f.indices) + (0,) * (m - len(f.indices))
            if len(f.indices) > m:
                raise SyntaxErrorAt("xmono multi-index longer than m", 0)
            for j, a in enumerate(idx, start=1):
                for _ in range(a):
                    inner = inner.mul_xj(j)
            return normalize(inner)
        if isinstance(f, OpApp):
            inner = eval_expr(f.inner)
            if f.op == "lblade":
                return normalize(inner.lmul_blade(1 << (f.axis - 1)))
            if f.op == "rblade":
                return normalize(inner.rmul_blade(1 << (f.axis - 1)))
            return apply(f.op, inner, axis=f.axis).expr
        raise TypeError(f)

    def eval_expr(e: ExprAst) -> DistExpr:
        total: Optional[DistExpr] = None
        for t in e.terms:
            coeff = Coefficient.one()
            for atom, inv in zip(t.coeffs, t.inv):
                coeff = coeff * _coeff_value(atom, inv, m)
            if t.factor is None:
                if not coeff.is_zero():
                    raise SyntaxErrorAt(
                        "coefficient-only term (only literal 0 allowed)", 0)
                continue
            part = eval_factor(t.factor).scale(coeff)
            if t.negated:
                part = -part
            total = part if total is None else total + part
        if total is None:
            return DistExpr.zero(m, DIST, mode)
        return normalize(total)

    return eval_expr(ast)


def parse_expr(text: str, m: int, mode: Optional[str] = None) -> DistExpr:
    return to_expr(parse(text), m, mode)


# ---------------------------------------------------------------------------
# printers
# ---------------------------------------------------------------------------

def _frac_str(q: Fraction) -> str:
    return str(q)


def format_lam(lam: Lambda) -> str:
    if lam.lcoef == 0:
        return _frac_str(lam.const)
    if lam.const == 0:
        return "L"
    return f"L{'+' if lam.const > 0 else '-'}{abs(lam.const)}"


def coeff_pieces(c: Coefficient) -> list[tuple[bool, str]]:
    """Split a coefficient into re-parseable monomial pieces.

    Each piece is (negative, product-string) with the product containing at
    most a rational, pi^(k/2), a_m^e, i, L factors and a constant symbol.
    """
    out = []
    for (sym, p, a, d), (re_, im) in sorted(
            c._t.items(), key=lambda kv: (kv[0][0] or "", kv[0][3],
                                          kv[0][1], kv[0][2])):
        for val, is_im in ((re_, False), (im, True)):
            if not val:
                continue
            neg = val < 0
            mag = -val if neg else val
            bits = []
            if mag != 1:
                bits.append(str(mag))
            if is_im:
                bits.append("i")
            if p:
                bits.append("pi^(" + str(Fraction(p, 2)) + ")")
            if a:
                bits.append("a_m" if a == 1 else f"a_m^{a}")
            for _ in range(d):
                bits.append("L")
            if sym:
                bits.append(sym)
            out.append((neg, "*".join(bits)))
    return out


def _term_body_plain(t: Term, m: int) -> str:
    bits = []
    if any(t.mono):
        bits.append("xmono[" + ",".join(str(a) for a in t.mono) + "]")
    if t.blade:
        for j in blade_indices(t.blade):
            bits.append(f"lblade{j}")
    carrier = t.carrier
    if isinstance(carrier, RadT):
        core = f"T({format_lam(carrier.lam)})"
    elif isinstance(carrier, SigT):
        core = f"sT({format_lam(carrier.lam)})"
    elif isinstance(carrier, DeltaDeriv):
        core = ("delta" if not any(carrier.beta) else
                "delta[" + ",".join(str(b) for b in carrier.beta) + "]")
    else:
        inner = ("delta" if not any(carrier.beta) else
                 "delta[" + ",".join(str(b) for b in carrier.beta) + "]")
        core = f"mulomega{carrier.j}({inner})"
    # blades / monomials wrap as prefix operators
    out = core
    for b in reversed(bits):
        if b.startswith("xmono"):
            out = f"{b}{out}"
        else:
            out = f"{b}({out})"
    return out


def _format_plain(e: DistExpr) -> str:
    from .families import recognize
    e = normalize(e)
    if not e.terms:
        return "0"
    matches, residual = recognize(e)
    pieces: list[tuple[bool, str]] = []

    def add_pieces(coeff: Coefficient, body: str):
        for neg, cs in coeff_pieces(coeff):
            pieces.append((neg, f"{cs}*{body}" if cs else body))

    for tag, lam, coeff in matches:
        add_pieces(coeff, f"{tag}({format_lam(lam)})")
    for t in residual.terms:
        add_pieces(t.coeff, _term_body_plain(t, e.m))
    out = ""
    for i, (neg, body) in enumerate(pieces):
        if neg:
            out += "-" + body
        elif i:
            out += "+" + body
        else:
            out += body
    syms = sorted(e.free_symbols())
    if syms:
        out += "  [free: " + ", ".join(syms) + "]"
    return out


_LATEX_TAGS = {"T": "T", "sT": "{}^{s}T", "U": "U", "sU": "{}^{s}U"}


def _format_latex(e: DistExpr) -> str:
    from .families import recognize
    e = normalize(e)
    if not e.terms:
        return "0"
    matches, residual = recognize(e)
    pieces = []
    for tag, lam, coeff in matches:
        pieces.append(f"({coeff})\\, {_LATEX_TAGS[tag]}_{{{format_lam(lam)}}}")
    for t in residual.terms:
        body = []
        if any(t.mono):
            body.append("x^{" + ",".join(map(str, t.mono)) + "}")
        if t.blade:
            body.append("e_{" + "".join(map(str, blade_indices(t.blade)))
                        + "}")
        c = t.carrier
        if isinstance(c, RadT):
            body.append(f"T_{{{format_lam(c.lam)}}}")
        elif isinstance(c, SigT):
            body.append(f"{{}}^{{s}}T_{{{format_lam(c.lam)}}}")
        elif isinstance(c, DeltaDeriv):
            d = ("\\partial^{" + ",".join(map(str, c.beta)) + "}"
                 if any(c.beta) else "")
            body.append(d + "\\delta(\\underline{x})")
        else:
            d = ("\\partial^{" + ",".join(map(str, c.beta)) + "}"
                 if any(c.beta) else "")
            body.append(f"\\omega_{{{c.j}}}" + d + "\\delta(\\underline{x})")
        pieces.append(f"({t.coeff})\\, " + "\\, ".join(body))
    return " + ".join(pieces)


_SCHEMA_VERSION = 1


def _coeff_json(c: Coefficient):
    out = []
    for (sym, p, a, d), (re_, im) in sorted(
            c._t.items(), key=lambda kv: (kv[0][0] or "", kv[0][1:])):
        out.append({"sym": sym, "pi_half": p, "am": a, "ldeg": d,
                    "re": str(re_), "im": str(im)})
    return out


def _coeff_from_json(items) -> Coefficient:
    table = {}
    for it in items:
        key = (it["sym"], it["pi_half"], it["am"], it["ldeg"])
        table[key] = (Fraction(it["re"]), Fraction(it["im"]))
    return Coefficient(table)


def _carrier_json(c):
    if isinstance(c, RadT):
        return {"kind": "T", "lam": {"l": c.lam.lcoef, "c": str(c.lam.const)}}
    if isinstance(c, SigT):
        return {"kind": "sT", "lam": {"l": c.lam.lcoef, "c": str(c.lam.const)}}
    if isinstance(c, DeltaDeriv):
        return {"kind": "delta", "beta": list(c.beta)}
    return {"kind": "omegadelta", "j": c.j, "beta": list(c.beta)}


def _carrier_from_json(d, m: int):
    if d["kind"] in ("T", "sT"):
        lam = Lambda(d["lam"]["l"], Fraction(d["lam"]["c"]))
        return RadT(lam) if d["kind"] == "T" else SigT(lam)
    if d["kind"] == "delta":
        return DeltaDeriv(tuple(d["beta"]))
    return OmegaDelta(d["j"], tuple(d["beta"]))


def to_structured(e: DistExpr) -> dict:
    e = normalize(e)
    return {
        "version": _SCHEMA_VERSION,
        "m": e.m,
        "mode": e.mode,
        "parity": e.parity,
        "terms": [{
            "coeff": _coeff_json(t.coeff),
            "blade": list(blade_indices(t.blade)),
            "monomial": list(t.mono),
            "carrier": _carrier_json(t.carrier),
        } for t in e.terms],
        "exclusions": [{"kind": k, "mcoef": mc, "offset": str(off)}
                       for k, mc, off in sorted(e.exclusions.entries())],
        "constraints": [_coeff_json(eq)
                        for eq in e.constraints.equations()],
        "constants": [{"sym": c.sym, "origin": c.origin, "parity": c.parity}
                      for c in e.constants],
    }


def from_structured(d: dict) -> DistExpr:
    from .scalars import ConstraintSet
    from .canon import ConstantInfo
    m = d["m"]
    terms = []
    for td in d["terms"]:
        blade = 0
        for j in td["blade"]:
            blade |= 1 << (j - 1)
        terms.append(Term(_coeff_from_json(td["coeff"]), blade,
                          tuple(td["monomial"]),
                          _carrier_from_json(td["carrier"], m)))
    excl = ExclusionSet([(x["kind"], x["mcoef"], Fraction(x["offset"]))
                         for x in d.get("exclusions", ())])
    cons = ConstraintSet([_coeff_from_json(x)
                          for x in d.get("constraints", ())])
    consts = tuple(ConstantInfo(x["sym"], x["origin"], x["parity"])
                   for x in d.get("constants", ()))
    return normalize(DistExpr(tuple(terms), d["parity"], m, d["mode"],
                              excl, cons, consts))


def format_expr(e, style: str = "plain") -> str:
    from .ops import OpResult
    if isinstance(e, OpResult):
        e = e.expr
    if style == "plain":
        return _format_plain(e)
    if style == "latex":
        return _format_latex(e)
    if style == "structured":
        return json.dumps(to_structured(e), indent=None, sort_keys=True)
    raise ValueError(f"unknown style {style!r}")


# ---------------------------------------------------------------------------
# AST formatting (round-trip surface)
# ---------------------------------------------------------------------------

def format_coeff_atom(a: CoeffAtom) -> str:
    if a.kind == "num":
        return str(a.value)
    if a.kind == "m":
        return "m"
    if a.kind == "L":
        return "L"
    if a.kind == "am":
        return "a_m" if a.value == 1 else f"a_m^{a.value}"
    if a.kind == "pi":
        return f"pi^({a.value})"
    if a.kind == "i":
        return "i"
    if a.kind == "c":
        return a.value
    if a.kind == "mexpr":
        lcoef, mcoef, const = a.value
        bits = []
        if lcoef:
            bits.append("L" if lcoef == 1 else f"{lcoef}*L")
        if mcoef:
            s = "m" if mcoef == 1 else f"{mcoef}*m" if mcoef != -1 else "-m"
            bits.append(s if not bits or s.startswith("-") else "+" + s)
        if const or not bits:
            s = str(const)
            bits.append(s if not bits or s.startswith("-") else "+" + s)
        return "(" + "".join(bits) + ")"
    raise ValueError(a.kind)


def format_lam_ast(lam: LamAst) -> str:
    bits = []
    if lam.lcoef:
        bits.append("L" if lam.lcoef == 1 else f"{lam.lcoef}*L")
    if lam.mcoef:
        s = ("m" if lam.mcoef == 1 else
             "-m" if lam.mcoef == -1 else f"{lam.mcoef}*m")
        bits.append(s if not bits or s.startswith("-") else "+" + s)
    if lam.const or not bits:
        s = str(lam.const)
        bits.append(s if not bits or s.startswith("-") else "+" + s)
    return "".join(bits)


def format_factor(f: Factor) -> str:
    if isinstance(f, FamilyAtom):
        return f"{f.tag}({format_lam_ast(f.lam)})"
    if isinstance(f, DeltaAtom):
        if f.beta is None:
            return "delta"
        return "delta[" + ",".join(map(str, f.beta)) + "]"
    if isinstance(f, XMono):
        return ("xmono[" + ",".join(map(str, f.indices)) + "]"
                + format_factor(f.inner))
    if isinstance(f, OpApp):
        base = {"mulxj": "mulx", "partialxj": "partial", "dj": "dj",
                "mulomegaj": "mulomega", "domegaj": "domega",
                "divxjr2": "divxjr2", "lblade": "lblade",
                "rblade": "rblade"}.get(f.op, f.op)
        name = base + (str(f.axis) if f.axis is not None else "")
        return f"{name}({format_ast(f.inner)})"
    raise TypeError(f)


def format_ast(ast: ExprAst) -> str:
    parts = []
    for i, t in enumerate(ast.terms):
        bits = [("/" if inv else "*") + format_coeff_atom(c)
                for c, inv in zip(t.coeffs, t.inv)]
        body = "".join(bits).lstrip("*")
        if t.factor is not None:
            fs = format_factor(t.factor)
            body = f"{body}*{fs}" if body else fs
        if not body:
            body = "0"
        if t.negated:
            parts.append("-" + body)
        elif i:
            parts.append("+" + body)
        else:
            parts.append(body)
    return "".join(parts)


__all__ = [
    "CoeffAtom", "DeltaAtom", "ExprAst", "FamilyAtom", "LamAst", "OpApp",
    "SyntaxErrorAt", "TermAst", "XMono", "ast_uses_generic", "format_ast",
    "format_expr", "format_factor", "format_lam", "from_structured", "parse",
    "parse_expr", "to_expr", "to_structured", "tokenize",
]
