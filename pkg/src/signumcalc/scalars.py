"""Exact scalar arithmetic for the distribution calculus.

Coefficients live in the ring generated by Gaussian rationals, half-integer
powers of pi, integer powers of the opaque sphere-area unit a_m, an optional
generic parameter symbol L (polynomially), and free constants c1, c2, ...
(linearly).  a_m is never expanded into pi and Gamma values; numeric
evaluation substitutes a floating value for it at a concrete dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Mapping, Optional, Union

Rat = Union[int, Fraction]


class DegreeOverflow(Exception):
    """A product would create a free-constant term of degree >= 2."""


class InconsistentConstraints(Exception):
    """A linear constraint system over free constants has no solution."""


# ---------------------------------------------------------------------------
# lambda values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lambda:
    """A lambda parameter: either a concrete rational or L + rational offset.

    ``lcoef`` is 0 (concrete) or 1 (generic); the dimension m is always folded
    into ``const`` by the caller, so ``const`` is a plain rational.
    """

    lcoef: int
    const: Fraction

    def __post_init__(self):
        if self.lcoef not in (0, 1):
            raise ValueError("lambda may contain L at most linearly")
        object.__setattr__(self, "const", Fraction(self.const))

    @staticmethod
    def concrete(value: Rat) -> "Lambda":
        return Lambda(0, Fraction(value))

    @staticmethod
    def generic(offset: Rat = 0) -> "Lambda":
        return Lambda(1, Fraction(offset))

    @property
    def is_generic(self) -> bool:
        return self.lcoef == 1

    def shift(self, delta: Rat) -> "Lambda":
        return Lambda(self.lcoef, self.const + Fraction(delta))

    def subs(self, value: Rat) -> "Lambda":
        if self.lcoef == 0:
            return self
        return Lambda(0, self.const + Fraction(value))

    def value(self) -> Fraction:
        if self.lcoef:
            raise ValueError("generic lambda has no concrete value")
        return self.const

    def sort_key(self):
        return (self.lcoef, self.const)

    def __str__(self):
        if self.lcoef == 0:
            return str(self.const)
        if self.const == 0:
            return "L"
        sign = "+" if self.const > 0 else "-"
        return f"L{sign}{abs(self.const)}"


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------

# key = (sym, pi_half, am, ldeg); value = (re, im) Gaussian rational.
Key = tuple[Optional[str], int, int, int]

_ZERO = Fraction(0)
_ONE = Fraction(1)


class Coefficient:
    """Exact scalar: sum of units, linear in free constants, polynomial in L."""

    __slots__ = ("_t", "_h")

    def __init__(self, table: Optional[Mapping[Key, tuple[Fraction, Fraction]]] = None):
        t = {}
        if table:
            for k, (re, im) in table.items():
                if re or im:
                    t[k] = (re, im)
        self._t = t
        self._h = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "Coefficient":
        return Coefficient()

    @staticmethod
    def rational(value: Rat, im: Rat = 0) -> "Coefficient":
        return Coefficient({(None, 0, 0, 0): (Fraction(value), Fraction(im))})

    @staticmethod
    def one() -> "Coefficient":
        return Coefficient.rational(1)

    @staticmethod
    def i() -> "Coefficient":
        return Coefficient.rational(0, 1)

    @staticmethod
    def unit(pi_half: int = 0, am: int = 0, re: Rat = 1, im: Rat = 0) -> "Coefficient":
        return Coefficient({(None, pi_half, am, 0): (Fraction(re), Fraction(im))})

    @staticmethod
    def sym(name: str, value: Rat = 1) -> "Coefficient":
        return Coefficient({(name, 0, 0, 0): (Fraction(value), _ZERO)})

    @staticmethod
    def lam_poly(coeffs: Iterable[Rat]) -> "Coefficient":
        """Polynomial in L with rational coefficients, lowest degree first."""
        t = {}
        for d, c in enumerate(coeffs):
            c = Fraction(c)
            if c:
                t[(None, 0, 0, d)] = (c, _ZERO)
        return Coefficient(t)

    # -- basic predicates ---------------------------------------------------

    def is_zero(self) -> bool:
        return not self._t

    def is_rational(self) -> bool:
        return all(k == (None, 0, 0, 0) for k in self._t)

    def rational_value(self) -> Fraction:
        if self.is_zero():
            return _ZERO
        if not self.is_rational():
            raise ValueError("coefficient is not a plain rational")
        re, im = self._t[(None, 0, 0, 0)]
        if im:
            raise ValueError("coefficient is not real")
        return re

    def symbols(self) -> set[str]:
        return {k[0] for k in self._t if k[0] is not None}

    def lam_degree(self) -> int:
        return max((k[3] for k in self._t), default=0)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "Coefficient") -> "Coefficient":
        t = dict(self._t)
        for k, (re, im) in other._t.items():
            r0, i0 = t.get(k, (_ZERO, _ZERO))
            t[k] = (r0 + re, i0 + im)
        return Coefficient(t)

    def __neg__(self) -> "Coefficient":
        return Coefficient({k: (-re, -im) for k, (re, im) in self._t.items()})

    def __sub__(self, other: "Coefficient") -> "Coefficient":
        return self + (-other)

    def __mul__(self, other: "Coefficient") -> "Coefficient":
        t: dict[Key, tuple[Fraction, Fraction]] = {}
        for (s1, p1, a1, d1), (r1, i1) in self._t.items():
            for (s2, p2, a2, d2), (r2, i2) in other._t.items():
                if s1 is not None and s2 is not None:
                    raise DegreeOverflow(
                        f"product of free constants {s1} and {s2}")
                k = (s1 or s2, p1 + p2, a1 + a2, d1 + d2)
                re = r1 * r2 - i1 * i2
                im = r1 * i2 + i1 * r2
                r0, i0 = t.get(k, (_ZERO, _ZERO))
                t[k] = (r0 + re, i0 + im)
        return Coefficient(t)

    def scale(self, value: Rat) -> "Coefficient":
        v = Fraction(value)
        if v == 1:
            return self
        return Coefficient({k: (re * v, im * v) for k, (re, im) in self._t.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, Coefficient) and self._t == other._t

    def __hash__(self):
        if self._h is None:
            self._h = hash(frozenset(self._t.items()))
        return self._h

    # -- substitution --------------------------------------------------------

    def subs_lambda(self, value: Rat) -> "Coefficient":
        v = Fraction(value)
        t: dict[Key, tuple[Fraction, Fraction]] = {}
        for (s, p, a, d), (re, im) in self._t.items():
            f = v ** d
            k = (s, p, a, 0)
            r0, i0 = t.get(k, (_ZERO, _ZERO))
            t[k] = (r0 + re * f, i0 + im * f)
        return Coefficient(t)

    def subs_syms(self, assignment: Mapping[str, "Coefficient"]) -> "Coefficient":
        out = Coefficient()
        for (s, p, a, d), (re, im) in self._t.items():
            part = Coefficient({(None, p, a, d): (re, im)})
            if s is not None:
                if s in assignment:
                    part = part * assignment[s]
                else:
                    part = part * Coefficient.sym(s)
            out = out + part
        return out

    def split_syms(self) -> dict[Optional[str], "Coefficient"]:
        """Decompose as sym-free parts: {None: u0, sym: u_sym} with
        self == u0 + sum(sym * u_sym)."""
        parts: dict[Optional[str], dict] = {}
        for (s, p, a, d), v in self._t.items():
            parts.setdefault(s, {})[(None, p, a, d)] = v
        return {s: Coefficient(t) for s, t in parts.items()}

    # -- inversion (monomial units only) --------------------------------------

    def is_monomial(self) -> bool:
        return len(self._t) == 1

    def inverse(self) -> "Coefficient":
        if not self.is_monomial():
            raise ValueError("can only invert a single-unit coefficient")
        (s, p, a, d), (re, im) = next(iter(self._t.items()))
        if s is not None or d != 0:
            raise ValueError("cannot invert symbol- or lambda-bearing units")
        norm = re * re + im * im
        return Coefficient({(None, -p, -a, 0): (re / norm, -im / norm)})

    # -- numeric evaluation ---------------------------------------------------

    def to_complex(self, am_value: float, lam_value: Optional[float] = None) -> complex:
        import math
        total = 0j
        for (s, p, a, d), (re, im) in self._t.items():
            if s is not None:
                raise ValueError(f"free constant {s} has no numeric value")
            if d and lam_value is None:
                raise ValueError("generic lambda has no numeric value")
            f = math.pi ** (p / 2.0) * am_value ** a
            if d:
                f *= lam_value ** d
            total += complex(float(re), float(im)) * f
        return total

    # -- display ---------------------------------------------------------------

    def _key_str(self, k: Key) -> str:
        s, p, a, d = k
        bits = []
        if p:
            bits.append("pi" if p == 2 else f"pi^({Fraction(p,2)})")
        if a:
            bits.append("a_m" if a == 1 else f"a_m^{a}")
        if d:
            bits.append("L" if d == 1 else f"L^{d}")
        if s:
            bits.append(s)
        return "*".join(bits)

    def __str__(self):
        if not self._t:
            return "0"
        parts = []
        for k in sorted(self._t, key=lambda k: (k[0] or "", k[3], k[1], k[2])):
            re, im = self._t[k]
            if im == 0:
                num = str(re)
            elif re == 0:
                num = f"{im}*i" if abs(im) != 1 else ("i" if im > 0 else "-i")
            else:
                num = f"({re}{'+' if im > 0 else '-'}{abs(im)}*i)"
            ks = self._key_str(k)
            if ks:
                if num == "1":
                    parts.append(ks)
                elif num == "-1":
                    parts.append(f"-{ks}")
                else:
                    parts.append(f"{num}*{ks}")
            else:
                parts.append(num)
        out = parts[0]
        for p in parts[1:]:
            out += ("+" + p) if not p.startswith("-") else p
        return out

    __repr__ = __str__


# ---------------------------------------------------------------------------
# lambda classification
# ---------------------------------------------------------------------------

def classify_lambda(family: str, lam: Lambda, m: int) -> tuple[str, Optional[int]]:
    """Classify a lambda value for one of the four families.

    T and sU have genuine simple poles at lambda = -m - 2k (k >= 0) and
    removable singular points at lambda = -m - 2k - 1; U and sT swap the
    two interleaved sets.  Everything else is generic.
    """
    if m < 2:
        raise ValueError("dimension must be >= 2")
    if family not in ("T", "U", "sT", "sU"):
        raise ValueError(f"unknown family {family!r}")
    if lam.is_generic:
        return ("generic", None)
    t = -(lam.value() + m)  # pole condition: t in 2N for T-type
    if t.denominator != 1 or t < 0:
        return ("generic", None)
    n = int(t)
    t_like = family in ("T", "sU")
    if n % 2 == 0:
        return ("pole", n // 2) if t_like else ("removable", None)
    return ("removable", None) if t_like else ("pole", (n - 1) // 2)


def cml(m: int, ell: int) -> Fraction:
    """The combinatorial constant 2^ell ell! m (m+2) ... (m+2 ell)."""
    if m < 2 or ell < 0:
        raise ValueError("need m >= 2 and ell >= 0")
    value = 2 ** ell
    for k in range(1, ell + 1):
        value *= k
    for k in range(ell + 1):
        value *= m + 2 * k
    return Fraction(value)


# ---------------------------------------------------------------------------
# exclusion sets
# ---------------------------------------------------------------------------

# entries: ("prog", mcoef, offset) = {mcoef*m + offset - 2k : k >= 0},
#          ("pt", mcoef, offset)   = the single value mcoef*m + offset.
Entry = tuple[str, int, Fraction]


class ExclusionSet:
    """Finite union of downward arithmetic progressions (step -2) and points,
    with offsets stored relative to the dimension m."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[Entry] = ()):
        self._entries = self._normalize(frozenset(
            (kind, mc, Fraction(off)) for kind, mc, off in entries))

    @staticmethod
    def empty() -> "ExclusionSet":
        return ExclusionSet()

    @staticmethod
    def progression(mcoef: int, offset: Rat) -> "ExclusionSet":
        return ExclusionSet([("prog", mcoef, Fraction(offset))])

    @staticmethod
    def point(mcoef: int, offset: Rat) -> "ExclusionSet":
        return ExclusionSet([("pt", mcoef, Fraction(offset))])

    @staticmethod
    def _covers(prog: Entry, other: Entry) -> bool:
        _, mc, off = prog
        _, mc2, off2 = other
        if mc != mc2:
            return False
        d = off - off2
        if d < 0 or d.denominator != 1 or int(d) % 2:
            return False
        return True

    @classmethod
    def _normalize(cls, entries: frozenset[Entry]) -> frozenset[Entry]:
        progs = [e for e in entries if e[0] == "prog"]
        keep = []
        for p in progs:
            if not any(q is not p and cls._covers(q, p) and
                       (q[2] > p[2] or (q[2] == p[2] and id(q) < id(p)))
                       for q in progs):
                keep.append(p)
        # dedupe identical progressions
        kept_progs = []
        for p in keep:
            if not any(q[1] == p[1] and q[2] == p[2] for q in kept_progs):
                kept_progs.append(p)
        pts = [e for e in entries if e[0] == "pt"
               and not any(cls._covers(p, e) for p in kept_progs)]
        return frozenset(kept_progs) | frozenset(pts)

    def union(self, other: "ExclusionSet") -> "ExclusionSet":
        return ExclusionSet(self._entries | other._entries)

    def discard(self, entry_kind: str, mcoef: int, offset: Rat) -> "ExclusionSet":
        off = Fraction(offset)
        return ExclusionSet(e for e in self._entries
                            if e != (entry_kind, mcoef, off))

    def entries(self) -> frozenset[Entry]:
        return self._entries

    def is_empty(self) -> bool:
        return not self._entries

    def covered_by(self, other: "ExclusionSet") -> bool:
        """Every lambda excluded here is also excluded by ``other``."""
        for kind, mc, off in self._entries:
            if kind == "pt":
                if not any(
                    (k2 == "pt" and mc2 == mc and off2 == off)
                    or (k2 == "prog" and self._covers((k2, mc2, off2),
                                                      ("pt", mc, off)))
                    for k2, mc2, off2 in other._entries):
                    return False
            else:
                if not any(k2 == "prog" and
                           self._covers((k2, mc2, off2), (kind, mc, off))
                           for k2, mc2, off2 in other._entries):
                    return False
        return True

    @staticmethod
    def parse(text: str) -> "ExclusionSet":
        """Parse the display format, e.g. "{-m+2-2N, -m+1}" or "{}"."""
        text = text.strip()
        if not (text.startswith("{") and text.endswith("}")):
            raise ValueError(f"bad exclusion set {text!r}")
        body = text[1:-1].strip()
        if not body:
            return ExclusionSet()
        entries = []
        for piece in body.split(","):
            piece = piece.strip()
            kind = "pt"
            if piece.endswith("-2N"):
                kind = "prog"
                piece = piece[:-3]
            mc = 0
            if piece.startswith("-m"):
                mc, piece = -1, piece[2:]
            elif piece.startswith("m"):
                mc, piece = 1, piece[1:]
            off = Fraction(piece) if piece else Fraction(0)
            entries.append((kind, mc, off))
        return ExclusionSet(entries)

    def contains(self, lam: Rat, m: int) -> bool:
        lam = Fraction(lam)
        for kind, mc, off in self._entries:
            start = mc * m + off
            if kind == "pt":
                if lam == start:
                    return True
            else:
                d = start - lam
                if d >= 0 and d.denominator == 1 and int(d) % 2 == 0:
                    return True
        return False

    def __eq__(self, other):
        return isinstance(other, ExclusionSet) and self._entries == other._entries

    def __hash__(self):
        return hash(self._entries)

    def __str__(self):
        if not self._entries:
            return "{}"
        bits = []
        for kind, mc, off in sorted(self._entries, key=lambda e: (e[0], e[1], e[2])):
            base = ""
            if mc:
                base = "m" if mc == 1 else ("-m" if mc == -1 else f"{mc}m")
            if off or not base:
                base += f"{'+' if off >= 0 and base else ''}{off}"
            bits.append(base if kind == "pt" else f"{base}-2N")
        return "{" + ", ".join(bits) + "}"

    __repr__ = __str__


# ---------------------------------------------------------------------------
# constraint sets
# ---------------------------------------------------------------------------

class ConstraintSet:
    """Linear equations over free constants; each stored Coefficient == 0."""

    __slots__ = ("_eqs",)

    def __init__(self, eqs: Iterable[Coefficient] = ()):
        self._eqs = tuple(e for e in eqs if not e.is_zero())

    @staticmethod
    def empty() -> "ConstraintSet":
        return ConstraintSet()

    def equations(self) -> tuple[Coefficient, ...]:
        return self._eqs

    def add(self, eq: Coefficient) -> "ConstraintSet":
        return ConstraintSet(self._eqs + (eq,))

    def merge(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet(self._eqs + other._eqs)

    def is_empty(self) -> bool:
        return not self._eqs

    def __eq__(self, other):
        return isinstance(other, ConstraintSet) and self._eqs == other._eqs

    def __hash__(self):
        return hash(self._eqs)

    def solve(self) -> dict[str, Coefficient]:
        """Gaussian elimination.  Returns an assignment for the pinned
        symbols (others remain free); raises InconsistentConstraints if the
        system has no solution."""
        eqs = list(self._eqs)
        assignment: dict[str, Coefficient] = {}
        progress = True
        while progress:
            progress = False
            remaining = []
            for eq in eqs:
                eq = eq.subs_syms(assignment)
                if eq.is_zero():
                    continue
                parts = eq.split_syms()
                const = parts.pop(None, Coefficient.zero())
                if not parts:
                    raise InconsistentConstraints(str(eq))
                pivot = None
                for s, u in sorted(parts.items()):
                    if u.is_monomial():
                        pivot = (s, u)
                        break
                if pivot is None:
                    remaining.append(eq)
                    continue
                s, u = pivot
                rhs = -(const + sum(
                    (Coefficient.sym(t) * v for t, v in parts.items() if t != s),
                    Coefficient.zero()))
                assignment[s] = rhs * u.inverse()
                progress = True
            eqs = remaining
        # final consistency pass
        for eq in eqs:
            eq = eq.subs_syms(assignment)
            if not eq.is_zero() and not eq.symbols():
                raise InconsistentConstraints(str(eq))
        # close assignment under itself
        changed = True
        while changed:
            changed = False
            for s, v in list(assignment.items()):
                nv = v.subs_syms(assignment)
                if nv != v:
                    assignment[s] = nv
                    changed = True
        return assignment

    def __str__(self):
        return "; ".join(f"{e} = 0" for e in self._eqs) if self._eqs else "(none)"

    __repr__ = __str__


__all__ = [
    "Coefficient", "ConstraintSet", "DegreeOverflow", "ExclusionSet",
    "InconsistentConstraints", "Lambda", "classify_lambda", "cml",
]
