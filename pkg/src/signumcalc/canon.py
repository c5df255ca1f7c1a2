"""Canonical representation of (signum)distribution expressions.

An expression is a sum of terms  coeff * blade * x^alpha * carrier  where the
carrier is one of four atoms:

* ``RadT(lam)``      -- the radial finite-part distribution of degree lam
* ``SigT(lam)``      -- its radial signum counterpart
* ``DeltaDeriv(b)``  -- a delta derivative (distribution side)
* ``OmegaDelta(j,b)``-- omega_j times a delta derivative (signum side)

All other family members are canonical combinations; in particular the
vector-valued family member of degree lam is sum_j e_j x_j RadT(lam-1).

Normalisation reduces monomials into delta carriers, contracts the syzygy
sum_j x_j^2 * RadT(lam) = RadT(lam+2) by keeping only harmonic polynomial
parts in front of each radial carrier, merges like terms and sorts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

from .clifford import blade_grade, blade_mul, blade_str
from .scalars import (
    Coefficient, ConstraintSet, ExclusionSet, Lambda,
)

DIST = "distribution"
SIG = "signum"


class ParityViolation(Exception):
    """A term's carrier contradicts the expression parity."""


# ---------------------------------------------------------------------------
# carriers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadT:
    lam: Lambda


@dataclass(frozen=True)
class SigT:
    lam: Lambda


@dataclass(frozen=True)
class DeltaDeriv:
    beta: tuple[int, ...]


@dataclass(frozen=True)
class OmegaDelta:
    j: int
    beta: tuple[int, ...]


Carrier = Union[RadT, SigT, DeltaDeriv, OmegaDelta]

_KIND_RANK = {RadT: 0, SigT: 1, DeltaDeriv: 2, OmegaDelta: 3}


def carrier_parity(c: Carrier) -> str:
    return DIST if isinstance(c, (RadT, DeltaDeriv)) else SIG


def carrier_key(c: Carrier):
    if isinstance(c, (RadT, SigT)):
        return (_KIND_RANK[type(c)], c.lam.sort_key(), (), 0)
    if isinstance(c, DeltaDeriv):
        return (_KIND_RANK[type(c)], (0, Fraction(0)), c.beta, 0)
    return (_KIND_RANK[type(c)], (0, Fraction(0)), c.beta, c.j)


# ---------------------------------------------------------------------------
# monomials (exponent tuples of length m)
# ---------------------------------------------------------------------------

def mono_zero(m: int) -> tuple[int, ...]:
    return (0,) * m

def mono_mul_xj(mono: tuple[int, ...], j: int) -> tuple[int, ...]:
    return mono[: j - 1] + (mono[j - 1] + 1,) + mono[j:]

def mono_degree(mono: tuple[int, ...]) -> int:
    return sum(mono)


def reduce_monomial_delta(alpha: tuple[int, ...], beta: tuple[int, ...]
                          ) -> list[tuple[Coefficient, tuple[int, ...]]]:
    """Expand x^alpha d^beta delta via x_j d^beta delta = -beta_j d^(beta-e_j).

    The result is a single term or empty (when alpha exceeds beta anywhere).
    """
    factor = 1
    out = []
    for a, b in zip(alpha, beta):
        if a > b:
            return []
        f = 1
        for t in range(a):
            f *= b - t
        factor *= f * (-1) ** a
        out.append(b - a)
    return [(Coefficient.rational(factor), tuple(out))]


# ---------------------------------------------------------------------------
# terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    coeff: Coefficient
    blade: int
    mono: tuple[int, ...]
    carrier: Carrier

    def sort_key(self):
        return (carrier_key(self.carrier), self.blade, self.mono)


def term_degree(t: Term, m: int) -> tuple[int, Fraction]:
    """Homogeneity degree as (L-coefficient, rational part with m folded)."""
    if isinstance(t.carrier, RadT) or isinstance(t.carrier, SigT):
        lam = t.carrier.lam
        return (lam.lcoef, lam.const + mono_degree(t.mono))
    beta = t.carrier.beta
    return (0, Fraction(-m - sum(beta) - mono_degree(t.mono)))


MIXED = "mixed"


# ---------------------------------------------------------------------------
# polynomial helpers (dict  mono -> Coefficient)  for harmonic reduction
# ---------------------------------------------------------------------------

def _poly_add(p: dict, q: dict) -> dict:
    out = dict(p)
    for mono, c in q.items():
        s = out.get(mono, Coefficient.zero()) + c
        if s.is_zero():
            out.pop(mono, None)
        else:
            out[mono] = s
    return out


def _poly_scale(p: dict, f: Fraction) -> dict:
    return {mono: c.scale(f) for mono, c in p.items()}


def _poly_laplacian(p: dict) -> dict:
    out: dict = {}
    for mono, c in p.items():
        for j, a in enumerate(mono):
            if a >= 2:
                nm = mono[:j] + (a - 2,) + mono[j + 1:]
                s = out.get(nm, Coefficient.zero()) + c.scale(a * (a - 1))
                if s.is_zero():
                    out.pop(nm, None)
                else:
                    out[nm] = s
    return out


def _poly_mul_r2(p: dict, m: int) -> dict:
    out: dict = {}
    for mono, c in p.items():
        for j in range(m):
            nm = mono[:j] + (mono[j] + 2,) + mono[j + 1:]
            s = out.get(nm, Coefficient.zero()) + c
            if s.is_zero():
                out.pop(nm, None)
            else:
                out[nm] = s
    return out


def harmonic_decompose(p: dict, n: int, m: int) -> list[tuple[int, dict]]:
    """Fischer decomposition of a homogeneous degree-n polynomial:
    p = sum_k r^(2k) h_k with h_k harmonic of degree n - 2k.

    Returns [(k, h_k)] for the nonzero parts, exactly.
    """
    if not p:
        return []
    powers = [p]
    while powers[-1]:
        powers.append(_poly_laplacian(powers[-1]))
    powers.pop()  # drop the zero
    kmax = len(powers) - 1

    def c_factor(j: int, k: int, s: int) -> Fraction:
        f = Fraction(1)
        for i in range(j):
            a = k - i
            f *= 2 * a * (m + 2 * a + 2 * s - 2)
        return f

    hs: dict[int, dict] = {}
    for K in range(kmax, -1, -1):
        rhs = powers[K]
        for k in range(K + 1, kmax + 1):
            h = hs.get(k)
            if not h:
                continue
            corr = h
            for _ in range(k - K):
                corr = _poly_mul_r2(corr, m)
            rhs = _poly_add(rhs, _poly_scale(
                corr, -c_factor(K, k, n - 2 * k)))
        f = c_factor(K, K, n - 2 * K)
        hs[K] = _poly_scale(rhs, Fraction(1) / f)
    return [(k, h) for k, h in sorted(hs.items()) if h]


def poisson_solve_delta(d: dict, m: int) -> dict:
    """Minimal-Fischer-norm solution q of  r^2 * (q(d)delta) = d(d)delta.

    Dually this solves Laplacian(q) = d on polynomials; the returned q is
    the unique solution orthogonal to harmonics, computed per homogeneous
    component via the Fischer decomposition.
    """
    by_degree: dict[int, dict] = {}
    for mono, c in d.items():
        by_degree.setdefault(sum(mono), {})[mono] = c
    out: dict = {}
    for n, p in by_degree.items():
        for k, h in harmonic_decompose(p, n, m):
            s = n - 2 * k
            f = Fraction(1, 2 * (k + 1) * (m + 2 * n - 2 * k))
            part = _poly_scale(h, f)
            for _ in range(k + 1):
                part = _poly_mul_r2(part, m)
            out = _poly_add(out, part)
    return out


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantInfo:
    sym: str
    origin: str          # catalog operator id active at birth
    parity: str          # parity of the expression the constant was born in


@dataclass(frozen=True)
class DistExpr:
    terms: tuple[Term, ...]
    parity: str
    m: int
    mode: str = "concrete"          # "concrete" | "generic"
    exclusions: ExclusionSet = field(default_factory=ExclusionSet.empty)
    constraints: ConstraintSet = field(default_factory=ConstraintSet.empty)
    constants: tuple[ConstantInfo, ...] = ()

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def zero(m: int, parity: str = DIST, mode: str = "concrete") -> "DistExpr":
        return DistExpr((), parity, m, mode)

    def replace_terms(self, terms: Iterable[Term]) -> "DistExpr":
        return DistExpr(tuple(terms), self.parity, self.m, self.mode,
                        self.exclusions, self.constraints, self.constants)

    def with_parity(self, parity: str) -> "DistExpr":
        return DistExpr(self.terms, parity, self.m, self.mode,
                        self.exclusions, self.constraints, self.constants)

    def with_meta(self, exclusions=None, constraints=None, constants=None
                  ) -> "DistExpr":
        return DistExpr(
            self.terms, self.parity, self.m, self.mode,
            self.exclusions if exclusions is None else exclusions,
            self.constraints if constraints is None else constraints,
            self.constants if constants is None else constants)

    # -- ring-ish operations ---------------------------------------------------

    def __add__(self, other: "DistExpr") -> "DistExpr":
        if self.parity != other.parity or self.m != other.m:
            raise ParityViolation("cannot add expressions of different parity/m")
        consts = self.constants + tuple(
            c for c in other.constants if c not in self.constants)
        return DistExpr(
            self.terms + other.terms, self.parity, self.m,
            "generic" if "generic" in (self.mode, other.mode) else "concrete",
            self.exclusions.union(other.exclusions),
            self.constraints.merge(other.constraints),
            consts)

    def __neg__(self) -> "DistExpr":
        return self.replace_terms(
            Term(-t.coeff, t.blade, t.mono, t.carrier) for t in self.terms)

    def __sub__(self, other: "DistExpr") -> "DistExpr":
        return self + (-other)

    def scale(self, c: Union[Coefficient, int, Fraction]) -> "DistExpr":
        c = c if isinstance(c, Coefficient) else Coefficient.rational(c)
        return self.replace_terms(
            Term(t.coeff * c, t.blade, t.mono, t.carrier) for t in self.terms)

    def lmul_blade(self, blade: int) -> "DistExpr":
        out = []
        for t in self.terms:
            sign, b = blade_mul(blade, t.blade)
            coeff = t.coeff if sign > 0 else -t.coeff
            out.append(Term(coeff, b, t.mono, t.carrier))
        return self.replace_terms(out)

    def rmul_blade(self, blade: int) -> "DistExpr":
        out = []
        for t in self.terms:
            sign, b = blade_mul(t.blade, blade)
            coeff = t.coeff if sign > 0 else -t.coeff
            out.append(Term(coeff, b, t.mono, t.carrier))
        return self.replace_terms(out)

    def mul_xj(self, j: int) -> "DistExpr":
        out = []
        for t in self.terms:
            if isinstance(t.carrier, (RadT, SigT)):
                out.append(Term(t.coeff, t.blade, mono_mul_xj(t.mono, j),
                                t.carrier))
            else:
                out.append(Term(t.coeff, t.blade, mono_mul_xj(t.mono, j),
                                t.carrier))
        return self.replace_terms(out)

    def is_zero(self) -> bool:
        return all(t.coeff.is_zero() for t in self.terms)

    def free_symbols(self) -> set[str]:
        syms = set()
        for t in self.terms:
            syms |= t.coeff.symbols()
        return syms

    def grades(self) -> set[int]:
        return {blade_grade(t.blade) for t in self.terms}

    def grade_project(self, k: int) -> "DistExpr":
        return self.replace_terms(
            t for t in self.terms if blade_grade(t.blade) == k)

    def subs_lambda(self, value) -> "DistExpr":
        """Substitute a concrete value for the generic symbol L."""
        out = []
        for t in self.terms:
            c = t.coeff.subs_lambda(value)
            carrier = t.carrier
            if isinstance(carrier, RadT):
                carrier = RadT(carrier.lam.subs(value))
            elif isinstance(carrier, SigT):
                carrier = SigT(carrier.lam.subs(value))
            out.append(Term(c, t.blade, t.mono, carrier))
        e = self.replace_terms(out)
        return DistExpr(e.terms, e.parity, e.m, "concrete",
                        e.exclusions, e.constraints, e.constants)

    def subs_constants(self, assignment) -> "DistExpr":
        out = [Term(t.coeff.subs_syms(assignment), t.blade, t.mono, t.carrier)
               for t in self.terms]
        remaining = tuple(c for c in self.constants
                          if c.sym not in assignment)
        eqs = ConstraintSet(
            eq.subs_syms(assignment) for eq in self.constraints.equations())
        e = self.replace_terms(out).with_meta(constraints=eqs,
                                              constants=remaining)
        return normalize(e)

    def __str__(self):
        from .lang import format_expr
        return format_expr(self, style="plain")


# ---------------------------------------------------------------------------
# normalisation
# ---------------------------------------------------------------------------

def _check_parity(e: DistExpr):
    for t in e.terms:
        if carrier_parity(t.carrier) != e.parity:
            raise ParityViolation(
                f"{type(t.carrier).__name__} carrier in {e.parity} expression")


_NORM_CACHE: dict = {}


def normalize(e: DistExpr) -> DistExpr:
    """Canonical form: delta monomials reduced, radial syzygy contracted via
    harmonic parts, like terms merged, zero terms dropped, deterministic
    ordering.  Idempotent."""
    cached = _NORM_CACHE.get(e)
    if cached is not None:
        return cached
    result = _normalize_uncached(e)
    if len(_NORM_CACHE) > 50000:
        _NORM_CACHE.clear()
    _NORM_CACHE[e] = result
    _NORM_CACHE[result] = result
    return result


def _normalize_uncached(e: DistExpr) -> DistExpr:
    _check_parity(e)
    m = e.m

    # 1. reduce monomials sitting on delta carriers
    stage1: list[Term] = []
    for t in e.terms:
        if t.coeff.is_zero():
            continue
        if isinstance(t.carrier, DeltaDeriv):
            for c, beta in reduce_monomial_delta(t.mono, t.carrier.beta):
                stage1.append(Term(t.coeff * c, t.blade, mono_zero(m),
                                   DeltaDeriv(beta)))
        elif isinstance(t.carrier, OmegaDelta):
            for c, beta in reduce_monomial_delta(t.mono, t.carrier.beta):
                stage1.append(Term(t.coeff * c, t.blade, mono_zero(m),
                                   OmegaDelta(t.carrier.j, beta)))
        else:
            stage1.append(t)

    # 2. group radial carriers by (blade, kind, lambda residue mod 2) and
    #    re-express the polynomial part with harmonic components only
    groups: dict[tuple, dict] = {}
    rest: dict[tuple, Coefficient] = {}
    for t in stage1:
        if isinstance(t.carrier, (RadT, SigT)):
            lam = t.carrier.lam
            coset = (lam.lcoef, lam.const % 2)
            key = (t.blade, type(t.carrier).__name__, coset)
            # represent the term as polynomial at base lambda: track pairs
            groups.setdefault(key, {})
            bucket = groups[key]
            k2 = (t.mono, lam.const)
            bucket[k2] = bucket.get(k2, Coefficient.zero()) + t.coeff
        else:
            key = (type(t.carrier).__name__, t.carrier, t.blade)
            rest[key] = rest.get(key, Coefficient.zero()) + t.coeff

    out_terms: list[Term] = []
    for (blade, kind, coset), bucket in groups.items():
        if not bucket:
            continue
        base = min(lc for (_, lc) in bucket)
        # polynomial in x with carrier at the *base* lambda of the group:
        # x^a T_{base + 2k}  <->  x^a * r^{2k} at base
        poly: dict = {}
        shifts: dict[tuple, int] = {}
        for (mono, lc), c in bucket.items():
            k = int((lc - base) / 2)
            shifts[(mono, lc)] = k
        # expand r^{2k} into the polynomial
        for (mono, lc), c in bucket.items():
            part = {mono: c}
            for _ in range(shifts[(mono, lc)]):
                part = _poly_mul_r2(part, m)
            poly = _poly_add(poly, part)
        # split by total degree and harmonic-decompose
        by_deg: dict[int, dict] = {}
        for mono, c in poly.items():
            by_deg.setdefault(sum(mono), {})[mono] = c
        ctor = RadT if kind == "RadT" else SigT
        lam0 = Lambda(1 if coset[0] else 0, base)
        for n, p in by_deg.items():
            for k, h in harmonic_decompose(p, n, m):
                lam = lam0.shift(2 * k)
                for mono, c in h.items():
                    if not c.is_zero():
                        out_terms.append(Term(c, blade, mono, ctor(lam)))

    for (_, carrier, blade), c in rest.items():
        if not c.is_zero():
            out_terms.append(Term(c, blade, mono_zero(m), carrier))

    out_terms.sort(key=Term.sort_key)
    return e.replace_terms(out_terms)


# ---------------------------------------------------------------------------
# homogeneity / radial structure
# ---------------------------------------------------------------------------

def homogeneity_degree(e: DistExpr):
    """Common homogeneity degree (lcoef, rational) of all terms, or MIXED."""
    e = normalize(e)
    degs = {term_degree(t, e.m) for t in e.terms}
    if not degs:
        return None
    if len(degs) > 1:
        return MIXED
    return degs.pop()


import functools


@functools.lru_cache(maxsize=None)
def _delta_laplacian_power_cached(m: int, ell: int):
    p = {mono_zero(m): Fraction(1)}
    for _ in range(ell):
        q: dict = {}
        for mono, c in p.items():
            for j in range(m):
                nm = mono[:j] + (mono[j] + 2,) + mono[j + 1:]
                q[nm] = q.get(nm, Fraction(0)) + c
        p = q
    return tuple(p.items())


def delta_laplacian_power(m: int, ell: int) -> dict:
    """Coefficients of Delta^ell delta as dict beta -> Fraction."""
    return dict(_delta_laplacian_power_cached(m, ell))


def _scalar_group_is_radial(deltas: dict, m: int) -> bool:
    """Does a dict beta -> Coefficient match c * Delta^k delta exactly?"""
    if not deltas:
        return True
    orders = {sum(b) for b in deltas}
    if len(orders) > 1 or orders.pop() % 2:
        return False
    ell = sum(next(iter(deltas))) // 2
    pattern = delta_laplacian_power(m, ell)
    if set(pattern) != set(deltas):
        return False
    ref_beta = next(iter(pattern))
    ref = deltas[ref_beta].scale(Fraction(1) / pattern[ref_beta])
    for beta, w in pattern.items():
        if deltas[beta] != ref.scale(w):
            return False
    return True


def radial_witness(e: DistExpr) -> bool:
    """Conservative radiality test.

    Distribution parity: every term must be scalar-blade with empty monomial
    and a RadT carrier, or the delta part must match a Delta^k delta pattern.
    Signum parity: scalar-blade SigT terms only.  False means "unknown".
    """
    e = normalize(e)
    deltas: dict = {}
    for t in e.terms:
        if t.blade != 0 or any(t.mono):
            return False
        if isinstance(t.carrier, RadT) and e.parity == DIST:
            continue
        if isinstance(t.carrier, SigT) and e.parity == SIG:
            continue
        if isinstance(t.carrier, DeltaDeriv) and e.parity == DIST:
            deltas[t.carrier.beta] = t.coeff
            continue
        return False
    return _scalar_group_is_radial(deltas, e.m)


def blade_groups_radial(e: DistExpr) -> bool:
    """True when every constant-blade component of e is radial (blade
    factored out).  Used for division uniqueness discharge."""
    e = normalize(e)
    per_blade: dict[int, list[Term]] = {}
    for t in e.terms:
        per_blade.setdefault(t.blade, []).append(t)
    for blade, terms in per_blade.items():
        sub = DistExpr(tuple(Term(t.coeff, 0, t.mono, t.carrier)
                             for t in terms), e.parity, e.m, e.mode)
        if not radial_witness(sub):
            return False
    return True


# ---------------------------------------------------------------------------
# the association maps (vee / wedge)
# ---------------------------------------------------------------------------

def vee(e: DistExpr) -> DistExpr:
    """Associated signumdistribution: left multiplication by omega."""
    if e.parity != DIST:
        raise ParityViolation("vee requires distribution parity")
    m = e.m
    out: list[Term] = []
    for t in e.terms:
        if isinstance(t.carrier, RadT):
            lam = t.carrier.lam.shift(-1)
            for j in range(1, m + 1):
                sign, b = blade_mul(1 << (j - 1), t.blade)
                c = t.coeff if sign > 0 else -t.coeff
                out.append(Term(c, b, mono_mul_xj(t.mono, j), SigT(lam)))
        else:
            for j in range(1, m + 1):
                sign, b = blade_mul(1 << (j - 1), t.blade)
                c = t.coeff if sign > 0 else -t.coeff
                out.append(Term(c, b, t.mono,
                                OmegaDelta(j, t.carrier.beta)))
    return normalize(DistExpr(tuple(out), SIG, m, e.mode, e.exclusions,
                              e.constraints, e.constants))


def wedge(e: DistExpr) -> DistExpr:
    """Associated distribution: left multiplication by -omega."""
    if e.parity != SIG:
        raise ParityViolation("wedge requires signum parity")
    m = e.m
    out: list[Term] = []
    for t in e.terms:
        if isinstance(t.carrier, SigT):
            lam = t.carrier.lam.shift(-1)
            for j in range(1, m + 1):
                sign, b = blade_mul(1 << (j - 1), t.blade)
                c = -t.coeff if sign > 0 else t.coeff
                out.append(Term(c, b, mono_mul_xj(t.mono, j), RadT(lam)))
        else:
            # -omega * (omega_i d^beta delta):
            # omega_j omega_i d^beta = x_j x_i * (1/r^2) d^beta delta,
            # resolved through the exact polynomial Poisson solve.
            i = t.carrier.j
            beta = t.carrier.beta
            q = poisson_solve_delta({beta: Coefficient.one()}, m)
            for j in range(1, m + 1):
                sign, b = blade_mul(1 << (j - 1), t.blade)
                c = -t.coeff if sign > 0 else t.coeff
                for gamma, qc in q.items():
                    mono = mono_mul_xj(mono_mul_xj(t.mono, j), i)
                    for rc, beta2 in reduce_monomial_delta(mono, gamma):
                        out.append(Term(c * qc * rc, b, mono_zero(m),
                                        DeltaDeriv(beta2)))
    return normalize(DistExpr(tuple(out), DIST, m, e.mode, e.exclusions,
                              e.constraints, e.constants))


def assoc(e: DistExpr, direction: str) -> DistExpr:
    if direction == "vee":
        return vee(e)
    if direction == "wedge":
        return wedge(e)
    raise ValueError("direction must be 'vee' or 'wedge'")


# ---------------------------------------------------------------------------
# structural comparison
# ---------------------------------------------------------------------------

def expr_equal(a: DistExpr, b: DistExpr) -> bool:
    a, b = normalize(a), normalize(b)
    if a.m != b.m:
        return False
    if not a.terms and not b.terms:
        return True  # the zero functional, regardless of parity
    return a.parity == b.parity and a.terms == b.terms


def unify_constants(a: DistExpr, b: DistExpr) -> Optional[dict[str, Coefficient]]:
    """Solve for free-constant values making a == b; None if impossible."""
    if a.parity != b.parity or a.m != b.m:
        return None
    diff = normalize(a - b)
    eqs = ConstraintSet(t.coeff for t in diff.terms)
    eqs = eqs.merge(a.constraints).merge(b.constraints)
    try:
        assignment = eqs.solve()
    except Exception:
        return None
    check = normalize(diff.subs_constants(assignment))
    if not check.is_zero():
        return None
    return assignment


def expr_equal_mod_constants(a: DistExpr, b: DistExpr) -> bool:
    return expr_equal(a, b) or unify_constants(a, b) is not None


def ambiguity_rank(e: DistExpr) -> int:
    """Dimension of the expression's free-constant span (kernel directions):
    redundant constants multiplying the same direction count once."""
    e = normalize(e)
    syms = sorted(e.free_symbols())
    if not syms:
        return 0
    # rows indexed by constants; columns by (term basis element, unit key)
    columns: dict = {}
    rows: list[dict] = []
    for s in syms:
        row: dict = {}
        for t in e.terms:
            parts = t.coeff.split_syms()
            if s in parts:
                for key, (re_, im) in parts[s]._t.items():
                    cidx = columns.setdefault(
                        (t.blade, t.mono, t.carrier, key, "re"), len(columns))
                    row[cidx] = row.get(cidx, Fraction(0)) + re_
                    cidx = columns.setdefault(
                        (t.blade, t.mono, t.carrier, key, "im"), len(columns))
                    row[cidx] = row.get(cidx, Fraction(0)) + im
        rows.append({k: v for k, v in row.items() if v})
    rank = 0
    for _ in range(len(rows)):
        pivot_row = next((r for r in rows if r), None)
        if pivot_row is None:
            break
        rank += 1
        pc = next(iter(pivot_row))
        pv = pivot_row[pc]
        rows.remove(pivot_row)
        for r in rows:
            if pc in r:
                f = r[pc] / pv
                for c, v in pivot_row.items():
                    r[c] = r.get(c, Fraction(0)) - f * v
                    if not r[c]:
                        del r[c]
    return rank


# ---------------------------------------------------------------------------
# hyperoctahedral symmetry witness (axis permutations and sign flips)
# ---------------------------------------------------------------------------

def _transform_term(t: Term, perm: tuple[int, ...], flips: tuple[int, ...],
                    m: int) -> Term:
    """Apply x_j -> flips[j] * x_{perm[j]} jointly to blades, monomials and
    carrier indices; perm/flips are 0-based with flips in {1, -1}."""
    sign = 1
    # blade: map each index, then re-sort picking up transposition signs
    idxs = [perm[i] for i in range(m) if t.blade >> i & 1]
    for i in range(m):
        if t.blade >> i & 1 and flips[i] < 0:
            sign = -sign
    blade = 0
    for pos in range(len(idxs)):
        # insertion sort with sign tracking
        val = idxs[pos]
        k = pos
        while k > 0 and idxs[k - 1] > val:
            idxs[k] = idxs[k - 1]
            k -= 1
            sign = -sign
        idxs[k] = val
    for i in idxs:
        blade |= 1 << i
    mono = [0] * m
    for i, a in enumerate(t.mono):
        mono[perm[i]] = a
        if flips[i] < 0 and a % 2:
            sign = -sign
    carrier = t.carrier
    if isinstance(carrier, DeltaDeriv):
        beta = [0] * m
        for i, a in enumerate(carrier.beta):
            beta[perm[i]] = a
            if flips[i] < 0 and a % 2:
                sign = -sign
        carrier = DeltaDeriv(tuple(beta))
    elif isinstance(carrier, OmegaDelta):
        beta = [0] * m
        for i, a in enumerate(carrier.beta):
            beta[perm[i]] = a
            if flips[i] < 0 and a % 2:
                sign = -sign
        i0 = carrier.j - 1
        if flips[i0] < 0:
            sign = -sign
        carrier = OmegaDelta(perm[i0] + 1, tuple(beta))
    coeff = t.coeff if sign > 0 else -t.coeff
    return Term(coeff, blade, tuple(mono), carrier)


def is_equivariant(e: DistExpr) -> bool:
    """Invariance under generators of the hyperoctahedral group: a cheap
    proxy for O(m)-equivariant patterns, used to pick structured kernel
    generators in division."""
    e = normalize(e)
    m = e.m
    gens = []
    if m >= 2:
        perm = list(range(m))
        perm[0], perm[1] = perm[1], perm[0]
        gens.append((tuple(perm), (1,) * m))
    gens.append((tuple(range(m)), (-1,) + (1,) * (m - 1)))
    if m >= 3:
        perm = list(range(1, m)) + [0]
        gens.append((tuple(perm), (1,) * m))
    for perm, flips in gens:
        image = e.replace_terms(
            _transform_term(t, perm, flips, m) for t in e.terms)
        if normalize(image).terms != e.terms:
            return False
    return True


__all__ = [
    "DIST", "SIG", "MIXED", "Carrier", "ConstantInfo", "DeltaDeriv",
    "DistExpr", "OmegaDelta", "ParityViolation", "RadT", "SigT", "Term",
    "assoc", "blade_groups_radial", "carrier_parity", "delta_laplacian_power",
    "expr_equal", "expr_equal_mod_constants", "harmonic_decompose",
    "homogeneity_degree", "is_equivariant", "mono_degree", "mono_mul_xj",
    "mono_zero", "normalize", "poisson_solve_delta", "radial_witness",
    "reduce_monomial_delta", "term_degree", "unify_constants", "vee", "wedge",
]
