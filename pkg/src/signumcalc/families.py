"""Constructors and recognizers for the distribution families.

``make`` builds the canonical expression for a family member: the scalar
radial family T, its vector companion U (canonically sum_j e_j x_j T_{lam-1}),
the signum partners sT and sU, and the normalized (starred) variants whose
Gamma-values are expanded exactly (integer arguments as factorials,
half-integer arguments as rationals times sqrt(pi)).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .canon import (
    DIST, SIG, DeltaDeriv, DistExpr, RadT, SigT, Term, delta_laplacian_power,
    mono_zero, normalize, vee,
)
from .ops import apply
from .scalars import Coefficient, Lambda, classify_lambda, cml

FAMILY_TAGS = ("T", "U", "sT", "sU", "Tstar", "Ustar", "sTstar", "sUstar")


class InadmissibleLambda(Exception):
    """The requested member needs values outside the exact scalar ring."""


class NotStarred(Exception):
    """Expression is not a unit combination of starred atoms."""


def _as_lambda(lam: Union[Lambda, int, Fraction]) -> Lambda:
    return lam if isinstance(lam, Lambda) else Lambda.concrete(lam)


def gamma_exact(q: Fraction) -> Coefficient:
    """Gamma at an integer or half-integer argument, exactly.

    Gamma(n) = (n-1)!; Gamma(n + 1/2) is a rational times sqrt(pi), also for
    negative half-integers.  Non-positive integers are poles.
    """
    q = Fraction(q)
    if q.denominator == 1:
        n = int(q)
        if n <= 0:
            raise InadmissibleLambda(f"Gamma pole at {q}")
        value = 1
        for k in range(2, n):
            value *= k
        return Coefficient.rational(value)
    if q.denominator != 2:
        raise InadmissibleLambda(f"Gamma({q}) is not in the exact ring")
    # q = k + 1/2: walk from Gamma(1/2) = sqrt(pi)
    k = int(q - Fraction(1, 2))
    value = Fraction(1)
    if k >= 0:
        for i in range(k):
            value *= Fraction(1, 2) + i
    else:
        for i in range(1, -k + 1):
            value /= Fraction(1, 2) - i
    return Coefficient.unit(pi_half=1).scale(value)


# ---------------------------------------------------------------------------
# core constructors
# ---------------------------------------------------------------------------

def _radt(lam: Lambda, m: int, mode: str) -> DistExpr:
    return DistExpr((Term(Coefficient.one(), 0, mono_zero(m), RadT(lam)),),
                    DIST, m, mode)


def _sigt(lam: Lambda, m: int, mode: str) -> DistExpr:
    return DistExpr((Term(Coefficient.one(), 0, mono_zero(m), SigT(lam)),),
                    SIG, m, mode)


def _delta_pattern(m: int, ell: int, mode: str) -> DistExpr:
    """Delta^ell delta as a canonical expression."""
    terms = [Term(Coefficient.rational(w), 0, mono_zero(m), DeltaDeriv(beta))
             for beta, w in delta_laplacian_power(m, ell).items()]
    return DistExpr(tuple(terms), DIST, m, mode)


def dirac_power_delta(m: int, k: int, mode: str = "concrete") -> DistExpr:
    """dbar^k delta: (-1)^ell Delta^ell delta for k = 2 ell, with one extra
    gradient layer for odd k."""
    ell, odd = divmod(k, 2)
    base = _delta_pattern(m, ell, mode).scale(Fraction((-1) ** ell))
    if not odd:
        return normalize(base)
    return apply("dirac", base).expr


def make(tag: str, lam: Union[Lambda, int, Fraction], m: int,
         mode: str = "concrete") -> DistExpr:
    """Build the canonical expression of a family member."""
    lam = _as_lambda(lam)
    if mode == "generic" and not lam.is_generic:
        lam = Lambda.generic(lam.const)
    if tag == "T":
        return normalize(_radt(lam, m, mode))
    if tag == "sT":
        return normalize(_sigt(lam, m, mode))
    if tag == "U":
        return apply("mulx", _radt(lam.shift(-1), m, mode)).expr
    if tag == "sU":
        return apply("mulx", _sigt(lam.shift(-1), m, mode)).expr
    if tag in ("Tstar", "Ustar", "sTstar", "sUstar"):
        return _make_star(tag, lam, m, mode)
    raise ValueError(f"unknown family tag {tag!r}")


def _star_unit(lam: Lambda, m: int, parity_shift: int) -> Coefficient:
    """pi^((lam+m+parity_shift)/2) / Gamma((lam+m+parity_shift)/2)."""
    if lam.is_generic:
        raise InadmissibleLambda("starred families need a concrete lambda")
    q = (lam.value() + m + parity_shift) / 2
    if 2 * q != int(2 * q):
        raise InadmissibleLambda(
            f"Gamma argument {q} is neither integer nor half-integer")
    num = Coefficient.unit(pi_half=int(2 * q))
    return num * gamma_exact(Fraction(q)).inverse()


def _make_star(tag: str, lam: Lambda, m: int, mode: str) -> DistExpr:
    if lam.is_generic:
        raise InadmissibleLambda("starred families need a concrete lambda")
    lv = lam.value()
    base = {"Tstar": "T", "Ustar": "U", "sTstar": "sT", "sUstar": "sU"}[tag]
    shift = 0 if tag in ("Tstar", "sUstar") else 1
    q2 = lv + m + shift          # = 2 * Gamma argument
    if q2.denominator == 1 and q2 <= 0:
        n = int(-q2)
        if n % 2:
            raise InadmissibleLambda(
                f"{tag} at lambda={lv}: Gamma argument not a pole point")
        ell = n // 2
        coeff = (Coefficient.unit(pi_half=m - 2 * ell)
                 * gamma_exact(Fraction(m, 2) + ell).inverse())
        if tag == "Tstar":
            return normalize(dirac_power_delta(m, 2 * ell, mode)
                             .scale(coeff.scale(Fraction(1, 2 ** (2 * ell)))))
        if tag == "Ustar":
            c = (Coefficient.unit(pi_half=m - 2 * ell)
                 * gamma_exact(Fraction(m, 2) + ell + 1).inverse()
                 ).scale(Fraction(-1, 2 ** (2 * ell + 1)))
            return normalize(dirac_power_delta(m, 2 * ell + 1, mode).scale(c))
        if tag == "sUstar":
            return vee(normalize(dirac_power_delta(m, 2 * ell, mode)
                                 .scale(coeff.scale(
                                     Fraction(1, 2 ** (2 * ell))))))
        # sTstar
        c = (Coefficient.unit(pi_half=m - 2 * ell)
             * gamma_exact(Fraction(m, 2) + ell + 1).inverse()
             ).scale(Fraction(1, 2 ** (2 * ell + 1)))
        return vee(normalize(dirac_power_delta(m, 2 * ell + 1, mode)
                             .scale(c)))
    unit = _star_unit(lam, m, shift)
    return normalize(make(base, lam, m, mode).scale(unit))


# ---------------------------------------------------------------------------
# recognition
# ---------------------------------------------------------------------------

def recognize(e: DistExpr) -> tuple[list[tuple[str, Lambda, Coefficient]],
                                    DistExpr]:
    """Rewrite canonical combinations as family members where possible.

    Returns (matches, residual): each match is (tag, lam, coefficient) and
    the residual holds whatever was left unmatched.
    """
    e = normalize(e)
    m = e.m
    matches: list[tuple[str, Lambda, Coefficient]] = []
    residual = e

    def try_extract(tag: str, lam: Lambda, coeff: Coefficient):
        nonlocal residual
        candidate = make(tag, lam, m, residual.mode).scale(coeff)
        reduced = normalize(residual - candidate)
        if len(reduced.terms) < len(residual.terms):
            matches.append((tag, lam, coeff))
            residual = reduced
            return True
        return False

    # scalar radial carriers
    progress = True
    while progress:
        progress = False
        for t in residual.terms:
            if isinstance(t.carrier, RadT) and t.blade == 0 and not any(t.mono):
                if try_extract("T", t.carrier.lam, t.coeff):
                    progress = True
                    break
            if isinstance(t.carrier, SigT) and t.blade == 0 and not any(t.mono):
                if try_extract("sT", t.carrier.lam, t.coeff):
                    progress = True
                    break
            # vector patterns: e_j x_j T_{lam}  ->  part of U_{lam+1}
            if (isinstance(t.carrier, RadT) and t.blade == 1
                    and t.mono == (1,) + (0,) * (m - 1)):
                if try_extract("U", t.carrier.lam.shift(1), t.coeff):
                    progress = True
                    break
            if (isinstance(t.carrier, SigT) and t.blade == 1
                    and t.mono == (1,) + (0,) * (m - 1)):
                if try_extract("sU", t.carrier.lam.shift(1), t.coeff):
                    progress = True
                    break
    return matches, residual


# ---------------------------------------------------------------------------
# residues, powers, Fourier images, fundamental solutions
# ---------------------------------------------------------------------------

def residue_at(tag: str, m: int, ell: int) -> DistExpr:
    """Residue of the family at its ell-th pole as a delta expression."""
    if ell < 0:
        raise ValueError("ell must be >= 0")
    am = Coefficient.unit(am=1)
    if tag == "T":
        c = am.scale(Fraction((-1) ** ell * (m + 2 * ell)) / cml(m, ell))
        return normalize(dirac_power_delta(m, 2 * ell).scale(c))
    if tag == "U":
        c = am.scale(Fraction((-1) ** (ell + 1)) / cml(m, ell))
        return normalize(dirac_power_delta(m, 2 * ell + 1).scale(c))
    raise ValueError("residues are defined for tags 'T' and 'U'")


def power_x(k: int, m: int, mode: str = "concrete") -> DistExpr:
    """Fp x^k as a canonical expression (integer powers)."""
    odd = k % 2
    ell = (k - odd) // 2
    sign = 1 if ell % 2 == 0 else -1
    if odd == 0:
        return make("T", k, m, mode).scale(Coefficient.rational(sign))
    return make("U", k, m, mode).scale(Coefficient.rational(sign))


def ipower_x(lam: Union[int, Lambda], m: int, mode: str = "concrete",
             signum: bool = False) -> DistExpr:
    """(i x)^lam for integer lam: even -> T branch, odd -> i * U branch."""
    lam = _as_lambda(lam)
    if lam.is_generic or lam.value().denominator != 1:
        raise InadmissibleLambda(
            "complex powers are exact only at integer lambda")
    k = int(lam.value())
    if k % 2 == 0:
        return make("sT" if signum else "T", k, m, mode)
    return make("sU" if signum else "U", k, m, mode).scale(Coefficient.i())


def fourier_star(e: DistExpr) -> DistExpr:
    """The symbolic Fourier image for starred-family combinations:
    Tstar(lam) -> Tstar(-lam-m) and Ustar(lam) -> -i Ustar(-lam-m)."""
    e = normalize(e)
    m = e.m
    if e.parity != DIST:
        raise NotStarred("Fourier images are defined on distributions")
    residual = e
    image = DistExpr.zero(m, DIST, e.mode)
    # T-type: plain radial terms and radial delta patterns
    progress = True
    while progress and residual.terms:
        progress = False
        t = residual.terms[0]
        if isinstance(t.carrier, RadT) and t.blade == 0 and not any(t.mono):
            lam = t.carrier.lam
            star = make("Tstar", lam, m, e.mode)
            k = _match_multiple(residual, star)
            if k is not None:
                image = image + make("Tstar", Lambda.concrete(-lam.value() - m),
                                     m, e.mode).scale(k)
                residual = normalize(residual - star.scale(k))
                progress = True
                continue
        if isinstance(t.carrier, RadT) and t.blade == 1:
            lam = t.carrier.lam.shift(1)
            star = make("Ustar", lam, m, e.mode)
            k = _match_multiple(residual, star)
            if k is not None:
                image = image + make(
                    "Ustar", Lambda.concrete(-lam.value() - m), m, e.mode
                ).scale(k * Coefficient.i().scale(-1))
                residual = normalize(residual - star.scale(k))
                progress = True
                continue
        if isinstance(t.carrier, DeltaDeriv):
            order = sum(t.carrier.beta)
            ell, odd = divmod(order, 2)
            if odd == 0:
                star = make("Tstar", Lambda.concrete(-m - 2 * ell), m, e.mode)
                k = _match_multiple(residual, star)
                if k is not None:
                    image = image + make("Tstar", Lambda.concrete(2 * ell),
                                         m, e.mode).scale(k)
                    residual = normalize(residual - star.scale(k))
                    progress = True
                    continue
            else:
                star = make("Ustar", Lambda.concrete(-m - 2 * ell - 1),
                            m, e.mode)
                k = _match_multiple(residual, star)
                if k is not None:
                    image = image + make(
                        "Ustar", Lambda.concrete(2 * ell + 1), m, e.mode
                    ).scale(k * Coefficient.i().scale(-1))
                    residual = normalize(residual - star.scale(k))
                    progress = True
                    continue
        break
    if residual.terms:
        raise NotStarred("expression is not a starred-family combination")
    return normalize(image)


def _match_multiple(e: DistExpr, pattern: DistExpr) -> Optional[Coefficient]:
    """Find k with e ⊇ k * pattern matched on the pattern's first term."""
    pattern = normalize(pattern)
    if not pattern.terms:
        return None
    p0 = pattern.terms[0]
    for t in e.terms:
        if (t.blade, t.mono, t.carrier) == (p0.blade, p0.mono, p0.carrier):
            if not p0.coeff.is_monomial():
                return None
            k = t.coeff * p0.coeff.inverse()
            reduced = normalize(e - pattern.scale(k))
            if len(reduced.terms) < len(e.terms):
                return k
            return None
    return None


@dataclass(frozen=True)
class FundSolCoeffs:
    k: int
    p: Coefficient
    q: Coefficient


def fundsol_coeffs(k: int, m: int) -> FundSolCoeffs:
    """The (p_k, q_k) pair for even-dimension logarithmic fundamental
    solutions: p_0 = -1/(2^(m-1) pi^m), q_0 = 0, with the two alternating
    recurrences."""
    if k < 0:
        raise ValueError("k must be >= 0")
    p = Coefficient.unit(pi_half=-2 * m).scale(Fraction(-1, 2 ** (m - 1)))
    q = Coefficient.zero()
    for n in range(1, k + 1):
        if n % 2 == 0:
            p, q = p.scale(Fraction(1, n)), \
                (q - p.scale(Fraction(1, n))).scale(Fraction(1, n))
        else:
            half = Coefficient.unit(pi_half=-2).scale(Fraction(-1, 2))
            p, q = p * half, (q - p.scale(Fraction(1, m + n - 1))) * half
    return FundSolCoeffs(k, p, q)


def fundsol(k: int, m: int) -> Union[DistExpr, FundSolCoeffs]:
    """Fundamental solution E_k of the k-th Dirac power, when polynomial-free;
    for even m and k >= m only the log-solution coefficients are returned."""
    if k < 1:
        raise ValueError("order must be >= 1")
    if m % 2 == 0 and k >= m:
        return fundsol_coeffs(k - m, m)
    inv_am = Coefficient.unit(am=-1)
    ell = k // 2
    denom = Fraction(1)
    for i in range(1, ell + 1):
        denom *= m - 2 * i
    if k % 2 == 0:
        c = inv_am.scale(Fraction(1, 2 ** (ell - 1)) / _fact(ell - 1) / denom)
        return normalize(make("T", -m + k, m).scale(c))
    c = inv_am.scale(-Fraction(1, 2 ** ell) / _fact(ell) / denom)
    return normalize(make("U", -m + k, m).scale(c))


def _fact(n: int) -> Fraction:
    out = Fraction(1)
    for i in range(2, n + 1):
        out *= i
    return out


__all__ = [
    "FAMILY_TAGS", "FundSolCoeffs", "InadmissibleLambda", "NotStarred",
    "dirac_power_delta", "fourier_star", "fundsol", "fundsol_coeffs",
    "gamma_exact", "ipower_x", "make", "power_x", "recognize", "residue_at",
]
