"""Independent numerical oracle.

Pairings <expr, phi> are evaluated for Gaussian-times-polynomial test
functions.  Spherical means are exact (surface moments are rational); the
one-dimensional finite-part pairing is computed along two independent
routes: term-by-term Gamma continuation, and the subtracted-integral
definition (series integration near zero plus adaptive quadrature on
[1, R]).  Gamma never enters the second route.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath
from scipy.integrate import quad as _quad

from .canon import (
    DIST, SIG, DeltaDeriv, DistExpr, RadT, normalize, wedge,
)
from .scalars import Coefficient, Fraction as _Fr  # noqa: F401

_EULER_GAMMA = float(mpmath.euler)


def quad_tolerance() -> float:
    """Quadrature tolerance; override with SIGNUMCALC_PRECISION."""
    return float(os.environ.get("SIGNUMCALC_PRECISION", "1e-12"))


class PoleHit(Exception):
    """A pairing hit a genuine family pole; carries the residue weight."""

    def __init__(self, z: int, residue: float):
        super().__init__(f"finite-part pole at exponent {z}")
        self.z = z
        self.residue = residue


# ---------------------------------------------------------------------------
# test functions: polynomial * exp(-s r^2)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    m: int
    poly: dict  # mono tuple -> Fraction
    s: Fraction = Fraction(1)

    @staticmethod
    def gaussian(m: int, s=1) -> "TestFunction":
        return TestFunction(m, {(0,) * m: Fraction(1)}, Fraction(s))

    @staticmethod
    def monomial(m: int, mono: tuple[int, ...], s=1, c=1) -> "TestFunction":
        return TestFunction(m, {tuple(mono): Fraction(c)}, Fraction(s))

    def add(self, other: "TestFunction") -> "TestFunction":
        if other.s != self.s or other.m != self.m:
            raise ValueError("can only add matching-width test functions")
        p = dict(self.poly)
        for mono, c in other.poly.items():
            p[mono] = p.get(mono, Fraction(0)) + c
            if not p[mono]:
                del p[mono]
        return TestFunction(self.m, p, self.s)

    def mul_xj(self, j: int) -> "TestFunction":
        p = {}
        for mono, c in self.poly.items():
            nm = mono[: j - 1] + (mono[j - 1] + 1,) + mono[j:]
            p[nm] = c
        return TestFunction(self.m, p, self.s)

    def dxj(self, j: int) -> "TestFunction":
        """Exact partial derivative (the family is closed under d/dx_j)."""
        p: dict = {}
        for mono, c in self.poly.items():
            a = mono[j - 1]
            if a:
                nm = mono[: j - 1] + (a - 1,) + mono[j:]
                p[nm] = p.get(nm, Fraction(0)) + a * c
            nm = mono[: j - 1] + (a + 1,) + mono[j:]
            p[nm] = p.get(nm, Fraction(0)) - 2 * self.s * c
        return TestFunction(self.m, {k: v for k, v in p.items() if v}, self.s)

    def deriv0(self, beta: tuple[int, ...]) -> Fraction:
        """d^beta phi at the origin, exactly."""
        f: TestFunction = self
        for j, b in enumerate(beta, start=1):
            for _ in range(b):
                f = f.dxj(j)
        return f.poly.get((0,) * self.m, Fraction(0))

    def value(self, x: list[float]) -> float:
        r2 = sum(v * v for v in x)
        total = 0.0
        for mono, c in self.poly.items():
            t = float(c)
            for v, a in zip(x, mono):
                t *= v ** a
            total += t
        return total * math.exp(-float(self.s) * r2)


# ---------------------------------------------------------------------------
# exact surface moments and spherical means
# ---------------------------------------------------------------------------

def surface_moment(beta: tuple[int, ...], m: int) -> Fraction:
    """(1/a_m) * integral over S^{m-1} of omega^{2 beta}."""
    num = Fraction(1)
    for b in beta:
        num *= Fraction(math.factorial(2 * b),
                        4 ** b * math.factorial(b))
    den = Fraction(1)
    for i in range(sum(beta)):
        den *= Fraction(m, 2) + i
    return num / den


# a radial profile is a dict k -> Fraction meaning sum_k c_k r^k exp(-s r^2)
Profile = dict


def spherical_mean0(phi: TestFunction) -> Profile:
    out: Profile = {}
    for mono, c in phi.poly.items():
        if any(a % 2 for a in mono):
            continue
        beta = tuple(a // 2 for a in mono)
        k = sum(mono)
        out[k] = out.get(k, Fraction(0)) + c * surface_moment(beta, phi.m)
    return {k: v for k, v in out.items() if v}


def spherical_mean1(phi: TestFunction) -> dict[int, Profile]:
    """Components of the first spherical mean: j -> profile of omega_j."""
    out: dict[int, Profile] = {}
    for mono, c in phi.poly.items():
        odd = [j for j, a in enumerate(mono) if a % 2]
        if len(odd) != 1:
            continue
        j = odd[0]
        mono2 = list(mono)
        mono2[j] += 1
        beta = tuple(a // 2 for a in mono2)
        k = sum(mono)  # omega^alpha has degree |alpha| in r... times omega_j
        prof = out.setdefault(j + 1, {})
        prof[k] = prof.get(k, Fraction(0)) + c * surface_moment(beta, phi.m)
    return {j: {k: v for k, v in p.items() if v} for j, p in out.items()}


# ---------------------------------------------------------------------------
# the one-dimensional finite part of r^mu against a profile
# ---------------------------------------------------------------------------

def _gamma_float(x: float) -> float:
    if x > 0:
        return math.gamma(x)
    if x == int(x):
        raise PoleHit(int(x), float("nan"))
    return math.pi / (math.sin(math.pi * x) * math.gamma(1.0 - x))


@dataclass
class FpValue:
    cont: float                    # Gamma-continuation route
    quad: float                    # subtracted-integral route
    exact: Optional[Coefficient]   # exact value when within the unit ring
    pole_hits: list = field(default_factory=list)


def _cont_term(mu: Fraction, k: int, s: Fraction) -> tuple[float, Optional[tuple]]:
    """Continuation value of Fp int r^(mu+k) e^(-s r^2) dr, plus pole flag."""
    z = mu + k + 1
    sf = float(s)
    if z.denominator == 1 and z <= 0 and int(z) % 2 == 0:
        # genuine pole of the continuation: monomial pseudofunction value
        j = int(-z) // 2
        residue = (-1) ** j * sf ** j / math.factorial(j)
        harmonic = sum(1.0 / i for i in range(1, j + 1))
        value = 0.5 * residue * (harmonic - _EULER_GAMMA - math.log(sf))
        return value, (int(z), residue)
    g = _gamma_float(float(z) / 2.0)
    return 0.5 * sf ** (-float(z) / 2.0) * g, None


def _exact_term(mu: Fraction, k: int, s: Fraction) -> Optional[Coefficient]:
    from .families import InadmissibleLambda, gamma_exact
    z = mu + k + 1
    q = z / 2
    if q.denominator not in (1, 2):
        return None
    if q.denominator == 1 and q <= 0:
        return None
    sp = _exact_power_rational(s, -q)
    if sp is None:
        return None
    try:
        g = gamma_exact(q)
    except InadmissibleLambda:
        return None
    return g.scale(sp / 2)


def _exact_power_rational(base: Fraction, exp: Fraction) -> Optional[Fraction]:
    if exp.denominator == 1:
        return base ** int(exp)
    num, den = base.numerator, base.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        return None
    return Fraction(rn, rd) ** int(2 * exp)


def _profile_taylor(profile: Profile, s: Fraction, order: int) -> list[Fraction]:
    """Taylor coefficients of sum_k c_k r^k e^(-s r^2) through r^order."""
    coeffs = [Fraction(0)] * (order + 1)
    for k, c in profile.items():
        fac = Fraction(1)
        for i in range(0, (order - k) // 2 + 1):
            if k + 2 * i <= order:
                coeffs[k + 2 * i] += c * (-s) ** i / math.factorial(i)
    return coeffs


def _quad_route(mu: Fraction, profile: Profile, s: Fraction) -> float:
    """The subtracted-integral definition, Gamma-free.

    Near zero the integrand r^mu (Phi - Taylor_{n-1} Phi) is integrated as an
    exact power series; on [1, R] adaptive quadrature is used with R chosen
    so the Gaussian tail is negligible.
    """
    muf = float(mu)
    # number of subtracted Taylor terms per the finite-part definition:
    # for -n-1 < mu < -n subtract through order n-1; integer mu = -n uses
    # the monomial-pseudofunction branch with the same subtraction depth.
    n = 0
    if mu <= -1:
        n = int(-mu) if mu.denominator == 1 else math.floor(-muf)
    taylor_order = n + 70
    tay = _profile_taylor(profile, s, taylor_order)
    # series part on [0, 1]: sum_{i >= n} tay_i / (mu + i + 1)
    series = 0.0
    for i in range(n, taylor_order + 1):
        series += float(tay[i]) / (muf + i + 1.0)

    def integrand(r: float) -> float:
        total = 0.0
        for k, c in profile.items():
            total += float(c) * r ** k
        return r ** muf * total * math.exp(-float(s) * r * r)

    R = math.sqrt(60.0 / float(s)) + 1.0
    tol = quad_tolerance()
    tail, _err = _quad(integrand, 1.0, R, epsabs=tol, epsrel=tol, limit=200)
    boundary = 0.0
    for k in range(n):
        zk = muf + k + 1.0
        if abs(zk) < 1e-12:
            continue  # the log epsilon term vanishes at the unit split
        boundary += float(tay[k]) / zk
    return series + tail + boundary


def fp_pair_1d(mu: Fraction, profile: Profile, s: Fraction,
               dps: Optional[int] = None) -> FpValue:
    """Finite-part pairing <Fp r_+^mu, profile> with both numeric routes."""
    mu = Fraction(mu)
    cont = 0.0
    poles = []
    exact: Optional[Coefficient] = Coefficient.zero()
    if dps is not None:
        cont = _cont_route_mp(mu, profile, s, dps)
    for k, c in sorted(profile.items()):
        if dps is None:
            v, pole = _cont_term(mu, k, s)
            cont += float(c) * v
            if pole is not None:
                poles.append(pole)
        else:
            z = mu + k + 1
            if z.denominator == 1 and z <= 0 and int(z) % 2 == 0:
                poles.append((int(z), float("nan")))
        if exact is not None:
            et = _exact_term(mu, k, s)
            exact = None if et is None else exact + et.scale(c)
    quad_v = _quad_route(mu, profile, s)
    return FpValue(cont, quad_v, exact, poles)


def _cont_route_mp(mu: Fraction, profile: Profile, s: Fraction,
                   dps: int) -> float:
    with mpmath.workdps(dps):
        total = mpmath.mpf(0)
        for k, c in profile.items():
            z = mpmath.mpf(mu.numerator) / mu.denominator + k + 1
            zq = Fraction(mu + k + 1)
            if zq.denominator == 1 and zq <= 0 and int(zq) % 2 == 0:
                j = int(-zq) // 2
                residue = (-1) ** j * mpmath.mpf(s.numerator) ** j / (
                    mpmath.mpf(s.denominator) ** j * mpmath.factorial(j))
                harm = mpmath.fsum(mpmath.mpf(1) / i
                                   for i in range(1, j + 1))
                v = residue * (harm - mpmath.euler -
                               mpmath.log(mpmath.mpf(s.numerator)
                                          / s.denominator)) / 2
            else:
                sq = mpmath.mpf(s.numerator) / s.denominator
                v = mpmath.gamma(z / 2) * sq ** (-z / 2) / 2
            total += (mpmath.mpf(c.numerator) / c.denominator) * v
        return float(total)


# ---------------------------------------------------------------------------
# full pairings
# ---------------------------------------------------------------------------

def sphere_area(m: int) -> float:
    return 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)


@dataclass
class PairingValue:
    """Clifford-valued pairing: per-blade complex values on both routes,
    with the exact value where it exists in the unit ring."""
    m: int
    cont: dict          # blade -> complex
    quad: dict          # blade -> complex
    exact: dict         # blade -> Coefficient or None
    pole_hits: list = field(default_factory=list)

    def blade_cont(self, blade: int = 0) -> complex:
        return self.cont.get(blade, 0j)

    def blade_quad(self, blade: int = 0) -> complex:
        return self.quad.get(blade, 0j)

    def max_abs(self) -> float:
        vals = list(self.cont.values()) + list(self.quad.values())
        return max((abs(v) for v in vals), default=0.0)


def _phi_times_monomial(phi: TestFunction, mono: tuple[int, ...]
                        ) -> TestFunction:
    f = phi
    for j, a in enumerate(mono, start=1):
        for _ in range(a):
            f = f.mul_xj(j)
    return f


def pair(e: DistExpr, phi: TestFunction, dps: Optional[int] = None
         ) -> PairingValue:
    """Pairing of a concrete expression against a test function.

    Signum expressions are paired against omega*phi by routing through the
    associated distribution: <s, omega phi> = -<wedge(s), phi>.
    """
    e = normalize(e)
    if e.mode != "concrete":
        raise ValueError("pairings need concrete lambda")
    if e.free_symbols():
        raise ValueError("fix free constants before pairing")
    if e.parity == SIG:
        inner = pair(wedge(e), phi, dps=dps)
        return PairingValue(
            e.m,
            {b: -v for b, v in inner.cont.items()},
            {b: -v for b, v in inner.quad.items()},
            {b: (None if v is None else -v) for b, v in inner.exact.items()},
            inner.pole_hits)
    m = e.m
    am = sphere_area(m)
    am_unit = Coefficient.unit(am=1)
    cont: dict = {}
    quadv: dict = {}
    exact: dict = {}
    poles: list = []

    def accumulate(blade, coeff: Coefficient, c_val: float, q_val: float,
                   e_val: Optional[Coefficient]):
        cf = coeff.to_complex(am)
        cont[blade] = cont.get(blade, 0j) + cf * c_val
        quadv[blade] = quadv.get(blade, 0j) + cf * q_val
        prev = exact.get(blade, Coefficient.zero())
        if prev is None or e_val is None:
            exact[blade] = None
        else:
            exact[blade] = prev + coeff * e_val

    for t in e.terms:
        if isinstance(t.carrier, DeltaDeriv):
            beta = t.carrier.beta
            psi = _phi_times_monomial(phi, t.mono)
            v = psi.deriv0(beta) * (-1) ** sum(beta)
            accumulate(t.blade, t.coeff, float(v), float(v),
                       Coefficient.rational(v))
        else:
            lam = t.carrier.lam.value()
            psi = _phi_times_monomial(phi, t.mono)
            prof = spherical_mean0(psi)
            if not prof:
                continue
            fp = fp_pair_1d(lam + m - 1, prof, phi.s, dps=dps)
            poles.extend(fp.pole_hits)
            accumulate(t.blade, t.coeff, am * fp.cont, am * fp.quad,
                       None if fp.exact is None else am_unit * fp.exact)
    return PairingValue(m, cont, quadv, exact, poles)


@dataclass
class VerifyReport:
    passed: bool
    max_rel: float
    scale: float
    details: list


def verify_identity(lhs: DistExpr, rhs: DistExpr, suite, tol: float = 1e-8,
                    route: str = "cont") -> VerifyReport:
    """Max relative pairing discrepancy between two expressions."""
    worst = 0.0
    scale = 0.0
    details = []
    for phi in suite:
        pl = pair(lhs, phi)
        pr = pair(rhs, phi)
        blades = set(pl.cont) | set(pr.cont)
        sc = max(pl.max_abs(), pr.max_abs(), 1e-30)
        scale = max(scale, sc)
        for b in blades:
            if route == "cont":
                d = abs(pl.blade_cont(b) - pr.blade_cont(b))
            else:
                d = abs(pl.blade_quad(b) - pr.blade_quad(b))
            rel = d / sc
            worst = max(worst, rel)
            details.append((phi, b, rel))
    return VerifyReport(worst <= tol, worst, scale, details)


def adjoint_partial_discrepancy(e: DistExpr, phi: TestFunction, j: int,
                                result: Optional[DistExpr] = None) -> float:
    """|<d_j e, phi> + <e, d_j phi>| / scale for the cartesian derivative."""
    from .ops import apply
    lhs = pair(result if result is not None else apply("partialxj", e,
                                                       axis=j).expr, phi)
    rhs = pair(e, phi.dxj(j))
    blades = set(lhs.cont) | set(rhs.cont)
    scale = max(lhs.max_abs(), rhs.max_abs(), 1e-30)
    return max(abs(lhs.blade_cont(b) + rhs.blade_cont(b)) / scale
               for b in blades) if blades else 0.0


__all__ = [
    "FpValue", "PairingValue", "PoleHit", "Profile", "TestFunction",
    "VerifyReport", "adjoint_partial_discrepancy", "fp_pair_1d", "pair",
    "quad_tolerance", "sphere_area", "spherical_mean0", "spherical_mean1",
    "surface_moment", "verify_identity",
]
