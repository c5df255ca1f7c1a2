"""Real Clifford algebra R_{0,m}: basis blades, geometric product, grades.

Blades are encoded as integer bitmasks (bit j set = e_{j+1} present); the
sign rule is e_j^2 = -1, e_i e_j = -e_j e_i.  The engine only needs grades
up to 2 plus their products, but the implementation is generic for m <= 16.
"""

from __future__ import annotations

from .scalars import Coefficient

MAX_DIM = 16


def blade_from_indices(indices) -> int:
    """Build a blade mask from strictly increasing 1-based indices."""
    mask = 0
    last = 0
    for i in indices:
        if i <= last:
            raise ValueError("blade indices must be strictly increasing")
        mask |= 1 << (i - 1)
        last = i
    return mask


def blade_indices(blade: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(blade.bit_length()) if blade >> i & 1)


def blade_grade(blade: int) -> int:
    return bin(blade).count("1")


def blade_mul(a: int, b: int) -> tuple[int, int]:
    """Geometric product of two basis blades: returns (sign, blade)."""
    sign = 1
    result = a
    rem = b
    while rem:
        j = (rem & -rem).bit_length() - 1
        rem &= rem - 1
        higher = bin(result >> (j + 1)).count("1")
        if higher % 2:
            sign = -sign
        bit = 1 << j
        if result & bit:
            result &= ~bit
            sign = -sign  # e_j e_j = -1
        else:
            result |= bit
    return sign, result


def blade_str(blade: int) -> str:
    if blade == 0:
        return "1"
    return "e" + "".join(str(i) for i in blade_indices(blade))


class CliffordElem:
    """Sparse multivector with Coefficient entries."""

    __slots__ = ("m", "_t")

    def __init__(self, m: int, terms=None):
        if not 1 <= m <= MAX_DIM:
            raise ValueError(f"dimension must be in [1, {MAX_DIM}]")
        self.m = m
        t = {}
        if terms:
            for blade, c in terms.items():
                if blade >> m:
                    raise ValueError("blade index exceeds dimension")
                if not c.is_zero():
                    t[blade] = c
        self._t = t

    @staticmethod
    def zero(m: int) -> "CliffordElem":
        return CliffordElem(m)

    @staticmethod
    def scalar(m: int, value) -> "CliffordElem":
        c = value if isinstance(value, Coefficient) else Coefficient.rational(value)
        return CliffordElem(m, {0: c})

    @staticmethod
    def basis_vector(m: int, j: int) -> "CliffordElem":
        return CliffordElem(m, {1 << (j - 1): Coefficient.one()})

    def terms(self):
        return dict(self._t)

    def __add__(self, other: "CliffordElem") -> "CliffordElem":
        t = dict(self._t)
        for blade, c in other._t.items():
            t[blade] = t.get(blade, Coefficient.zero()) + c
        return CliffordElem(self.m, t)

    def __neg__(self) -> "CliffordElem":
        return CliffordElem(self.m, {b: -c for b, c in self._t.items()})

    def __sub__(self, other: "CliffordElem") -> "CliffordElem":
        return self + (-other)

    def __mul__(self, other: "CliffordElem") -> "CliffordElem":
        if self.m != other.m:
            raise ValueError("dimension mismatch")
        t: dict[int, Coefficient] = {}
        for b1, c1 in self._t.items():
            for b2, c2 in other._t.items():
                sign, b = blade_mul(b1, b2)
                c = c1 * c2
                if sign < 0:
                    c = -c
                t[b] = t.get(b, Coefficient.zero()) + c
        return CliffordElem(self.m, t)

    def grade_project(self, k: int) -> "CliffordElem":
        if not 0 <= k <= self.m:
            raise ValueError("grade out of range")
        return CliffordElem(
            self.m, {b: c for b, c in self._t.items() if blade_grade(b) == k})

    def grades(self) -> set[int]:
        return {blade_grade(b) for b in self._t}

    def __eq__(self, other):
        return (isinstance(other, CliffordElem)
                and self.m == other.m and self._t == other._t)

    def __hash__(self):
        return hash((self.m, frozenset(self._t.items())))

    def __str__(self):
        if not self._t:
            return "0"
        return " + ".join(f"({c})*{blade_str(b)}"
                          for b, c in sorted(self._t.items()))

    __repr__ = __str__


def geometric_product(a: CliffordElem, b: CliffordElem) -> CliffordElem:
    return a * b


def grade_project(a: CliffordElem, k: int) -> CliffordElem:
    return a.grade_project(k)


__all__ = [
    "MAX_DIM", "CliffordElem", "blade_from_indices", "blade_grade",
    "blade_indices", "blade_mul", "blade_str", "geometric_product",
    "grade_project",
]
