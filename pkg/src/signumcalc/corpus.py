"""Golden-identity corpus: machine-readable case files and their runner.

A case file holds one stanza per identity:

    [case-id]
    paper: where the formula lives (mandatory comment field)
    m: 2,3,4,5,6            # dimensions to run (default 2..6)
    ell: 0..3               # optional parameter expansion
    mode: exact             # exact | class | fixed
    numeric: 1e-8 3         # optional: also compare pairings (tol, n_phi)
    lhs: dirac(U(-m+1))
    rhs: (-1)*a_m*delta

Both sides may contain template fields ``{...}`` evaluated with the concrete
``m`` and ``l`` plus helpers ``C`` (the singular-case combinatorial constant),
``Fr`` (exact rationals) and ``dpow`` (k-fold Dirac power of delta).  Template
values are spliced in literally, so case files wrap them in parentheses.

Comparison modes: ``exact`` requires canonical-form equality (including at
generic lambda); ``class`` requires equality after solving for the free
constants on both sides, with matching ambiguity counts; ``fixed`` applies
the standard constant-fixing policy first and then requires exact equality.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .canon import ambiguity_rank, expr_equal, normalize, unify_constants
from .lang import parse_expr
from .ops import OpResult, fix_constants
from .scalars import ExclusionSet, cml

DEFAULT_MS = (2, 3, 4, 5, 6)


@dataclass(frozen=True)
class IdentityCase:
    id: str
    paper: str
    lhs: str
    rhs: str
    ms: tuple[int, ...] = DEFAULT_MS
    ells: Optional[tuple[int, ...]] = None
    mode: str = "exact"
    numeric: Optional[tuple[float, int]] = None
    exclusions: Optional[str] = None


@dataclass
class CaseResult:
    case: str
    m: int
    ell: Optional[int]
    passed: bool
    message: str = ""


@dataclass
class Report:
    results: list[CaseResult] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def total(self) -> int:
        return len(self.results)

    @property
    def passed(self) -> int:
        return sum(r.passed for r in self.results)

    def failures(self) -> list[CaseResult]:
        return [r for r in self.results if not r.passed]


# ---------------------------------------------------------------------------
# case file loading
# ---------------------------------------------------------------------------

def _parse_range(text: str) -> tuple[int, ...]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(x) for x in text.split(","))


def load_cases(path) -> list[IdentityCase]:
    cases = []
    current: dict = {}

    def flush():
        if not current:
            return
        if "paper" not in current:
            raise ValueError(f"case {current.get('id')} misses its paper "
                             "location comment")
        numeric = None
        if "numeric" in current:
            tol, n = current["numeric"].split()
            numeric = (float(tol), int(n))
        cases.append(IdentityCase(
            id=current["id"],
            paper=current["paper"],
            lhs=current["lhs"],
            rhs=current["rhs"],
            ms=_parse_range(current.get("m", "2..6")),
            ells=_parse_range(current["ell"]) if "ell" in current else None,
            mode=current.get("mode", "exact"),
            numeric=numeric,
            exclusions=current.get("exclusions"),
        ))
        current.clear()

    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            flush()
            current["id"] = line[1:-1]
            continue
        key, _, value = line.partition(":")
        current[key.strip()] = value.strip()
    flush()
    return cases


# ---------------------------------------------------------------------------
# templating
# ---------------------------------------------------------------------------

def _dpow(k: int, inner: str = "delta") -> str:
    """Expression text for the k-th Dirac power applied to delta; the
    (-1)^l sign from dbar^2 = -Laplace sits on the innermost atom so the
    result stays a single distribution factor."""
    ell = k // 2
    signed = ("(-1)*" if ell % 2 else "") + inner
    core = "laplace(" * ell + signed + ")" * ell
    if k % 2:
        core = f"dirac({core})"
    return core


def _wdpow(k: int, inner: str = "delta") -> str:
    return f"vee({_dpow(k, inner)})"


def expand_template(text: str, m: int, ell: Optional[int]) -> str:
    env = {
        "m": m,
        "l": ell,
        "C": lambda mm, ll: int(cml(mm, ll)),
        "Fr": Fraction,
        "sgn": lambda k: -1 if k % 2 else 1,
        "dpow": _dpow,
        "wdpow": _wdpow,
    }
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch != "{":
            out.append(ch)
            i += 1
            continue
        depth = 1
        j = i + 1
        while j < len(text) and depth:
            if text[j] == "{":
                depth += 1
            elif text[j] == "}":
                depth -= 1
            j += 1
        if depth:
            raise ValueError(f"unbalanced template braces in {text!r}")
        # case files are first-party data shipped with the package
        value = eval(text[i + 1:j - 1], {"__builtins__": {}}, env)
        out.append(str(value))
        i = j
    return "".join(out)


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

def _compare(lhs, rhs, mode: str) -> tuple[bool, str]:
    if mode == "exact":
        if expr_equal(lhs, rhs):
            return True, ""
        return False, "canonical forms differ"
    if mode == "fixed":
        fixed = fix_constants(OpResult(lhs))
        if fixed.free_symbols():
            return False, "free constants survived the fixing policy"
        if expr_equal(fixed, rhs):
            return True, ""
        return False, "fixed form differs"
    if mode == "class":
        # the engine may tie displayed constants together (a tighter class)
        # but must never carry more freedom than the stated formula
        if ambiguity_rank(lhs) > ambiguity_rank(rhs):
            return False, (f"ambiguity mismatch: engine rank "
                           f"{ambiguity_rank(lhs)} with "
                           f"{sorted(lhs.free_symbols())}, formula rank "
                           f"{ambiguity_rank(rhs)}")
        if ambiguity_rank(lhs) == 0:
            return False, "engine result is unique but a class was stated"
        if expr_equal(lhs, rhs) or unify_constants(lhs, rhs) is not None:
            return True, ""
        return False, "no constant assignment matches"
    raise ValueError(f"unknown comparison mode {mode!r}")


def run_case(case: IdentityCase, m: int, ell: Optional[int]) -> CaseResult:
    from .lang import format_expr
    try:
        lhs_text = expand_template(case.lhs, m, ell)
        rhs_text = expand_template(case.rhs, m, ell)
        lhs = parse_expr(lhs_text, m)
        rhs = parse_expr(rhs_text, m)
        ok, msg = _compare(lhs, rhs, case.mode)
        if ok and case.exclusions is not None:
            # the engine may prove a tighter exclusion set than the paper's
            # qualifier, but must never exceed it
            stated = ExclusionSet.parse(case.exclusions)
            got = lhs.exclusions
            if not got.covered_by(stated):
                ok, msg = False, (f"exclusion set {got} exceeds "
                                  f"{case.exclusions}")
        if ok and case.numeric is not None and not lhs.free_symbols() \
                and lhs.mode == "concrete":
            from .cli import default_suite
            from .numeric import verify_identity
            tol, n = case.numeric
            rep = verify_identity(lhs, rhs, default_suite(m, n), tol=tol)
            if not rep.passed:
                ok, msg = False, f"numeric discrepancy {rep.max_rel:.2e}"
        if not ok:
            msg += (f" | lhs={format_expr(lhs)} rhs={format_expr(rhs)}")
        return CaseResult(case.id, m, ell, ok, msg)
    except Exception as exc:  # noqa: BLE001 - report, don't crash the run
        return CaseResult(case.id, m, ell, False, f"error: {exc!r}")


def run_cases(cases, ms=None, verbose: bool = False) -> Report:
    report = Report()
    start = time.perf_counter()
    for case in cases:
        dim_list = ms if ms is not None else case.ms
        for m in dim_list:
            if m not in case.ms:
                continue
            ells = case.ells if case.ells is not None else (None,)
            for ell in ells:
                result = run_case(case, m, ell)
                report.results.append(result)
                if verbose:
                    tag = f"{case.id} m={m}" + \
                        (f" l={ell}" if ell is not None else "")
                    status = "pass" if result.passed else "FAIL"
                    line = f"{status}  {tag}"
                    if not result.passed:
                        line += f"  ({result.message})"
                    print(line)
    report.elapsed = time.perf_counter() - start
    return report


def corpus_dir() -> Path:
    return Path(__file__).parent / "data" / "corpus"


def load_all_cases() -> list[IdentityCase]:
    cases = []
    for path in sorted(corpus_dir().glob("*.cases")):
        cases.extend(load_cases(path))
    return cases


__all__ = [
    "CaseResult", "IdentityCase", "Report", "corpus_dir", "expand_template",
    "load_all_cases", "load_cases", "run_case", "run_cases",
]
