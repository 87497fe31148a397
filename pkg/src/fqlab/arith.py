"""Multiplicative and additive functions on F_p[x], and closeness metrics.

A multiplicative function is determined by its values on prime powers
P^m; a FunctionSpec carries that rule plus the flags the evaluation
machinery relies on (degree symmetry, |value| <= 1, integrality, and two
structural bounds: the degree beyond which the rule is identically 1,
and the power beyond which the value stops changing).  The structural
bounds are what let truncated Euler products report honest tails and let
the correlation engine stop trial division early (a rule that is 1 on
every prime power it never sees contributes an exact factor of 1).

Additive functions follow the same shape with sums instead of products
and 0 as the neutral value.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .fieldpoly import FieldSpec, Poly
from .sieve import Factorization, IrreducibleTable, factorize


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class FunctionSpec:
    """Multiplicative function given by its rule on prime powers.

    rule_dm(d, m) is the value at P^m for any prime P of degree d (only
    meaningful when degree_symmetric); rule_poly(P, m) is the general
    form.  The value at m = 0 is 1 by convention and is supplied by the
    accessors, not the rules.  trivial_beyond_degree = R means the value
    is exactly 1 whenever deg P > R (None: no such bound); power_settle
    = s means the value at P^m equals the value at P^s for all m >= s.
    """

    name: str
    field: FieldSpec
    rule_dm: Callable[[int, int], complex] | None
    degree_symmetric: bool
    unit_bounded: bool
    integer_valued: bool
    trivial_beyond_degree: int | None
    power_settle: int | None
    rule_poly: Callable[[Poly, int], complex] | None = None

    def value_dm(self, d: int, m: int):
        if m == 0:
            return 1
        if not self.degree_symmetric or self.rule_dm is None:
            raise SpecError(f"{self.name} has no degree-symmetric rule")
        return self.rule_dm(d, m)

    def value_at(self, P: Poly, m: int):
        if m == 0:
            return 1
        if self.rule_poly is not None:
            return self.rule_poly(P, m)
        return self.rule_dm(P.degree, m)

    def evaluator_dm(self) -> Callable:
        """Cached product evaluator over (degree, mult) pair sequences."""
        rule = self.rule_dm
        cache: dict = {}
        def ev(pairs):
            v = 1
            for dm in pairs:
                w = cache.get(dm)
                if w is None:
                    w = rule(*dm)
                    cache[dm] = w
                v = v * w
            return v
        return ev


@dataclass(frozen=True)
class AdditiveSpec:
    """Real-valued additive function; value at m = 0 is 0."""

    name: str
    field: FieldSpec
    rule_dm: Callable[[int, int], float] | None
    degree_symmetric: bool
    trivial_beyond_degree: int | None  # rule == 0 beyond this degree
    power_settle: int | None
    rule_poly: Callable[[Poly, int], float] | None = None

    def value_dm(self, d: int, m: int) -> float:
        if m == 0:
            return 0.0
        if not self.degree_symmetric or self.rule_dm is None:
            raise SpecError(f"{self.name} has no degree-symmetric rule")
        return self.rule_dm(d, m)

    def value_at(self, P: Poly, m: int) -> float:
        if m == 0:
            return 0.0
        if self.rule_poly is not None:
            return self.rule_poly(P, m)
        return self.rule_dm(P.degree, m)

    def evaluator_dm(self) -> Callable:
        rule = self.rule_dm
        cache: dict = {}
        def ev(pairs):
            v = 0.0
            for dm in pairs:
                w = cache.get(dm)
                if w is None:
                    w = rule(*dm)
                    cache[dm] = w
                v += w
            return v
        return ev


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------

def builtin(kind: str, field: FieldSpec, *, k: int | None = None,
            y: int | None = None) -> FunctionSpec:
    """Construct one of the canned multiplicative functions.

    kinds: one, moebius, kfree (needs k >= 2), liouville,
    liouville_truncated (needs y >= 1), phi_ratio.

    On non-squarefree input moebius evaluates to 0, the standard
    convention (this is what makes the squarefree densities come out
    right, and what eval_on relies on).
    """
    q = field.p
    if kind == "one":
        return FunctionSpec("one", field, lambda d, m: 1, True, True, True, 0, 0)
    if kind == "moebius":
        return FunctionSpec("moebius", field,
                            lambda d, m: -1 if m == 1 else 0,
                            True, True, True, None, 2)
    if kind == "kfree":
        if k is None or k < 2:
            raise SpecError("kfree needs k >= 2")
        return FunctionSpec(f"kfree:{k}", field,
                            lambda d, m, _k=k: 1 if m < _k else 0,
                            True, True, True, None, k)
    if kind == "liouville":
        return FunctionSpec("liouville", field,
                            lambda d, m: -1 if m & 1 else 1,
                            True, True, True, None, None)
    if kind == "liouville_truncated":
        if y is None or y < 1:
            raise SpecError("liouville_truncated needs y >= 1")
        return FunctionSpec(
            f"liouville_trunc:{y}", field,
            lambda d, m, _y=y: (-1 if m & 1 else 1) if d <= _y else 1,
            True, True, True, y, None)
    if kind == "phi_ratio":
        # multiplicative form of Phi(f)/|f|: value 1 - q^{-d} at every P^m
        return FunctionSpec("phi_ratio", field,
                            lambda d, m, _q=q: 1.0 - _q ** (-d),
                            True, True, False, None, 1)
    raise SpecError(f"unknown builtin kind {kind!r}")


def builtin_additive(kind: str, field: FieldSpec) -> AdditiveSpec:
    """Canned additive functions: zero, omega (distinct prime count),
    big_omega (with multiplicity), log_phi_ratio (log of Phi(f)/|f|)."""
    q = field.p
    if kind == "zero":
        return AdditiveSpec("zero", field, lambda d, m: 0.0, True, 0, 0)
    if kind == "omega":
        return AdditiveSpec("omega", field, lambda d, m: 1.0, True, None, 1)
    if kind == "big_omega":
        return AdditiveSpec("big_omega", field, lambda d, m: float(m),
                            True, None, None)
    if kind == "log_phi_ratio":
        return AdditiveSpec("log_phi_ratio", field,
                            lambda d, m, _q=q: math.log(1.0 - _q ** (-d)),
                            True, None, 1)
    raise SpecError(f"unknown additive kind {kind!r}")


def custom_from_table(field: FieldSpec, entries: dict[tuple[int, int], complex],
                      name: str = "custom") -> FunctionSpec:
    """Degree-symmetric custom spec from a {(degree, m): value} table;
    unlisted prime powers take the value 1."""
    if not entries:
        raise SpecError("empty custom table")
    for (d, m), _v in entries.items():
        if d < 1 or m < 1:
            raise SpecError(f"bad custom key ({d}, {m})")
    table = dict(entries)
    unit = all(abs(v) <= 1 + 1e-12 for v in table.values())
    integer = all(complex(v).imag == 0 and float(complex(v).real).is_integer()
                  for v in table.values())
    max_d = max(d for d, _ in table)
    max_m = max(m for _, m in table)
    def rule(d, m, _t=table):
        return _t.get((d, m), 1)
    return FunctionSpec(name, field, rule, True, unit, integer, max_d, max_m + 1)


def load_custom_file(path: str | Path, field: FieldSpec) -> FunctionSpec:
    """Parse a custom-spec file of `degree,m=value` lines (value is a
    Python float or complex literal; # starts a comment)."""
    entries: dict[tuple[int, int], complex] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            key, val = line.split("=", 1)
            d_s, m_s = key.strip().strip("()").split(",")
            entries[(int(d_s), int(m_s))] = complex(val.strip())
        except ValueError as exc:
            raise SpecError(f"{path}: bad custom line {raw!r}") from exc
    return custom_from_table(field, entries, name=f"custom:{Path(path).name}")


_FUNC_GRAMMAR = ("one", "moebius", "kfree:<k>", "liouville",
                 "liouville_trunc:<y>", "phi_ratio", "custom:<file>")


def parse_function_spec(text: str, field: FieldSpec) -> FunctionSpec:
    """CLI/config naming grammar for multiplicative functions."""
    s = text.strip()
    if s == "one":
        return builtin("one", field)
    if s == "moebius":
        return builtin("moebius", field)
    if s == "liouville":
        return builtin("liouville", field)
    if s == "phi_ratio":
        return builtin("phi_ratio", field)
    if s.startswith("kfree:"):
        return builtin("kfree", field, k=int(s.split(":", 1)[1]))
    if s.startswith("liouville_trunc:"):
        return builtin("liouville_truncated", field, y=int(s.split(":", 1)[1]))
    if s.startswith("custom:"):
        return load_custom_file(s.split(":", 1)[1], field)
    raise SpecError(f"unknown function spec {text!r}; expected one of {_FUNC_GRAMMAR}")


def parse_additive_spec(text: str, field: FieldSpec) -> AdditiveSpec:
    s = text.strip()
    if s in ("zero", "omega", "big_omega", "log_phi_ratio"):
        return builtin_additive(s, field)
    raise SpecError(f"unknown additive spec {text!r}")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def eval_on(fact: Factorization, spec: FunctionSpec):
    """Value at a monic polynomial given its factorization (product over
    prime powers; empty factorization gives 1)."""
    v = 1
    for P, m in fact.factors:
        v = v * spec.value_at(P, m)
    return v


def eval_additive_on(fact: Factorization, spec: AdditiveSpec) -> float:
    return sum(spec.value_at(P, m) for P, m in fact.factors)


def phi(f: Poly | Factorization, table: IrreducibleTable | None = None) -> int:
    """Euler totient |(A/fA)^*| for monic nonzero f: the product of
    q^{m d} - q^{(m-1) d} over prime powers P^m || f; phi(1) = 1."""
    if isinstance(f, Factorization):
        fact = f
        q = fact.factors[0][0].field.p if fact.factors else None
        if q is None:
            return 1
    else:
        if table is None:
            raise SpecError("phi on a Poly needs a table to factor with")
        fact = factorize(f, table)
        q = f.field.p
    out = 1
    for P, m in fact.factors:
        d = P.degree
        out *= q ** (m * d) - q ** ((m - 1) * d)
    return out


def _spot_check_symmetry(spec, table: IrreducibleTable) -> None:
    # degree_symmetric is trusted but sampled: two primes of equal degree
    # must agree at m = 1 and m = 2
    if spec.rule_poly is None:
        return
    for d in range(1, min(3, table.max_deg) + 1):
        primes = table.primes(d)
        if len(primes) < 2:
            continue
        for m in (1, 2):
            a, b = spec.value_at(primes[0], m), spec.value_at(primes[1], m)
            if abs(a - b) > 1e-12:
                raise SpecError(
                    f"{spec.name} claims degree symmetry but differs at "
                    f"degree {d}, m={m}")


# ---------------------------------------------------------------------------
# pretentiousness metrics
# ---------------------------------------------------------------------------

def distance(psi1: FunctionSpec, psi2: FunctionSpec, m: int, n: int,
             table: IrreducibleTable) -> float:
    """Distance between two unit-bounded multiplicative functions over the
    degree window [m, n]:

        D^2 = sum over primes with m <= deg P <= n of
              (1 - Re(psi1(P) * conj(psi2(P)))) / q^{deg P}

    Returns D (the square root).  With two degree-symmetric specs the
    per-degree term is the count N_d times the common value, which also
    lets the window extend past the tabulated listings.
    """
    if not (psi1.unit_bounded and psi2.unit_bounded):
        raise SpecError("distance requires unit-bounded functions")
    if m > n:
        raise SpecError("empty degree window")
    q = table.field.p
    total = 0.0
    if psi1.degree_symmetric and psi2.degree_symmetric:
        _spot_check_symmetry(psi1, table)
        _spot_check_symmetry(psi2, table)
        for d in range(m, n + 1):
            v = complex(psi1.value_dm(d, 1)) * complex(psi2.value_dm(d, 1)).conjugate()
            total += table.count(d) * (1.0 - v.real) / q**d
    else:
        if n > table.max_deg:
            raise SpecError("window beyond table for non-degree-symmetric specs")
        for d in range(m, n + 1):
            w = q ** (-d)
            for P in table.primes(d):
                v = complex(psi1.value_at(P, 1)) * complex(psi2.value_at(P, 1)).conjugate()
                total += (1.0 - v.real) * w
    return math.sqrt(max(total, 0.0))


def closeness_partial_sums(psi: FunctionSpec, N: int,
                           table: IrreducibleTable) -> list[complex]:
    """Partial sums S_D = sum_{deg P <= D} (psi(P) - 1)/q^{deg P} for
    D = 1..N; the sequence converging is the closeness-to-1 hypothesis."""
    q = table.field.p
    sums: list[complex] = []
    run = 0j
    if psi.degree_symmetric:
        _spot_check_symmetry(psi, table)
        for d in range(1, N + 1):
            run += table.count(d) * (complex(psi.value_dm(d, 1)) - 1) / q**d
            sums.append(run)
    else:
        if N > table.max_deg:
            raise SpecError("window beyond table for non-degree-symmetric spec")
        for d in range(1, N + 1):
            for P in table.primes(d):
                run += (complex(psi.value_at(P, 1)) - 1) / q**d
            sums.append(run)
    return sums


def mertens_sum(n: int, table: IrreducibleTable) -> float:
    """sum_{deg P <= n} q^{-deg P}; grows like log n plus a constant."""
    q = table.field.p
    return sum(table.count(d) * q ** (-d) for d in range(1, n + 1))


def exp_additive(psi_tilde: AdditiveSpec, t: float) -> FunctionSpec:
    """Multiplicative spec P^m -> exp(i t psi_tilde(P^m)); unit modulus by
    construction.  t = 0 collapses to the constant-1 spec."""
    if t == 0:
        return builtin("one", psi_tilde.field)
    name = f"exp({t:g}*{psi_tilde.name})"
    rule_dm = None
    if psi_tilde.rule_dm is not None:
        base = psi_tilde.rule_dm
        rule_dm = lambda d, m, _b=base, _t=t: cmath.exp(1j * _t * _b(d, m))
    rule_poly = None
    if psi_tilde.rule_poly is not None:
        basep = psi_tilde.rule_poly
        rule_poly = lambda P, m, _b=basep, _t=t: cmath.exp(1j * _t * _b(P, m))
    return FunctionSpec(name, psi_tilde.field, rule_dm,
                        psi_tilde.degree_symmetric, True, False,
                        psi_tilde.trivial_beyond_degree,
                        psi_tilde.power_settle, rule_poly)
