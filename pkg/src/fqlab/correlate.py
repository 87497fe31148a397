"""Exact correlation sums over all monic (or all irreducible) polynomials.

correlate() evaluates sum over the domain of prod_i psi_i(f + h_i) by
exhaustive enumeration: each shifted value f + h_i is factored on its own
by trial division (no cross-element sieving; correctness first, the
enumeration partitions supply the parallelism).  Integer-valued function
sets accumulate in exact integers, which makes the raw sums bit-identical
across any partitioning; everything else uses compensated summation per
partition with partitions combined in ascending order.

Trial division stops early when every function in play is identically 1
on primes above some degree: the untouched cofactor then contributes an
exact factor of 1, so the value is unchanged and the hot path only ever
divides by the handful of primes that matter.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .arith import FunctionSpec, eval_on
from .fieldpoly import (
    FieldSpec,
    Poly,
    ext_gcd,
    format_poly,
    monic_from_index,
    poly_gcd_lcm,
)
from .mainterm import (
    LOCAL_DEPTH_DEFAULT,
    ShiftPair,
    TruncatedValue,
    default_gamma,
    error_bound_shape,
    main_term,
)
from .sieve import (
    IrreducibleTable,
    TableTooSmallError,
    _factor_bits_limited,
    _factor_bits_pairs,
    _factor_coeffs,
    factorize,
)
from . import arith


class EngineError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationSpec:
    """One correlation experiment.

    shifts and functions are parallel lists (k-point sums allowed; main
    terms only attach for k = 2).  Shifts may deliberately coincide; each
    must have degree < n.  gamma/depth override the main-term defaults.
    """

    field: FieldSpec
    n: int
    domain: str  # "monic" | "prime"
    shifts: tuple[Poly, ...]
    functions: tuple[FunctionSpec, ...]
    gamma: int | None = None
    depth: int = LOCAL_DEPTH_DEFAULT
    partitions: int = 1

    def __post_init__(self):
        object.__setattr__(self, "shifts", tuple(self.shifts))
        object.__setattr__(self, "functions", tuple(self.functions))
        if self.domain not in ("monic", "prime"):
            raise EngineError(f"domain must be monic or prime, got {self.domain!r}")
        if len(self.shifts) != len(self.functions) or not self.shifts:
            raise EngineError("shifts and functions must pair up, at least one each")
        if self.n < 1:
            raise EngineError("n must be >= 1")
        for h in self.shifts:
            if h.field != self.field:
                raise EngineError("shift in a different field")
            if not h.is_zero and h.degree >= self.n:
                raise EngineError(f"shift {format_poly(h)} has degree >= n={self.n}")
        for psi in self.functions:
            if psi.field != self.field:
                raise EngineError(f"function {psi.name} bound to a different field")
        if self.partitions < 1:
            raise EngineError("partitions must be >= 1")


@dataclass(frozen=True)
class CorrelationReport:
    q: int
    n: int
    domain: str
    function_names: tuple[str, ...]
    shift_texts: tuple[str, ...]
    raw_sum: complex | int
    domain_size: int
    normalized: complex
    main: TruncatedValue | None
    deviation: float | None
    seconds: float
    partitions: int

    @property
    def integer_exact(self) -> bool:
        return isinstance(self.raw_sum, int)


class _Kahan:
    """Neumaier-compensated complex accumulator."""

    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0j
        self.c = 0j

    def add(self, v):
        v = complex(v)
        t = self.s + v
        if abs(t.real) >= abs(v.real):
            cr = (self.s.real - t.real) + v.real
        else:
            cr = (v.real - t.real) + self.s.real
        if abs(t.imag) >= abs(v.imag):
            ci = (self.s.imag - t.imag) + v.imag
        else:
            ci = (v.imag - t.imag) + self.s.imag
        self.c += complex(cr, ci)
        self.s = t

    def total(self):
        return self.s + self.c


def _partition_bounds(total: int, parts: int):
    return [(total * i // parts, total * (i + 1) // parts) for i in range(parts)]


def _trial_limit(spec: CorrelationSpec) -> int:
    """Largest prime degree trial division must reach: half the domain
    degree in general, or the common triviality bound when every function
    ignores larger primes."""
    bounds = [psi.trivial_beyond_degree for psi in spec.functions]
    if all(b is not None for b in bounds):
        return min(max(bounds), spec.n // 2)
    return spec.n // 2


def correlate(spec: CorrelationSpec, table: IrreducibleTable) -> CorrelationReport:
    """Evaluate the correlation sum exactly and attach the predicted main
    term (two functions, both unit bounded)."""
    if table.field != spec.field:
        raise EngineError("table built for a different field")
    q = spec.field.p
    n = spec.n
    limit = _trial_limit(spec)
    if spec.domain == "prime" and table.max_deg < n:
        raise TableTooSmallError(
            f"prime domain at degree {n} needs the degree-{n} listing")
    if table.max_deg < limit:
        raise TableTooSmallError(
            f"need primes to degree {limit}, table has {table.max_deg}")

    t0 = time.perf_counter()
    symmetric = all(psi.degree_symmetric and psi.rule_dm is not None
                    for psi in spec.functions)
    integer = all(psi.integer_valued for psi in spec.functions)
    fullfact = any(psi.trivial_beyond_degree is None for psi in spec.functions)

    if spec.domain == "monic":
        domain_size = q**n
        source = None
    else:
        source = table.prime_indices(n)
        domain_size = len(source)

    partials = []
    for lo, hi in _partition_bounds(domain_size, spec.partitions):
        if symmetric and q == 2:
            partials.append(_sum_bits(spec, table, lo, hi, source, limit,
                                      fullfact, integer))
        elif symmetric:
            partials.append(_sum_coeffs(spec, table, lo, hi, source, limit,
                                        fullfact, integer))
        else:
            partials.append(_sum_generic(spec, table, lo, hi, source, integer))

    if integer:
        raw: complex | int = sum(partials)
        normalized = complex(raw) / domain_size
    else:
        acc = _Kahan()
        for v in partials:
            acc.add(v)
        raw = acc.total()
        if raw.imag == 0:
            raw = raw.real
        normalized = complex(raw) / domain_size

    main: TruncatedValue | None = None
    deviation: float | None = None
    if len(spec.functions) == 2 and all(p.unit_bounded for p in spec.functions):
        mode = "monic" if spec.domain == "monic" else "prime"
        shifts = ShiftPair(spec.shifts[0], spec.shifts[1])
        gamma = spec.gamma
        if gamma is None:
            gamma = default_gamma(q, mode, shifts)
        main = main_term(n, gamma, shifts, spec.functions[0], spec.functions[1],
                         mode, table, depth=spec.depth)
        deviation = abs(normalized - main.value)

    return CorrelationReport(
        q=q, n=n, domain=spec.domain,
        function_names=tuple(p.name for p in spec.functions),
        shift_texts=tuple(format_poly(h) for h in spec.shifts),
        raw_sum=raw, domain_size=domain_size, normalized=normalized,
        main=main, deviation=deviation,
        seconds=time.perf_counter() - t0, partitions=spec.partitions)


def _sum_bits(spec, table, lo, hi, source, limit, fullfact, integer):
    """p = 2 hot loop on integer bitmasks."""
    n = spec.n
    rows = table.bit_rows(max(1, limit))
    evs = [psi.evaluator_dm() for psi in spec.functions]
    hbits = [h.encode() for h in spec.shifts]
    lead = 1 << n
    acc_i = 0
    acc_f = _Kahan()
    pairs_of = _factor_bits_pairs if fullfact else _factor_bits_limited
    for pos in range(lo, hi):
        base = lead | pos if source is None else lead | int(source[pos])
        v = 1
        for hb, ev in zip(hbits, evs):
            g = base ^ hb
            if fullfact:
                pairs = pairs_of(g, rows)
            else:
                pairs = pairs_of(g, rows, limit)
            v = v * ev(pairs)
            if v == 0:
                break
        if integer:
            acc_i += v
        else:
            acc_f.add(v)
    return acc_i if integer else acc_f.total()


def _sum_coeffs(spec, table, lo, hi, source, limit, fullfact, integer):
    """General-p loop on coefficient lists (degree-symmetric functions)."""
    n = spec.n
    p = spec.field.p
    rows = table.coeff_rows(max(1, limit))
    evs = [psi.evaluator_dm() for psi in spec.functions]
    hcoef = []
    for h in spec.shifts:
        cs = list(h.coeffs) + [0] * (n - len(h.coeffs))
        hcoef.append(cs[:n])
    acc_i = 0
    acc_f = _Kahan()
    eff_limit = None if fullfact else limit
    for pos in range(lo, hi):
        idx = pos if source is None else int(source[pos])
        digits = []
        v_ = idx
        for _ in range(n):
            digits.append(v_ % p)
            v_ //= p
        v = 1
        for hc, ev in zip(hcoef, evs):
            coeffs = [(digits[i] + hc[i]) % p for i in range(n)]
            coeffs.append(1)
            raw = _factor_coeffs(p, coeffs, rows, eff_limit)
            pairs = [(len(pc) - 1, m) for pc, m in raw]
            v = v * ev(pairs)
            if v == 0:
                break
        if integer:
            acc_i += v
        else:
            acc_f.add(v)
    return acc_i if integer else acc_f.total()


def _sum_generic(spec, table, lo, hi, source, integer):
    """Fallback for functions needing the primes themselves (no degree
    symmetry); factors through Poly objects, fine for small n."""
    n = spec.n
    field = spec.field
    acc_i = 0
    acc_f = _Kahan()
    for pos in range(lo, hi):
        idx = pos if source is None else int(source[pos])
        f = monic_from_index(field, n, idx)
        v = 1
        for h, psi in zip(spec.shifts, spec.functions):
            fact = factorize(f + h, table)
            v = v * eval_on(fact, psi)
            if v == 0:
                break
        if integer:
            acc_i += v
        else:
            acc_f.add(v)
    return acc_i if integer else acc_f.total()


# ---------------------------------------------------------------------------
# exact counting of the congruence system behind the main term
# ---------------------------------------------------------------------------

def crt_count(g1: Poly, g2: Poly, h1: Poly, h2: Poly, n: int) -> int:
    """|{f monic of degree n : g1 | f + h1 and g2 | f + h2}| exactly.

    The system has solutions iff gcd(g1, g2) divides h2 - h1, and then
    fills exactly one residue class mod lcm(g1, g2): the count is
    q^{n - deg lcm} when deg lcm <= n, else 0 or 1 according to whether
    the unique residue is itself monic of degree n.
    """
    for g in (g1, g2):
        if g.is_zero or not g.is_monic:
            raise EngineError("moduli must be monic nonzero")
    field = g1.field
    q = field.p
    g, lcm = poly_gcd_lcm(g1, g2)
    diff = h2 - h1
    if not (diff % g).is_zero:
        return 0
    dl = lcm.degree
    if dl <= n:
        return q ** (n - dl)
    # residue construction: f = -h1 + g1*t with g1*t = -(h2-h1) mod g2
    gg, s, _t = ext_gcd(g1, g2)
    # s*g1 = gg mod g2; scale to hit -(diff)
    quot = (-diff) // gg
    t0 = (s * quot) % (g2 // gg)
    f0 = (-h1 + g1 * t0) % lcm
    return 1 if (not f0.is_zero and f0.is_monic and f0.degree == n) else 0


def crt_count_enumerated(g1: Poly, g2: Poly, h1: Poly, h2: Poly, n: int) -> int:
    """Brute-force twin of crt_count (test oracle; O(q^n))."""
    field = g1.field
    count = 0
    for idx in range(field.p ** n):
        f = monic_from_index(field, n, idx)
        if ((f + h1) % g1).is_zero and ((f + h2) % g2).is_zero:
            count += 1
    return count


# ---------------------------------------------------------------------------
# trend scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanPoint:
    n: int
    report: CorrelationReport
    bound_overlay: float | None


def deviation_scan(spec: CorrelationSpec, n_range, table: IrreducibleTable,
                   overlay_alpha: float | None = 0.75,
                   overlay_c: float = 1.0,
                   overlay_r: int | None = None) -> list[ScanPoint]:
    """Run the same experiment across a range of degrees and pair every
    measured deviation with the theoretical bound shape at that degree."""
    points = []
    for n in n_range:
        s = CorrelationSpec(spec.field, n, spec.domain, spec.shifts,
                            spec.functions, spec.gamma, spec.depth,
                            spec.partitions)
        rep = correlate(s, table)
        overlay = None
        if overlay_alpha is not None and len(spec.functions) == 2 and \
                all(p.unit_bounded and p.degree_symmetric for p in spec.functions):
            mode = "monic" if spec.domain == "monic" else "prime"
            gamma = spec.gamma if spec.gamma is not None else \
                default_gamma(spec.field.p, mode,
                              ShiftPair(spec.shifts[0], spec.shifts[1]))
            r = overlay_r if overlay_r is not None else gamma
            r = max(1, min(r, n))
            d1 = arith.distance(spec.functions[0],
                                arith.builtin("one", spec.field), r, n, table)
            d2 = arith.distance(spec.functions[1],
                                arith.builtin("one", spec.field), r, n, table)
            overlay = error_bound_shape(mode, r, n, overlay_alpha,
                                        spec.field.p, c=overlay_c,
                                        dist1=d1, dist2=d2)
        points.append(ScanPoint(n, rep, overlay))
    return points
