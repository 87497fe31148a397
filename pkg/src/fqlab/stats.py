"""Distributional layer: empirical laws of shifted additive functions,
their characteristic functions against the predicted limits, and the
classical diagnostics (Turan-Kubilius ratios, sieve statistics,
Brun-Titchmarsh, divisor products).

Everything here is exact where the object is exact (counts, the sieve
statistics as Fractions) and enumeration-based where it is a sample (the
value multisets).  Heavy loops reuse the trial-division kernels of the
sieve module; statistics assembly is single-threaded.
"""

from __future__ import annotations

import bisect
import cmath
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .arith import AdditiveSpec, eval_additive_on, exp_additive, phi
from .fieldpoly import Poly, monic_from_index
from .mainterm import ShiftPair, TruncatedValue, default_gamma, main_term
from .sieve import (
    IrreducibleTable,
    TableTooSmallError,
    _factor_bits_limited,
    _factor_bits_pairs,
    _factor_coeffs,
    factorize,
    residue_histogram,
)
from .correlate import CorrelationSpec, correlate


class StatsError(ValueError):
    pass


# ---------------------------------------------------------------------------
# empirical distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalDistribution:
    """Multiset of real values over a finite domain, as a step CDF."""

    values: tuple[float, ...]   # sorted, distinct
    counts: tuple[int, ...]
    domain_size: int

    def __post_init__(self):
        if sum(self.counts) != self.domain_size:
            raise StatsError("multiplicities do not add up to the domain size")

    def cdf(self, x: float) -> float:
        i = bisect.bisect_right(self.values, x)
        return sum(self.counts[:i]) / self.domain_size

    def char_value(self, t: float) -> complex:
        total = 0j
        for v, c in zip(self.values, self.counts):
            total += c * cmath.exp(1j * t * v)
        return total / self.domain_size

    def dump_rows(self):
        return list(zip(self.values, self.counts))


def _additive_values(psi1: AdditiveSpec, psi2: AdditiveSpec, h1: Poly, h2: Poly,
                     n: int, domain: str, table: IrreducibleTable):
    """Multiset {psi1(f+h1) + psi2(f+h2)} over the domain, as value->count."""
    field = table.field
    q = field.p
    for h in (h1, h2):
        if not h.is_zero and h.degree >= n:
            raise StatsError("shift degree must be < n")
    if domain not in ("monic", "prime"):
        raise StatsError("domain must be monic or prime")
    if domain == "prime":
        if table.max_deg < n:
            raise TableTooSmallError(f"prime domain needs the degree-{n} listing")
        source = table.prime_indices(n)
        total = len(source)
    else:
        source = None
        total = q**n

    bounds = [psi1.trivial_beyond_degree, psi2.trivial_beyond_degree]
    if all(b is not None for b in bounds):
        limit = min(max(bounds), n // 2)
        full = False
    else:
        limit = n // 2
        full = True
    if limit > table.max_deg:
        raise TableTooSmallError(
            f"need primes to degree {limit}, table has {table.max_deg}")

    counts: dict[float, int] = {}
    symmetric = (psi1.degree_symmetric and psi1.rule_dm is not None
                 and psi2.degree_symmetric and psi2.rule_dm is not None)
    if symmetric and q == 2:
        rows = table.bit_rows(max(1, limit))
        evs = (psi1.evaluator_dm(), psi2.evaluator_dm())
        hbits = (h1.encode(), h2.encode())
        lead = 1 << n
        for pos in range(total):
            base = lead | pos if source is None else lead | int(source[pos])
            x = 0.0
            for hb, ev in zip(hbits, evs):
                g = base ^ hb
                pairs = (_factor_bits_pairs(g, rows) if full
                         else _factor_bits_limited(g, rows, limit))
                x += ev(pairs)
            counts[x] = counts.get(x, 0) + 1
    elif symmetric:
        rows = table.coeff_rows(max(1, limit))
        evs = (psi1.evaluator_dm(), psi2.evaluator_dm())
        hc = []
        for h in (h1, h2):
            cs = list(h.coeffs) + [0] * (n - len(h.coeffs))
            hc.append(cs[:n])
        eff = None if full else limit
        for pos in range(total):
            idx = pos if source is None else int(source[pos])
            digits = []
            v_ = idx
            for _ in range(n):
                digits.append(v_ % q)
                v_ //= q
            x = 0.0
            for hcj, ev in zip(hc, evs):
                coeffs = [(digits[i] + hcj[i]) % q for i in range(n)]
                coeffs.append(1)
                raw = _factor_coeffs(q, coeffs, rows, eff)
                x += ev([(len(pc) - 1, m) for pc, m in raw])
            counts[x] = counts.get(x, 0) + 1
    else:
        for pos in range(total):
            idx = pos if source is None else int(source[pos])
            f = monic_from_index(field, n, idx)
            x = (eval_additive_on(factorize(f + h1, table), psi1)
                 + eval_additive_on(factorize(f + h2, table), psi2))
            counts[x] = counts.get(x, 0) + 1
    return counts, total


def empirical_distribution(psi1: AdditiveSpec, psi2: AdditiveSpec,
                           shifts: ShiftPair, n: int, domain: str,
                           table: IrreducibleTable) -> EmpiricalDistribution:
    """Exact law of psi1(f+h1) + psi2(f+h2) over the chosen domain."""
    counts, total = _additive_values(psi1, psi2, shifts.h1, shifts.h2, n,
                                     domain, table)
    vals = sorted(counts)
    return EmpiricalDistribution(tuple(vals), tuple(counts[v] for v in vals),
                                 total)


def ks_distance(d1: EmpiricalDistribution, d2: EmpiricalDistribution) -> float:
    """Sup-norm distance of the two step CDFs over the merged support."""
    support = sorted(set(d1.values) | set(d2.values))
    best = 0.0
    c1 = c2 = 0
    i1 = i2 = 0
    for x in support:
        while i1 < len(d1.values) and d1.values[i1] <= x:
            c1 += d1.counts[i1]
            i1 += 1
        while i2 < len(d2.values) and d2.values[i2] <= x:
            c2 += d2.counts[i2]
            i2 += 1
        best = max(best, abs(c1 / d1.domain_size - c2 / d2.domain_size))
    return best


# ---------------------------------------------------------------------------
# characteristic functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CharFunctionGrid:
    """Empirical and/or limiting characteristic function on a t grid."""

    t_values: tuple[float, ...]
    phi_empirical: tuple[complex, ...] | None = None
    phi_limit: tuple[TruncatedValue, ...] | None = None

    @property
    def per_t_error(self) -> tuple[float, ...] | None:
        if self.phi_empirical is None or self.phi_limit is None:
            return None
        return tuple(abs(e - l.value) for e, l
                     in zip(self.phi_empirical, self.phi_limit))


def empirical_charfn(psi1: AdditiveSpec, psi2: AdditiveSpec, shifts: ShiftPair,
                     n: int, domain: str, t_grid, table: IrreducibleTable,
                     via: str = "distribution") -> CharFunctionGrid:
    """phi_n(t): the normalized sum of exp(i t (psi1(f+h1)+psi2(f+h2))).

    via="correlate" runs one correlation per t with the exponentiated
    multiplicative functions; via="distribution" groups the identical
    additive values first and applies the same exponentials to the
    grouped multiset (one enumeration pass for the whole grid).  The two
    paths agree to floating-point rounding.
    """
    ts = tuple(float(t) for t in t_grid)
    if via == "distribution":
        dist = empirical_distribution(psi1, psi2, shifts, n, domain, table)
        vals = tuple(dist.char_value(t) for t in ts)
    elif via == "correlate":
        vals_l = []
        for t in ts:
            spec = CorrelationSpec(
                table.field, n, domain, (shifts.h1, shifts.h2),
                (exp_additive(psi1, t), exp_additive(psi2, t)))
            vals_l.append(complex(correlate(spec, table).normalized))
        vals = tuple(vals_l)
    else:
        raise StatsError(f"unknown evaluation path {via!r}")
    return CharFunctionGrid(ts, phi_empirical=vals)


def _hypothesis_trend_warning(psi: AdditiveSpec, table: IrreducibleTable) -> None:
    # the limit law needs the additive series over primes to converge;
    # compare dyadic blocks of the absolute per-degree terms: a convergent
    # series has sharply shrinking blocks, anything harmonic or worse does
    # not (numeric trend check only, not a proof either way)
    if not psi.degree_symmetric or psi.rule_dm is None:
        return
    q = table.field.p
    terms = []
    for d in range(1, 17):
        v = psi.value_dm(d, 1)
        contrib = table.count(d) * min(abs(v), 1.0) / q**d
        big = table.count(d) / q**d if abs(v) > 1 else 0.0
        terms.append(contrib + big)
    first = sum(terms[4:8])
    second = sum(terms[8:16])
    if second > 0.01 and second >= 0.8 * first:
        warnings.warn(
            f"additive spec {psi.name}: per-degree series blocks are not "
            "decaying; the limit-law hypothesis looks violated",
            stacklevel=2)


def limit_charfn(psi1: AdditiveSpec, psi2: AdditiveSpec, shifts: ShiftPair,
                 t_grid, mode: str, table: IrreducibleTable,
                 gamma: int | None = None,
                 tail_target: float = 1e-12) -> CharFunctionGrid:
    """phi(t): the predicted limiting characteristic function, evaluated
    per t as the main term of the exponentiated additive functions (the
    infinite-degree product, certified truncation)."""
    _hypothesis_trend_warning(psi1, table)
    _hypothesis_trend_warning(psi2, table)
    q = table.field.p
    if gamma is None:
        gamma = default_gamma(q, mode, shifts)
    out = []
    for t in t_grid:
        e1 = exp_additive(psi1, float(t))
        e2 = exp_additive(psi2, float(t))
        out.append(main_term(None, gamma, shifts, e1, e2, mode, table,
                             tail_target=tail_target))
    return CharFunctionGrid(tuple(float(t) for t in t_grid),
                            phi_limit=tuple(out))


def charfn_comparison(psi1: AdditiveSpec, psi2: AdditiveSpec,
                      shifts: ShiftPair, n: int, domain: str, t_grid,
                      table: IrreducibleTable) -> CharFunctionGrid:
    emp = empirical_charfn(psi1, psi2, shifts, n, domain, t_grid, table)
    mode = "monic" if domain == "monic" else "prime"
    lim = limit_charfn(psi1, psi2, shifts, t_grid, mode, table)
    return CharFunctionGrid(emp.t_values, emp.phi_empirical, lim.phi_limit)


# ---------------------------------------------------------------------------
# Turan-Kubilius ratios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TKReport:
    domain: str
    n: int
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0
        return self.lhs / self.rhs


def _as_rule(psi) -> "callable":
    return psi.rule_dm if hasattr(psi, "rule_dm") else psi


def tk_ratio(psi, h: Poly, n: int, domain: str,
             table: IrreducibleTable) -> TKReport:
    """Shifted Turan-Kubilius statistic for a prime-power rule psi(P^m).

    monic domain (variance form):
      lhs = sum_f |sum_{P^m || f+h} psi - E_n|^2,
      E_n = sum_{m deg P <= n} psi(P^m) q^{-m deg P} (1 - q^{-deg P}),
      rhs = q^n sum_{m deg P <= n} |psi(P^m)|^2 q^{-m deg P}.

    prime domain (first-moment form):
      lhs = sum_P |sum_{Q^k || P+h} psi - A_n|,
      A_n = sum_{k deg Q <= n} psi(Q^k)/phi(Q^k) (1 - q^{-deg Q}),
      rhs = |P_n| * sqrt(sum |psi(Q^k)|^2 / phi(Q^k)).

    The content of the inequality is that lhs/rhs stays bounded as n grows.
    """
    rule = _as_rule(psi)
    q = table.field.p
    if domain not in ("monic", "prime"):
        raise StatsError("domain must be monic or prime")
    if table.max_deg < n // 2 or (domain == "prime" and table.max_deg < n):
        raise TableTooSmallError("table too small for this degree")

    if domain == "monic":
        expect = 0j
        rhs = 0.0
        for d in range(1, n + 1):
            nd = table.count(d)
            x = float(q) ** (-d)
            w = x
            for m in range(1, n // d + 1):
                v = complex(rule(d, m))
                expect += nd * v * w * (1.0 - x)
                rhs += nd * abs(v) ** 2 * w
                w *= x
        rhs *= float(q) ** n
        lhs = 0.0
        lead = 1 << n if q == 2 else None
        rows = table.bit_rows(max(1, n // 2)) if q == 2 else None
        cache: dict = {}
        hb = h.encode() if q == 2 else None
        for idx in range(q**n):
            if q == 2:
                pairs = _factor_bits_pairs((lead | idx) ^ hb, rows)
            else:
                f = monic_from_index(table.field, n, idx)
                pairs = factorize(f + h, table).degree_mult_pairs()
            s = 0j
            for dm in pairs:
                v = cache.get(dm)
                if v is None:
                    v = complex(rule(*dm))
                    cache[dm] = v
                s += v
            lhs += abs(s - expect) ** 2
        return TKReport(domain, n, lhs, rhs)

    a_n = 0j
    b2 = 0.0
    for d in range(1, n + 1):
        nd = table.count(d)
        x = float(q) ** (-d)
        for k in range(1, n // d + 1):
            v = complex(rule(d, k))
            ph = q ** (k * d) - q ** ((k - 1) * d)
            a_n += nd * v / ph * (1.0 - x)
            b2 += nd * abs(v) ** 2 / ph
    rows = table.bit_rows(max(1, n // 2)) if q == 2 else None
    lead = 1 << n if q == 2 else None
    hb = h.encode() if q == 2 else None
    cache = {}
    lhs = 0.0
    for pidx in table.prime_indices(n):
        if q == 2:
            pairs = _factor_bits_pairs((lead | int(pidx)) ^ hb, rows)
        else:
            f = monic_from_index(table.field, n, int(pidx))
            pairs = factorize(f + h, table).degree_mult_pairs()
        s = 0j
        for dm in pairs:
            v = cache.get(dm)
            if v is None:
                v = complex(rule(*dm))
                cache[dm] = v
            s += v
        lhs += abs(s - a_n)
    rhs = table.count(n) * math.sqrt(b2)
    return TKReport(domain, n, lhs, rhs)


# ---------------------------------------------------------------------------
# sieve-flavoured diagnostics, all exact (Fractions)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SieveDiagnostics:
    n: int
    theta: int                 # sum of phi(Q) * pi^2 over large prime moduli
    theta_ratio: Fraction      # theta / |P_n|^2
    bv_sum: Fraction           # Bombieri-Vinogradov style max-deviation sum
    h_sequence: tuple[Fraction, ...]   # H(1..n)
    divprod_max: Fraction      # max over f of prod_{P | f} (1 + 1/|P|)


def squarefree_weight_sum(n: int, table: IrreducibleTable) -> Fraction:
    """H(n) = sum over monic f of degree n of mu^2(f) 3^omega(f) / q^n."""
    q = table.field.p
    total = 0
    if q == 2:
        rows = table.bit_rows(max(1, n // 2))
        lead = 1 << n
        for idx in range(q**n):
            pairs = _factor_bits_pairs(lead | idx, rows)
            if all(m == 1 for _, m in pairs):
                total += 3 ** len(pairs)
    else:
        for idx in range(q**n):
            fact = factorize(monic_from_index(table.field, n, idx), table)
            if all(m == 1 for _, m in fact.factors):
                total += 3**fact.num_distinct
    return Fraction(total, q**n)


def _pi_ap_exact(n: int, modulus: Poly, residue_key: int,
                 table: IrreducibleTable) -> int:
    return residue_histogram(n, modulus, table).get(residue_key, 0)


def sieve_diagnostics(n: int, h: Poly, t: float,
                      table: IrreducibleTable) -> SieveDiagnostics:
    """Classical sieve statistics at degree n with shift h.

    theta sums phi(Q) pi^2(n; Q, -h) over prime moduli of degree in
    (n/2, n], skipping the degenerate classes with gcd(-h, Q) != 1 (for
    those the count is a divisibility artifact, not a progression count).
    bv_sum adds, over every modulus M of degree < n/2 - t log_q n, the
    worst deviation |pi - q^n/(n phi(M))| across invertible residues.
    """
    q = table.field.p
    field = table.field
    if table.max_deg < n:
        raise TableTooSmallError("diagnostics need prime listings to degree n")

    # Theta
    theta = 0
    if not h.is_zero:  # -h = 0 is invertible mod nothing: empty sum
        for dq in range(n // 2 + 1, n + 1):
            for Q in table.primes(dq):
                res = (-h) % Q
                if res.is_zero:
                    continue  # Q divides h: class not invertible
                cnt = _pi_ap_exact(n, Q, res.encode(), table)
                if cnt:
                    theta += (q**dq - 1) * cnt * cnt  # phi of a prime
    npq = table.count(n)
    theta_ratio = Fraction(theta, npq * npq)

    # Bombieri-Vinogradov sum
    bound = n / 2 - t * math.log(n, q)
    bv = Fraction(0)
    d = 1
    while d < bound:
        for midx in range(q**d):
            M = monic_from_index(field, d, midx)
            phim = phi(M, table)
            target = Fraction(q**n, n * phim)
            hist = residue_histogram(n, M, table)
            worst = max((abs(Fraction(c) - target) for c in hist.values()),
                        default=Fraction(0))
            if phim > len(hist):
                worst = max(worst, target)  # some invertible class is empty
            bv += worst
        d += 1

    h_seq = tuple(squarefree_weight_sum(m, table) for m in range(1, n + 1))

    best = Fraction(1)
    if q == 2:
        rows = table.bit_rows(max(1, n // 2))
        lead = 1 << n
        per_degree = {}
        for idx in range(q**n):
            pairs = _factor_bits_pairs(lead | idx, rows)
            prod = Fraction(1)
            for dd, _m in pairs:
                w = per_degree.get(dd)
                if w is None:
                    w = Fraction(q**dd + 1, q**dd)
                    per_degree[dd] = w
                prod *= w
            if prod > best:
                best = prod
    else:
        for idx in range(q**n):
            fact = factorize(monic_from_index(field, n, idx), table)
            prod = Fraction(1)
            for P, _m in fact.factors:
                prod *= Fraction(q**P.degree + 1, q**P.degree)
            if prod > best:
                best = prod

    return SieveDiagnostics(n, theta, theta_ratio, bv, h_seq, best)


def brun_titchmarsh_violations(n_max: int, table: IrreducibleTable) -> list:
    """Exhaustively test pi(n; M, B) <= 2 q^n / (phi(M) (n - deg M + 1))
    for every modulus of degree < n <= n_max and every invertible residue.
    Returns the list of violating (n, M, B-key) triples; Brun-Titchmarsh
    is a theorem, so anything but an empty list is a bug."""
    q = table.field.p
    field = table.field
    bad = []
    for n in range(2, n_max + 1):
        for d in range(1, n):
            for midx in range(q**d):
                M = monic_from_index(field, d, midx)
                phim = phi(M, table)
                hist = residue_histogram(n, M, table)
                for key, cnt in hist.items():
                    # only prime residue classes appear; all are invertible
                    # since deg P = n > deg M
                    if cnt * phim * (n - d + 1) > 2 * q**n:
                        bad.append((n, M, key))
    return bad
