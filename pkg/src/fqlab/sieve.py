"""Monic irreducibles over F_p: sieve, counting, factorization, primes in APs.

The sieve marks, degree by degree, every product of a lower-degree
irreducible with a monic cofactor; the unmarked indices of degree d are
exactly the irreducibles.  Everything is vectorized over the enumeration
index space (numpy), with a bitmask kernel for p = 2 and a base-p digit
kernel for general p.

Counts are validated against the necklace identity sum_{d|n} d*N_d = q^n
(the coefficient form of the zeta function's Euler product) and against
the square-root error shape |n*N_n - q^n| <= 4*q^{n/2}.  Counts beyond
the tabulated range are produced exactly by Moebius inversion of the
necklace identity; only listings are capped by the memory budget.

The cache file layout (little endian) is:
  magic "FFQI", u32 format version, u32 p, u32 max_deg,
  then for d = 1..max_deg: u64 N_d, then N_d records of d bytes each
  holding coefficients c0..c_{d-1} (leading 1 implicit).
A loaded cache is trusted only after the necklace identity passes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fieldpoly import (
    FieldSpec,
    Poly,
    monic_from_index,
)

CACHE_MAGIC = b"FFQI"
CACHE_VERSION = 1
DEFAULT_CELL_BUDGET = 1 << 27  # total enumeration cells across degrees


class SieveError(ValueError):
    pass


class MemoryBudgetError(RuntimeError):
    """q^max_deg listing would exceed the configured cell budget."""


class TableTooSmallError(SieveError):
    pass


def _divisors(n: int) -> list[int]:
    out = [d for d in range(1, n + 1) if n % d == 0]
    return out


def _mobius_int(n: int) -> int:
    if n == 1:
        return 1
    m, cnt, k = n, 0, 2
    while k * k <= m:
        if m % k == 0:
            m //= k
            if m % k == 0:
                return 0
            cnt += 1
        k += 1
    if m > 1:
        cnt += 1
    return -1 if cnt % 2 else 1


def irreducible_count(q: int, n: int) -> int:
    """Exact |P_{n,q}| by Moebius inversion of the necklace identity."""
    if n < 1:
        raise SieveError("degree must be >= 1")
    total = sum(_mobius_int(n // d) * q**d for d in _divisors(n))
    return total // n


# ---------------------------------------------------------------------------
# sieve kernels: indices of P*g over all monic g of a given degree
# ---------------------------------------------------------------------------

def _multiples_gf2(prime_full: int, m: int, target_deg: int) -> np.ndarray:
    """Indices of prime*g for all monic g of degree m (p=2 bit kernel)."""
    g = np.arange(1 << m, dtype=np.uint64) | np.uint64(1 << m)
    acc = np.zeros(1 << m, dtype=np.uint64)
    b = prime_full
    shift = 0
    while b:
        if b & 1:
            acc ^= g << np.uint64(shift)
        b >>= 1
        shift += 1
    return acc ^ np.uint64(1 << target_deg)


def _digit_matrix(p: int, count: int, width: int) -> np.ndarray:
    idx = np.arange(count, dtype=np.int64)
    pows = p ** np.arange(width, dtype=np.int64)
    return (idx[:, None] // pows[None, :]) % p


def _multiples_generic(p: int, prime_coeffs, m: int, target_deg: int) -> np.ndarray:
    """Same as the bit kernel but in base-p digit space (any p)."""
    cnt = p**m
    gd = np.empty((cnt, m + 1), dtype=np.int64)
    gd[:, :m] = _digit_matrix(p, cnt, m)
    gd[:, m] = 1
    out = np.zeros((cnt, target_deg + 1), dtype=np.int64)
    for j, cj in enumerate(prime_coeffs):
        if cj:
            out[:, j:j + m + 1] += cj * gd
    out %= p
    pows = p ** np.arange(target_deg, dtype=np.int64)
    return out[:, :target_deg] @ pows


@dataclass(frozen=True)
class NecklaceReport:
    n: int
    weighted_sum: int  # sum_{d|n} d * N_d
    expected: int      # q^n
    ok: bool


@dataclass(frozen=True)
class Factorization:
    """Prime-power decomposition of a monic polynomial.

    factors are (prime, multiplicity) with distinct monic irreducible
    primes, sorted by (degree, enumeration index); the empty tuple is the
    factorization of 1.
    """

    factors: tuple[tuple[Poly, int], ...]

    def degree_mult_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple((P.degree, m) for P, m in self.factors)

    def product(self) -> Poly:
        if not self.factors:
            raise SieveError("empty factorization has no carrier field")
        out = self.factors[0][0] ** self.factors[0][1]
        for P, m in self.factors[1:]:
            out = out * P**m
        return out

    @property
    def big_omega(self) -> int:
        return sum(m for _, m in self.factors)

    @property
    def num_distinct(self) -> int:
        return len(self.factors)


class IrreducibleTable:
    """All monic irreducibles of degree <= max_deg over F_p.

    Per-degree listings are numpy index arrays in enumeration order;
    immutable after build, safe for concurrent reads.
    """

    def __init__(self, field: FieldSpec, max_deg: int,
                 by_degree: list[np.ndarray]):
        self.field = field
        self.max_deg = max_deg
        self._by_degree = by_degree  # [None, deg1 indices, deg2 indices, ...]
        self._counts = [0] + [len(a) for a in by_degree[1:]]
        self._bit_rows: list[list[int]] | None = None
        self._coeff_rows: list[list[tuple[int, ...]]] | None = None
        self._validate()

    def _validate(self) -> None:
        q = self.field.p
        for n in range(1, self.max_deg + 1):
            rep = self.necklace_check(n)
            if not rep.ok:
                raise SieveError(
                    f"necklace identity fails at n={n}: "
                    f"{rep.weighted_sum} != {rep.expected}")
            if abs(n * self._counts[n] - q**n) > 4 * q ** (n / 2):
                raise SieveError(f"count N_{n} violates the sqrt error shape")

    # -- counting ---------------------------------------------------------

    def count(self, d: int) -> int:
        """Exact N_d for any d >= 1 (stored listing, or Moebius inversion
        of the necklace identity beyond max_deg)."""
        if d <= 0:
            raise SieveError("degree must be >= 1")
        if d <= self.max_deg:
            return self._counts[d]
        return irreducible_count(self.field.p, d)

    def necklace_check(self, n: int) -> NecklaceReport:
        if not 1 <= n <= self.max_deg:
            raise SieveError(f"n={n} outside tabulated range")
        s = sum(d * self._counts[d] for d in _divisors(n))
        rhs = self.field.p ** n
        return NecklaceReport(n, s, rhs, s == rhs)

    # -- listings ---------------------------------------------------------

    def prime_indices(self, d: int) -> np.ndarray:
        if not 1 <= d <= self.max_deg:
            raise TableTooSmallError(f"degree {d} not tabulated (max {self.max_deg})")
        return self._by_degree[d]

    def primes(self, d: int) -> list[Poly]:
        return [monic_from_index(self.field, d, int(i))
                for i in self.prime_indices(d)]

    def bit_rows(self, limit: int) -> list[list[int]]:
        """rows[d] = degree-d prime bitmasks with the leading bit set (p=2)."""
        if self.field.p != 2:
            raise SieveError("bit rows exist only for p=2")
        if limit > self.max_deg:
            raise TableTooSmallError(f"need primes to degree {limit}, have {self.max_deg}")
        if self._bit_rows is None or len(self._bit_rows) <= limit:
            rows: list[list[int]] = [[]]
            for d in range(1, self.max_deg + 1):
                lead = 1 << d
                rows.append([int(i) | lead for i in self._by_degree[d]])
            self._bit_rows = rows
        return self._bit_rows

    def coeff_rows(self, limit: int) -> list[list[tuple[int, ...]]]:
        """rows[d] = degree-d prime coefficient tuples, leading 1 included."""
        if limit > self.max_deg:
            raise TableTooSmallError(f"need primes to degree {limit}, have {self.max_deg}")
        if self._coeff_rows is None:
            p = self.field.p
            rows: list[list[tuple[int, ...]]] = [[]]
            for d in range(1, self.max_deg + 1):
                row = []
                for i in self._by_degree[d]:
                    v = int(i)
                    cs = []
                    for _ in range(d):
                        cs.append(v % p)
                        v //= p
                    cs.append(1)
                    row.append(tuple(cs))
                rows.append(row)
            self._coeff_rows = rows
        return self._coeff_rows

    # -- cache ------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        p = self.field.p
        with open(path, "wb") as fh:
            fh.write(CACHE_MAGIC)
            fh.write(struct.pack("<III", CACHE_VERSION, p, self.max_deg))
            for d in range(1, self.max_deg + 1):
                idx = self._by_degree[d]
                fh.write(struct.pack("<Q", len(idx)))
                digits = (idx.astype(np.int64)[:, None]
                          // (p ** np.arange(d, dtype=np.int64))[None, :]) % p
                fh.write(digits.astype(np.uint8).tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "IrreducibleTable":
        with open(path, "rb") as fh:
            if fh.read(4) != CACHE_MAGIC:
                raise SieveError(f"{path}: bad magic")
            version, p, max_deg = struct.unpack("<III", fh.read(12))
            if version != CACHE_VERSION:
                raise SieveError(f"{path}: unsupported cache version {version}")
            field = FieldSpec(p)
            by_degree: list[np.ndarray] = [np.empty(0, dtype=np.int64)]
            for d in range(1, max_deg + 1):
                (n_d,) = struct.unpack("<Q", fh.read(8))
                raw = fh.read(n_d * d)
                if len(raw) != n_d * d:
                    raise SieveError(f"{path}: truncated cache at degree {d}")
                digits = np.frombuffer(raw, dtype=np.uint8).reshape(n_d, d)
                if digits.size and digits.max() >= p:
                    raise SieveError(f"{path}: coefficient out of range")
                pows = p ** np.arange(d, dtype=np.int64)
                by_degree.append(np.sort(digits.astype(np.int64) @ pows))
        return cls(field, max_deg, by_degree)  # necklace check runs in init


def necklace_check(table: IrreducibleTable, n: int) -> NecklaceReport:
    """Free-function form of the identity check sum_{d|n} d N_d = q^n."""
    return table.necklace_check(n)


def build_table(field: FieldSpec, max_deg: int,
                cell_budget: int = DEFAULT_CELL_BUDGET) -> IrreducibleTable:
    """Sieve all monic irreducibles of degree <= max_deg."""
    if max_deg < 1:
        raise SieveError("max_deg must be >= 1")
    p = field.p
    cells = sum(p**d for d in range(1, max_deg + 1))
    if cells > cell_budget:
        raise MemoryBudgetError(
            f"p={p}, max_deg={max_deg} needs {cells} cells "
            f"(budget {cell_budget})")

    by_degree: list[np.ndarray] = [np.empty(0, dtype=np.int64)]
    for target in range(1, max_deg + 1):
        composite = np.zeros(p**target, dtype=bool)
        for d in range(1, target // 2 + 1):
            m = target - d
            if p == 2:
                for idx in by_degree[d]:
                    full = int(idx) | (1 << d)
                    composite[_multiples_gf2(full, m, target)] = True
            else:
                for idx in by_degree[d]:
                    v, cs = int(idx), []
                    for _ in range(d):
                        cs.append(v % p)
                        v //= p
                    cs.append(1)
                    composite[_multiples_generic(p, cs, m, target)] = True
        by_degree.append(np.nonzero(~composite)[0].astype(np.int64))
    return IrreducibleTable(field, max_deg, by_degree)


# ---------------------------------------------------------------------------
# factorization by trial division
# ---------------------------------------------------------------------------

def _factor_bits(bits: int, rows: list[list[int]]):
    """Full factorization of a monic GF(2) bitmask.

    Returns [(prime_bits, mult)] sorted by (degree, index).  rows must
    list primes up to half the input degree; the final cofactor, if any,
    is irreducible because no prime up to half its degree divides it.
    """
    out = []
    a = bits
    deg = a.bit_length() - 1
    d = 1
    while 2 * d <= deg:
        for pb in rows[d]:
            bl = d + 1
            q, r = 0, a
            while True:
                sh = r.bit_length() - bl
                if sh < 0:
                    break
                r ^= pb << sh
                q |= 1 << sh
            if r:
                continue
            m, a = 1, q
            while True:
                q, r = 0, a
                while True:
                    sh = r.bit_length() - bl
                    if sh < 0:
                        break
                    r ^= pb << sh
                    q |= 1 << sh
                if r:
                    break
                a, m = q, m + 1
            out.append((pb, m))
            deg = a.bit_length() - 1
            if 2 * d > deg:
                break
        d += 1
    if deg > 0:
        out.append((a, 1))
    return out


def _factor_bits_pairs(bits: int, rows: list[list[int]]):
    """Full factorization of a monic GF(2) bitmask as (degree, mult) pairs."""
    out = []
    a = bits
    deg = a.bit_length() - 1
    d = 1
    while 2 * d <= deg:
        for pb in rows[d]:
            bl = d + 1
            q, r = 0, a
            while True:
                sh = r.bit_length() - bl
                if sh < 0:
                    break
                r ^= pb << sh
                q |= 1 << sh
            if r:
                continue
            m, a = 1, q
            while True:
                q, r = 0, a
                while True:
                    sh = r.bit_length() - bl
                    if sh < 0:
                        break
                    r ^= pb << sh
                    q |= 1 << sh
                if r:
                    break
                a, m = q, m + 1
            out.append((d, m))
            deg = a.bit_length() - 1
            if 2 * d > deg:
                break
        d += 1
    if deg > 0:
        out.append((deg, 1))
    return out


def _factor_bits_limited(bits: int, rows: list[list[int]], limit: int):
    """(degree, mult) pairs of all prime factors of degree <= limit (p=2).

    Any remaining cofactor of degree <= limit is irreducible (its prime
    factors would all have degree > trial range otherwise) and is
    reported; larger cofactors are dropped by design.
    """
    out = []
    a = bits
    deg = a.bit_length() - 1
    d = 1
    while d <= limit and 2 * d <= deg:
        for pb in rows[d]:
            bl = d + 1
            q, r = 0, a
            while True:
                sh = r.bit_length() - bl
                if sh < 0:
                    break
                r ^= pb << sh
                q |= 1 << sh
            if r:
                continue
            m, a = 1, q
            while True:
                q, r = 0, a
                while True:
                    sh = r.bit_length() - bl
                    if sh < 0:
                        break
                    r ^= pb << sh
                    q |= 1 << sh
                if r:
                    break
                a, m = q, m + 1
            out.append((d, m))
            deg = a.bit_length() - 1
            if 2 * d > deg:
                break
        d += 1
    if 0 < deg <= limit:
        out.append((deg, 1))
    return out


def _coeffs_divmod_monic(p: int, a: list[int], b: tuple[int, ...]):
    # b monic; in-place style long division on a copy of a
    db = len(b) - 1
    r = list(a)
    q = [0] * max(len(r) - db, 0)
    for i in range(len(r) - 1, db - 1, -1):
        c = r[i]
        if c:
            q[i - db] = c
            for j in range(db):
                r[i - db + j] = (r[i - db + j] - c * b[j]) % p
            r[i] = 0
    while r and r[-1] == 0:
        r.pop()
    return q, r


def _factor_coeffs(p: int, coeffs: list[int],
                   rows: list[list[tuple[int, ...]]], limit: int | None):
    """Generic-p trial division; returns [(prime_coeffs, mult)] sorted.

    limit=None factors fully (cofactor appended); otherwise only primes of
    degree <= limit are reported, mirroring the p=2 kernel.
    """
    out = []
    a = list(coeffs)
    deg = len(a) - 1
    d = 1
    while 2 * d <= deg and (limit is None or d <= limit):
        for pc in rows[d]:
            q, r = _coeffs_divmod_monic(p, a, pc)
            if r:
                continue
            m, a = 1, q
            while True:
                q, r = _coeffs_divmod_monic(p, a, pc)
                if r:
                    break
                a, m = q, m + 1
            out.append((pc, m))
            deg = len(a) - 1
            if 2 * d > deg:
                break
        d += 1
    if limit is None:
        if deg > 0:
            out.append((tuple(a), 1))
    elif 0 < deg <= limit:
        out.append((tuple(a), 1))
    return out


def factorize(f: Poly, table: IrreducibleTable) -> Factorization:
    """Prime-power factorization of a monic nonzero polynomial.

    Requires table.max_deg >= floor(deg(f)/2); re-multiplication of the
    result equals f exactly.
    """
    if f.is_zero or not f.is_monic:
        raise SieveError("factorize requires a monic nonzero polynomial")
    if f.field != table.field:
        raise SieveError("polynomial and table fields differ")
    n = f.degree
    if n == 0:
        return Factorization(())
    if table.max_deg < n // 2:
        raise TableTooSmallError(
            f"factoring degree {n} needs primes to degree {n // 2}, "
            f"table has {table.max_deg}")
    field = f.field
    if field.p == 2:
        rows = table.bit_rows(max(1, n // 2))
        raw = _factor_bits(f.encode(), rows)
        factors = []
        for pb, m in raw:
            d = pb.bit_length() - 1
            factors.append((monic_from_index(field, d, pb ^ (1 << d)), m))
    else:
        rows = table.coeff_rows(max(1, n // 2))
        raw = _factor_coeffs(field.p, list(f.coeffs), rows, None)
        factors = [(Poly(field, pc), m) for pc, m in raw]
    return Factorization(tuple(factors))


# ---------------------------------------------------------------------------
# primes in arithmetic progressions
# ---------------------------------------------------------------------------

def residue_histogram(n: int, modulus: Poly, table: IrreducibleTable) -> dict[int, int]:
    """Count degree-n primes per residue class mod the given monic modulus.

    Keys are the integer encodings of the reduced residues.
    """
    if modulus.is_zero or not modulus.is_monic or modulus.degree < 1:
        raise SieveError("modulus must be monic of degree >= 1")
    field = table.field
    hist: dict[int, int] = {}
    if field.p == 2:
        mb = modulus.encode()
        lead = 1 << n
        for idx in table.prime_indices(n):
            r = int(idx) | lead
            bl = mb.bit_length()
            while True:
                sh = r.bit_length() - bl
                if sh < 0:
                    break
                r ^= mb << sh
            hist[r] = hist.get(r, 0) + 1
    else:
        for P in table.primes(n):
            r = (P % modulus).encode()
            hist[r] = hist.get(r, 0) + 1
    return hist


def prime_count_ap(n: int, modulus: Poly, residue: Poly,
                   table: IrreducibleTable) -> int:
    """Exact number of degree-n monic irreducibles congruent to the given
    residue; the residue must be coprime to the modulus."""
    from .fieldpoly import poly_gcd_lcm
    if residue.is_zero:
        raise SieveError("residue not coprime to modulus")
    g, _ = poly_gcd_lcm(modulus, residue)
    if g.degree != 0:
        raise SieveError("residue not coprime to modulus")
    hist = residue_histogram(n, modulus, table)
    key = (residue % modulus).encode()
    return hist.get(key, 0)
