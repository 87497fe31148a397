import random

import pytest

from fqlab import (
    MemoryBudgetError,
    necklace_check,
    SieveError,
    TableTooSmallError,
    build_table,
    enumerate_monic,
    factorize,
    irreducible_count,
    parse_poly,
    prime_count_ap,
    residue_histogram,
)
from fqlab.fieldpoly import monic_from_index
from fqlab.sieve import IrreducibleTable


def brute_irreducible(f):
    """Oracle: no monic divisor of degree 1..deg-1 (independent of the sieve)."""
    n = f.degree
    for d in range(1, n):
        for g in enumerate_monic(f.field, d):
            if (f % g).is_zero:
                return False
    return True


class TestCounts:
    def test_counts_vs_bruteforce_p2(self, field2, table2):
        # [2, 1, 2, 3] spelled out in the module contract, extended to 6
        for d in range(1, 7):
            brute = sum(1 for f in enumerate_monic(field2, d)
                        if brute_irreducible(f))
            assert table2.count(d) == brute
        assert [table2.count(d) for d in range(1, 5)] == [2, 1, 2, 3]

    def test_counts_vs_bruteforce_p3(self, field3, table3):
        for d in range(1, 5):
            brute = sum(1 for f in enumerate_monic(field3, d)
                        if brute_irreducible(f))
            assert table3.count(d) == brute
        assert table3.count(1) == 3 and table3.count(2) == 3

    def test_known_count_tables(self, table2, table3):
        assert [table2.count(d) for d in range(1, 11)] == \
            [2, 1, 2, 3, 6, 9, 18, 30, 56, 99]
        assert [table3.count(d) for d in range(1, 7)] == [3, 3, 8, 18, 48, 116]

    def test_count_beyond_table_matches_formula(self, table2):
        for d in (11, 15, 20, 31):
            assert table2.count(d) == irreducible_count(2, d)

    def test_formula_satisfies_necklace_identity(self):
        for q in (2, 3, 5):
            for n in range(1, 25):
                s = sum(d * irreducible_count(q, d)
                        for d in range(1, n + 1) if n % d == 0)
                assert s == q ** n


class TestNecklace:
    def test_example_p2_n4(self, table2):
        rep = table2.necklace_check(4)
        assert rep.weighted_sum == 1 * 2 + 2 * 1 + 4 * 3 == 16 == rep.expected
        assert rep.ok

    def test_example_p3_n2(self, table3):
        rep = table3.necklace_check(2)
        assert rep.weighted_sum == 1 * 3 + 2 * 3 == 9
        assert rep.ok

    def test_example_p2_n1(self, table2):
        rep = necklace_check(table2, 1)
        assert rep.weighted_sum == 2 == rep.expected

    def test_out_of_range(self, table2):
        with pytest.raises(SieveError):
            table2.necklace_check(11)

    def test_sqrt_error_shape(self, table2, table3):
        for tab in (table2, table3):
            q = tab.field.p
            for n in range(1, tab.max_deg + 1):
                assert abs(n * tab.count(n) - q ** n) <= 4 * q ** (n / 2)


class TestFactorize:
    def test_example_square_product(self, field2, table2):
        f = parse_poly("x^4+x^2", field2)
        fact = factorize(f, table2)
        x, x1 = parse_poly("x", field2), parse_poly("x+1", field2)
        assert fact.factors == ((x, 2), (x1, 2))
        assert fact.big_omega == 4 and fact.num_distinct == 2

    def test_example_irreducible_cubic(self, field2, table2):
        f = parse_poly("x^3+x+1", field2)
        fact = factorize(f, table2)
        assert fact.factors == ((f, 1),)

    def test_prime_input(self, field3, table3):
        x = parse_poly("x", field3)
        assert factorize(x, table3).factors == ((x, 1),)

    def test_unit_input(self, field2, table2):
        assert factorize(parse_poly("1", field2), table2).factors == ()

    @pytest.mark.parametrize("p,maxn,count", [(2, 16, 10_000), (3, 8, 800)])
    def test_refactor_multiply_identity(self, p, maxn, count, table2, table3):
        tab = table2 if p == 2 else table3
        field = tab.field
        rng = random.Random(2024 + p)
        for _ in range(count):
            n = rng.randint(1, maxn)
            f = monic_from_index(field, n, rng.randrange(p ** n))
            fact = factorize(f, tab)
            assert fact.product() == f
            degs = fact.degree_mult_pairs()
            assert sum(d * m for d, m in degs) == n
            # sortedness by (degree, enumeration index)
            keys = [(P.degree, P.monic_index()) for P, _ in fact.factors]
            assert keys == sorted(keys)

    def test_factors_are_irreducible(self, field2, table2):
        rng = random.Random(7)
        for _ in range(50):
            f = monic_from_index(field2, 12, rng.randrange(1 << 12))
            for P, _ in factorize(f, table2).factors:
                assert brute_irreducible(P)

    def test_validation(self, field2, table2):
        with pytest.raises(SieveError):
            factorize(parse_poly("0", field2), table2)
        small = build_table(field2, 2)
        with pytest.raises(TableTooSmallError):
            factorize(monic_from_index(field2, 12, 5), small)


class TestPrimesInAP:
    def test_example_n2_mod_x(self, field2, table2):
        M, B = parse_poly("x", field2), parse_poly("1", field2)
        assert prime_count_ap(2, M, B, table2) == 1  # only x^2+x+1

    def test_example_n3_mod_quadratic(self, field2, table2):
        M = parse_poly("x^2+x+1", field2)
        B = parse_poly("x", field2)
        assert prime_count_ap(3, M, B, table2) == 1  # x^3+x+1

    def test_partition_property(self, field2, table2):
        # summing pi over all invertible residues recovers N_n minus the
        # degree-n primes dividing M
        from fqlab import poly_gcd_lcm
        from fqlab.fieldpoly import poly_from_encoding
        for M_text, n in (("x^2+x", 2), ("x^3+x", 4), ("x^2+x+1", 2)):
            M = parse_poly(M_text, field2)
            hist = residue_histogram(n, M, table2)
            assert sum(hist.values()) == table2.count(n)
            coprime_total = 0
            for key, c in hist.items():
                r = poly_from_encoding(field2, key)
                if r.is_zero:
                    continue
                g, _ = poly_gcd_lcm(M, r)
                if g.degree == 0:
                    coprime_total += c
            dividing = sum(1 for Pf in table2.primes(n) if (M % Pf).is_zero)
            assert coprime_total == table2.count(n) - dividing

    def test_non_coprime_rejected(self, field2, table2):
        M = parse_poly("x^2+x", field2)
        with pytest.raises(SieveError):
            prime_count_ap(3, M, parse_poly("x", field2), table2)

    def test_bad_modulus(self, field2, table2):
        with pytest.raises(SieveError):
            prime_count_ap(3, parse_poly("1", field2),
                           parse_poly("0", field2), table2)


class TestCache:
    def test_roundtrip(self, table3, tmp_path):
        path = tmp_path / "t.fqi"
        table3.save(path)
        loaded = IrreducibleTable.load(path)
        assert loaded.max_deg == table3.max_deg
        for d in range(1, table3.max_deg + 1):
            assert list(loaded.prime_indices(d)) == list(table3.prime_indices(d))

    def test_roundtrip_p2(self, table2, tmp_path):
        path = tmp_path / "t2.fqi"
        table2.save(path)
        loaded = IrreducibleTable.load(path)
        assert [loaded.count(d) for d in range(1, 11)] == \
            [table2.count(d) for d in range(1, 11)]

    def test_bad_magic_rejected(self, table3, tmp_path):
        path = tmp_path / "bad.fqi"
        table3.save(path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(SieveError):
            IrreducibleTable.load(path)

    def test_truncated_rejected(self, table3, tmp_path):
        path = tmp_path / "cut.fqi"
        table3.save(path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 7])
        with pytest.raises(SieveError):
            IrreducibleTable.load(path)

    def test_version_rejected(self, table3, tmp_path):
        path = tmp_path / "ver.fqi"
        table3.save(path)
        raw = bytearray(path.read_bytes())
        raw[4] = 99
        path.write_bytes(bytes(raw))
        with pytest.raises(SieveError):
            IrreducibleTable.load(path)


class TestBudget:
    def test_budget_exceeded(self, field2):
        with pytest.raises(MemoryBudgetError):
            build_table(field2, 40)

    def test_custom_budget(self, field2):
        with pytest.raises(MemoryBudgetError):
            build_table(field2, 8, cell_budget=100)
        tab = build_table(field2, 4, cell_budget=100)
        assert tab.count(4) == 3
