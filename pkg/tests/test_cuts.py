import numpy as np
import pytest

from cflplcr import capture as cap, cuts
from cflplcr.oracle import certify_valid, facet_rank, raw_si_values, raw_sibar_values

from conftest import all_sets, ex_view, frac, random_view


def coefs(row, n):
    return row.dense(n)


def test_si_empty_example(ex1):
    row = cuts.si_cut(ex1, ())
    assert row.alpha0 == 0.0
    np.testing.assert_allclose(coefs(row, 3), [frac(5, 15), frac(4, 14), frac(3, 13)], atol=1e-15)


def test_si_truncates_generator(ex2):
    a, b = cuts.si_cut(ex2, (0, 1, 2)), cuts.si_cut(ex2, (0, 1))
    assert a == b


def test_si_pair_example(ex2):
    row = cuts.si_cut(ex2, (0, 1))
    assert row.alpha0 == pytest.approx(frac(9, 19) - frac(20, 323) - frac(5, 171), abs=1e-15)
    np.testing.assert_allclose(coefs(row, 3), [frac(20, 323), frac(5, 171), 0.0], atol=1e-15)
    assert certify_valid(ex2, row).valid


def test_sibar_padding(ex1, ex2):
    assert cuts.sibar_cut(ex2, (0, 1)).generator == (0, 1)
    assert cuts.sibar_cut(ex1, (0, 1)).generator == (0, 1, 2)


def test_benders_examples(ex1):
    row = cuts.benders_cut(ex1, [0, 0, 0])
    assert row.alpha0 == 0.0
    np.testing.assert_allclose(coefs(row, 3), [0.5, 0.4, 0.3], atol=1e-15)
    assert certify_valid(ex1, row).valid
    assert facet_rank(ex1, row) == 1
    # support size equals gamma: the first case applies, lambda_j = u0 u_j / 15^2
    row = cuts.benders_cut(ex1, [1, 0, 0])
    np.testing.assert_allclose(coefs(row, 3), [10 * 5 / 225, 10 * 4 / 225, 10 * 3 / 225], atol=1e-15)
    assert row.rhs([1, 0, 0]) == pytest.approx(frac(1, 3), abs=1e-15)
    assert certify_valid(ex1, row).valid


def test_benders_dominated_by_si(ex1):
    b = cuts.benders_cut(ex1, [0, 0, 0])
    s = cuts.si_cut(ex1, ())
    rng = np.random.default_rng(0)
    for x in rng.random((500, 3)):
        assert b.rhs(x) >= s.rhs(x)


def test_gamma1_rows(ex1):
    row = cuts.gamma1_cut(ex1, 2)
    assert row.alpha0 == pytest.approx(frac(3, 13), abs=1e-15)
    np.testing.assert_allclose(coefs(row, 3), [frac(1, 3) - frac(3, 13), frac(2, 7) - frac(3, 13), 0], atol=1e-15)
    last = cuts.gamma1_cut(ex1, 3)
    assert last.alpha0 == 0.0 and last.coefs == cuts.si_cut(ex1, ()).coefs
    with pytest.raises(ValueError):
        cuts.gamma1_cut(ex_view(2), 1)


def test_gamma1_degenerate_pair():
    rng = np.random.default_rng(3)
    v = random_view(rng, 6, gamma=1)
    a, b = cuts.si_cut(v, (0,)), cuts.si_cut(v, (1,))
    g = cuts.gamma1_cut(v, 1)
    for x in rng.random((50, 6)):
        assert a.rhs(x) == pytest.approx(b.rhs(x), abs=1e-12)
        assert a.rhs(x) == pytest.approx(g.rhs(x), abs=1e-12)


def test_gamma1_rows_are_facets():
    from cflplcr import from_rows
    rng = np.random.default_rng(4)
    v = from_rows([rng.permutation(np.arange(1.0, 7.0))], 2.0, 1).views[0]
    for ell in range(1, 7):
        row = cuts.gamma1_cut(v, ell)
        # tight at the singletons up to position ell+1 and at every set led by position ell+1
        assert facet_rank(v, row) == v.n + 1


@pytest.mark.parametrize("seed", range(12))
def test_rows_valid_exhaustive(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 13)) if seed else 12
    v = random_view(rng, n)
    for _ in range(6):
        S = tuple(np.flatnonzero(rng.random(n) < rng.random()))
        x = np.zeros(n)
        x[v.perm[list(S)]] = 1.0
        for row in (cuts.si_cut(v, S), cuts.sibar_cut(v, S), cuts.benders_cut(v, x)):
            cert = certify_valid(v, row)
            assert cert.valid, (row, cert)


@pytest.mark.parametrize("seed", range(8))
def test_simplified_forms_dominate_raw(seed):
    rng = np.random.default_rng(50 + seed)
    n = int(rng.integers(3, 9))
    v = random_view(rng, n)
    for _ in range(5):
        S = tuple(sorted(set(np.flatnonzero(rng.random(n) < 0.6).tolist())))
        a0, a = raw_si_values(v, S)
        b0, b, _ = cuts.si_coef(v, S)
        c0, c = raw_sibar_values(v, S)
        d0, d, _ = cuts.sibar_coef(v, S)
        for xs in rng.random((40, n)):
            # truncated generator: identical row; padded generator: never weaker
            assert abs((a0 + a @ xs) - (b0 + b @ xs)) <= 1e-12
            assert c0 + c @ xs >= d0 + d @ xs - 1e-12


def test_row_hygiene():
    rng = np.random.default_rng(9)
    v = random_view(rng, 7)
    row = cuts.si_cut(v, (0, 3), customer=4)
    ids = [j for j, _ in row.coefs]
    assert ids == sorted(ids)
    assert all(abs(a) >= cuts.COEF_DROP for _, a in row.coefs)
    assert row.key == (4, "SI", row.generator, ())
    assert row.log_line().split()[:3] == ["4", "SI", str(len(row.generator))]
