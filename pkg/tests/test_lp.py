import random
from fractions import Fraction as F

import pytest

from ucnc.oracle.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, ExactLP, LPError


def build(A, senses, b, c):
    lp = ExactLP(senses, b)
    for j, cj in enumerate(c):
        lp.add_column({i: row[j] for i, row in enumerate(A) if row[j]}, cj, j)
    return lp


def check_certificate(A, senses, b, c, res):
    """Primal feasibility, dual feasibility and equal objectives prove optimality."""
    x, y = res.x, res.duals
    assert all(v >= 0 for v in x)
    for row, s, bi, yi in zip(A, senses, b, y):
        lhs = sum(F(a) * v for a, v in zip(row, x))
        if s == "<=":
            assert lhs <= bi and yi >= 0
        elif s == ">=":
            assert lhs >= bi and yi <= 0
        else:
            assert lhs == bi
    for j, cj in enumerate(c):
        assert sum(F(row[j]) * yi for row, yi in zip(A, y)) >= cj
    assert sum(F(bi) * yi for bi, yi in zip(b, y)) == res.objective
    assert sum(F(cj) * v for cj, v in zip(c, x)) == res.objective


def test_textbook_product_mix():
    A = [[1, 0], [0, 2], [3, 2]]
    res = build(A, ["<="] * 3, [4, 12, 18], [3, 5]).solve()
    assert res.status == OPTIMAL
    assert res.objective == 36 and res.x == [2, 6]
    check_certificate(A, ["<="] * 3, [4, 12, 18], [3, 5], res)


def test_infeasible():
    res = build([[1], [1]], ["<=", ">="], [1, 2], [1]).solve()
    assert res.status == INFEASIBLE


def test_unbounded():
    res = build([[1, -1]], ["<="], [1], [1, 0]).solve()
    assert res.status == UNBOUNDED


def test_equality_and_negative_rhs():
    A = [[1, 1], [1, -1]]
    senses, b, c = ["=", ">="], [F(3, 2), F(-1, 3)], [1, 2]
    res = build(A, senses, b, c).solve()
    assert res.status == OPTIMAL
    check_certificate(A, senses, b, c, res)
    # the second row caps x2 at 11/12
    assert res.x == [F(7, 12), F(11, 12)]


def test_degenerate_cycling_example():
    # the classic instance on which Dantzig's rule with naive ties cycles
    A = [[F(1, 4), -60, F(-1, 25), 9], [F(1, 2), -90, F(-1, 50), 3], [0, 0, 1, 0]]
    c = [F(3, 4), -150, F(1, 50), -6]
    res = build(A, ["<="] * 3, [0, 0, 1], c).solve()
    assert res.status == OPTIMAL
    assert res.objective == F(1, 20)
    check_certificate(A, ["<="] * 3, [0, 0, 1], c, res)


def test_redundant_equalities():
    A = [[1, 1], [2, 2]]
    res = build(A, ["=", "="], [1, 2], [1, 3]).solve()
    assert res.status == OPTIMAL and res.objective == 3


@pytest.mark.parametrize("seed", range(25))
def test_random_certificates(seed):
    rng = random.Random(seed)
    m, n = rng.randint(1, 6), rng.randint(1, 7)
    A = [[F(rng.randint(-3, 6), rng.randint(1, 3)) for _ in range(n)] for _ in range(m)]
    senses = [rng.choice(["<=", "<=", ">=", "="]) for _ in range(m)]
    b = [F(rng.randint(-2, 10), rng.randint(1, 4)) for _ in range(m)]
    c = [F(rng.randint(-4, 5), rng.randint(1, 3)) for _ in range(n)]
    # bound the region so UNBOUNDED only comes from genuine rays
    A.append([1] * n)
    senses.append("<=")
    b.append(F(20))
    res = build(A, senses, b, c).solve()
    assert res.status in (OPTIMAL, INFEASIBLE)
    if res.status == OPTIMAL:
        check_certificate(A, senses, b, c, res)
    else:
        # no random grid point may satisfy every row
        for _ in range(200):
            x = [F(rng.randint(0, 20), rng.randint(1, 4)) for _ in range(n)]
            ok = True
            for row, s, bi in zip(A, senses, b):
                lhs = sum(a * v for a, v in zip(row, x))
                ok &= (lhs <= bi) if s == "<=" else (lhs >= bi) if s == ">=" else (lhs == bi)
            assert not ok


def test_column_generation_matches_full_model():
    rng = random.Random(5)
    m, n = 4, 30
    A = [[F(rng.randint(0, 5)) for _ in range(n)] for _ in range(m)]
    b = [F(rng.randint(5, 20)) for _ in range(m)]
    c = [F(rng.randint(1, 9)) for _ in range(n)]
    full = build(A, ["<="] * m, b, c).solve()

    lp = ExactLP(["<="] * m, b)
    lp.add_column({i: A[i][0] for i in range(m) if A[i][0]}, c[0], 0)
    added = {0}

    def pricing(y):
        best = max(range(n), key=lambda j: c[j] - sum(A[i][j] * y[i] for i in range(m)))
        if best in added or c[best] - sum(A[i][best] * y[i] for i in range(m)) <= 0:
            return []
        added.add(best)
        return [({i: A[i][best] for i in range(m) if A[i][best]}, c[best], best)]

    gen = lp.solve(pricing)
    assert gen.objective == full.objective
    assert gen.columns_added == len(added) - 1 < n


def test_bad_rows():
    with pytest.raises(LPError):
        ExactLP(["<"], [1])
    with pytest.raises(LPError):
        ExactLP(["<="], [1, 2])
    lp = ExactLP(["<="], [1])
    with pytest.raises(LPError):
        lp.add_column({3: 1})
