"""A small exact revised simplex.

Maximizes ``c @ x`` subject to rows ``a_i @ x (<=|>=|=) b_i`` and ``x >= 0``
with ``Fraction`` data.  Columns may be appended between solves, or generated
on the fly by a pricing callback, which is how the capacity oracle avoids
enumerating every route.

Internally rows and columns are rescaled to integers and the basis inverse
is held fraction-free as ``N / D`` (``N`` the integer adjugate as sparse dict
rows, ``D`` the basis determinant, kept positive).  A pivot updates ``N``
with Bareiss-style exact integer division, so no gcd work happens in the
inner loop.  Pricing is Dantzig's rule; after a run of degenerate pivots it
falls back to Bland's rule, which cannot cycle.  Ratio-test ties go to the
smallest basic variable index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, Iterable, Optional

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

SENSES = ("<=", ">=", "=")
DEGENERATE_STREAK = 50

ZERO = Fraction(0)


class LPError(RuntimeError):
    pass


@dataclass
class LPResult:
    status: str
    objective: Optional[Fraction] = None
    x: list = field(default_factory=list)
    duals: list = field(default_factory=list)
    iterations: int = 0
    columns_added: int = 0


Pricing = Callable[[list], Iterable[tuple[dict, Fraction, object]]]


class ExactLP:
    def __init__(self, senses, rhs):
        senses = list(senses)
        rhs = [Fraction(b) for b in rhs]
        if len(senses) != len(rhs):
            raise LPError("one sense per row required")
        for s in senses:
            if s not in SENSES:
                raise LPError(f"unknown row sense {s!r}")
        self.senses = senses
        self.rhs = rhs
        self.columns: list[dict[int, Fraction]] = []
        self.costs: list[Fraction] = []
        self.tags: list = []

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    def add_column(self, entries: dict, cost=0, tag=None) -> int:
        col: dict[int, Fraction] = {}
        for i, v in entries.items():
            if not 0 <= i < self.n_rows:
                raise LPError(f"row {i} out of range")
            col[i] = col.get(i, ZERO) + Fraction(v)
        self.columns.append({i: v for i, v in sorted(col.items()) if v})
        self.costs.append(Fraction(cost))
        self.tags.append(tag)
        return len(self.columns) - 1

    def solve(self, pricing: Pricing | None = None, max_iter: int = 200_000) -> LPResult:
        """Solve from scratch.  ``pricing(duals)`` is called at every optimum over
        the current columns and may return new ``(entries, cost, tag)`` columns;
        it is consulted in phase two only."""
        return _Solver(self, pricing, max_iter).run()


class _Solver:
    def __init__(self, lp: ExactLP, pricing, max_iter):
        self.lp = lp
        self.pricing = pricing
        self.max_iter = max_iter
        m = lp.n_rows
        self.m = m
        # row i of the internal problem is (flip_i * rho_i) times row i of the user problem
        self.flip = [(-1 if b < 0 else 1) for b in lp.rhs]
        self.rho = [b.denominator for b in lp.rhs]
        self.rowscale = [f * r for f, r in zip(self.flip, self.rho)]
        b = [int(bi * s) for bi, s in zip(lp.rhs, self.rowscale)]
        senses = []
        for s, f in zip(lp.senses, self.flip):
            if f < 0 and s != "=":
                s = ">=" if s == "<=" else "<="
            senses.append(s)
        self.cols: list[dict[int, int]] = []
        self.colscale: list[int] = []
        self.cost: list[Fraction] = []
        self.kind: list[str] = []  # "x", "slack", "art"
        self.struct: list[int] = []
        self.n_struct_seen = 0
        self._sync_structural()
        self.basis: list[int] = [0] * m
        for i, s in enumerate(senses):
            if s == "<=":
                self.basis[i] = self._add_internal({i: 1}, 1, ZERO, "slack")
            else:
                if s == ">=":
                    self._add_internal({i: -1}, 1, ZERO, "slack")
                self.basis[i] = self._add_internal({i: 1}, 1, ZERO, "art")
        self.N: list[dict[int, int]] = [{i: 1} for i in range(m)]
        self.D = 1
        self.xnum: list[int] = b
        self.in_basis = set(self.basis)
        self.iterations = 0
        self.columns_added = 0

    def _add_internal(self, col, scale, cost, kind) -> int:
        self.cols.append(col)
        self.colscale.append(scale)
        self.cost.append(cost)
        self.kind.append(kind)
        return len(self.cols) - 1

    def _sync_structural(self) -> None:
        lp = self.lp
        while self.n_struct_seen < len(lp.columns):
            j = self.n_struct_seen
            raw = {i: v * self.rowscale[i] for i, v in lp.columns[j].items()}
            s = 1
            for v in raw.values():
                s = lcm(s, v.denominator)
            col = {i: int(v * s) for i, v in raw.items()}
            self.struct.append(self._add_internal(col, s, lp.costs[j] * s, "x"))
            self.n_struct_seen += 1

    # -- linear algebra ----------------------------------------------------
    def _ftran(self, col: dict[int, int]) -> list[int]:
        """``N @ col``; the true column of ``B^-1 A`` is this over ``D``."""
        out = []
        for row in self.N:
            s = 0
            if len(row) < len(col):
                for k, v in row.items():
                    a = col.get(k)
                    if a:
                        s += v * a
            else:
                for k, a in col.items():
                    v = row.get(k)
                    if v:
                        s += v * a
            out.append(s)
        return out

    def _dual_numerators(self, cost) -> tuple[dict[int, int], int]:
        """``(u, L)`` with duals ``y = u / (L * D)``, ``u`` integral."""
        L = 1
        for j in self.basis:
            c = cost[j]
            if c:
                L = lcm(L, c.denominator)
        u: dict[int, int] = {}
        for i, j in enumerate(self.basis):
            c = cost[j]
            if c:
                ci = int(c * L)
                for k, v in self.N[i].items():
                    u[k] = u.get(k, 0) + ci * v
        return u, L

    def _pivot(self, r: int, j: int, alpha: list[int]) -> None:
        ar = alpha[r]
        D = self.D
        N = self.N
        row_r = N[r]
        xr = self.xnum[r]
        for i in range(self.m):
            if i == r:
                continue
            ai = alpha[i]
            row = N[i]
            if ai:
                new = {}
                for k, v in row.items():
                    new[k] = v * ar
                for k, v in row_r.items():
                    new[k] = new.get(k, 0) - ai * v
                N[i] = {k: v // D for k, v in new.items() if v}
                self.xnum[i] = (self.xnum[i] * ar - ai * xr) // D
            else:
                N[i] = {k: v * ar // D for k, v in row.items()}
                self.xnum[i] = self.xnum[i] * ar // D
        self.D = ar
        if ar < 0:
            self.D = -ar
            for i in range(self.m):
                N[i] = {k: -v for k, v in N[i].items()}
                self.xnum[i] = -self.xnum[i]
        self.in_basis.discard(self.basis[r])
        self.basis[r] = j
        self.in_basis.add(j)

    # -- simplex -----------------------------------------------------------
    def _simplex(self, cost) -> str:
        degenerate = 0
        while True:
            if self.iterations >= self.max_iter:
                raise LPError("iteration limit reached")
            u, L = self._dual_numerators(cost)
            scale = self.D * L
            bland = degenerate >= DEGENERATE_STREAK
            enter, best = -1, 0
            for j, col in enumerate(self.cols):
                if j in self.in_basis or self.kind[j] == "art":
                    continue
                dot = 0
                for k, a in col.items():
                    v = u.get(k)
                    if v:
                        dot += v * a
                c = cost[j]
                d = (c * scale - dot) if c else -dot
                if d > 0:
                    if bland:
                        enter = j
                        break
                    if d > best:
                        enter, best = j, d
            if enter < 0:
                return OPTIMAL
            alpha = self._ftran(self.cols[enter])
            leave = -1
            for i, a in enumerate(alpha):
                if a > 0:
                    if leave < 0:
                        leave = i
                        continue
                    lhs = self.xnum[i] * alpha[leave]
                    rhs = self.xnum[leave] * a
                    if lhs < rhs or (lhs == rhs and self.basis[i] < self.basis[leave]):
                        leave = i
            if leave < 0:
                return UNBOUNDED
            degenerate = degenerate + 1 if self.xnum[leave] == 0 else 0
            self._pivot(leave, enter, alpha)
            self.iterations += 1

    def _drive_out_artificials(self) -> None:
        for r in range(self.m):
            if self.kind[self.basis[r]] != "art":
                continue
            row = self.N[r]
            for j, col in enumerate(self.cols):
                if j in self.in_basis or self.kind[j] == "art":
                    continue
                if sum(row.get(k, 0) * a for k, a in col.items()):
                    self._pivot(r, j, self._ftran(col))
                    break
            # otherwise the row is redundant and its artificial stays at zero

    def _duals(self) -> list[Fraction]:
        u, L = self._dual_numerators(self.cost)
        return [Fraction(u.get(i, 0), L * self.D) * self.rowscale[i] for i in range(self.m)]

    def run(self) -> LPResult:
        if any(k == "art" for k in self.kind):
            phase1 = [(Fraction(-1) if k == "art" else ZERO) for k in self.kind]
            if self._simplex(phase1) != OPTIMAL:
                raise LPError("phase one cannot be unbounded")
            if any(self.xnum[i] for i, j in enumerate(self.basis) if self.kind[j] == "art"):
                return LPResult(INFEASIBLE, iterations=self.iterations)
            self._drive_out_artificials()
        while True:
            status = self._simplex(self.cost)
            if status != OPTIMAL or self.pricing is None:
                break
            added = 0
            for entries, cost, tag in self.pricing(self._duals()):
                self.lp.add_column(entries, cost, tag)
                added += 1
            if not added:
                break
            self.columns_added += added
            self._sync_structural()
        if status == UNBOUNDED:
            return LPResult(UNBOUNDED, iterations=self.iterations, columns_added=self.columns_added)
        return self._result()

    def _result(self) -> LPResult:
        value = [ZERO] * len(self.cols)
        for i, j in enumerate(self.basis):
            value[j] = Fraction(self.xnum[i], self.D) * self.colscale[j]
        x = [value[j] for j in self.struct]
        obj = sum((c * v for c, v in zip(self.lp.costs, x)), ZERO)
        return LPResult(OPTIMAL, obj, x, self._duals(), self.iterations, self.columns_added)
