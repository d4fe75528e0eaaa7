"""Exact phase-1 simplex for rational linear feasibility systems.

Solves: does x >= 0 with A x = b exist, for b >= 0 entrywise? The method is
the textbook phase-1 construction (minimize the sum of artificial slacks)
with Bland's rule, so termination is guaranteed and every number stays an
exact Fraction. System sizes here are tiny (tens of rows, at most a few
thousand columns), so the dense tableau is entirely adequate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

_F0 = Fraction(0)
_F1 = Fraction(1)


@dataclass(frozen=True)
class PhaseOneResult:
    """feasible iff the artificial optimum is exactly zero.

    x: a feasible solution when feasible. dual: the phase-1 dual vector y
    (one entry per row) satisfying yT A <= 0 componentwise and yT b equal to
    the artificial optimum; when infeasible, -y is a Farkas certificate:
    (-y)T A >= 0 while (-y)T b < 0.
    """

    feasible: bool
    optimum: Fraction
    x: tuple[Fraction, ...] | None
    dual: tuple[Fraction, ...] | None


def phase_one(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> PhaseOneResult:
    m = len(rows)
    if m == 0:
        return PhaseOneResult(True, _F0, (), ())
    ncols = len(rows[0])
    if any(len(r) != ncols for r in rows):
        raise ValueError("ragged constraint matrix")
    if any(b < 0 for b in rhs):
        raise ValueError("phase_one expects rhs >= 0; scale rows first")

    # tableau: structural columns, artificial identity, rhs
    tab = [
        [Fraction(v) for v in row] + [_F1 if i == j else _F0 for j in range(m)] + [Fraction(rhs[i])]
        for i, row in enumerate(rows)
    ]
    width = ncols + m
    basis = [ncols + i for i in range(m)]
    # reduced-cost row for the artificial objective; entry j is c_j - y.A_j
    cost = [_F0] * (width + 1)
    for j in range(ncols):
        cost[j] = -sum(tab[i][j] for i in range(m))
    cost[width] = -sum(tab[i][width] for i in range(m))

    while True:
        enter = next((j for j in range(width) if cost[j] < 0), None)
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            coef = tab[i][enter]
            if coef > 0:
                ratio = tab[i][width] / coef
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        assert leave is not None, "phase-1 objective is bounded below by zero"
        piv = tab[leave][enter]
        tab[leave] = [v / piv for v in tab[leave]]
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [a - f * b for a, b in zip(tab[i], tab[leave])]
        if cost[enter] != 0:
            f = cost[enter]
            cost = [a - f * b for a, b in zip(cost, tab[leave])]
        basis[leave] = enter

    optimum = -cost[width]
    dual = tuple(_F1 - cost[ncols + i] for i in range(m))
    if optimum == 0:
        x = [_F0] * ncols
        for i, var in enumerate(basis):
            if var < ncols:
                x[var] = tab[i][width]
        return PhaseOneResult(True, optimum, tuple(x), dual)
    return PhaseOneResult(False, optimum, None, dual)
