"""Correlation polytopes: deterministic vertices and exact facet derivation.

The object of study is the convex hull of the correlation vectors of all 2^n
deterministic +-1 assignments. Coordinates are the per-observable means
followed by the pair correlators of every in-context pair, so membership in
the hull is equivalent to the existence of a global joint distribution over
the observables, and the hull's facets are the tight linear inequalities
("conditions of possible experience") that jointly-explainable statistics
must satisfy.

Facets are derived without floating point. One nonnegative measure unknown
is introduced per deterministic assignment; the coordinate definitions and
the normalization are equality constraints that get substituted away; the
remaining measure unknowns are projected out by Fourier-Motzkin elimination
with Chernikov-style pruning (ancestor-label bookkeeping); finally an exact
tightness-rank filter keeps precisely the irredundant facet inequalities and
separates out implied equations, should the hull be degenerate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from ._rational import as_fraction, scale_to_integers
from .errors import CapacityError, ShapeError, ValidationError
from .scenario import Scenario

MAX_OBSERVABLES = 24

_F0 = Fraction(0)
_F1 = Fraction(1)


def assignment_value(mask: int, n: int, obs_id: int) -> int:
    """Outcome of observable obs_id under assignment bitmask.

    Observable 0 sits in the most significant bit; a zero bit encodes +1.
    This ordering makes mask 0 the all-plus assignment and matches the
    row order used for joint-distribution weights.
    """
    return 1 - 2 * ((mask >> (n - 1 - obs_id)) & 1)


@dataclass(frozen=True)
class Assignment:
    """One deterministic valuation of all observables, packed as a bitmask."""

    mask: int
    n: int

    def __post_init__(self):
        if not 0 <= self.mask < (1 << self.n):
            raise ValidationError(f"mask {self.mask} out of range for n={self.n}")

    def value(self, obs_id: int) -> int:
        return assignment_value(self.mask, self.n, obs_id)

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(assignment_value(self.mask, self.n, i) for i in range(self.n))


@dataclass(frozen=True)
class CorrelationPoint:
    """A point in correlation coordinates: singles plus in-context pair terms.

    All entries are exact rationals in [-1, 1]. ``pairs`` fixes the
    coordinate order of ``pair_values``; use from_values() to build one from
    a mapping.
    """

    singles: tuple[Fraction, ...]
    pairs: tuple[tuple[int, int], ...]
    pair_values: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.pairs) != len(self.pair_values):
            raise ShapeError("pair coordinate list and value list differ in length")
        for v in (*self.singles, *self.pair_values):
            if not isinstance(v, Fraction):
                raise ValidationError("correlation coordinates must be Fractions")
            if abs(v) > 1:
                raise ValidationError(f"correlation coordinate {v} outside [-1, 1]")
        for (i, j) in self.pairs:
            if not (0 <= i < j):
                raise ValidationError(f"malformed pair coordinate ({i}, {j})")
        if list(self.pairs) != sorted(set(self.pairs)):
            raise ValidationError("pair coordinates must be sorted and unique")

    @classmethod
    def from_values(cls, singles: Sequence, pair_map: Mapping) -> "CorrelationPoint":
        sing = tuple(as_fraction(v) for v in singles)
        keys = sorted(tuple(sorted(map(int, k))) for k in pair_map)
        vals = []
        for key in keys:
            raw = pair_map.get(key, pair_map.get((key[1], key[0])))
            vals.append(as_fraction(raw))
        return cls(sing, tuple(keys), tuple(vals))

    @property
    def pair_correlators(self) -> dict[tuple[int, int], Fraction]:
        return dict(zip(self.pairs, self.pair_values))

    def pair(self, i: int, j: int) -> Fraction:
        key = (min(i, j), max(i, j))
        try:
            return self.pair_correlators[key]
        except KeyError:
            raise ShapeError(f"point has no pair coordinate for {key}") from None

    def coordinate_vector(self) -> tuple[Fraction, ...]:
        return (*self.singles, *self.pair_values)


@dataclass(frozen=True)
class Inequality:
    """constant + sum(single_coeffs * <Q_i>) + sum(pair_coeffs * K_ij)  >= 0.

    ``pairs`` gives the coordinate meaning of pair_coeffs. is_equation marks
    the degenerate case where the relation holds with equality on the whole
    polytope.
    """

    constant: Fraction
    single_coeffs: tuple[Fraction, ...]
    pair_coeffs: tuple[Fraction, ...]
    pairs: tuple[tuple[int, int], ...]
    is_equation: bool = False

    def __post_init__(self):
        if len(self.pair_coeffs) != len(self.pairs):
            raise ShapeError("pair coefficient list and coordinate list differ in length")
        if all(c == 0 for c in (*self.single_coeffs, *self.pair_coeffs)):
            raise ValidationError("inequality needs at least one nonzero coefficient")

    def coefficient_vector(self) -> tuple[Fraction, ...]:
        return (self.constant, *self.single_coeffs, *self.pair_coeffs)

    def canonical(self) -> "Inequality":
        vec = scale_to_integers(self.coefficient_vector(), allow_sign_flip=self.is_equation)
        ns = len(self.single_coeffs)
        return Inequality(
            vec[0], vec[1 : 1 + ns], vec[1 + ns :], self.pairs, self.is_equation
        )

    def evaluate(self, point: CorrelationPoint) -> Fraction:
        return evaluate(self, point)


def evaluate(inequality: Inequality, point: CorrelationPoint) -> Fraction:
    """Exact slack of a point against an inequality (>= 0 means satisfied)."""
    if len(point.singles) != len(inequality.single_coeffs):
        raise ShapeError(
            f"point has {len(point.singles)} singles, inequality expects "
            f"{len(inequality.single_coeffs)}"
        )
    if point.pairs != inequality.pairs:
        raise ShapeError(
            f"pair coordinates differ: point {point.pairs}, "
            f"inequality {inequality.pairs}"
        )
    total = inequality.constant
    for c, v in zip(inequality.single_coeffs, point.singles):
        total += c * v
    for c, v in zip(inequality.pair_coeffs, point.pair_values):
        total += c * v
    return total


def format_inequality(inequality: Inequality, scenario: Scenario) -> str:
    """Human-readable rendering like '1 - <Q1> + K(Q1,Q2) >= 0'."""
    labels = scenario.labels
    parts = []
    if inequality.constant != 0:
        parts.append(str(inequality.constant))
    terms = [(c, f"<{labels[i]}>") for i, c in enumerate(inequality.single_coeffs)]
    terms += [
        (c, f"K({labels[i]},{labels[j]})")
        for (i, j), c in zip(inequality.pairs, inequality.pair_coeffs)
    ]
    for c, name in terms:
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        stem = name if mag == 1 else f"{mag}*{name}"
        if not parts and sign == "+":
            parts.append(stem)
        else:
            parts.append(f"{sign} {stem}" if parts else f"- {stem}")
    rel = "= 0" if inequality.is_equation else ">= 0"
    return " ".join(parts + [rel]) if parts else f"0 {rel}"


# --- vertices ----------------------------------------------------------------

def _check_capacity(scenario: Scenario) -> None:
    if scenario.n > MAX_OBSERVABLES:
        raise CapacityError(
            f"{scenario.n} observables exceed the supported maximum of "
            f"{MAX_OBSERVABLES} (2^{scenario.n} assignments)"
        )


def vertex_correlation(scenario: Scenario, mask: int) -> CorrelationPoint:
    """Correlation coordinates of one deterministic assignment."""
    n = scenario.n
    vals = [assignment_value(mask, n, i) for i in range(n)]
    singles = tuple(Fraction(v) for v in vals)
    pairs = scenario.pair_coordinates
    pair_values = tuple(Fraction(vals[i] * vals[j]) for i, j in pairs)
    return CorrelationPoint(singles, pairs, pair_values)


def iter_vertices(scenario: Scenario) -> Iterator[CorrelationPoint]:
    _check_capacity(scenario)
    for mask in range(1 << scenario.n):
        yield vertex_correlation(scenario, mask)


def enumerate_vertices(scenario: Scenario) -> list[CorrelationPoint]:
    """All 2^n vertices in assignment-mask order (may contain duplicates as
    points only when a coordinate projection collapses them; masks never
    repeat)."""
    return list(iter_vertices(scenario))


def _vertex_vector(scenario: Scenario, mask: int) -> tuple[Fraction, ...]:
    return vertex_correlation(scenario, mask).coordinate_vector()


# --- exact linear algebra helpers ---------------------------------------------

def _matrix_rank(rows: list[list[Fraction]]) -> int:
    if not rows:
        return 0
    work = [list(r) for r in rows]
    ncols = len(work[0])
    rank = 0
    for col in range(ncols):
        pivot = None
        for r in range(rank, len(work)):
            if work[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        inv = 1 / work[rank][col]
        work[rank] = [v * inv for v in work[rank]]
        for r in range(len(work)):
            if r != rank and work[r][col] != 0:
                f = work[r][col]
                work[r] = [a - f * b for a, b in zip(work[r], work[rank])]
        rank += 1
        if rank == len(work):
            break
    return rank


def _affine_rank(points: list[tuple[Fraction, ...]]) -> int:
    if len(points) <= 1:
        return 0
    base = points[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in points[1:]]
    return _matrix_rank(diffs)


# --- Fourier-Motzkin elimination ----------------------------------------------

def _normalize_row(coeffs: list[Fraction]) -> tuple[Fraction, ...]:
    return scale_to_integers(coeffs)


def _prune(rows: list[tuple[tuple[Fraction, ...], frozenset]], fm_steps: int):
    """Chernikov bookkeeping: dedupe, ancestor-count bound, superset rule."""
    best: dict[tuple, frozenset] = {}
    order: list[tuple] = []
    for coeffs, labels in rows:
        if all(v == 0 for v in coeffs[1:]):
            # pure-constant rows are either vacuous or witness infeasibility;
            # the polytope is never empty, so only the vacuous case can occur
            assert coeffs[0] >= 0, "eliminated system became infeasible"
            continue
        if len(labels) > fm_steps + 1:
            continue
        if coeffs in best:
            if len(labels) < len(best[coeffs]):
                best[coeffs] = labels
        else:
            best[coeffs] = labels
            order.append(coeffs)
    kept = []
    items = [(c, best[c]) for c in order]
    for coeffs, labels in items:
        redundant = any(
            other_labels < labels for other_coeffs, other_labels in items
            if other_coeffs != coeffs
        )
        if not redundant:
            kept.append((coeffs, labels))
    kept.sort(key=lambda item: item[0])
    return kept


def _eliminate_measures(equalities, inequalities, first_meas: int, ncols: int):
    """Project out columns first_meas..ncols-1.

    Equality substitution is exact and free, so any column still touched by
    an equality is pivoted out first; once no equality has support on the
    remaining columns, plain Fourier-Motzkin takes over.
    Returns (inequality rows, leftover equality rows), both restricted to the
    kept columns.
    """
    eqs = [list(r) for r in equalities]
    rows = [(tuple(c), labels) for c, labels in inequalities]
    remaining = list(range(first_meas, ncols))
    fm_steps = 0
    while remaining:
        pivot = None
        for col in remaining:
            candidates = [e for e in eqs if e[col] != 0]
            if candidates:
                pivot_eq = min(candidates, key=lambda e: sum(1 for v in e if v != 0))
                pivot = (col, pivot_eq)
                break
        if pivot is not None:
            col, eq = pivot
            inv = 1 / eq[col]
            piv = [v * inv for v in eq]
            eqs.remove(eq)
            for e in eqs:
                if e[col] != 0:
                    f = e[col]
                    e[:] = [a - f * b for a, b in zip(e, piv)]
            new_rows = []
            for coeffs, labels in rows:
                if coeffs[col] != 0:
                    f = coeffs[col]
                    coeffs = tuple(a - f * b for a, b in zip(coeffs, piv))
                new_rows.append((coeffs, labels))
            rows = new_rows
            remaining.remove(col)
            continue
        # no equality touches any remaining column: Fourier-Motzkin
        col = min(
            remaining,
            key=lambda c: (
                sum(1 for r, _ in rows if r[c] > 0) * sum(1 for r, _ in rows if r[c] < 0),
                c,
            ),
        )
        remaining.remove(col)
        fm_steps += 1
        pos = [(r, l) for r, l in rows if r[col] > 0]
        neg = [(r, l) for r, l in rows if r[col] < 0]
        combined = [(r, l) for r, l in rows if r[col] == 0]
        for pcoef, plab in pos:
            alpha = pcoef[col]
            for ncoef, nlab in neg:
                beta = ncoef[col]
                combo = tuple(-beta * a + alpha * b for a, b in zip(pcoef, ncoef))
                combined.append((_normalize_row(list(combo)), plab | nlab))
        rows = _prune(
            [(_normalize_row(list(c)), l) for c, l in combined], fm_steps
        )
    kept_rows = []
    for coeffs, _labels in rows:
        assert all(v == 0 for v in coeffs[first_meas:]), "measure column survived"
        kept_rows.append(tuple(coeffs[:first_meas]))
    kept_eqs = []
    for e in eqs:
        assert all(v == 0 for v in e[first_meas:]), "measure column survived in equality"
        if any(v != 0 for v in e[:first_meas]):
            kept_eqs.append(tuple(e[:first_meas]))
    return kept_rows, kept_eqs


@dataclass(frozen=True)
class FacetDerivation:
    """Full result of a facet derivation.

    facets: irredundant facet inequalities in canonical integer form, sorted.
    implied_equations: relations tight on the whole hull (empty unless the
    hull is degenerate). dimension: affine dimension of the hull.
    """

    facets: tuple[Inequality, ...]
    implied_equations: tuple[Inequality, ...]
    dimension: int


def derive_facets_detailed(scenario: Scenario) -> FacetDerivation:
    _check_capacity(scenario)
    n = scenario.n
    pairs = scenario.pair_coordinates
    d = n + len(pairs)
    m = 1 << n
    ncols = 1 + d + m  # [constant | coordinates | measures]

    vertex_vecs = [_vertex_vector(scenario, mask) for mask in range(m)]

    equalities = []
    for ci in range(d):
        row = [_F0] * ncols
        row[1 + ci] = _F1
        for mask in range(m):
            row[1 + d + mask] = -vertex_vecs[mask][ci]
        equalities.append(row)
    norm = [_F0] * ncols
    norm[0] = -_F1
    for mask in range(m):
        norm[1 + d + mask] = _F1
    equalities.append(norm)

    inequalities = []
    for mask in range(m):
        row = [_F0] * ncols
        row[1 + d + mask] = _F1
        inequalities.append((row, frozenset({mask})))

    raw_rows, raw_eqs = _eliminate_measures(equalities, inequalities, 1 + d, ncols)

    # exact facet filter: validity, then tightness rank
    dim = _affine_rank(vertex_vecs)
    seen = set()
    facet_vecs = []
    equation_vecs = [scale_to_integers(e, allow_sign_flip=True) for e in raw_eqs]
    for vec in raw_rows:
        canon = scale_to_integers(list(vec))
        if canon in seen:
            continue
        seen.add(canon)
        slacks = [
            canon[0] + sum(c * x for c, x in zip(canon[1:], v)) for v in vertex_vecs
        ]
        assert min(slacks) >= 0, "derived row is violated by a vertex"
        tight = [v for v, s in zip(vertex_vecs, slacks) if s == 0]
        if len(tight) == len(vertex_vecs):
            equation_vecs.append(scale_to_integers(list(vec), allow_sign_flip=True))
        elif tight and _affine_rank(tight) == dim - 1:
            facet_vecs.append(canon)

    def to_inequality(vec, is_equation):
        return Inequality(vec[0], tuple(vec[1 : 1 + n]), tuple(vec[1 + n :]), pairs, is_equation)

    facets = sorted(
        {to_inequality(v, False) for v in facet_vecs},
        key=lambda q: q.coefficient_vector(),
    )
    equations = sorted(
        {to_inequality(v, True) for v in set(equation_vecs)},
        key=lambda q: q.coefficient_vector(),
    )
    return FacetDerivation(tuple(facets), tuple(equations), dim)


def derive_facets(scenario: Scenario) -> list[Inequality]:
    """Complete irredundant facet list of the correlation polytope, sorted
    canonically. Exact: every returned inequality is integral, valid on all
    vertices, and tight on a (dimension-1)-dimensional face."""
    return list(derive_facets_detailed(scenario).facets)


# --- delimited export ----------------------------------------------------------

def facet_csv_header(scenario: Scenario) -> list[str]:
    labels = scenario.labels
    return (
        ["constant"]
        + [f"<{lab}>" for lab in labels]
        + [f"{labels[i]}*{labels[j]}" for i, j in scenario.pair_coordinates]
    )


def write_facets_csv(scenario: Scenario, facets: Sequence[Inequality], path) -> None:
    """One facet per row, coefficients as exact rationals in scenario
    coordinate order."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(facet_csv_header(scenario))
        for ineq in facets:
            writer.writerow([str(v) for v in ineq.coefficient_vector()])
