"""Measurement scenarios and the structural test for joint extendability.

A scenario is a hypergraph: vertices are two-valued observables, hyperedges
are contexts, i.e. the subsets of observables that get measured together in
a single experimental run. Vertex enumeration, facet derivation and the
marginal problem all operate on this structure.

``detect_cyclicity`` runs the classical Graham-style reduction that decides
whether the context hypergraph is acyclic. Acyclic families are exactly the
ones where every internally consistent set of per-context distributions is
the projection of one global joint distribution, so no inequality between
observed correlations can ever be violated. The minimal cyclic family is the
three pair contexts {Q1,Q2}, {Q1,Q3}, {Q2,Q3} on three observables.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ._jsonio import dump_json_file, load_json_file
from .errors import ValidationError

OUTCOME_VALUES = (1, -1)


@dataclass(frozen=True)
class Observable:
    """A dichotomic quantity; outcomes are fixed to +1 and -1."""

    id: int
    label: str
    outcomes: tuple[int, int] = OUTCOME_VALUES

    def __post_init__(self):
        if self.id < 0:
            raise ValidationError(f"observable id must be nonnegative, got {self.id}")
        if not isinstance(self.label, str) or not self.label:
            raise ValidationError("observable label must be a nonempty string")
        if tuple(self.outcomes) != OUTCOME_VALUES:
            raise ValidationError("observable outcomes are fixed to (+1, -1)")


@dataclass(frozen=True)
class Context:
    """An ordered tuple of observable ids measured jointly in one run."""

    id: int
    members: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(int(m) for m in self.members))
        if self.id < 0:
            raise ValidationError(f"context id must be nonnegative, got {self.id}")
        if not self.members:
            raise ValidationError(f"context {self.id} has no members")
        if len(set(self.members)) != len(self.members):
            raise ValidationError(f"context {self.id} lists an observable twice")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def member_set(self) -> frozenset:
        return frozenset(self.members)


@dataclass(frozen=True)
class Scenario:
    """Immutable bundle of observables and contexts with validated structure."""

    observables: tuple[Observable, ...]
    contexts: tuple[Context, ...]

    def __post_init__(self):
        object.__setattr__(self, "observables", tuple(self.observables))
        object.__setattr__(self, "contexts", tuple(self.contexts))
        if not self.observables:
            raise ValidationError("scenario needs at least one observable")
        if not self.contexts:
            raise ValidationError("scenario needs at least one context")
        ids = [o.id for o in self.observables]
        if ids != list(range(len(ids))):
            raise ValidationError("observable ids must be dense: 0..n-1 in order")
        labels = [o.label for o in self.observables]
        if len(set(labels)) != len(labels):
            raise ValidationError("observable labels must be unique")
        cids = [c.id for c in self.contexts]
        if len(set(cids)) != len(cids):
            raise ValidationError("context ids must be unique")
        n = len(self.observables)
        seen: dict[frozenset, int] = {}
        for ctx in self.contexts:
            for m in ctx.members:
                if not 0 <= m < n:
                    raise ValidationError(
                        f"context {ctx.id} references unknown observable id {m}"
                    )
            if ctx.member_set in seen:
                raise ValidationError(
                    f"contexts {seen[ctx.member_set]} and {ctx.id} have the same members"
                )
            seen[ctx.member_set] = ctx.id

    @property
    def n(self) -> int:
        return len(self.observables)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(o.label for o in self.observables)

    def context_by_id(self, context_id: int) -> Context:
        for ctx in self.contexts:
            if ctx.id == context_id:
                return ctx
        raise ValidationError(f"no context with id {context_id}")

    @property
    def pair_coordinates(self) -> tuple[tuple[int, int], ...]:
        """All unordered in-context pairs (i, j), i < j, sorted."""
        pairs = set()
        for ctx in self.contexts:
            mem = sorted(ctx.members)
            for a in range(len(mem)):
                for b in range(a + 1, len(mem)):
                    pairs.add((mem[a], mem[b]))
        return tuple(sorted(pairs))

    @property
    def uncovered_observables(self) -> tuple[int, ...]:
        covered = set()
        for ctx in self.contexts:
            covered.update(ctx.members)
        return tuple(i for i in range(self.n) if i not in covered)


def build_scenario(labels: Sequence[str], contexts: Sequence[Sequence[int]]) -> Scenario:
    """Construct a validated Scenario from labels and member-id lists.

    Ids are assigned in order of appearance. Observables that no context
    covers are legal but trigger a warning.
    """
    observables = tuple(Observable(i, str(lab)) for i, lab in enumerate(labels))
    ctx = tuple(Context(k, tuple(members)) for k, members in enumerate(contexts))
    scenario = Scenario(observables, ctx)
    if scenario.uncovered_observables:
        names = ", ".join(scenario.labels[i] for i in scenario.uncovered_observables)
        warnings.warn(f"observables not covered by any context: {names}", stacklevel=2)
    return scenario


@dataclass(frozen=True)
class CyclicityReport:
    """Outcome of the hypergraph reduction.

    acyclic is True iff the reduction empties the hypergraph; residual holds
    the surviving (context id, members) pairs otherwise, e.g. the full cycle
    for the three-pair-context scenario.
    """

    acyclic: bool
    residual: tuple[tuple[int, tuple[int, ...]], ...]


def detect_cyclicity(scenario: Scenario, *, rng=None) -> CyclicityReport:
    """Decide acyclicity by exhaustive reduction.

    Repeat until nothing changes: (a) remove any observable private to a
    single context, (b) delete any context whose member set is contained in
    another context's (or has become empty). The reduction is confluent, so
    the candidate order cannot change the verdict; pass a ``random.Random``
    as rng to shuffle the order anyway (used by the order-invariance tests).
    """
    edges: dict[int, set[int]] = {c.id: set(c.members) for c in scenario.contexts}

    def order(ids):
        ids = sorted(ids)
        if rng is not None:
            rng.shuffle(ids)
        return ids

    changed = True
    while changed and edges:
        changed = False
        # (a) strip observables that occur in exactly one context; removing
        # one never changes another observable's occurrence count
        occur = Counter(v for members in edges.values() for v in members)
        for cid in order(edges):
            lonely = {v for v in edges[cid] if occur[v] == 1}
            if lonely:
                edges[cid] -= lonely
                for v in lonely:
                    del occur[v]
                changed = True
        # (b) drop one covered (or emptied) context at a time; equal member
        # sets cover each other, so deleting in bulk would be wrong
        for cid in order(edges):
            members = edges[cid]
            if not members or any(
                members <= edges[other] for other in edges if other != cid
            ):
                del edges[cid]
                changed = True
                break
    residual = tuple(
        (cid, tuple(sorted(members))) for cid, members in sorted(edges.items())
    )
    return CyclicityReport(acyclic=not edges, residual=residual)


# --- serialization -----------------------------------------------------------

def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "observables": list(scenario.labels),
        "contexts": [list(c.members) for c in scenario.contexts],
    }


def scenario_from_dict(data) -> Scenario:
    if not isinstance(data, dict):
        raise ValidationError("scenario document must be a JSON object")
    try:
        labels = data["observables"]
        contexts = data["contexts"]
    except KeyError as exc:
        raise ValidationError(f"scenario document is missing key {exc}") from exc
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise ValidationError("'observables' must be a list of strings")
    if not isinstance(contexts, list) or not all(
        isinstance(c, list) and all(isinstance(m, int) and not isinstance(m, bool) for m in c)
        for c in contexts
    ):
        raise ValidationError("'contexts' must be a list of lists of observable ids")
    return build_scenario(labels, contexts)


def load_scenario(path) -> Scenario:
    return scenario_from_dict(load_json_file(path))


def save_scenario(scenario: Scenario, path) -> None:
    dump_json_file(Path(path), scenario_to_dict(scenario))


def cycle_scenario(labels: Sequence[str] = ("Q1", "Q2", "Q3")) -> Scenario:
    """The minimal cyclic scenario: all pair contexts on three observables."""
    if len(labels) != 3:
        raise ValidationError("cycle_scenario takes exactly three labels")
    return build_scenario(labels, [[0, 1], [0, 2], [1, 2]])


def triple_scenario(labels: Sequence[str] = ("Q1", "Q2", "Q3")) -> Scenario:
    """Three observables measured jointly in a single context."""
    if len(labels) != 3:
        raise ValidationError("triple_scenario takes exactly three labels")
    return build_scenario(labels, [[0, 1, 2]])
