"""Small exact integer-linear feasibility engine.

Models hold integer variables with finite bounds and linear constraints
with integer coefficients; everything stays in exact integer arithmetic,
so there is no floating point anywhere in the solver.  Solving is
depth-first branch and bound: integer bounds propagation runs to a
fixpoint after every decision, the lowest-index unfixed variable is
branched next, and candidate values are tried in ascending order (0
before 1 for binaries).  The search is completely deterministic.

There is no objective function: the engine answers feasibility only, and
every returned assignment is re-checked by an independent verifier pass
before being handed back.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence


class ModelError(ValueError):
    """A variable or constraint was declared inconsistently."""


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coef * var) comparator rhs`` with integer data.

    ``terms`` pairs are (coefficient, variable index); the comparator is
    one of ``<=``, ``>=``, ``=``.
    """

    terms: tuple[tuple[int, int], ...]
    comparator: str
    rhs: int

    def __post_init__(self) -> None:
        if self.comparator not in ("<=", ">=", "="):
            raise ModelError(f"unknown comparator {self.comparator!r}")
        for coef, var in self.terms:
            if not isinstance(coef, int) or isinstance(coef, bool):
                raise ModelError(f"coefficient {coef!r} is not an integer")
            if not isinstance(var, int) or isinstance(var, bool):
                raise ModelError(f"variable index {var!r} is not an integer")
        if not isinstance(self.rhs, int) or isinstance(self.rhs, bool):
            raise ModelError(f"right-hand side {self.rhs!r} is not an integer")


@dataclass(frozen=True)
class Assignment:
    """One integer value per variable, indexed positionally."""

    values: tuple[int, ...]

    def __getitem__(self, var: int) -> int:
        return self.values[var]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a solve: infeasibility is a value, not an error."""

    feasible: bool
    assignment: Assignment | None
    nodes: int


class IlpModel:
    """Mutable model builder.

    Equality constraints are stored as the <=/>= pair internally; the
    user-level constraint list keeps the original form for dumps and for
    the verifier.  A finished model is never mutated by :func:`solve`, so
    independent solves of the same model may run concurrently.
    """

    def __init__(self) -> None:
        self.names: list[str] = []
        self.lower: list[int] = []
        self.upper: list[int] = []
        self.constraints: list[LinearConstraint] = []
        # normalized rows: (vars, coefs, rhs) meaning sum(coef*var) <= rhs
        self._rows: list[tuple[tuple[int, ...], tuple[int, ...], int]] = []
        self._occurs: list[list[int]] = []

    @property
    def num_variables(self) -> int:
        return len(self.names)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def add_var(self, name: str, lo: int, hi: int) -> int:
        if lo > hi:
            raise ModelError(f"variable {name!r}: bounds [{lo}, {hi}] are empty")
        self.names.append(name)
        self.lower.append(lo)
        self.upper.append(hi)
        self._occurs.append([])
        return len(self.names) - 1

    def add_constraint(self, constraint: LinearConstraint) -> None:
        for _, var in constraint.terms:
            if not 0 <= var < len(self.names):
                raise ModelError(f"constraint references unknown variable {var}")
        self.constraints.append(constraint)
        merged: dict[int, int] = {}
        for coef, var in constraint.terms:
            merged[var] = merged.get(var, 0) + coef
        items = sorted((var, coef) for var, coef in merged.items() if coef != 0)
        variables = tuple(var for var, _ in items)
        coefs = tuple(coef for _, coef in items)
        if constraint.comparator in ("<=", "="):
            self._push_row(variables, coefs, constraint.rhs)
        if constraint.comparator in (">=", "="):
            self._push_row(
                variables, tuple(-c for c in coefs), -constraint.rhs
            )

    def add(
        self, terms: Iterable[tuple[int, int]], comparator: str, rhs: int
    ) -> None:
        self.add_constraint(LinearConstraint(tuple(terms), comparator, rhs))

    def _push_row(
        self, variables: tuple[int, ...], coefs: tuple[int, ...], rhs: int
    ) -> None:
        row = len(self._rows)
        self._rows.append((variables, coefs, rhs))
        for var in variables:
            self._occurs[var].append(row)


def _sweep(
    rows: Sequence[tuple[tuple[int, ...], tuple[int, ...], int]],
    occurs: Sequence[Sequence[int]],
    lo: list[int],
    hi: list[int],
    queue: deque[int],
    queued: bytearray,
    trail: list[tuple[int, bool, int]],
) -> bool:
    """Bounds propagation to fixpoint; returns True on conflict.

    Every bound change is recorded on ``trail`` (variable, is-upper,
    previous value) so the caller can backtrack.  Tightenings are derived
    from each row's minimum activity, which never excludes an integer
    point satisfying the row.
    """
    while queue:
        row = queue.popleft()
        queued[row] = 0
        variables, coefs, rhs = rows[row]
        min_activity = 0
        for idx in range(len(variables)):
            coef = coefs[idx]
            var = variables[idx]
            min_activity += coef * (lo[var] if coef > 0 else hi[var])
        if min_activity > rhs:
            return True
        slack = rhs - min_activity
        for idx in range(len(variables)):
            coef = coefs[idx]
            var = variables[idx]
            span = hi[var] - lo[var]
            if span == 0:
                continue
            if coef > 0:
                if coef * span > slack:
                    new_hi = lo[var] + slack // coef
                    trail.append((var, True, hi[var]))
                    hi[var] = new_hi
                    if new_hi < lo[var]:
                        return True
                    for other in occurs[var]:
                        if not queued[other]:
                            queued[other] = 1
                            queue.append(other)
            else:
                if -coef * span > slack:
                    new_lo = hi[var] - slack // -coef
                    trail.append((var, False, lo[var]))
                    lo[var] = new_lo
                    if new_lo > hi[var]:
                        return True
                    for other in occurs[var]:
                        if not queued[other]:
                            queued[other] = 1
                            queue.append(other)
    return False


def propagate_bounds(
    model: IlpModel,
) -> tuple[list[int], list[int]] | None:
    """One propagation fixpoint from the declared bounds.

    Returns the tightened (lower, upper) box, or ``None`` when the model
    is already proven infeasible.  The box never excludes any integer
    point that satisfies all constraints.
    """
    lo = list(model.lower)
    hi = list(model.upper)
    queue = deque(range(len(model._rows)))
    queued = bytearray([1]) * len(model._rows)
    if _sweep(model._rows, model._occurs, lo, hi, queue, queued, []):
        return None
    return lo, hi


def check_assignment(model: IlpModel, assignment: Assignment) -> list[str]:
    """Independent verifier: report every violated bound or constraint."""
    problems = []
    if len(assignment) != model.num_variables:
        return [
            f"assignment has {len(assignment)} values for "
            f"{model.num_variables} variables"
        ]
    for var in range(model.num_variables):
        value = assignment[var]
        if not model.lower[var] <= value <= model.upper[var]:
            problems.append(
                f"{model.names[var]} = {value} outside "
                f"[{model.lower[var]}, {model.upper[var]}]"
            )
    for pos, constraint in enumerate(model.constraints):
        total = sum(coef * assignment[var] for coef, var in constraint.terms)
        ok = (
            total <= constraint.rhs
            if constraint.comparator == "<="
            else total >= constraint.rhs
            if constraint.comparator == ">="
            else total == constraint.rhs
        )
        if not ok:
            problems.append(
                f"constraint {pos}: {total} {constraint.comparator} "
                f"{constraint.rhs} fails"
            )
    return problems


def solve(model: IlpModel) -> SolveResult:
    """Depth-first search with bounds propagation at every node.

    Branching always picks the lowest-index unfixed variable and tries
    values in ascending order, so identical models yield identical
    assignments.  ``nodes`` counts value decisions.
    """
    rows = model._rows
    occurs = model._occurs
    lo = list(model.lower)
    hi = list(model.upper)
    n = len(lo)
    trail: list[tuple[int, bool, int]] = []
    queued = bytearray(len(rows))

    def propagate(seed_rows: Iterable[int]) -> bool:
        queue: deque[int] = deque()
        for row in seed_rows:
            if not queued[row]:
                queued[row] = 1
                queue.append(row)
        conflict = _sweep(rows, occurs, lo, hi, queue, queued, trail)
        while queue:  # leave no stale flags behind after a conflict
            queued[queue.popleft()] = 0
        return conflict

    def undo(mark: int) -> None:
        while len(trail) > mark:
            var, is_upper, previous = trail.pop()
            if is_upper:
                hi[var] = previous
            else:
                lo[var] = previous

    def first_unfixed(start: int) -> int:
        var = start
        while var < n and lo[var] == hi[var]:
            var += 1
        return var

    def finish(nodes: int) -> SolveResult:
        assignment = Assignment(tuple(lo))
        problems = check_assignment(model, assignment)
        if problems:
            raise RuntimeError(
                "solver produced an invalid assignment: " + "; ".join(problems)
            )
        return SolveResult(True, assignment, nodes)

    nodes = 0
    if propagate(range(len(rows))):
        return SolveResult(False, None, nodes)
    cursor = first_unfixed(0)
    if cursor == n:
        return finish(nodes)

    # frames: [variable, value tried, trail mark, cursor before the decision]
    stack: list[list[int]] = []
    while True:
        var = cursor
        value = lo[var]
        mark = len(trail)
        stack.append([var, value, mark, cursor])
        nodes += 1
        trail.append((var, True, hi[var]))
        hi[var] = value
        conflict = propagate(occurs[var])
        if not conflict:
            cursor = first_unfixed(var)
            if cursor == n:
                return finish(nodes)
            continue
        while True:
            if not stack:
                return SolveResult(False, None, nodes)
            var, value, mark, at = stack[-1]
            undo(mark)
            if value < hi[var]:
                stack[-1][1] = value + 1
                nodes += 1
                trail.append((var, False, lo[var]))
                trail.append((var, True, hi[var]))
                lo[var] = value + 1
                hi[var] = value + 1
                if not propagate(occurs[var]):
                    cursor = first_unfixed(at)
                    if cursor == n:
                        return finish(nodes)
                    break
            else:
                stack.pop()


def dump(model: IlpModel) -> str:
    """Plain-text rendering of the model with named variables."""
    lines = [
        f"integer feasibility model: {model.num_variables} variables, "
        f"{model.num_constraints} constraints"
    ]
    for var in range(model.num_variables):
        lines.append(
            f"var {var}: {model.names[var]} in "
            f"[{model.lower[var]}, {model.upper[var]}]"
        )
    for pos, constraint in enumerate(model.constraints):
        parts = []
        for coef, var in constraint.terms:
            sign = "+" if coef >= 0 else "-"
            parts.append(f"{sign}{abs(coef)} {model.names[var]}")
        body = " ".join(parts) if parts else "0"
        lines.append(f"c{pos}: {body} {constraint.comparator} {constraint.rhs}")
    return "\n".join(lines) + "\n"
