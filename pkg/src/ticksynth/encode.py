"""Compilation of bounded runs and formulas into integer feasibility models.

The timed system's run of horizon ``H`` is encoded with one-hot binary
state vectors ``w[k]`` (k = 0..H) linked step-to-step through the graph's
predecessor structure.  Tick occurrences are captured by binary step
indicators ``ze[k]``; the tick count of a window is then the plain linear
expression ``ze[k+1] + ... + ze[j]`` and never becomes a model variable.
Formula satisfaction introduces one binary per (subformula, position),
with until windows handled through big-M threshold indicators on the
counter expression.

Two tick-inference modes exist:

* ``compact`` derives ``ze[k]`` from whether the adjacent states *could*
  be linked by a tick (source has an outgoing tick, target an incoming
  one).  This is the smaller model, but on graphs where some non-tick
  edge connects such a pair the indicator misclassifies the step, so
  decoded runs are always re-checked semantically.
* ``exact`` adds one binary per (step, transition) that pins down which
  edge was taken; ``ze[k]`` then equals the sum over tick transitions and
  is correct by construction.

Until windows only range over positions inside the horizon: satisfaction
is never assumed beyond the last encoded step, matching the finite-trace
semantics of the evaluator.  Decoding reads a satisfying assignment back
into a run and certifies it against the formula with the direct
evaluator; a run that fails certification is never returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .ilp import Assignment, IlpModel
from .logic import (
    And,
    Atom,
    Formula,
    Not,
    Or,
    SubformulaTable,
    Truth,
    UnknownAtomError,
    Until,
    evaluate,
    subformulas,
)
from .tdes import TICK, Fragment, TimedDes, fragment_errors

COMPACT = "compact"
EXACT = "exact"
MODES = (COMPACT, EXACT)


class DecodeError(RuntimeError):
    """Tick-step inference was ambiguous or certification failed."""


@dataclass(eq=False)
class Encoding:
    """Model plus the registry mapping variables back to run structure."""

    model: IlpModel
    tdes: TimedDes
    horizon: int
    mode: str
    w: list[list[int]] = field(default_factory=list)
    ze: list[int | None] = field(default_factory=list)
    formula: Formula | None = None
    table: SubformulaTable | None = None
    zphi: dict[tuple[int, int], int] = field(default_factory=dict)
    zc: dict[tuple[int, int, int], tuple[int, int]] = field(default_factory=dict)
    zu: dict[tuple[int, int, int], int] = field(default_factory=dict)
    big_m: dict[int, int] = field(default_factory=dict)
    edges: list[tuple[int, str, int]] = field(default_factory=list)
    edge_vars: dict[tuple[int, int], int] = field(default_factory=dict)

    def counter_terms(self, k: int, j: int) -> list[int]:
        """Variables whose sum is the tick count of window k..j."""
        return [self.ze[i] for i in range(k + 1, j + 1)]


def _predecessors(graph: TimedDes) -> list[list[int]]:
    preds: list[set[int]] = [set() for _ in range(graph.n)]
    for (i, _), j in graph.transitions.items():
        preds[j].add(i)
    return [sorted(p) for p in preds]


def encode_trajectory(graph: TimedDes, horizon: int) -> Encoding:
    """One-hot state vectors linked through graph adjacency.

    Creates ``(H+1) * N`` binaries and one constraint per (step, one-hot)
    plus one per (step, state) adjacency row.  The initial state is pinned
    through its variable bounds.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    model = IlpModel()
    enc = Encoding(model=model, tdes=graph, horizon=horizon, mode=COMPACT)
    n = graph.n
    for k in range(horizon + 1):
        row = []
        for i in range(n):
            pinned = k == 0 and i == graph.initial_index
            row.append(model.add_var(f"w[{k}][{i}]", 1 if pinned else 0, 1))
        enc.w.append(row)
    for k in range(horizon + 1):
        model.add([(1, v) for v in enc.w[k]], "=", 1)
    preds = _predecessors(graph)
    for k in range(horizon):
        for j in range(n):
            terms = [(1, enc.w[k + 1][j])]
            terms += [(-1, enc.w[k][i]) for i in preds[j]]
            model.add(terms, "<=", 0)
    return enc


def encode_ticks(graph: TimedDes, horizon: int, enc: Encoding) -> None:
    """Compact tick indicators from state-pair membership.

    ``ze[k]`` is forced to 1 exactly when the step's source can emit a
    tick and its target can absorb one; see the module note about the
    misclassification this allows on ambiguous graphs.
    """
    model = enc.model
    sources = graph.tick_sources()
    targets = graph.tick_targets()
    enc.ze = [None]
    for k in range(1, horizon + 1):
        z = model.add_var(f"ze[{k}]", 0, 1)
        enc.ze.append(z)
        from_terms = [(-1, enc.w[k - 1][i]) for i in range(graph.n) if sources[i]]
        into_terms = [(-1, enc.w[k][i]) for i in range(graph.n) if targets[i]]
        model.add([(1, z)] + from_terms, "<=", 0)
        model.add([(1, z)] + into_terms, "<=", 0)
        model.add([(1, z)] + from_terms + into_terms, ">=", -1)


def encode_edges_exact(graph: TimedDes, horizon: int, enc: Encoding) -> None:
    """Exact mode: per-step transition selectors tied to the state vectors.

    Exactly one transition fires per step; its endpoints must match the
    one-hot vectors, and ``ze[k]`` equals the sum of tick selectors at
    step k (replacing the compact membership rows).
    """
    model = enc.model
    enc.mode = EXACT
    enc.edges = sorted(
        (i, ev, j) for (i, ev), j in graph.transitions.items()
    )
    outgoing: list[list[int]] = [[] for _ in range(graph.n)]
    incoming: list[list[int]] = [[] for _ in range(graph.n)]
    ticks: list[int] = []
    for t, (i, ev, j) in enumerate(enc.edges):
        outgoing[i].append(t)
        incoming[j].append(t)
        if ev == TICK:
            ticks.append(t)
    enc.ze = [None]
    for k in range(1, horizon + 1):
        step_vars = []
        for t in range(len(enc.edges)):
            x = model.add_var(f"x[{k}][{t}]", 0, 1)
            enc.edge_vars[(k, t)] = x
            step_vars.append(x)
        model.add([(1, x) for x in step_vars], "=", 1)
        for i in range(graph.n):
            terms = [(1, enc.w[k - 1][i])]
            terms += [(-1, step_vars[t]) for t in outgoing[i]]
            model.add(terms, "=", 0)
        for j in range(graph.n):
            terms = [(1, enc.w[k][j])]
            terms += [(-1, step_vars[t]) for t in incoming[j]]
            model.add(terms, "=", 0)
        z = model.add_var(f"ze[{k}]", 0, 1)
        enc.ze.append(z)
        model.add([(1, z)] + [(-1, step_vars[t]) for t in ticks], "=", 0)


def add_counter_threshold(
    model: IlpModel,
    counter_terms: Sequence[int],
    lower: int,
    upper: int,
    big_m: int,
    tag: str = "",
) -> tuple[int, int]:
    """Indicator pair for ``lower <= counter`` and ``counter <= upper``.

    ``counter`` is the sum of the given binary variables.  With
    ``big_m > upper`` and ``big_m >= counter_max + 1`` the four rows force
    the indicators to the exact threshold truth values; strict bounds are
    shifted by one since everything is integral.
    """
    z_at_least = model.add_var(f"cge{tag}", 0, 1)
    z_at_most = model.add_var(f"cle{tag}", 0, 1)
    unit = [(1, v) for v in counter_terms]
    model.add(unit + [(-big_m, z_at_least)], "<=", lower - 1)
    model.add(unit + [(-big_m, z_at_least)], ">=", lower - big_m)
    model.add(unit + [(big_m, z_at_most)], ">=", upper + 1)
    model.add(unit + [(big_m, z_at_most)], "<=", upper + big_m)
    return z_at_least, z_at_most


def _and_rows(model: IlpModel, z: int, operands: Sequence[int]) -> None:
    for op in operands:
        model.add([(1, z), (-1, op)], "<=", 0)
    model.add([(1, z)] + [(-1, op) for op in operands], ">=", 1 - len(operands))


def _or_rows(model: IlpModel, z: int, operands: Sequence[int]) -> None:
    for op in operands:
        model.add([(1, z), (-1, op)], ">=", 0)
    model.add([(1, z)] + [(-1, op) for op in operands], "<=", 0)


def encode_formula(
    graph: TimedDes, formula: Formula, horizon: int, enc: Encoding
) -> None:
    """Satisfaction binaries for every (subformula, position) pair.

    Requires the trajectory and tick indicators to be encoded already.
    Walks the subformula table bottom-up so shared subtrees are encoded
    once.
    """
    if len(enc.ze) != horizon + 1:
        raise ValueError("tick indicators must be encoded before the formula")
    model = enc.model
    table = subformulas(formula)
    enc.formula = formula
    enc.table = table
    atoms = graph.untimed.atoms

    for slot, node in enumerate(table.entries):
        kids = table.children[slot]
        for k in range(horizon + 1):
            enc.zphi[(slot, k)] = model.add_var(f"z{slot}[{k}]", 0, 1)
        if isinstance(node, Truth):
            for k in range(horizon + 1):
                model.add([(1, enc.zphi[(slot, k)])], "=", 1)
        elif isinstance(node, Atom):
            if node.name not in atoms:
                raise UnknownAtomError(f"atom {node.name!r} is not declared")
            holders = [
                i for i in range(graph.n) if node.name in graph.label(i)
            ]
            # Both sides are 0/1 under the one-hot rows, so the paired
            # threshold inequalities collapse to an equality.
            for k in range(horizon + 1):
                terms = [(1, enc.zphi[(slot, k)])]
                terms += [(-1, enc.w[k][i]) for i in holders]
                model.add(terms, "=", 0)
        elif isinstance(node, Not):
            for k in range(horizon + 1):
                model.add(
                    [(1, enc.zphi[(slot, k)]), (1, enc.zphi[(kids[0], k)])],
                    "=",
                    1,
                )
        elif isinstance(node, And):
            for k in range(horizon + 1):
                _and_rows(
                    model,
                    enc.zphi[(slot, k)],
                    [enc.zphi[(kids[0], k)], enc.zphi[(kids[1], k)]],
                )
        elif isinstance(node, Or):
            for k in range(horizon + 1):
                _or_rows(
                    model,
                    enc.zphi[(slot, k)],
                    [enc.zphi[(kids[0], k)], enc.zphi[(kids[1], k)]],
                )
        elif isinstance(node, Until):
            # The counter expression is bounded by the horizon, so H+1 is
            # a valid big-M whenever the window's upper bound fits below
            # the horizon; larger bounds need M > upper.
            big_m = horizon + 1 if node.upper <= horizon else node.upper + 1
            enc.big_m[slot] = big_m
            for k in range(horizon + 1):
                steps = []
                for j in range(k, horizon + 1):
                    z_ge, z_le = add_counter_threshold(
                        model,
                        enc.counter_terms(k, j),
                        node.lower,
                        node.upper,
                        big_m,
                        tag=f"{slot}[{k},{j}]",
                    )
                    enc.zc[(slot, k, j)] = (z_ge, z_le)
                    operands = [z_ge, z_le, enc.zphi[(kids[1], j)]]
                    operands += [
                        enc.zphi[(kids[0], pos)] for pos in range(k, j)
                    ]
                    z_step = model.add_var(f"u{slot}[{k},{j}]", 0, 1)
                    enc.zu[(slot, k, j)] = z_step
                    _and_rows(model, z_step, operands)
                    steps.append(z_step)
                _or_rows(model, enc.zphi[(slot, k)], steps)
        else:
            raise TypeError(f"not a formula node: {node!r}")


def encode_root(enc: Encoding) -> None:
    """Demand satisfaction of the whole formula at position 0."""
    if enc.table is None:
        raise ValueError("formula must be encoded before the root pin")
    enc.model.add([(1, enc.zphi[(enc.table.root, 0)])], "=", 1)


def variable_budget(
    graph: TimedDes, formula: Formula, horizon: int, mode: str
) -> int:
    """Documented upper bound on model size: Theta(H*N) plus Theta(H^2)
    per until node (plus the per-step edge selectors in exact mode)."""
    table = subformulas(formula)
    n_until = sum(1 for e in table.entries if isinstance(e, Until))
    windows = (horizon + 1) * (horizon + 2) // 2
    bound = (horizon + 1) * graph.n  # state vectors
    bound += horizon  # tick indicators
    bound += (horizon + 1) * len(table)  # per-subformula satisfaction
    bound += n_until * 3 * windows  # thresholds + window indicators
    if mode == EXACT:
        bound += horizon * len(graph.transitions)
    return bound


def build_encoding(
    graph: TimedDes, formula: Formula, horizon: int, mode: str = COMPACT
) -> Encoding:
    """Full pipeline: trajectory, tick indicators, formula, root pin."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    enc = encode_trajectory(graph, horizon)
    if mode == EXACT:
        encode_edges_exact(graph, horizon, enc)
    else:
        encode_ticks(graph, horizon, enc)
    encode_formula(graph, formula, horizon, enc)
    encode_root(enc)
    budget = variable_budget(graph, formula, horizon, mode)
    assert enc.model.num_variables <= budget, (
        enc.model.num_variables,
        budget,
    )
    return enc


def decode(enc: Encoding, assignment: Assignment) -> Fragment:
    """Read a satisfying assignment back into a certified run.

    In exact mode the chosen transitions name the events directly.  In
    compact mode the event of a step is ``tick`` when its indicator is
    set, otherwise the lexicographically smallest non-tick event linking
    the adjacent states.  The decoded run must replay on the system and
    satisfy the formula under the direct evaluator; otherwise
    :class:`DecodeError` is raised (callers may retry in exact mode).
    """
    graph = enc.tdes
    system = graph.untimed
    path = []
    for k in range(enc.horizon + 1):
        chosen = [i for i in range(graph.n) if assignment[enc.w[k][i]] == 1]
        if len(chosen) != 1:
            raise DecodeError(f"state vector at step {k} is not one-hot")
        path.append(chosen[0])

    events = []
    if enc.mode == EXACT:
        for k in range(1, enc.horizon + 1):
            picked = [
                enc.edges[t]
                for t in range(len(enc.edges))
                if assignment[enc.edge_vars[(k, t)]] == 1
            ]
            if len(picked) != 1:
                raise DecodeError(f"step {k} does not select a unique edge")
            events.append(picked[0][1])
    else:
        for k in range(1, enc.horizon + 1):
            if assignment[enc.ze[k]] == 1:
                events.append(TICK)
                continue
            source, target = path[k - 1], path[k]
            candidates = [
                ev
                for ev in graph.alphabet()
                if ev != TICK and graph.transitions.get((source, ev)) == target
            ]
            if not candidates:
                raise DecodeError(
                    f"step {k}: no non-tick event connects "
                    f"{graph.states[source]} to {graph.states[target]}"
                )
            events.append(candidates[0])

    fragment = Fragment(
        tuple(graph.states[i] for i in path), tuple(events)
    )
    problems = fragment_errors(system, fragment)
    if problems:
        raise DecodeError("decoded run does not replay: " + problems[0])
    if enc.formula is not None and not evaluate(
        fragment, enc.formula, 0, system.labeling, system.atoms
    ):
        raise DecodeError("decoded run fails certification against the formula")
    return fragment
