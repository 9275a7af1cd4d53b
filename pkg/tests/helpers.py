"""Shared generators and reference implementations for the test suite.

The reference evaluators and brute-force feasibility checks here stay
deliberately independent of the code paths they validate: the evaluator
is a direct memo-free recursion, ILP feasibility is decided by exhaustive
enumeration of assignments, and induced valuations are computed from a
run with nothing but counting and the direct evaluator.
"""

from __future__ import annotations

import random
from itertools import product

import numpy as np

from ticksynth.encode import Encoding
from ticksynth.ilp import Assignment, IlpModel
from ticksynth.logic import (
    TRUE,
    And,
    Atom,
    Formula,
    Not,
    Or,
    Until,
    evaluate,
)
from ticksynth.tdes import (
    PROSPECTIVE,
    REMOTE,
    TICK,
    EventTiming,
    Fragment,
    TimedDes,
    TimedState,
    UntimedDes,
)


def abstract_fragment(activities, events) -> Fragment:
    """Fragment over bare activities (no timers), for semantics tests."""
    return Fragment(
        tuple(TimedState(a, ()) for a in activities), tuple(events)
    )


def worked_example_fragment() -> Fragment:
    """The mixed sequence a,tick,a,sigma,b,tick,a used in semantics tests."""
    return abstract_fragment(["a", "a", "b", "a"], ["tick", "sigma", "tick"])


WORKED_LABELS = {"a": {"a"}, "b": {"b"}}
WORKED_ATOMS = {"a", "b"}


def random_system(rng: random.Random, max_states: int = 5) -> UntimedDes:
    """Small random untimed system with mixed timing kinds, always valid."""
    n_states = rng.randint(2, max_states)
    states = [f"s{i}" for i in range(n_states)]
    n_events = rng.randint(1, 4)
    events = [f"e{i}" for i in range(n_events)]
    timing = {}
    for ev in events:
        lower = rng.randint(0, 2)
        if rng.random() < 0.5:
            timing[ev] = EventTiming(PROSPECTIVE, lower, lower + rng.randint(0, 2))
        else:
            timing[ev] = EventTiming(REMOTE, lower)
    transitions = {}
    for src in states:
        for ev in events:
            if rng.random() < 0.55:
                transitions[(src, ev)] = rng.choice(states)
    if not transitions:  # keep at least one non-tick edge around
        transitions[(states[0], events[0])] = states[-1]
    n_atoms = rng.randint(1, 3)
    atoms = [f"ap{i}" for i in range(n_atoms)]
    labeling = {
        s: frozenset(ap for ap in atoms if rng.random() < 0.4) for s in states
    }
    return UntimedDes(
        states=frozenset(states),
        events=frozenset(events),
        transitions=transitions,
        initial=states[0],
        atoms=frozenset(atoms),
        labeling=labeling,
        timing=timing,
    )


def random_formula(
    rng: random.Random, atoms: list[str], horizon: int, depth: int = 3
) -> Formula:
    """Random formula over the core node kinds with windows inside 0..H."""
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.15:
            return TRUE
        return Atom(rng.choice(atoms))
    pick = rng.random()
    if pick < 0.2:
        return Not(random_formula(rng, atoms, horizon, depth - 1))
    if pick < 0.45:
        return And(
            random_formula(rng, atoms, horizon, depth - 1),
            random_formula(rng, atoms, horizon, depth - 1),
        )
    if pick < 0.7:
        return Or(
            random_formula(rng, atoms, horizon, depth - 1),
            random_formula(rng, atoms, horizon, depth - 1),
        )
    low = rng.randint(0, horizon)
    high = rng.randint(low, horizon)
    return Until(
        random_formula(rng, atoms, horizon, depth - 1),
        random_formula(rng, atoms, horizon, depth - 1),
        low,
        high,
    )


def random_fragment(
    rng: random.Random, graph: TimedDes, horizon: int
) -> Fragment | None:
    """Uniform random walk of exactly ``horizon`` steps, if one exists."""
    path = [graph.initial_index]
    events = []
    for _ in range(horizon):
        options = graph.successors(path[-1])
        if not options:
            return None
        ev, j = rng.choice(options)
        events.append(ev)
        path.append(j)
    return Fragment(tuple(graph.states[i] for i in path), tuple(events))


def reference_eval(fragment, node, k, labels, atoms) -> bool:
    """Memo-free direct recursion over the satisfaction definition."""
    horizon = fragment.horizon
    if isinstance(node, Atom):
        if node.name not in atoms:
            raise ValueError(f"atom {node.name!r} unknown")
        return node.name in labels.get(fragment.states[k].activity, ())
    if node == TRUE:
        return True
    if isinstance(node, Not):
        return not reference_eval(fragment, node.operand, k, labels, atoms)
    if isinstance(node, And):
        return reference_eval(
            fragment, node.left, k, labels, atoms
        ) and reference_eval(fragment, node.right, k, labels, atoms)
    if isinstance(node, Or):
        return reference_eval(
            fragment, node.left, k, labels, atoms
        ) or reference_eval(fragment, node.right, k, labels, atoms)
    if isinstance(node, Until):
        return any(
            node.lower <= fragment.count(k, j) <= node.upper
            and reference_eval(fragment, node.right, j, labels, atoms)
            and all(
                reference_eval(fragment, node.left, i, labels, atoms)
                for i in range(k, j)
            )
            for j in range(k, horizon + 1)
        )
    raise TypeError(node)


def untimed_until_holds(fragment, left, right, k, labels, atoms) -> bool:
    """Plain finite-trace until, ignoring tick counts entirely."""
    return any(
        reference_eval(fragment, right, j, labels, atoms)
        and all(
            reference_eval(fragment, left, i, labels, atoms)
            for i in range(k, j)
        )
        for j in range(k, fragment.horizon + 1)
    )


# --- ILP brute force ---------------------------------------------------------

def enumerate_feasible(model: IlpModel):
    """Yield every assignment satisfying all constraints (tiny models)."""
    ranges = [
        range(model.lower[v], model.upper[v] + 1)
        for v in range(model.num_variables)
    ]
    for values in product(*ranges):
        ok = True
        for constraint in model.constraints:
            total = sum(c * values[v] for c, v in constraint.terms)
            if constraint.comparator == "<=":
                ok = total <= constraint.rhs
            elif constraint.comparator == ">=":
                ok = total >= constraint.rhs
            else:
                ok = total == constraint.rhs
            if not ok:
                break
        if ok:
            yield values


def brute_force_feasible(model: IlpModel) -> bool:
    """Vectorized 0/1 enumeration; requires all-binary variable bounds."""
    n = model.num_variables
    if n == 0:
        return next(iter(enumerate_feasible(model)), None) is not None
    assert all(model.lower[v] >= 0 and model.upper[v] <= 1 for v in range(n))
    grid = (
        (np.arange(2**n, dtype=np.uint32)[:, None] >> np.arange(n)) & 1
    ).astype(np.int64)
    # variables pinned by bounds restrict the grid
    mask = np.ones(len(grid), dtype=bool)
    for v in range(n):
        if model.lower[v] == 1:
            mask &= grid[:, v] == 1
        if model.upper[v] == 0:
            mask &= grid[:, v] == 0
    for constraint in model.constraints:
        coefs = np.zeros(n, dtype=np.int64)
        for c, v in constraint.terms:
            coefs[v] += c
        lhs = grid @ coefs
        if constraint.comparator == "<=":
            mask &= lhs <= constraint.rhs
        elif constraint.comparator == ">=":
            mask &= lhs >= constraint.rhs
        else:
            mask &= lhs == constraint.rhs
        if not mask.any():
            return False
    return bool(mask.any())


def random_model(rng: random.Random, n_vars: int) -> IlpModel:
    """Random all-binary model with rows biased toward mixed verdicts."""
    model = IlpModel()
    for v in range(n_vars):
        model.add_var(f"b{v}", 0, 1)
    witness = [rng.randint(0, 1) for _ in range(n_vars)]
    for _ in range(rng.randint(1, n_vars + 4)):
        support = rng.sample(range(n_vars), rng.randint(1, min(n_vars, 6)))
        terms = [(rng.choice([-4, -3, -2, -1, 1, 2, 3, 4]), v) for v in support]
        comparator = rng.choice(["<=", "<=", ">=", ">=", "="])
        anchor = sum(c * witness[v] for c, v in terms)
        rhs = anchor + rng.randint(-2, 2)
        model.add(terms, comparator, rhs)
    return model


# --- induced valuations ------------------------------------------------------

def tick_unambiguous(graph: TimedDes) -> bool:
    """No non-tick edge joins a tick-capable source to a tick-fed target.

    On such graphs the compact tick indicators coincide with actual tick
    steps, so induced valuations of genuine runs satisfy the compact
    model.
    """
    sources = graph.tick_sources()
    targets = graph.tick_targets()
    return not any(
        ev != TICK and sources[i] and targets[j]
        for (i, ev), j in graph.transitions.items()
    )


def induced_valuation(enc: Encoding, fragment: Fragment) -> Assignment:
    """Valuation a genuine run induces on every variable of the encoding.

    State vectors come from the run itself, tick indicators from its
    events, threshold indicators from real tick counts, and satisfaction
    variables from the direct evaluator.
    """
    graph = enc.tdes
    system = graph.untimed
    horizon = enc.horizon
    assert fragment.horizon == horizon
    values = [0] * enc.model.num_variables

    path = [graph.index[s] for s in fragment.states]
    for k in range(horizon + 1):
        values[enc.w[k][path[k]]] = 1
    for k in range(1, horizon + 1):
        values[enc.ze[k]] = 1 if fragment.events[k - 1] == TICK else 0
    if enc.mode == "exact":
        lookup = {edge: t for t, edge in enumerate(enc.edges)}
        for k in range(1, horizon + 1):
            edge = (path[k - 1], fragment.events[k - 1], path[k])
            values[enc.edge_vars[(k, lookup[edge])]] = 1

    table = enc.table
    sat = {}
    for slot in range(len(table)):
        for k in range(horizon + 1):
            sat[(slot, k)] = evaluate(
                fragment, table.entries[slot], k, system.labeling, system.atoms
            )
            values[enc.zphi[(slot, k)]] = int(sat[(slot, k)])
    for (slot, k, j), (z_ge, z_le) in enc.zc.items():
        node = table.entries[slot]
        ticks = fragment.count(k, j)
        values[z_ge] = int(ticks >= node.lower)
        values[z_le] = int(ticks <= node.upper)
    for (slot, k, j), z_step in enc.zu.items():
        node = table.entries[slot]
        left, right = table.children[slot]
        ticks = fragment.count(k, j)
        window = node.lower <= ticks <= node.upper
        ok = window and sat[(right, j)]
        ok = ok and all(sat[(left, pos)] for pos in range(k, j))
        values[z_step] = int(ok)
    return Assignment(tuple(values))
