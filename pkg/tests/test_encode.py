import random

import pytest

from ticksynth.encode import (
    COMPACT,
    EXACT,
    DecodeError,
    add_counter_threshold,
    build_encoding,
    decode,
    encode_formula,
    encode_ticks,
    encode_trajectory,
    variable_budget,
)
from ticksynth.ilp import Assignment, IlpModel, check_assignment, dump, propagate_bounds, solve
from ticksynth.logic import TRUE, Atom, Not, UnknownAtomError, parse
from ticksynth.tdes import (
    REMOTE,
    TICK,
    EventTiming,
    TimedDes,
    UntimedDes,
    build_tdes,
)

from helpers import (
    induced_valuation,
    random_formula,
    random_fragment,
    random_system,
    tick_unambiguous,
)
from ticksynth.synth import enumerate_fragments
from ticksynth.logic import evaluate


def pulse_system():
    """One activity, one remote event with a one-tick delay.

    Timed graph: s0=(A,1) --tick--> s1=(A,0); s1 has a tick self-loop and
    the event resets it to s0.  The pair (s0, s1) is joined only by tick;
    the pair (s1, s0) only by the event, and s0 has no tick predecessor.
    """
    return UntimedDes(
        states={"A"},
        events={"pulse"},
        transitions={("A", "pulse"): "A"},
        initial="A",
        atoms={"lit"},
        labeling={"A": {"lit"}},
        timing={"pulse": EventTiming(REMOTE, 1)},
    )


# --- trajectory -----------------------------------------------------------------

def test_trajectory_sizes_on_ring(ring_tdes):
    horizon = 11
    enc = encode_trajectory(ring_tdes, horizon)
    assert ring_tdes.n == 28
    assert enc.model.num_variables == (horizon + 1) * 28
    assert enc.model.num_constraints == horizon * 28 + (horizon + 1)


def test_trajectory_pins_initial_state(ring_tdes):
    enc = encode_trajectory(ring_tdes, 2)
    start = enc.w[0][ring_tdes.initial_index]
    assert enc.model.lower[start] == enc.model.upper[start] == 1


def test_single_state_tick_loop_forces_every_step():
    system = UntimedDes(
        states={"only"}, events=set(), transitions={}, initial="only",
        atoms=set(), labeling={}, timing={},
    )
    graph = build_tdes(system)
    enc = encode_trajectory(graph, 3)
    box = propagate_bounds(enc.model)
    assert box is not None
    lo, hi = box
    for k in range(4):
        assert lo[enc.w[k][0]] == hi[enc.w[k][0]] == 1


def test_dead_end_state_makes_longer_horizons_infeasible():
    system = pulse_system()
    graph = build_tdes(system)
    # synthetic copy whose transition relation loses every edge out of s1
    pruned = TimedDes(
        untimed=system,
        states=graph.states,
        index=graph.index,
        transitions={
            key: j for key, j in graph.transitions.items() if key[0] != 1
        },
    )
    enc = encode_trajectory(pruned, 2)
    assert not solve(enc.model).feasible
    enc1 = encode_trajectory(pruned, 1)
    assert solve(enc1.model).feasible


# --- tick indicators --------------------------------------------------------------

def test_tick_only_pair_forces_indicator_up():
    graph = build_tdes(pulse_system())
    enc = encode_trajectory(graph, 1)
    encode_ticks(graph, 1, enc)
    box = propagate_bounds(enc.model)
    lo, hi = box
    # the only step from s0 goes to s1 via tick
    assert lo[enc.ze[1]] == hi[enc.ze[1]] == 1


def test_tickless_target_forces_indicator_down():
    graph = build_tdes(pulse_system())
    enc = encode_trajectory(graph, 2)
    encode_ticks(graph, 2, enc)
    # pin the second step back to s0: only the event edge fits
    enc.model.add([(1, enc.w[2][0])], "=", 1)
    box = propagate_bounds(enc.model)
    lo, hi = box
    assert lo[enc.ze[2]] == hi[enc.ze[2]] == 0


# --- counter thresholds ------------------------------------------------------------

def test_threshold_pair_for_fixed_count():
    model = IlpModel()
    bits = [model.add_var(f"t{i}", 0, 1) for i in range(4)]
    for i, bit in enumerate(bits):
        model.add([(1, bit)], "=", 1 if i < 2 else 0)  # count fixed to 2
    z_ge, z_le = add_counter_threshold(model, bits, 1, 3, big_m=5)
    result = solve(model)
    assert result.feasible
    assert result.assignment[z_ge] == 1
    assert result.assignment[z_le] == 1


@pytest.mark.parametrize("horizon", [1, 3, 6])
def test_threshold_truth_table_small(horizon):
    big_m = horizon + 1
    for m in range(horizon + 1):
        for n in range(m, horizon + 1):
            for count in range(horizon + 1):
                model = IlpModel()
                bits = [model.add_var(f"t{i}", 0, 1) for i in range(horizon)]
                for i, bit in enumerate(bits):
                    model.add([(1, bit)], "=", 1 if i < count else 0)
                z_ge, z_le = add_counter_threshold(model, bits, m, n, big_m)
                result = solve(model)
                assert result.feasible
                assert result.assignment[z_ge] == (1 if count >= m else 0)
                assert result.assignment[z_le] == (1 if count <= n else 0)


def test_threshold_pair_for_empty_window():
    # anchor equals witness: the counter expression has no terms at all
    for m, n, expected_ge in ((0, 2, 1), (1, 2, 0)):
        model = IlpModel()
        z_ge, z_le = add_counter_threshold(model, [], m, n, big_m=4)
        result = solve(model)
        assert result.feasible
        assert result.assignment[z_ge] == expected_ge
        assert result.assignment[z_le] == 1  # zero ticks never exceed n


def test_window_bound_above_horizon_is_handled():
    # upper bound far beyond the horizon: thresholds must not go infeasible
    graph = build_tdes(pulse_system())
    enc = build_encoding(graph, parse("F[0,99] lit"), 2, EXACT)
    assert solve(enc.model).feasible


# --- formula rows -------------------------------------------------------------------

def test_atom_row_pinned_by_initial_state(ring_tdes):
    for name, expected in (("ap1", 1), ("ap2", 0)):
        enc = encode_trajectory(ring_tdes, 1)
        encode_ticks(ring_tdes, 1, enc)
        encode_formula(ring_tdes, Atom(name), 1, enc)
        box = propagate_bounds(enc.model)
        lo, hi = box
        slot = enc.table.root
        assert lo[enc.zphi[(slot, 0)]] == hi[enc.zphi[(slot, 0)]] == expected


def test_negation_rows_complement():
    graph = build_tdes(pulse_system())
    enc = build_encoding(graph, Not(Atom("lit")), 1, EXACT)
    result = solve(enc.model)
    assert not result.feasible  # every state is lit


def test_unknown_atom_rejected(ring_tdes):
    enc = encode_trajectory(ring_tdes, 1)
    encode_ticks(ring_tdes, 1, enc)
    with pytest.raises(UnknownAtomError):
        encode_formula(ring_tdes, Atom("nope"), 1, enc)


def test_root_pin_and_registry_names(ring_tdes):
    enc = build_encoding(ring_tdes, parse("F[1,5] ap2"), 3)
    text = dump(enc.model)
    assert "w[3][27]" in text
    assert "ze[2]" in text
    assert "cge" in text and "cle" in text
    # trivially satisfiable root
    trivial = build_encoding(ring_tdes, TRUE, 1)
    assert solve(trivial.model).feasible


def test_variable_budget_holds(ring_tdes, phi_two_goals):
    for mode in (COMPACT, EXACT):
        enc = build_encoding(ring_tdes, phi_two_goals, 6, mode)
        assert enc.model.num_variables <= variable_budget(
            ring_tdes, phi_two_goals, 6, mode
        )


# --- replay completeness --------------------------------------------------------------

def _unambiguous_pool(seed, count):
    rng = random.Random(seed)
    pool = []
    while len(pool) < count:
        system = random_system(rng, max_states=4)
        graph = build_tdes(system, state_cap=3000)
        if tick_unambiguous(graph):
            pool.append((system, graph))
    return pool


def test_induced_valuations_satisfy_compact_model():
    rng = random.Random(13)
    checked = 0
    for system, graph in _unambiguous_pool(13, 12):
        atoms = sorted(system.atoms)
        for _ in range(4):
            horizon = rng.randint(1, 4)
            frag = random_fragment(rng, graph, horizon)
            if frag is None:
                continue
            phi = random_formula(rng, atoms, horizon)
            # no root pin: the valuation of an arbitrary run must satisfy
            # the structural rows whether or not the formula holds
            enc = encode_trajectory(graph, horizon)
            encode_ticks(graph, horizon, enc)
            encode_formula(graph, phi, horizon, enc)
            valuation = induced_valuation(enc, frag)
            assert check_assignment(enc.model, valuation) == []
            for (slot, k), var in enc.zphi.items():
                assert valuation[var] == int(
                    evaluate(
                        frag, enc.table.entries[slot], k,
                        system.labeling, system.atoms,
                    )
                )
            checked += 1
    assert checked >= 30


def test_ambiguous_pair_breaks_compact_tick_rows(ring, ring_tdes, route_a, phi_two_goals):
    """The route that satisfies the two-goal formula violates the compact
    tick rows: every arrival in a labeled location is also tick-fed, so
    the membership indicators overcount (8 forced ticks against 5 real).
    """
    assert not tick_unambiguous(ring_tdes)
    enc = build_encoding(ring_tdes, phi_two_goals, route_a.horizon, COMPACT)
    valuation = induced_valuation(enc, route_a)
    assert check_assignment(enc.model, valuation) != []

    sources = ring_tdes.tick_sources()
    targets = ring_tdes.tick_targets()
    path = [ring_tdes.index[s] for s in route_a.states]
    forced = sum(
        1
        for k in range(1, route_a.horizon + 1)
        if sources[path[k - 1]] and targets[path[k]]
    )
    assert route_a.count(0, route_a.horizon) == 5
    assert forced == 8


def test_exact_feasibility_matches_enumeration():
    rng = random.Random(37)
    trials = 0
    for _ in range(40):
        system = random_system(rng, max_states=4)
        graph = build_tdes(system, state_cap=3000)
        horizon = rng.randint(1, 4)
        phi = random_formula(rng, sorted(system.atoms), horizon)
        enc = build_encoding(graph, phi, horizon, EXACT)
        feasible = solve(enc.model).feasible
        exists = any(
            evaluate(frag, phi, 0, system.labeling, system.atoms)
            for frag in enumerate_fragments(graph, horizon)
        )
        assert feasible == exists
        trials += 1
    assert trials == 40


def test_exact_decode_produces_certified_runs():
    rng = random.Random(41)
    done = 0
    while done < 25:
        system = random_system(rng, max_states=4)
        graph = build_tdes(system, state_cap=3000)
        horizon = rng.randint(1, 4)
        phi = random_formula(rng, sorted(system.atoms), horizon)
        enc = build_encoding(graph, phi, horizon, EXACT)
        result = solve(enc.model)
        if not result.feasible:
            continue
        frag = decode(enc, result.assignment)
        assert evaluate(frag, phi, 0, system.labeling, system.atoms)
        done += 1


def test_decode_rejects_corrupted_assignment(ring_tdes, phi_avoid_until):
    enc = build_encoding(ring_tdes, phi_avoid_until, 7, EXACT)
    result = solve(enc.model)
    assert result.feasible
    values = list(result.assignment.values)
    flipped = enc.w[1][0], enc.w[1][1]
    values[flipped[0]], values[flipped[1]] = 1, 1
    with pytest.raises(DecodeError):
        decode(enc, Assignment(tuple(values)))


def test_decode_simple_tick_step():
    graph = build_tdes(pulse_system())
    enc = build_encoding(graph, TRUE, 1, COMPACT)
    result = solve(enc.model)
    frag = decode(enc, result.assignment)
    assert frag.events == (TICK,)
    assert frag.states[0].timer("pulse") == 1
    assert frag.states[1].timer("pulse") == 0
