"""Timed discrete event systems with a global integer clock.

The base model is an untimed automaton over *activity* states whose events
carry integer occurrence bounds.  Time advances through a distinguished
``tick`` event: each state of the derived timed system pairs an activity
state with one countdown timer per event, and the transition rules
decrement, hold, or reset those timers depending on whether the event is
defined at the current activity.

Events come in two flavours.  A *prospective* event has a finite upper
bound and must occur before its timer expires (``tick`` is disabled while
a defined prospective event sits at zero).  A *remote* event has no upper
bound; its timer counts down the minimum delay and then saturates at zero,
after which the event may occur at any time.

This module holds the untimed/timed system types, the enabling and
stepping rules, breadth-first construction of the reachable timed system,
execution fragments with tick-counting and suffix views, JSON ingestion,
and DOT export.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

TICK = "tick"

PROSPECTIVE = "prospective"
REMOTE = "remote"

DEFAULT_STATE_CAP = 1_000_000


class UnknownEventError(ValueError):
    """An event identifier is not part of the system's alphabet."""


class NotEnabledError(ValueError):
    """A step was requested for an event that is not enabled."""


class InvalidSystemError(ValueError):
    """An untimed system violates a structural invariant."""


class StateCapError(RuntimeError):
    """The reachable timed state space grew past the configured cap."""


class SystemFormatError(ValueError):
    """A system description document is malformed."""


class FragmentError(ValueError):
    """A fragment document or fragment replay is invalid."""


@dataclass(frozen=True)
class EventTiming:
    """Occurrence bounds for one event, measured in ticks.

    ``upper`` must be ``None`` for remote events (no upper bound) and an
    integer for prospective ones.  Value-level invariants (nonnegative
    bounds, lower <= upper) are reported by :func:`validate` rather than
    enforced here, so malformed descriptions can be loaded and diagnosed.
    """

    kind: str
    lower: int
    upper: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in (PROSPECTIVE, REMOTE):
            raise ValueError(f"unknown timing kind {self.kind!r}")
        if self.kind == PROSPECTIVE and self.upper is None:
            raise ValueError("prospective timing requires an upper bound")
        if self.kind == REMOTE and self.upper is not None:
            raise ValueError("remote timing must not carry an upper bound")

    @property
    def timer_limit(self) -> int:
        """Largest legal timer value; also the reset/default value."""
        return self.upper if self.kind == PROSPECTIVE else self.lower


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str


@dataclass(frozen=True, eq=False)
class UntimedDes:
    """Untimed activity automaton with per-event timing bounds.

    ``transitions`` is a partial function from (state, event) pairs to
    successor states.  ``labeling`` maps states to the atomic propositions
    that hold there; unlisted states carry the empty label set.
    """

    states: frozenset[str]
    events: frozenset[str]
    transitions: Mapping[tuple[str, str], str]
    initial: str
    atoms: frozenset[str]
    labeling: Mapping[str, frozenset[str]]
    timing: Mapping[str, EventTiming]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "events", frozenset(self.events))
        object.__setattr__(self, "transitions", dict(self.transitions))
        object.__setattr__(self, "atoms", frozenset(self.atoms))
        object.__setattr__(
            self,
            "labeling",
            {s: frozenset(aps) for s, aps in dict(self.labeling).items()},
        )
        object.__setattr__(self, "timing", dict(self.timing))

    def label(self, state: str) -> frozenset[str]:
        return self.labeling.get(state, frozenset())

    def defined(self, state: str, event: str) -> bool:
        return (state, event) in self.transitions

    def successor(self, state: str, event: str) -> str:
        return self.transitions[(state, event)]

    def event_order(self) -> tuple[str, ...]:
        return tuple(sorted(self.events))


def validate(system: UntimedDes) -> list[Diagnostic]:
    """Check every structural invariant; return one diagnostic per violation.

    Errors make the system unusable for construction; warnings flag
    suspicious but workable descriptions (currently: timing entries for
    events no transition ever uses).
    """
    out: list[Diagnostic] = []

    def error(msg: str) -> None:
        out.append(Diagnostic("error", msg))

    if TICK in system.events:
        error(f"event name {TICK!r} is reserved for the clock")
    if system.initial not in system.states:
        error(f"initial state {system.initial!r} is not a declared state")

    for (src, ev), dst in sorted(system.transitions.items()):
        if src not in system.states:
            error(f"transition ({src!r}, {ev!r}): source is not a declared state")
        if dst not in system.states:
            error(f"transition ({src!r}, {ev!r}) -> {dst!r}: target is not a declared state")
        if ev not in system.events:
            error(f"transition ({src!r}, {ev!r}): event is not declared")

    for state, aps in sorted(system.labeling.items()):
        if state not in system.states:
            error(f"labeling entry for undeclared state {state!r}")
        for ap in sorted(aps):
            if ap not in system.atoms:
                error(f"label {ap!r} on state {state!r} is not a declared atom")

    for ev in sorted(system.events):
        if ev not in system.timing:
            error(f"event {ev!r} has no timing entry")
    used = {ev for (_, ev) in system.transitions}
    for ev in sorted(system.timing):
        if ev not in system.events:
            error(f"timing entry for undeclared event {ev!r}")
            continue
        tim = system.timing[ev]
        if tim.lower < 0:
            error(f"event {ev!r} has a negative lower bound")
        if tim.kind == PROSPECTIVE and tim.upper < tim.lower:
            error(
                f"prospective event {ev!r} has lower bound {tim.lower} "
                f"above upper bound {tim.upper}"
            )
        if ev not in used:
            out.append(
                Diagnostic("warning", f"event {ev!r} never appears in any transition")
            )
    return out


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)


@dataclass(frozen=True)
class TimedState:
    """One state of the timed system: an activity plus all event timers.

    Timers are stored as a tuple of (event, value) pairs sorted by event
    name, so equality and hashing are canonical.
    """

    activity: str
    timers: tuple[tuple[str, int], ...]

    def timer(self, event: str) -> int:
        for name, value in self.timers:
            if name == event:
                return value
        raise UnknownEventError(f"no timer for event {event!r}")

    def timer_map(self) -> dict[str, int]:
        return dict(self.timers)

    def __str__(self) -> str:
        inner = ",".join(str(v) for _, v in self.timers)
        return f"{self.activity}|{inner}"


def initial_state(system: UntimedDes) -> TimedState:
    """Initial timed state: every timer starts at its reset value."""
    timers = tuple(
        (ev, system.timing[ev].timer_limit) for ev in system.event_order()
    )
    return TimedState(system.initial, timers)


def enabled(system: UntimedDes, state: TimedState, event: str) -> bool:
    """Decide whether ``event`` may occur at ``state``.

    ``tick`` is enabled unless some defined prospective event has run its
    timer down to zero.  A prospective event needs its timer inside the
    window left after the minimum delay; a remote event needs its timer
    at zero.
    """
    if event == TICK:
        for name, value in state.timers:
            if (
                value == 0
                and system.timing[name].kind == PROSPECTIVE
                and system.defined(state.activity, name)
            ):
                return False
        return True
    if event not in system.events:
        raise UnknownEventError(f"unknown event {event!r}")
    if not system.defined(state.activity, event):
        return False
    tim = system.timing[event]
    value = state.timer(event)
    if tim.kind == PROSPECTIVE:
        return 0 <= value <= tim.upper - tim.lower
    return value == 0


def step(system: UntimedDes, state: TimedState, event: str) -> TimedState:
    """Apply one enabled event and return the successor timed state."""
    if not enabled(system, state, event):
        raise NotEnabledError(f"event {event!r} is not enabled at {state}")

    if event == TICK:
        items = []
        for name, value in state.timers:
            tim = system.timing[name]
            if not system.defined(state.activity, name):
                items.append((name, tim.timer_limit))
            elif value > 0:
                items.append((name, value - 1))
            elif tim.kind == REMOTE:
                items.append((name, 0))
            else:
                # A defined prospective event at zero disables tick, so
                # this branch is unreachable through enabled().
                raise AssertionError(
                    f"tick taken with expired prospective event {name!r}"
                )
        return TimedState(state.activity, tuple(items))

    target = system.successor(state.activity, event)
    items = []
    for name, value in state.timers:
        tim = system.timing[name]
        if name == event:
            items.append((name, tim.timer_limit))
        elif system.defined(target, name):
            items.append((name, value))
        else:
            items.append((name, tim.timer_limit))
    return TimedState(target, tuple(items))


@dataclass(frozen=True, eq=False)
class TimedDes:
    """Reachable timed system as an explicit graph.

    States are numbered in breadth-first discovery order; the initial
    state has index ``initial_index`` (0 for built systems).  Transitions
    map (state index, event) to successor index.
    """

    untimed: UntimedDes
    states: tuple[TimedState, ...]
    index: Mapping[TimedState, int]
    transitions: Mapping[tuple[int, str], int]
    initial_index: int = 0

    @property
    def n(self) -> int:
        return len(self.states)

    def alphabet(self) -> tuple[str, ...]:
        return tuple(sorted(self.untimed.events | {TICK}))

    def label(self, i: int) -> frozenset[str]:
        return self.untimed.label(self.states[i].activity)

    def successors(self, i: int) -> list[tuple[str, int]]:
        out = []
        for ev in self.alphabet():
            j = self.transitions.get((i, ev))
            if j is not None:
                out.append((ev, j))
        return out

    def tick_sources(self) -> list[bool]:
        """Per state: does an outgoing tick transition exist."""
        return [(i, TICK) in self.transitions for i in range(self.n)]

    def tick_targets(self) -> list[bool]:
        """Per state: does an incoming tick transition exist."""
        out = [False] * self.n
        for (_, ev), j in self.transitions.items():
            if ev == TICK:
                out[j] = True
        return out


def build_tdes(system: UntimedDes, state_cap: int = DEFAULT_STATE_CAP) -> TimedDes:
    """Explore the reachable timed state space breadth-first.

    State numbering is deterministic: the frontier is processed FIFO and
    events are tried in lexicographic order over the full alphabet
    (declared events plus ``tick``).  Raises :class:`StateCapError` once
    more than ``state_cap`` states are discovered.
    """
    problems = [d.message for d in validate(system) if d.severity == "error"]
    if problems:
        raise InvalidSystemError("invalid system: " + "; ".join(problems))

    alphabet = sorted(system.events | {TICK})
    start = initial_state(system)
    states = [start]
    index = {start: 0}
    transitions: dict[tuple[int, str], int] = {}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        current = states[i]
        for ev in alphabet:
            if not enabled(system, current, ev):
                continue
            succ = step(system, current, ev)
            j = index.get(succ)
            if j is None:
                if len(states) >= state_cap:
                    raise StateCapError(
                        f"reachable timed state count exceeds cap {state_cap}"
                    )
                j = len(states)
                index[succ] = j
                states.append(succ)
                queue.append(j)
            transitions[(i, ev)] = j
    return TimedDes(
        untimed=system,
        states=tuple(states),
        index=index,
        transitions=transitions,
    )


@dataclass(frozen=True)
class Fragment:
    """Finite alternating run: states s(0)..s(H), events e(1)..e(H).

    The structural requirement here is only that lengths line up; whether
    the fragment actually replays on a given system is checked by
    :func:`fragment_errors`.  Synthesis requests demand horizon >= 1, but
    suffix views may have horizon 0.
    """

    states: tuple[TimedState, ...]
    events: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.states) != len(self.events) + 1:
            raise FragmentError(
                f"{len(self.states)} states do not alternate with "
                f"{len(self.events)} events"
            )

    @property
    def horizon(self) -> int:
        return len(self.events)

    def count(self, k: int, j: int) -> int:
        """Number of tick events strictly inside positions k..j."""
        if not 0 <= k <= j <= self.horizon:
            raise IndexError(f"count window ({k}, {j}) out of range")
        return sum(1 for ev in self.events[k:j] if ev == TICK)

    def suffix(self, k: int) -> "Fragment":
        """View of the run from position k onward."""
        if not 0 <= k <= self.horizon:
            raise IndexError(f"suffix index {k} out of range")
        return Fragment(self.states[k:], self.events[k:])

    def activities(self) -> tuple[str, ...]:
        return tuple(s.activity for s in self.states)


def fragment_errors(system: UntimedDes, fragment: Fragment) -> list[str]:
    """Replay the fragment from the initial state; report every mismatch."""
    out = []
    expected = initial_state(system)
    if fragment.states[0] != expected:
        out.append(f"state 0 is {fragment.states[0]}, initial state is {expected}")
        return out
    current = expected
    for k, ev in enumerate(fragment.events, start=1):
        try:
            if not enabled(system, current, ev):
                out.append(f"event {ev!r} at step {k} is not enabled")
                return out
            current = step(system, current, ev)
        except UnknownEventError as exc:
            out.append(f"step {k}: {exc}")
            return out
        if fragment.states[k] != current:
            out.append(
                f"state {k} is {fragment.states[k]}, replay yields {current}"
            )
            return out
    return out


def replay_events(system: UntimedDes, events: Iterable[str]) -> Fragment:
    """Build the unique fragment that performs ``events`` from the start."""
    states = [initial_state(system)]
    applied = []
    for k, ev in enumerate(list(events), start=1):
        current = states[-1]
        if not enabled(system, current, ev):
            raise FragmentError(f"event {ev!r} at step {k} is not enabled")
        states.append(step(system, current, ev))
        applied.append(ev)
    return Fragment(tuple(states), tuple(applied))


# --- JSON interchange -------------------------------------------------------

def system_from_json(data: object) -> UntimedDes:
    """Build an untimed system from its JSON document form.

    Shape problems raise :class:`SystemFormatError` with the offending
    element; semantic invariants are left to :func:`validate`.
    """
    if not isinstance(data, dict):
        raise SystemFormatError("system document must be a JSON object")
    for key in ("states", "events", "transitions", "initial"):
        if key not in data:
            raise SystemFormatError(f"system document lacks {key!r}")

    states = data["states"]
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
        raise SystemFormatError("'states' must be a list of names")

    events: dict[str, EventTiming] = {}
    for pos, entry in enumerate(data["events"]):
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            raise SystemFormatError(f"events[{pos}] needs 'name' and 'kind'")
        name = entry["name"]
        kind = entry["kind"]
        if name in events:
            raise SystemFormatError(f"events[{pos}]: duplicate event {name!r}")
        lower = entry.get("lower", 0)
        upper = entry.get("upper")
        if not isinstance(lower, int) or isinstance(lower, bool):
            raise SystemFormatError(f"events[{pos}]: 'lower' must be an integer")
        if kind == PROSPECTIVE:
            if not isinstance(upper, int) or isinstance(upper, bool):
                raise SystemFormatError(
                    f"events[{pos}]: prospective event needs integer 'upper'"
                )
        elif kind == REMOTE:
            if upper is not None:
                raise SystemFormatError(
                    f"events[{pos}]: remote event must omit 'upper'"
                )
        else:
            raise SystemFormatError(f"events[{pos}]: unknown kind {kind!r}")
        events[name] = EventTiming(kind, lower, upper)

    transitions: dict[tuple[str, str], str] = {}
    for pos, entry in enumerate(data["transitions"]):
        if not isinstance(entry, dict) or not {"from", "event", "to"} <= set(entry):
            raise SystemFormatError(
                f"transitions[{pos}] needs 'from', 'event' and 'to'"
            )
        key = (entry["from"], entry["event"])
        if key in transitions and transitions[key] != entry["to"]:
            raise SystemFormatError(
                f"transitions[{pos}]: duplicate source/event pair {key!r} "
                "with a different target"
            )
        transitions[key] = entry["to"]

    labels = data.get("labels", {})
    if not isinstance(labels, dict):
        raise SystemFormatError("'labels' must map states to atom lists")
    labeling = {s: frozenset(aps) for s, aps in labels.items()}

    return UntimedDes(
        states=frozenset(states),
        events=frozenset(events),
        transitions=transitions,
        initial=data["initial"],
        atoms=frozenset(data.get("atoms", [])),
        labeling=labeling,
        timing=events,
    )


def load_system(path: str | Path) -> UntimedDes:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemFormatError(f"{path}: {exc}") from exc
    try:
        return system_from_json(data)
    except SystemFormatError as exc:
        raise SystemFormatError(f"{path}: {exc}") from exc


def fragment_from_json(data: object, system: UntimedDes) -> Fragment:
    """Read a fragment document: alternating states and events.

    States are objects ``{"activity": ..., "timers": {...}}``.  Timers may
    be omitted, in which case the run is reconstructed by replaying the
    events from the initial state; provided activities (and timers, where
    present) are checked against the replay.
    """
    if not isinstance(data, dict) or "states" not in data or "events" not in data:
        raise FragmentError("fragment document needs 'states' and 'events'")
    raw_states = data["states"]
    raw_events = data["events"]
    if not isinstance(raw_states, list) or not isinstance(raw_events, list):
        raise FragmentError("'states' and 'events' must be lists")
    if len(raw_states) != len(raw_events) + 1:
        raise FragmentError(
            f"{len(raw_states)} states do not alternate with "
            f"{len(raw_events)} events"
        )

    activities = []
    timer_maps: list[dict[str, int] | None] = []
    for pos, entry in enumerate(raw_states):
        if not isinstance(entry, dict) or "activity" not in entry:
            raise FragmentError(f"states[{pos}] needs 'activity'")
        activities.append(entry["activity"])
        timer_maps.append(entry.get("timers"))

    replay = replay_events(system, raw_events)
    order = system.event_order()
    for pos, state in enumerate(replay.states):
        if state.activity != activities[pos]:
            raise FragmentError(
                f"states[{pos}]: activity {activities[pos]!r} does not match "
                f"replayed activity {state.activity!r}"
            )
        timers = timer_maps[pos]
        if timers is None:
            continue
        if set(timers) != set(order):
            raise FragmentError(
                f"states[{pos}]: timers must cover exactly the declared events"
            )
        wanted = tuple((ev, timers[ev]) for ev in order)
        if wanted != state.timers:
            raise FragmentError(
                f"states[{pos}]: timers {dict(wanted)} do not match replay "
                f"{state.timer_map()}"
            )
    return replay


def load_fragment(path: str | Path, system: UntimedDes) -> Fragment:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FragmentError(f"{path}: {exc}") from exc
    try:
        return fragment_from_json(data, system)
    except FragmentError as exc:
        raise FragmentError(f"{path}: {exc}") from exc


def fragment_to_json(fragment: Fragment) -> dict:
    return {
        "states": [
            {"activity": s.activity, "timers": s.timer_map()}
            for s in fragment.states
        ],
        "events": list(fragment.events),
    }


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled example document."""
    return Path(resources.files(__package__) / "fixtures" / name)


# --- DOT export -------------------------------------------------------------

def untimed_to_dot(system: UntimedDes) -> str:
    lines = ["digraph activity {", "  rankdir=LR;", "  node [shape=circle];"]
    for state in sorted(system.states):
        aps = ",".join(sorted(system.label(state)))
        label = f"{state}\\n{{{aps}}}" if aps else state
        shape = ' style=bold' if state == system.initial else ""
        lines.append(f'  "{state}" [label="{label}"{shape}];')
    for (src, ev), dst in sorted(system.transitions.items()):
        lines.append(f'  "{src}" -> "{dst}" [label="{ev}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def tdes_to_dot(graph: TimedDes, highlight: Fragment | None = None) -> str:
    """DOT rendering of the timed system; tick edges dashed.

    When ``highlight`` is given, its states and transitions are drawn in
    red (the run overlay).
    """
    hot_states: set[int] = set()
    hot_edges: set[tuple[int, str, int]] = set()
    if highlight is not None:
        idx = [graph.index[s] for s in highlight.states]
        hot_states.update(idx)
        for k, ev in enumerate(highlight.events):
            hot_edges.add((idx[k], ev, idx[k + 1]))

    order = ",".join(graph.untimed.event_order())
    lines = [
        "digraph timed {",
        f"  // timer order: {order}",
        "  rankdir=LR;",
        "  node [shape=box];",
    ]
    for i, state in enumerate(graph.states):
        timers = ",".join(str(v) for _, v in state.timers)
        attrs = f'label="{state.activity} | {timers}"'
        if i in hot_states:
            attrs += ", color=red, fontcolor=red"
        lines.append(f"  n{i} [{attrs}];")
    for (i, ev), j in sorted(graph.transitions.items()):
        attrs = f'label="{ev}"'
        if ev == TICK:
            attrs += ", style=dashed"
        if (i, ev, j) in hot_edges:
            attrs += ", color=red, fontcolor=red"
        lines.append(f"  n{i} -> n{j} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
