"""Event-driven chase-escape dynamics over contact windows.

One infected root tries to spread through susceptible devices while white
knights patch infected devices (patched devices join the knights).  A
transmission with per-ordered-pair timer ``rho`` completes at the earliest
time ``t`` such that the half-open window ``[t - rho, t)`` fits inside a
single contact interval of the pair with the source holding its role from
the window start; the window start is clamped to the interval start (the
infimum convention, exact wherever the window starts strictly inside).

At equal completion times every infection is processed before any patch
(a device that is patched at ``t`` still finishes a transmission due at
``t``), then ties break by (source id, target id).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np

from .contact import ContactStore
from .distributions import TimeDistribution
from .errors import InvalidParameterError

ROLE_S = "susceptible"
ROLE_I = "infected"
ROLE_W = "knight"

INFECTED = "infected"
PATCHED = "patched"

VERDICT_EXTINCT = "extinct"
VERDICT_LOCAL = "local_survival"
VERDICT_GLOBAL = "global_proxy"

_STREAM_TIMER_I = 11
_STREAM_TIMER_W = 12


# ---------------------------------------------------------------------------
# Pair timers
# ---------------------------------------------------------------------------

class TimerTable:
    """Frozen per-ordered-pair transmission times.

    Each ordered pair (source, target) owns one infection draw and one
    patch draw, reused for every contact window of that pair.  Draws are
    derived lazily from a keyed seed, so the values do not depend on
    evaluation order; (i, j) and (j, i) are independent.
    """

    def __init__(self, dist_infect: TimeDistribution, dist_patch: TimeDistribution,
                 seed_key=(0,)):
        self.dist_infect = dist_infect
        self.dist_patch = dist_patch
        self._key = tuple(int(k) & 0xFFFFFFFF for k in seed_key)
        self._cache_i: dict[tuple[int, int], float] = {}
        self._cache_w: dict[tuple[int, int], float] = {}

    def _draw(self, cache, dist, stream, i, j) -> float:
        key = (i, j)
        val = cache.get(key)
        if val is None:
            if dist.is_dirac:
                val = dist.a
            else:
                rng = np.random.default_rng(self._key + (stream, i, j))
                val = float(dist.sample(rng))
            cache[key] = val
        return val

    def infection(self, source: int, target: int) -> float:
        return self._draw(self._cache_i, self.dist_infect, _STREAM_TIMER_I,
                          source, target)

    def patch(self, source: int, target: int) -> float:
        return self._draw(self._cache_w, self.dist_patch, _STREAM_TIMER_W,
                          source, target)


def draw_pair_timers(
    pairs, dist_infect: TimeDistribution, dist_patch: TimeDistribution, rng
) -> TimerTable:
    """Materialize timers for the given ordered pairs from one stream.

    Draw order follows the ``pairs`` sequence (all infection times first,
    then all patching times), so results are reproducible for a fixed
    sequence and rng state.
    """
    pairs = list(pairs)
    table = TimerTable(dist_infect, dist_patch)
    for (i, j) in pairs:
        table._cache_i[(i, j)] = float(dist_infect.sample(rng))
    for (i, j) in pairs:
        table._cache_w[(i, j)] = float(dist_patch.sample(rng))
    return table


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpidemicEvent:
    t: float
    device: int
    transition: str  # INFECTED | PATCHED
    cause: int


@dataclass
class EpidemicTrace:
    events: list[EpidemicEvent]
    root_id: int
    initial_roles: dict[int, str]
    horizon: float
    meta: dict = field(default_factory=dict)

    def infection_times(self) -> dict[int, float]:
        out = {self.root_id: 0.0}
        for e in self.events:
            if e.transition == INFECTED:
                out[e.device] = e.t
        return out

    def patch_times(self) -> dict[int, float]:
        return {e.device: e.t for e in self.events if e.transition == PATCHED}

    def ever_infected(self) -> set[int]:
        return set(self.infection_times())

    def final_roles(self) -> dict[int, str]:
        roles = dict(self.initial_roles)
        roles[self.root_id] = ROLE_I
        for e in self.events:
            roles[e.device] = ROLE_I if e.transition == INFECTED else ROLE_W
        return roles

    def roles_at(self, t: float) -> dict[int, str]:
        """Roles after applying every event with time <= t."""
        roles = dict(self.initial_roles)
        roles[self.root_id] = ROLE_I
        for e in self.events:
            if e.t > t:
                break
            roles[e.device] = ROLE_I if e.transition == INFECTED else ROLE_W
        return roles

    def extinction_time(self) -> float | None:
        """First time the infected set empties, or None if it never does."""
        infected = 1  # the root
        for e in self.events:
            infected += 1 if e.transition == INFECTED else -1
            if infected == 0:
                return e.t
        return None

    def role_counts_over_time(self):
        """(t, n_susceptible, n_infected, n_knight) after each event."""
        n_s = sum(1 for r in self.initial_roles.values() if r == ROLE_S) - 1
        n_i = 1
        n_w = sum(1 for r in self.initial_roles.values() if r == ROLE_W)
        rows = [(0.0, n_s, n_i, n_w)]
        for e in self.events:
            if e.transition == INFECTED:
                n_s -= 1
                n_i += 1
            else:
                n_i -= 1
                n_w += 1
            rows.append((e.t, n_s, n_i, n_w))
        return rows

    def to_json_dict(self) -> dict:
        return {
            "root_id": self.root_id,
            "horizon": self.horizon,
            "events": [
                {"t": e.t, "device": e.device, "transition": e.transition,
                 "cause": e.cause}
                for e in self.events
            ],
            "final_roles": {str(k): v for k, v in sorted(self.final_roles().items())},
            "meta": self.meta,
        }

    def dump_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

def earliest_completion(intervals, ready: float, rho: float, horizon: float):
    """Earliest t with [t - rho, t) inside one interval and window start at
    or after ``ready``; None if no interval admits one by the horizon."""
    for a, b in intervals:
        w = ready if ready > a else a
        t = w + rho
        if t <= b and t <= horizon:
            return t
    return None


_INFECT = 0
_PATCH = 1


def simulate(
    roles0: dict[int, str],
    root: int,
    store: ContactStore,
    timers: TimerTable,
    horizon: float,
) -> EpidemicTrace:
    """Run the chase-escape dynamics to the horizon.

    ``roles0`` assigns every device id to susceptible or knight; the root
    must be susceptible in ``roles0`` and starts infected at time zero.
    """
    if horizon <= 0.0:
        raise InvalidParameterError("horizon must be positive")
    if roles0.get(root) != ROLE_S:
        raise InvalidParameterError("root must be a susceptible device")
    role = dict(roles0)
    role[root] = ROLE_I
    infect_time = {root: 0.0}
    knight_time = {i: 0.0 for i, r in roles0.items() if r == ROLE_W}

    heap: list[tuple[float, int, int, int]] = []

    def push_infection(src: int, dst: int) -> None:
        rho = timers.infection(src, dst)
        t = earliest_completion(
            store.get(src, dst).intervals, infect_time[src], rho, horizon
        )
        if t is not None:
            heappush(heap, (t, _INFECT, src, dst))

    def push_patch(src: int, dst: int) -> None:
        rho = timers.patch(src, dst)
        ready = max(knight_time[src], infect_time[dst])
        t = earliest_completion(store.get(src, dst).intervals, ready, rho, horizon)
        if t is not None:
            heappush(heap, (t, _PATCH, src, dst))

    def on_infected(dev: int) -> None:
        for j in store.partners(dev):
            if role[j] == ROLE_S:
                push_infection(dev, j)
            elif role[j] == ROLE_W:
                push_patch(j, dev)

    def on_knighted(dev: int) -> None:
        for j in store.partners(dev):
            if role[j] == ROLE_I:
                push_patch(dev, j)

    on_infected(root)

    events: list[EpidemicEvent] = []
    while heap:
        t, klass, src, dst = heappop(heap)
        if klass == _INFECT:
            if role[dst] != ROLE_S or role[src] != ROLE_I:
                continue  # stale: source patched or target already infected
            role[dst] = ROLE_I
            infect_time[dst] = t
            events.append(EpidemicEvent(t, dst, INFECTED, src))
            on_infected(dst)
        else:
            if role[dst] != ROLE_I:
                continue  # stale: someone else patched the target first
            role[dst] = ROLE_W
            knight_time[dst] = t
            events.append(EpidemicEvent(t, dst, PATCHED, src))
            on_knighted(dst)

    return EpidemicTrace(events, root, dict(roles0), horizon)


def simulate_dynamic(config, store: ContactStore, timers: TimerTable,
                     horizon: float) -> EpidemicTrace:
    """Dynamics on a rooted point configuration (see ``points``)."""
    from .points import ROLE_KNIGHT, ROLE_SUSCEPTIBLE  # local to avoid cycle

    if config.root_id is None:
        raise InvalidParameterError("configuration must be rooted first")
    roles0 = {
        d.id: (ROLE_W if d.role == ROLE_KNIGHT else ROLE_S)
        for d in config.devices
    }
    trace = simulate(roles0, config.root_id, store, timers, horizon)
    trace.meta["engine"] = "dynamic"
    return trace


# ---------------------------------------------------------------------------
# Verdicts and audits
# ---------------------------------------------------------------------------

def survival_verdict(
    trace: EpidemicTrace,
    reach_radius: float,
    trajectories=None,
    positions=None,
) -> str:
    """Classify a finished run.

    extinct       the infected set emptied by the horizon;
    global_proxy  some device, while infected, strayed farther than
                  ``reach_radius`` from the root's starting position;
    local_survival otherwise.
    """
    if trace.extinction_time() is not None:
        # Extinction wins even if the infection crossed the radius first:
        # it did not survive.
        if _crossed(trace, reach_radius, trajectories, positions):
            trace.meta["crossed_before_extinction"] = True
        return VERDICT_EXTINCT
    if _crossed(trace, reach_radius, trajectories, positions):
        return VERDICT_GLOBAL
    return VERDICT_LOCAL


def _crossed(trace, reach_radius, trajectories, positions) -> bool:
    infection = trace.infection_times()
    patches = trace.patch_times()
    if trajectories is not None:
        root_traj = trajectories[trace.root_id]
        origin = root_traj.graph.point_at(root_traj.start)
        for dev, t0 in infection.items():
            t1 = patches.get(dev, trace.horizon)
            reach = trajectories[dev].max_distance_from(origin, t0, t1)
            if reach > reach_radius:
                return True
        return False
    if positions is not None:
        ox, oy = positions[trace.root_id]
        for dev in infection:
            x, y = positions[dev]
            if np.hypot(x - ox, y - oy) > reach_radius:
                return True
        return False
    raise InvalidParameterError("need trajectories or positions for the verdict")


def audit_trace(trace: EpidemicTrace, store: ContactStore, timers: TimerTable) -> None:
    """Re-check every recorded transition against its causal window.

    Raises AssertionError on any violation; used by property tests and the
    quiescence check of the static engine.
    """
    infect_time = trace.infection_times()
    patch_time = trace.patch_times()
    knight_time = {
        i: 0.0 for i, r in trace.initial_roles.items() if r == ROLE_W
    }
    knight_time.update(patch_time)
    seen: set[tuple[int, str]] = set()
    for e in trace.events:
        key = (e.device, e.transition)
        assert key not in seen, f"duplicate transition {key}"
        seen.add(key)
        assert trace.initial_roles[e.device] != ROLE_W, "knight transitioned"
        intervals = store.get(e.cause, e.device).intervals
        if e.transition == INFECTED:
            rho = timers.infection(e.cause, e.device)
            w = e.t - rho
            assert infect_time[e.cause] <= w + 1e-12, "cause infected too late"
            assert patch_time.get(e.cause, np.inf) >= e.t, "cause patched mid-window"
        else:
            rho = timers.patch(e.cause, e.device)
            w = e.t - rho
            assert knight_time[e.cause] <= w + 1e-12, "cause not a knight at window start"
            assert infect_time[e.device] <= w + 1e-12, "target not infected from window start"
        assert any(
            a - 1e-12 <= w and e.t <= b + 1e-12 for a, b in intervals
        ), f"window [{w}, {e.t}) outside every contact interval"
    # patched-after-infected ordering per device
    for dev, tp in patch_time.items():
        assert dev in infect_time and infect_time[dev] <= tp
