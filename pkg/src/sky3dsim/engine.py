"""Deterministic tick loop.

Each tick advances motion, recomputes link budgets and RBUR-weighted
interference from the ledger window, then runs the association procedure
for every active UE in UE-id order: existing NR connections are resized
in place, satellite TDMA allocations are re-planned from a cleared frame
(connections re-grab at their turn), requesting UEs run admission.  A
refreshed connection that falls below its minimum bitrate attempts a
handover and is dropped when nothing can serve it.

All randomness is drawn once at initialization from the scenario seed, in
a fixed order (UE positions and headings, then arrival times), so a
(scenario, seed) pair always produces bit-identical traces.
"""

import logging
import random
from dataclasses import dataclass, field

from . import cac
from .allocation import (
    NrPool,
    SatPool,
    nr_unit_rate,
    sat_unit_rate,
)
from .cac import AssociationStrategy, ConnectionState
from .channel import LinkBudget, link_budget, mw_from_dbm
from .interference import AllocationLedger, interference_mw, sinr
from .mobility import (
    InterventionState,
    Pose,
    init_ue_poses,
    step_mobile_ap,
    step_ue,
)
from .scenario import Intervening, RAT_SATELLITE_TDMA, Scenario

log = logging.getLogger("sky3dsim.engine")


class EngineInvariantError(RuntimeError):
    """A structural invariant failed; names the tick and module."""

    def __init__(self, tick: int, module: str, message: str):
        super().__init__(f"tick {tick}, {module}: {message}")
        self.tick = tick
        self.module = module


@dataclass(frozen=True)
class MetricsFrame:
    """Observable outputs of one tick."""

    t_s: float
    ap_load: tuple[float, ...]
    ap_connected: tuple[int, ...]
    ue_bps: tuple[float, ...]
    ue_phase: tuple[str, ...]
    rejections: int
    drops: int
    handovers: int


@dataclass(frozen=True)
class RunSummary:
    seed: int
    n_ticks: int
    rejections: int
    drops: int
    handovers: int
    min_connected_bps: float  # inf when nothing ever connected
    ap_peak_load: tuple[float, ...]
    ap_rat: tuple[str, ...]


@dataclass
class SimState:
    scenario: Scenario
    tick: int
    ue_poses: list[Pose]
    ap_poses: list[Pose]
    intervention: dict[int, InterventionState]
    pools: dict[int, NrPool | SatPool]
    ledger: AllocationLedger
    connections: dict[int, ConnectionState]
    arrivals_s: list[float]
    # ((x, y), served_ok) per active UE, sensed with a one-tick delay
    prev_distress: list[tuple[tuple[float, float], bool]] = field(
        default_factory=list
    )


def _make_pool(ap_spec) -> NrPool | SatPool:
    if ap_spec.rat == RAT_SATELLITE_TDMA:
        return SatPool(ap_spec.sat)
    return NrPool(ap_spec.nr.total_rbs, ap_spec.nr.rb_bandwidth_hz)


def init_state(scenario: Scenario) -> SimState:
    rng = random.Random(scenario.seed)
    ue_poses = init_ue_poses(scenario, rng)
    arrivals = [
        ue.arrival_time_s
        if ue.arrival_time_s is not None
        else rng.uniform(0.0, scenario.arrival_window_s)
        for ue in scenario.ues
    ]
    ap_poses = [
        Pose(ap.position_m[0], ap.position_m[1], ap.position_m[2], 0.0, 0.0)
        for ap in scenario.aps
    ]
    pools = {j: _make_pool(ap) for j, ap in enumerate(scenario.aps)}
    capacities = {
        j: (p.total_rbs if isinstance(p, NrPool) else p.budget_symbols)
        for j, p in pools.items()
    }
    return SimState(
        scenario=scenario,
        tick=0,
        ue_poses=ue_poses,
        ap_poses=ap_poses,
        intervention={
            j: InterventionState()
            for j, ap in enumerate(scenario.aps)
            if isinstance(ap.mobility, Intervening)
        },
        pools=pools,
        ledger=AllocationLedger(capacities, scenario.rbur_window_ticks),
        connections={
            i: ConnectionState(ue=i) for i in range(len(scenario.ues))
        },
        arrivals_s=arrivals,
    )


def _co_channel_peers(scenario: Scenario) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = {}
    for j, ap in enumerate(scenario.aps):
        groups[j] = [
            k
            for k, other in enumerate(scenario.aps)
            if k != j and other.carrier_hz == ap.carrier_hz
        ]
    return groups


def _unit_rate(scenario: Scenario, ap_id: int, sinr_linear: float) -> float:
    ap = scenario.aps[ap_id]
    if ap.rat == RAT_SATELLITE_TDMA:
        return sat_unit_rate(sinr_linear, ap.sat, ap.bandwidth_hz)
    return nr_unit_rate(sinr_linear, ap.nr.rb_bandwidth_hz)


def _check_invariants(state: SimState) -> None:
    connected_by_ap: dict[int, set[int]] = {j: set() for j in state.pools}
    for i, conn in state.connections.items():
        if conn.connected:
            connected_by_ap[conn.ap].add(i)
    for j, pool in state.pools.items():
        held = set(pool.allocations.keys())
        if held != connected_by_ap[j]:
            raise EngineInvariantError(
                state.tick, "phy-alloc",
                f"pool {j} holds {sorted(held)} but connected set is "
                f"{sorted(connected_by_ap[j])}",
            )
        if not 0.0 <= pool.load <= 1.0:
            raise EngineInvariantError(
                state.tick, "phy-alloc", f"pool {j} load {pool.load} outside [0, 1]"
            )
        if isinstance(pool, SatPool):
            for ue, (blocks, occupied) in pool.allocations.items():
                if occupied != pool.occupied_for(blocks):
                    raise EngineInvariantError(
                        state.tick, "phy-alloc",
                        f"ue {ue} occupancy {occupied} != structural "
                        f"{pool.occupied_for(blocks)}",
                    )


def step(state: SimState) -> MetricsFrame:
    """Advance one tick in place and emit the tick's metrics."""
    sc = state.scenario
    t_s = state.tick * sc.tick_s
    n_ues = len(sc.ues)
    n_aps = len(sc.aps)

    # (1) UE motion
    state.ue_poses = [
        step_ue(p, sc.tick_s, sc.grid_width_m, sc.grid_height_m)
        if p.speed_mps > 0
        else p
        for p in state.ue_poses
    ]

    # (2) mobile-AP motion from the previous tick's distress snapshot
    for j in state.intervention:
        pose, istate = step_mobile_ap(
            state.ap_poses[j],
            state.intervention[j],
            state.prev_distress,
            sc.tick_s,
            sc.aps[j],
        )
        state.ap_poses[j] = pose
        state.intervention[j] = istate

    # (3) link budgets for every UE-AP pair
    budgets: list[dict[int, LinkBudget]] = []
    for i in range(n_ues):
        ue_xyz = (
            state.ue_poses[i].x_m,
            state.ue_poses[i].y_m,
            state.ue_poses[i].z_m,
        )
        budgets.append({
            j: link_budget(
                ue_xyz,
                sc.aps[j],
                (state.ap_poses[j].x_m, state.ap_poses[j].y_m,
                 state.ap_poses[j].z_m),
                sc,
            )
            for j in range(n_aps)
        })

    # (4) interference and per-unit rates from the ledger window
    peers = _co_channel_peers(sc)
    unit_rates: list[dict[int, float]] = []
    for i in range(n_ues):
        rx_mw = {j: mw_from_dbm(budgets[i][j].rx_power_dbm)
                 for j in range(n_aps)}
        rates = {}
        for j in range(n_aps):
            interf = interference_mw(j, peers[j], rx_mw, state.ledger)
            report = sinr(budgets[i][j], interf)
            rates[j] = _unit_rate(sc, j, report.sinr_linear)
        unit_rates.append(rates)

    # loads advertised to admission: end of previous tick
    loads = {j: pool.load for j, pool in state.pools.items()}
    strategy = AssociationStrategy(sc.association_strategy,
                                   sc.assist_threshold)

    # backhaul failures force their users back to requesting and take the
    # AP out of everyone's candidate lists
    backhauled = [cac.ap_backhaul_check(ap, sc) for ap in sc.aps]
    for j, ap in enumerate(sc.aps):
        if backhauled[j]:
            continue
        for i, conn in state.connections.items():
            if conn.connected and conn.ap == j:
                state.pools[j].release(i)
                state.connections[i] = cac.ConnectionState(
                    ue=i, phase=cac.PHASE_REQUESTING, history=conn.history
                )
    if not all(backhauled):
        budgets = [
            {j: b for j, b in per_ue.items() if backhauled[j]}
            for per_ue in budgets
        ]

    # (5)+(6) association procedure for every active UE in id order.
    # Satellite TDMA frames are re-planned every tick: clear the sat pools
    # and let connections re-grab at their turn, contending with new
    # requests; NR grants persist and resize in place.
    for j, pool in state.pools.items():
        if isinstance(pool, SatPool):
            pool.allocations.clear()

    for i in range(n_ues):
        conn = state.connections[i]
        if conn.phase == cac.PHASE_DROPPED:
            conn = cac.ConnectionState(  # re-request after an interruption
                ue=i, phase=cac.PHASE_REQUESTING, history=conn.history
            )
            state.connections[i] = conn
        if conn.phase == cac.PHASE_IDLE:
            if state.arrivals_s[i] <= t_s:
                conn = cac.ConnectionState(
                    ue=i, phase=cac.PHASE_REQUESTING, history=conn.history
                )
                state.connections[i] = conn
            else:
                continue

        spec = sc.ues[i]
        if conn.connected:
            pool = state.pools[conn.ap]
            rate = unit_rates[i][conn.ap]
            if isinstance(pool, SatPool):
                quote = pool.allocate(i, spec.requested_bitrate_bps, rate)
            else:
                quote = pool.reallocate(i, rate, spec.requested_bitrate_bps)
            updated, needs_handover = cac.update_connection(
                conn, quote, spec.min_bitrate_bps
            )
            if not needs_handover:
                state.connections[i] = updated
                continue
            state.connections[i] = cac.attempt_handover(
                i, conn, budgets[i], loads, state.pools, unit_rates[i],
                spec.requested_bitrate_bps, spec.min_bitrate_bps, strategy,
            )
        else:  # requesting or rejected: (re)try admission
            candidates = cac.choose_ap(budgets[i], loads, strategy)
            state.connections[i] = cac.admit(
                i, conn, candidates, state.pools, unit_rates[i],
                spec.requested_bitrate_bps, spec.min_bitrate_bps,
            )

    # (7) record this tick's allocations for future interference
    snapshot = {}
    for j, pool in state.pools.items():
        if isinstance(pool, SatPool):
            snapshot[j] = {ue: occ for ue, (_, occ) in pool.allocations.items()}
        else:
            snapshot[j] = dict(pool.allocations)
    state.ledger.record_tick(snapshot)

    _check_invariants(state)

    # distress snapshot sensed by mobile APs next tick
    state.prev_distress = [
        (
            (state.ue_poses[i].x_m, state.ue_poses[i].y_m),
            state.connections[i].connected
            and state.connections[i].achieved_bps >= sc.ues[i].min_bitrate_bps,
        )
        for i in range(n_ues)
        if state.connections[i].phase != cac.PHASE_IDLE
    ]

    # (8) metrics
    connected_counts = [0] * n_aps
    for conn in state.connections.values():
        if conn.connected:
            connected_counts[conn.ap] += 1
    frame = MetricsFrame(
        t_s=t_s,
        ap_load=tuple(state.pools[j].load for j in range(n_aps)),
        ap_connected=tuple(connected_counts),
        ue_bps=tuple(
            state.connections[i].achieved_bps if state.connections[i].connected
            else 0.0
            for i in range(n_ues)
        ),
        ue_phase=tuple(state.connections[i].phase for i in range(n_ues)),
        rejections=sum(c.history.rejections
                       for c in state.connections.values()),
        drops=sum(c.history.drops for c in state.connections.values()),
        handovers=sum(c.history.handovers
                      for c in state.connections.values()),
    )
    state.tick += 1
    return frame


def run(scenario: Scenario) -> tuple[list[MetricsFrame], RunSummary]:
    """Run the whole scenario; returns every tick's frame and the summary."""
    state = init_state(scenario)
    frames = []
    for _ in range(scenario.n_ticks):
        frames.append(step(state))
    min_connected = min(
        (bps for f in frames for bps in f.ue_bps if bps > 0.0),
        default=float("inf"),
    )
    last = frames[-1]
    summary = RunSummary(
        seed=scenario.seed,
        n_ticks=len(frames),
        rejections=last.rejections,
        drops=last.drops,
        handovers=last.handovers,
        min_connected_bps=min_connected,
        ap_peak_load=tuple(
            max(f.ap_load[j] for f in frames) for j in range(len(scenario.aps))
        ),
        ap_rat=tuple(ap.rat for ap in scenario.aps),
    )
    log.info(
        "run seed=%d: %d ticks, rejections=%d drops=%d handovers=%d",
        scenario.seed, summary.n_ticks, summary.rejections, summary.drops,
        summary.handovers,
    )
    return frames, summary
