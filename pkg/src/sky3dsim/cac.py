"""Connection admission control.

Realizes the three-step association procedure: measure received powers,
rank candidate APs under the configured strategy, then allocate
best-effort.  A grant below the UE minimum bitrate is rolled back at
admission time; for live connections it triggers a handover attempt and,
failing that, a drop.
"""

from dataclasses import dataclass, field, replace

from .allocation import NrPool, RateQuote, SatPool
from .channel import LinkBudget
from .scenario import ApSpec, RAT_SATELLITE_TDMA, Scenario

PHASE_IDLE = "idle"
PHASE_REQUESTING = "requesting"
PHASE_CONNECTED = "connected"
PHASE_DROPPED = "dropped"
PHASE_REJECTED = "rejected"

USER_CENTRIC = "user_centric"
RAN_CONTROLLED = "ran_controlled"
RAN_ASSISTED = "ran_assisted"


@dataclass(frozen=True)
class AssociationStrategy:
    kind: str = USER_CENTRIC
    assist_threshold: float = 0.8  # RAN filter: drop APs loaded >= this


@dataclass(frozen=True)
class UeHistory:
    handovers: int = 0
    drops: int = 0
    rejections: int = 0


@dataclass(frozen=True)
class ConnectionState:
    ue: int
    phase: str = PHASE_IDLE
    ap: int | None = None
    quote: RateQuote | None = None
    achieved_bps: float = 0.0
    history: UeHistory = field(default_factory=UeHistory)

    @property
    def connected(self) -> bool:
        return self.phase == PHASE_CONNECTED


def choose_ap(
    budgets: dict[int, LinkBudget],
    loads: dict[int, float],
    strategy: AssociationStrategy,
) -> list[int]:
    """Ordered candidate AP list; invisible APs never appear.

    user_centric: received power descending.
    ran_controlled: load ascending, received power breaks ties.
    ran_assisted: APs at or above the assist threshold are filtered out,
        the rest sorted by received power.
    """
    visible = [ap for ap, b in budgets.items() if b.visible]
    if strategy.kind == USER_CENTRIC:
        return sorted(visible, key=lambda a: (-budgets[a].rx_power_dbm, a))
    if strategy.kind == RAN_CONTROLLED:
        return sorted(
            visible,
            key=lambda a: (loads[a], -budgets[a].rx_power_dbm, a),
        )
    if strategy.kind == RAN_ASSISTED:
        passed = [a for a in visible if loads[a] < strategy.assist_threshold]
        return sorted(passed, key=lambda a: (-budgets[a].rx_power_dbm, a))
    raise ValueError(f"unknown strategy kind {strategy.kind!r}")


def admit(
    ue: int,
    state: ConnectionState,
    candidates: list[int],
    pools: dict[int, NrPool | SatPool],
    unit_rates: dict[int, float],
    requested_bps: float,
    min_bitrate_bps: float,
) -> ConnectionState:
    """Walk the candidates in order; the first AP granting at least the
    minimum bitrate wins.  Grants below the minimum are released on the
    spot.  No candidates at all leaves the UE requesting (not a
    rejection); candidates that all fail reject the UE for this tick.
    """
    if not candidates:
        return replace(state, phase=PHASE_REQUESTING, ap=None, quote=None,
                       achieved_bps=0.0)
    for ap in candidates:
        quote = pools[ap].allocate(ue, requested_bps, unit_rates[ap])
        if quote.rejected:
            continue
        if quote.achievable_bps >= min_bitrate_bps:
            return replace(
                state,
                phase=PHASE_CONNECTED,
                ap=ap,
                quote=quote,
                achieved_bps=quote.achievable_bps,
            )
        pools[ap].release(ue)
    history = replace(state.history, rejections=state.history.rejections + 1)
    return replace(state, phase=PHASE_REJECTED, ap=None, quote=None,
                   achieved_bps=0.0, history=history)


def update_connection(
    state: ConnectionState, new_quote: RateQuote, min_bitrate_bps: float
) -> tuple[ConnectionState, bool]:
    """Refresh a live connection from its re-quote.

    Returns (state, handover_needed).  The caller runs the handover
    attempt (and eventual drop) when the refreshed rate falls below the
    minimum; resources stay held until the caller decides.
    """
    if not state.connected:
        raise ValueError("update_connection requires a connected UE")
    if new_quote.achievable_bps >= min_bitrate_bps:
        return (
            replace(state, quote=new_quote,
                    achieved_bps=new_quote.achievable_bps),
            False,
        )
    return state, True


def attempt_handover(
    ue: int,
    state: ConnectionState,
    budgets: dict[int, LinkBudget],
    loads: dict[int, float],
    pools: dict[int, NrPool | SatPool],
    unit_rates: dict[int, float],
    requested_bps: float,
    min_bitrate_bps: float,
    strategy: AssociationStrategy,
) -> ConnectionState:
    """Re-run the association procedure for a degraded connection: first
    excluding the current AP, then including it.  Failure everywhere drops
    the UE; success elsewhere counts one handover.
    """
    current = state.ap
    if current is not None and ue in pools[current].allocations:
        pools[current].release(ue)

    candidates = choose_ap(budgets, loads, strategy)
    ordered = [ap for ap in candidates if ap != current] + (
        [current] if current in candidates else []
    )
    for ap in ordered:
        quote = pools[ap].allocate(ue, requested_bps, unit_rates[ap])
        if quote.rejected:
            continue
        if quote.achievable_bps >= min_bitrate_bps:
            handovers = state.history.handovers + (1 if ap != current else 0)
            history = replace(state.history, handovers=handovers)
            return replace(
                state,
                phase=PHASE_CONNECTED,
                ap=ap,
                quote=quote,
                achieved_bps=quote.achievable_bps,
                history=history,
            )
        pools[ap].release(ue)
    history = replace(state.history, drops=state.history.drops + 1)
    return replace(state, phase=PHASE_DROPPED, ap=None, quote=None,
                   achieved_bps=0.0, history=history)


def ap_backhaul_check(ap: ApSpec, scenario: Scenario) -> bool:
    """Ideal backhaul unless the scenario marked the AP down; the satellite
    is always backhauled."""
    if ap.rat == RAT_SATELLITE_TDMA:
        return True
    return ap.backhaul_up
