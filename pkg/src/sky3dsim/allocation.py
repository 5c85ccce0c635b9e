"""Resource pools and rate quotes.

Converts bitrate requests into allocation units (NR resource blocks,
satellite TDMA blocks) and manages each AP's pool.  Granting is
best-effort: when the full requirement does not fit, as many units as are
free are offered; accepting or rolling back a degraded grant is admission
policy and lives in the cac module.
"""

import math
from dataclasses import dataclass

from .scenario import SatFrameConfig

# units_needed() result when the unit rate is zero: no finite allocation
# can satisfy the request.
UNSATISFIABLE = math.inf


def nr_unit_rate(sinr_linear: float, rb_bandwidth_hz: float) -> float:
    """Best-MCS Shannon rate of a single resource block."""
    if sinr_linear < 0:
        raise ValueError("sinr_linear must be >= 0")
    return rb_bandwidth_hz * math.log2(1.0 + sinr_linear)


def sat_unit_rate(
    snr_linear: float, cfg: SatFrameConfig, bandwidth_hz: float
) -> float:
    """Rate of one TDMA block: full-carrier Shannon rate times the block's
    time share of the frame."""
    if snr_linear < 0:
        raise ValueError("snr_linear must be >= 0")
    full_rate = bandwidth_hz * math.log2(1.0 + snr_linear)
    return full_rate * cfg.n_block / cfg.n_tot


def units_needed(requested_bps: float, unit_rate_bps: float) -> int | float:
    """Ceiling of requested/unit rate; UNSATISFIABLE when the rate is 0."""
    if requested_bps <= 0:
        raise ValueError("requested_bps must be > 0")
    if unit_rate_bps <= 0:
        return UNSATISFIABLE
    return math.ceil(requested_bps / unit_rate_bps)


@dataclass(frozen=True)
class RateQuote:
    """Outcome of one allocation attempt.

    raw_bps is the granted capacity; achievable_bps is capped at the
    request so a fully served UE reports exactly its requested bitrate.
    """

    unit_rate_bps: float
    units_needed: int | float
    units_granted: int
    requested_bps: float

    @property
    def raw_bps(self) -> float:
        return self.units_granted * self.unit_rate_bps

    @property
    def achievable_bps(self) -> float:
        return min(self.requested_bps, self.raw_bps)

    @property
    def rejected(self) -> bool:
        return self.units_granted == 0


class NrPool:
    """Resource-block pool of one NR AP; allocations keyed by UE id."""

    def __init__(self, total_rbs: int, rb_bandwidth_hz: float):
        self.total_rbs = total_rbs
        self.rb_bandwidth_hz = rb_bandwidth_hz
        self.allocations: dict[int, int] = {}

    @property
    def used(self) -> int:
        return sum(self.allocations.values())

    @property
    def free(self) -> int:
        return self.total_rbs - self.used

    @property
    def load(self) -> float:
        return self.used / self.total_rbs

    def allocate(self, ue: int, requested_bps: float,
                 unit_rate_bps: float) -> RateQuote:
        """Best-effort grant of min(needed, free) RBs for a new UE."""
        if ue in self.allocations:
            raise ValueError(f"ue {ue} already allocated; use reallocate")
        needed = units_needed(requested_bps, unit_rate_bps)
        granted = 0 if math.isinf(needed) else min(needed, self.free)
        if granted > 0:
            self.allocations[ue] = granted
        return RateQuote(unit_rate_bps, needed, granted, requested_bps)

    def reallocate(self, ue: int, unit_rate_bps: float,
                   requested_bps: float) -> RateQuote:
        """Re-size an existing grant at a new unit rate: shrink immediately,
        grow only into free capacity."""
        if ue not in self.allocations:
            raise KeyError(f"ue {ue} not in pool")
        held = self.allocations[ue]
        needed = units_needed(requested_bps, unit_rate_bps)
        if math.isinf(needed):
            granted = 0
        elif needed <= held:
            granted = needed
        else:
            granted = min(needed, held + self.free)
        if granted > 0:
            self.allocations[ue] = granted
        else:
            del self.allocations[ue]
        return RateQuote(unit_rate_bps, needed, granted, requested_bps)

    def release(self, ue: int) -> None:
        if ue not in self.allocations:
            raise KeyError(f"ue {ue} not in pool")
        del self.allocations[ue]


class SatPool:
    """TDMA symbol pool of one satellite AP.

    Each connection occupies n_head + blocks * n_block + n_space symbols
    of the per-frame budget (slice minus synchronization overhead).
    """

    def __init__(self, cfg: SatFrameConfig):
        self.cfg = cfg
        self.budget_symbols = cfg.budget_symbols
        # ue -> (blocks, occupied_symbols)
        self.allocations: dict[int, tuple[int, int]] = {}

    @property
    def used_symbols(self) -> int:
        return sum(occ for _, occ in self.allocations.values())

    @property
    def free_symbols(self) -> int:
        return self.budget_symbols - self.used_symbols

    @property
    def load(self) -> float:
        return self.used_symbols / self.budget_symbols

    def occupied_for(self, blocks: int) -> int:
        return self.cfg.n_head + blocks * self.cfg.n_block + self.cfg.n_space

    def max_blocks_fitting(self, symbols: int) -> int:
        overhead = self.cfg.n_head + self.cfg.n_space
        if symbols < overhead + self.cfg.n_block:
            return 0
        return (symbols - overhead) // self.cfg.n_block

    def allocate(self, ue: int, requested_bps: float,
                 per_block_rate_bps: float) -> RateQuote:
        """Grant the largest block count <= needed whose occupied symbols
        fit the remaining budget; zero blocks is a rejection."""
        if ue in self.allocations:
            raise ValueError(f"ue {ue} already allocated")
        needed = units_needed(requested_bps, per_block_rate_bps)
        if math.isinf(needed):
            granted = 0
        else:
            granted = min(needed, self.max_blocks_fitting(self.free_symbols))
        if granted > 0:
            self.allocations[ue] = (granted, self.occupied_for(granted))
        return RateQuote(per_block_rate_bps, needed, granted, requested_bps)

    def release(self, ue: int) -> None:
        if ue not in self.allocations:
            raise KeyError(f"ue {ue} not in pool")
        del self.allocations[ue]


def release(pool: NrPool | SatPool, ue: int) -> None:
    """Return all of the UE's units (and overhead symbols) to the pool."""
    pool.release(ue)
