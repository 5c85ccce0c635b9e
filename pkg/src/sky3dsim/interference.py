"""Inter-AP interference estimation.

An AP's contribution to the interference it causes at other APs' users is
weighted by its Resource Block Utilization Ratio

    RBUR_k = sum_{recorded ticks} sum_i N_{i,k}(tau) / (T * capacity_k)

computed over a sliding window of per-tick allocation snapshots, and the
interference seen by UE i served by AP j is

    I_ij = sum_{co-channel k != j} P_{i,k} * RBUR_k      (linear, mW).
"""

from collections import deque
from dataclasses import dataclass

from .channel import LinkBudget, mw_from_dbm

Snapshot = dict[int, dict[int, int]]  # ap -> ue -> allocated units


class AllocationLedger:
    """Ring buffer of per-tick allocation snapshots, one entry per AP."""

    def __init__(self, total_units: dict[int, int], window_len: int):
        if window_len < 1:
            raise ValueError("window_len must be >= 1")
        self.total_units = dict(total_units)
        self.window_len = window_len
        self.window: deque[Snapshot] = deque(maxlen=window_len)

    def record_tick(self, snapshot: Snapshot) -> None:
        """Append one snapshot, evicting the oldest beyond the window."""
        for ap, per_ue in snapshot.items():
            if ap not in self.total_units:
                raise KeyError(f"unknown ap {ap}")
            total = sum(per_ue.values())
            if total > self.total_units[ap]:
                raise ValueError(
                    f"snapshot allocates {total} units on ap {ap} "
                    f"(capacity {self.total_units[ap]})"
                )
        self.window.append({ap: dict(per_ue) for ap, per_ue in snapshot.items()})

    def rbur(self, ap: int) -> float:
        """Windowed mean utilization in [0, 1]; 0 for an empty window."""
        if ap not in self.total_units:
            raise KeyError(f"unknown ap {ap}")
        if not self.window:
            return 0.0
        allocated = sum(
            sum(snap.get(ap, {}).values()) for snap in self.window
        )
        return allocated / (len(self.window) * self.total_units[ap])


def interference_mw(
    serving_ap: int,
    co_channel_aps: list[int],
    rx_powers_mw: dict[int, float],
    ledger: AllocationLedger,
) -> float:
    """RBUR-weighted sum of received powers from co-channel peers."""
    total = 0.0
    for k in co_channel_aps:
        if k == serving_ap:
            continue
        total += rx_powers_mw[k] * ledger.rbur(k)
    return total


@dataclass(frozen=True)
class SinrReport:
    signal_dbm: float
    interference_mw: float
    noise_mw: float

    @property
    def sinr_linear(self) -> float:
        return mw_from_dbm(self.signal_dbm) / (
            self.interference_mw + self.noise_mw
        )


def sinr(budget: LinkBudget, interference_mw: float) -> SinrReport:
    """Signal-to-interference-plus-noise for one UE-AP pair, all linear mW
    over the allocation-unit bandwidth."""
    return SinrReport(
        signal_dbm=budget.rx_power_dbm,
        interference_mw=interference_mw,
        noise_mw=mw_from_dbm(budget.noise_dbm),
    )
