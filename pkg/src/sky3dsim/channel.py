"""Link-level computations: path loss, received power, noise, visibility.

Received power in dB domain:
    rx_dbm = tx_dbm + G_ap - L_feeder - L_path - L_extra
For the satellite the configured power is an EIRP (gain and feeder loss
already folded in, both carried as 0 dB in the builtin scenario) and the
path is evaluated at a fixed slant range; NR APs use COST-231-Hata over
the horizontal distance with the AP altitude as base-station height.

Noise is referenced to the bandwidth of one allocation unit:
    NR:        -174 dBm/Hz + NF + 10 log10(B_RB)
    satellite: derived from G/T via k, over the block-equivalent
               bandwidth B * n_block / n_tot
so the SINR that feeds the Shannon rate of one unit is consistent with
that unit's bandwidth.
"""

import math
from collections import Counter
from dataclasses import dataclass

from .scenario import (
    ApSpec,
    BOLTZMANN_J_K,
    RAT_SATELLITE_TDMA,
    SPEED_OF_LIGHT_M_S,
    Scenario,
)

# Counts of inputs clamped into the COST-231-Hata validity region.
# Keys: "hata_distance_low", "hata_h_bs_low", "hata_h_bs_high".
clamp_diagnostics: Counter = Counter()


def reset_diagnostics() -> None:
    clamp_diagnostics.clear()


@dataclass(frozen=True)
class LinkBudget:
    path_loss_db: float
    rx_power_dbm: float
    noise_dbm: float  # over the allocation-unit bandwidth
    visible: bool


def fspl_db(distance_m: float, carrier_hz: float) -> float:
    """Free-space path loss 20 log10(4 pi d f / c)."""
    if distance_m <= 0:
        raise ValueError("distance_m must be > 0")
    if carrier_hz <= 0:
        raise ValueError("carrier_hz must be > 0")
    return 20.0 * math.log10(
        4.0 * math.pi * distance_m * carrier_hz / SPEED_OF_LIGHT_M_S
    )


def cost_hata_db(
    distance_m: float,
    carrier_hz: float,
    h_bs_m: float,
    h_ue_m: float,
    environment: str = "suburban",
) -> float:
    """COST-231-Hata path loss.

    C_m = 3 dB for 'urban', 0 dB for 'suburban' (medium city).  Inputs
    outside the model's validity region (distance < 20 m, base height
    outside [30, 200] m) are clamped and counted in clamp_diagnostics.
    """
    if h_bs_m <= 0 or h_ue_m <= 0:
        raise ValueError("antenna heights must be > 0")
    if carrier_hz <= 0:
        raise ValueError("carrier_hz must be > 0")
    if environment == "urban":
        c_m = 3.0
    elif environment == "suburban":
        c_m = 0.0
    else:
        raise ValueError(f"unknown environment {environment!r}")

    if distance_m < 20.0:
        clamp_diagnostics["hata_distance_low"] += 1
        distance_m = 20.0
    if h_bs_m < 30.0:
        clamp_diagnostics["hata_h_bs_low"] += 1
        h_bs_m = 30.0
    elif h_bs_m > 200.0:
        clamp_diagnostics["hata_h_bs_high"] += 1
        h_bs_m = 200.0

    f_mhz = carrier_hz / 1e6
    d_km = distance_m / 1e3
    a_ue = (1.1 * math.log10(f_mhz) - 0.7) * h_ue_m - (
        1.56 * math.log10(f_mhz) - 0.8
    )
    return (
        46.3
        + 33.9 * math.log10(f_mhz)
        - 13.82 * math.log10(h_bs_m)
        - a_ue
        + (44.9 - 6.55 * math.log10(h_bs_m)) * math.log10(d_km)
        + c_m
    )


def mw_from_dbm(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def dbm_from_mw(mw: float) -> float:
    return 10.0 * math.log10(mw)


def sat_noise_dbm(ap: ApSpec) -> float:
    """Equivalent noise floor for one TDMA block, from the terminal G/T.

    C/N0 = rx_dbw + G/T - 10 log10(k), hence the noise referenced to the
    isotropic received power over bandwidth B is
    N_dbm = 30 - G/T + 10 log10(k) + 10 log10(B_block_equiv).
    """
    cfg = ap.sat
    b_alloc_hz = ap.bandwidth_hz * cfg.n_block / cfg.n_tot
    return (
        30.0
        - cfg.gt_db_per_k
        + 10.0 * math.log10(BOLTZMANN_J_K)
        + 10.0 * math.log10(b_alloc_hz)
    )


def nr_noise_dbm(ap: ApSpec, scenario: Scenario) -> float:
    """Thermal noise plus receiver noise figure over one resource block."""
    return (
        scenario.noise_density_dbm_hz
        + ap.nr.noise_figure_db
        + 10.0 * math.log10(ap.nr.rb_bandwidth_hz)
    )


def link_budget(
    ue_xyz_m: tuple[float, float, float],
    ap: ApSpec,
    ap_xyz_m: tuple[float, float, float],
    scenario: Scenario,
) -> LinkBudget:
    """Budget for one UE-AP pair at the given positions."""
    if ap.rat == RAT_SATELLITE_TDMA:
        loss_db = fspl_db(ap.sat.slant_range_m, ap.carrier_hz)
        tx_dbm = ap.tx_power_db + 30.0  # EIRP dBW -> dBm
        noise = sat_noise_dbm(ap)
    else:
        dx = ue_xyz_m[0] - ap_xyz_m[0]
        dy = ue_xyz_m[1] - ap_xyz_m[1]
        horizontal_m = math.hypot(dx, dy)
        loss_db = cost_hata_db(
            horizontal_m,
            ap.carrier_hz,
            h_bs_m=ap_xyz_m[2],
            h_ue_m=ue_xyz_m[2],
            environment=ap.nr.environment,
        )
        tx_dbm = ap.tx_power_db
        noise = nr_noise_dbm(ap, scenario)

    rx_dbm = (
        tx_dbm
        + ap.antenna_gain_db
        - ap.feeder_loss_db
        - loss_db
        - ap.extra_losses_db
    )
    return LinkBudget(
        path_loss_db=loss_db,
        rx_power_dbm=rx_dbm,
        noise_dbm=noise,
        visible=rx_dbm >= scenario.min_power_dbm,
    )
