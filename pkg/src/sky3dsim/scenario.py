"""Scenario configuration: types, validation, YAML parsing and the built-in
reference scenario.

Every physical constant used anywhere in the simulator is owned by this
module.  All units are explicit in field names (_m, _s, _hz, _dbm, _dbw,
_db, _bps).  Scenario values are immutable after construction and safe to
share across threads.
"""

import math
from dataclasses import dataclass, field, asdict, replace

import yaml

SPEED_OF_LIGHT_M_S = 299_792_458.0
BOLTZMANN_J_K = 1.380_649e-23
GEO_SLANT_RANGE_M = 35_786_000.0

RAT_SATELLITE_TDMA = "satellite_tdma"
RAT_NR_FDD = "nr_fdd"

STRATEGY_KINDS = ("user_centric", "ran_controlled", "ran_assisted")


class ScenarioError(ValueError):
    """Base class for scenario document problems."""


class ScenarioParseError(ScenarioError):
    """Document does not conform to the schema (bad/missing/unknown key)."""


class ScenarioValidationError(ScenarioError):
    """Document parsed but violates a scenario invariant."""


@dataclass(frozen=True)
class Static:
    """AP does not move."""


@dataclass(frozen=True)
class Intervening:
    """Mobile AP that flies toward distressed users on demand."""

    max_speed_mps: float
    cruise_altitude_m: float


@dataclass(frozen=True)
class NrConfig:
    """5G NR FDD cell parameters (Type 1 frame structure, 10 ms frames)."""

    numerology: int
    total_rbs: int
    band: str = "FR1"
    symbols_per_rb: int = 14  # 14 = normal CP, 12 = extended CP
    noise_figure_db: float = 7.0
    environment: str = "suburban"  # COST-231-Hata C_m selector

    # frame structure constants fixed by the FDD Type 1 choice
    duplex: str = field(default="fdd", init=False, repr=False)
    frame_ms: float = field(default=10.0, init=False, repr=False)

    @property
    def rb_bandwidth_hz(self) -> float:
        """Resource block bandwidth: 12 subcarriers of 15*2^mu kHz."""
        return 12.0 * 15e3 * 2.0**self.numerology


@dataclass(frozen=True)
class SatFrameConfig:
    """Satellite TDMA frame constants plus receiver figure of merit."""

    n_tot: int = 120_832
    frame_s: float = 0.002
    n_sync: int = 288
    sync_messages_per_frame: int = 2
    n_head: int = 280
    n_space: int = 64
    n_slice: int = 39_104
    n_block: int = 64
    gt_db_per_k: float = -9.7
    slant_range_m: float = GEO_SLANT_RANGE_M

    @property
    def sync_overhead_symbols(self) -> int:
        return self.sync_messages_per_frame * self.n_sync

    @property
    def budget_symbols(self) -> int:
        """Per-frame symbols usable for connections in this slice."""
        return self.n_slice - self.sync_overhead_symbols


@dataclass(frozen=True)
class UeSpec:
    """One mobile ground terminal and its service demand."""

    requested_bitrate_bps: float
    min_bitrate_bps: float
    speed_mps: float
    height_m: float = 1.5
    # None: the engine draws the arrival uniformly in [0, arrival_window_s]
    arrival_time_s: float | None = None


@dataclass(frozen=True)
class ApSpec:
    """One radio endpoint: the satellite or a (possibly mobile) NR AP.

    tx_power_db is interpreted per RAT: EIRP in dBW for the satellite
    (antenna gain and feeder loss already folded in), transmit power in
    dBm at the antenna port for NR.
    """

    rat: str
    tx_power_db: float
    antenna_gain_db: float
    feeder_loss_db: float
    carrier_hz: float
    bandwidth_hz: float
    position_m: tuple[float, float, float]
    mobility: Static | Intervening = Static()
    nr: NrConfig | None = None
    sat: SatFrameConfig | None = None
    extra_losses_db: float = 0.0
    backhaul_up: bool = True


@dataclass(frozen=True)
class Scenario:
    grid_width_m: float
    grid_height_m: float
    duration_s: float
    tick_s: float
    seed: int
    ues: tuple[UeSpec, ...]
    aps: tuple[ApSpec, ...]
    rbur_window_ticks: int = 10
    min_power_dbm: float = -125.0
    arrival_window_s: float = 60.0
    association_strategy: str = "user_centric"
    assist_threshold: float = 0.8
    noise_density_dbm_hz: float = -174.0

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration_s / self.tick_s))


def _fail(invariant: str) -> None:
    raise ScenarioValidationError(f"invariant violated: {invariant}")


def validate_scenario(s: Scenario) -> Scenario:
    """Check every scenario invariant; returns the scenario unchanged."""
    if not (s.grid_width_m > 0 and s.grid_height_m > 0):
        _fail("grid dimensions must be > 0")
    if not s.tick_s > 0:
        _fail("tick_s must be > 0")
    if not s.duration_s >= s.tick_s:
        _fail("duration_s must be >= tick_s")
    if not s.rbur_window_ticks >= 1:
        _fail("rbur_window_ticks must be >= 1")
    if not (isinstance(s.seed, int) and s.seed >= 0):
        _fail("seed must be an unsigned integer")
    if len(s.aps) == 0:
        _fail("at least one AP")
    if not 0 <= s.arrival_window_s <= s.duration_s:
        _fail("arrival_window_s must lie in [0, duration_s]")
    if s.association_strategy not in STRATEGY_KINDS:
        _fail(f"association_strategy must be one of {STRATEGY_KINDS}")
    if not 0 < s.assist_threshold <= 1:
        _fail("assist_threshold must lie in (0, 1]")

    for i, ue in enumerate(s.ues):
        if not 0 < ue.min_bitrate_bps <= ue.requested_bitrate_bps:
            _fail(f"ue[{i}]: 0 < min_bitrate_bps <= requested_bitrate_bps")
        if not ue.speed_mps >= 0:
            _fail(f"ue[{i}]: speed_mps must be >= 0")
        if not ue.height_m > 0:
            _fail(f"ue[{i}]: height_m must be > 0")
        if ue.arrival_time_s is not None and not (
            0 <= ue.arrival_time_s < s.duration_s
        ):
            _fail(f"ue[{i}]: arrival_time_s must lie in [0, duration_s)")

    for j, ap in enumerate(s.aps):
        if ap.rat not in (RAT_SATELLITE_TDMA, RAT_NR_FDD):
            _fail(f"ap[{j}]: unknown rat {ap.rat!r}")
        if not ap.carrier_hz > 0:
            _fail(f"ap[{j}]: carrier_hz must be > 0")
        if not ap.bandwidth_hz > 0:
            _fail(f"ap[{j}]: bandwidth_hz must be > 0")
        if (ap.nr is None) == (ap.sat is None):
            _fail(f"ap[{j}]: exactly one of nr/sat config must be present")
        if ap.rat == RAT_NR_FDD and ap.nr is None:
            _fail(f"ap[{j}]: nr_fdd AP requires an nr config")
        if ap.rat == RAT_SATELLITE_TDMA and ap.sat is None:
            _fail(f"ap[{j}]: satellite_tdma AP requires a sat config")
        if ap.nr is not None:
            if ap.nr.symbols_per_rb not in (12, 14):
                _fail(f"ap[{j}]: symbols_per_rb must be 12 or 14")
            if not ap.nr.total_rbs > 0:
                _fail(f"ap[{j}]: total_rbs must be > 0")
            if ap.nr.numerology < 0:
                _fail(f"ap[{j}]: numerology must be >= 0")
            if ap.nr.band not in ("FR1", "FR2"):
                _fail(f"ap[{j}]: band must be FR1 or FR2")
            if ap.nr.environment not in ("urban", "suburban"):
                _fail(f"ap[{j}]: environment must be urban or suburban")
        if ap.sat is not None:
            c = ap.sat
            if not c.n_slice <= c.n_tot:
                _fail(f"ap[{j}]: n_slice must be <= n_tot")
            if not c.n_block > 0:
                _fail(f"ap[{j}]: n_block must be > 0")
            if c.n_head < 0 or c.n_space < 0:
                _fail(f"ap[{j}]: n_head and n_space must be >= 0")
            if not c.frame_s > 0:
                _fail(f"ap[{j}]: frame_s must be > 0")
            if c.budget_symbols <= 0:
                _fail(f"ap[{j}]: sync overhead exhausts the slice budget")
        if isinstance(ap.mobility, Intervening):
            if not ap.mobility.max_speed_mps > 0:
                _fail(f"ap[{j}]: intervening max_speed_mps must be > 0")
            if not ap.mobility.cruise_altitude_m > 0:
                _fail(f"ap[{j}]: intervening cruise_altitude_m must be > 0")
    return s


# --- document parsing -------------------------------------------------------

_SCENARIO_KEYS = {
    "grid_width_m", "grid_height_m", "duration_s", "tick_s", "seed",
    "rbur_window_ticks", "min_power_dbm", "arrival_window_s",
    "association_strategy", "assist_threshold", "noise_density_dbm_hz",
    "ues", "aps",
}
_UE_KEYS = {
    "count", "requested_bitrate_bps", "min_bitrate_bps", "speed_mps",
    "height_m", "arrival_time_s",
}
_AP_KEYS = {
    "rat", "eirp_dbw", "tx_power_dbm", "antenna_gain_db", "feeder_loss_db",
    "carrier_hz", "bandwidth_hz", "position_m", "mobility", "nr", "sat",
    "extra_losses_db", "backhaul_up",
}
_NR_KEYS = {
    "numerology", "total_rbs", "band", "symbols_per_rb", "noise_figure_db",
    "environment",
}
_SAT_KEYS = {
    "n_tot", "frame_s", "n_sync", "sync_messages_per_frame", "n_head",
    "n_space", "n_slice", "n_block", "gt_db_per_k", "slant_range_m",
}


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ScenarioParseError(f"{where}: missing required key {key!r}")
    return mapping[key]


def _check_keys(mapping: dict, allowed: set, where: str) -> None:
    if not isinstance(mapping, dict):
        raise ScenarioParseError(f"{where}: expected a mapping")
    unknown = set(mapping) - allowed
    if unknown:
        raise ScenarioParseError(
            f"{where}: unknown key {sorted(unknown)[0]!r}"
        )


def _parse_mobility(raw, where: str) -> Static | Intervening:
    if raw is None or raw == "static":
        return Static()
    if isinstance(raw, dict) and set(raw) == {"intervening"}:
        body = raw["intervening"]
        _check_keys(body, {"max_speed_mps", "cruise_altitude_m"},
                    where + ".mobility.intervening")
        return Intervening(
            max_speed_mps=float(_require(body, "max_speed_mps", where)),
            cruise_altitude_m=float(_require(body, "cruise_altitude_m", where)),
        )
    raise ScenarioParseError(
        f"{where}: mobility must be 'static' or an 'intervening' mapping"
    )


def _parse_ap(raw: dict, idx: int) -> ApSpec:
    where = f"aps[{idx}]"
    _check_keys(raw, _AP_KEYS, where)
    rat = _require(raw, "rat", where)
    if rat == RAT_SATELLITE_TDMA:
        tx_power_db = float(_require(raw, "eirp_dbw", where))
        if "tx_power_dbm" in raw:
            raise ScenarioParseError(
                f"{where}: satellite power is given as eirp_dbw, not tx_power_dbm"
            )
    elif rat == RAT_NR_FDD:
        tx_power_db = float(_require(raw, "tx_power_dbm", where))
        if "eirp_dbw" in raw:
            raise ScenarioParseError(
                f"{where}: NR power is given as tx_power_dbm, not eirp_dbw"
            )
    else:
        raise ScenarioParseError(f"{where}: unknown rat {rat!r}")

    pos = _require(raw, "position_m", where)
    if not (isinstance(pos, (list, tuple)) and len(pos) == 3):
        raise ScenarioParseError(f"{where}: position_m must be [x, y, z]")

    nr = None
    if raw.get("nr") is not None:
        _check_keys(raw["nr"], _NR_KEYS, where + ".nr")
        body = dict(raw["nr"])
        nr = NrConfig(
            numerology=int(_require(body, "numerology", where + ".nr")),
            total_rbs=int(_require(body, "total_rbs", where + ".nr")),
            band=str(body.get("band", "FR1")),
            symbols_per_rb=int(body.get("symbols_per_rb", 14)),
            noise_figure_db=float(body.get("noise_figure_db", 7.0)),
            environment=str(body.get("environment", "suburban")),
        )
    sat = None
    if raw.get("sat") is not None:
        _check_keys(raw["sat"], _SAT_KEYS, where + ".sat")
        body = dict(raw["sat"])
        defaults = SatFrameConfig()
        sat = SatFrameConfig(
            n_tot=int(body.get("n_tot", defaults.n_tot)),
            frame_s=float(body.get("frame_s", defaults.frame_s)),
            n_sync=int(body.get("n_sync", defaults.n_sync)),
            sync_messages_per_frame=int(
                body.get("sync_messages_per_frame",
                         defaults.sync_messages_per_frame)),
            n_head=int(body.get("n_head", defaults.n_head)),
            n_space=int(body.get("n_space", defaults.n_space)),
            n_slice=int(body.get("n_slice", defaults.n_slice)),
            n_block=int(body.get("n_block", defaults.n_block)),
            gt_db_per_k=float(body.get("gt_db_per_k", defaults.gt_db_per_k)),
            slant_range_m=float(
                body.get("slant_range_m", defaults.slant_range_m)),
        )
    return ApSpec(
        rat=rat,
        tx_power_db=tx_power_db,
        antenna_gain_db=float(raw.get("antenna_gain_db", 0.0)),
        feeder_loss_db=float(raw.get("feeder_loss_db", 0.0)),
        carrier_hz=float(_require(raw, "carrier_hz", where)),
        bandwidth_hz=float(_require(raw, "bandwidth_hz", where)),
        position_m=(float(pos[0]), float(pos[1]), float(pos[2])),
        mobility=_parse_mobility(raw.get("mobility"), where),
        nr=nr,
        sat=sat,
        extra_losses_db=float(raw.get("extra_losses_db", 0.0)),
        backhaul_up=bool(raw.get("backhaul_up", True)),
    )


def _parse_ue_group(raw: dict, idx: int) -> list[UeSpec]:
    where = f"ues[{idx}]"
    _check_keys(raw, _UE_KEYS, where)
    count = int(raw.get("count", 1))
    if count < 1:
        raise ScenarioParseError(f"{where}: count must be >= 1")
    arrival = raw.get("arrival_time_s")
    spec = UeSpec(
        requested_bitrate_bps=float(
            _require(raw, "requested_bitrate_bps", where)),
        min_bitrate_bps=float(_require(raw, "min_bitrate_bps", where)),
        speed_mps=float(_require(raw, "speed_mps", where)),
        height_m=float(raw.get("height_m", 1.5)),
        arrival_time_s=None if arrival is None else float(arrival),
    )
    return [spec] * count


def parse_scenario(text: str) -> Scenario:
    """Parse a YAML scenario document into a validated Scenario."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioParseError("scenario document must be a mapping")
    _check_keys(raw, _SCENARIO_KEYS, "scenario")

    ue_groups = raw.get("ues", [])
    ap_entries = raw.get("aps", [])
    if not isinstance(ue_groups, list) or not isinstance(ap_entries, list):
        raise ScenarioParseError("'ues' and 'aps' must be lists")

    ues: list[UeSpec] = []
    for i, group in enumerate(ue_groups):
        ues.extend(_parse_ue_group(group, i))
    aps = [_parse_ap(entry, j) for j, entry in enumerate(ap_entries)]

    scenario = Scenario(
        grid_width_m=float(_require(raw, "grid_width_m", "scenario")),
        grid_height_m=float(_require(raw, "grid_height_m", "scenario")),
        duration_s=float(_require(raw, "duration_s", "scenario")),
        tick_s=float(_require(raw, "tick_s", "scenario")),
        seed=int(_require(raw, "seed", "scenario")),
        ues=tuple(ues),
        aps=tuple(aps),
        rbur_window_ticks=int(raw.get("rbur_window_ticks", 10)),
        min_power_dbm=float(raw.get("min_power_dbm", -125.0)),
        arrival_window_s=float(raw.get("arrival_window_s", 60.0)),
        association_strategy=str(
            raw.get("association_strategy", "user_centric")),
        assist_threshold=float(raw.get("assist_threshold", 0.8)),
        noise_density_dbm_hz=float(raw.get("noise_density_dbm_hz", -174.0)),
    )
    return validate_scenario(scenario)


def _mobility_doc(m: Static | Intervening):
    if isinstance(m, Intervening):
        return {"intervening": {"max_speed_mps": m.max_speed_mps,
                                "cruise_altitude_m": m.cruise_altitude_m}}
    return "static"


def serialize_scenario(s: Scenario) -> str:
    """Render a Scenario as a YAML document; inverse of parse_scenario."""
    doc = {
        "grid_width_m": s.grid_width_m,
        "grid_height_m": s.grid_height_m,
        "duration_s": s.duration_s,
        "tick_s": s.tick_s,
        "seed": s.seed,
        "rbur_window_ticks": s.rbur_window_ticks,
        "min_power_dbm": s.min_power_dbm,
        "arrival_window_s": s.arrival_window_s,
        "association_strategy": s.association_strategy,
        "assist_threshold": s.assist_threshold,
        "noise_density_dbm_hz": s.noise_density_dbm_hz,
        "ues": [
            {
                "requested_bitrate_bps": ue.requested_bitrate_bps,
                "min_bitrate_bps": ue.min_bitrate_bps,
                "speed_mps": ue.speed_mps,
                "height_m": ue.height_m,
                "arrival_time_s": ue.arrival_time_s,
            }
            for ue in s.ues
        ],
        "aps": [],
    }
    for ap in s.aps:
        entry = {
            "rat": ap.rat,
            "antenna_gain_db": ap.antenna_gain_db,
            "feeder_loss_db": ap.feeder_loss_db,
            "carrier_hz": ap.carrier_hz,
            "bandwidth_hz": ap.bandwidth_hz,
            "position_m": list(ap.position_m),
            "mobility": _mobility_doc(ap.mobility),
            "extra_losses_db": ap.extra_losses_db,
            "backhaul_up": ap.backhaul_up,
        }
        if ap.rat == RAT_SATELLITE_TDMA:
            entry["eirp_dbw"] = ap.tx_power_db
            entry["sat"] = asdict(ap.sat)
        else:
            entry["tx_power_dbm"] = ap.tx_power_db
            entry["nr"] = {
                "numerology": ap.nr.numerology,
                "total_rbs": ap.nr.total_rbs,
                "band": ap.nr.band,
                "symbols_per_rb": ap.nr.symbols_per_rb,
                "noise_figure_db": ap.nr.noise_figure_db,
                "environment": ap.nr.environment,
            }
        doc["aps"].append(entry)
    return yaml.safe_dump(doc, sort_keys=False)


def dbm_from_watts(power_w: float) -> float:
    return 10.0 * math.log10(power_w / 1e-3)


def builtin_paper_scenario(seed: int = 1) -> Scenario:
    """The reference congestion / service-continuity scenario.

    4 km x 4 km grid, 50 UEs at 10 Mbps (5 Mbps minimum) moving at 10 m/s,
    one geostationary satellite AP (EIRP 62 dBW, 28.4 GHz / 220 MHz,
    atmospheric loss 0.1 dB, G/T -9.7 dB/K, Inmarsat-style TDMA frame) and
    two mobile NR APs (15 W, 15 dB gain, 1 dB feeder loss, 800 MHz /
    100 MHz, numerology 2 -> 135 RBs per the FR1 transmission-bandwidth
    table, altitude 200 m).
    """
    sat_ap = ApSpec(
        rat=RAT_SATELLITE_TDMA,
        tx_power_db=62.0,  # EIRP, dBW
        antenna_gain_db=0.0,
        feeder_loss_db=0.0,
        carrier_hz=28.4e9,
        bandwidth_hz=220e6,
        position_m=(2000.0, 2000.0, GEO_SLANT_RANGE_M),
        mobility=Static(),
        sat=SatFrameConfig(),
        extra_losses_db=0.1,  # atmospheric
    )
    nr_cfg = NrConfig(numerology=2, total_rbs=135)

    def nr_ap(x_m: float, y_m: float) -> ApSpec:
        return ApSpec(
            rat=RAT_NR_FDD,
            tx_power_db=dbm_from_watts(15.0),
            antenna_gain_db=15.0,
            feeder_loss_db=1.0,
            carrier_hz=800e6,
            bandwidth_hz=100e6,
            position_m=(x_m, y_m, 200.0),
            mobility=Intervening(max_speed_mps=30.0, cruise_altitude_m=200.0),
            nr=nr_cfg,
        )

    ue = UeSpec(
        requested_bitrate_bps=10e6,
        min_bitrate_bps=5e6,
        speed_mps=10.0,
        height_m=1.5,
        arrival_time_s=None,
    )
    # Both UAVs hold station at the grid center: the centroid of uniform
    # demand, which is the intervention controller's own fixed point.  The
    # second AP is spill-over capacity and stays unloaded (hence
    # non-interfering) while the first can serve the whole population.
    return validate_scenario(Scenario(
        grid_width_m=4000.0,
        grid_height_m=4000.0,
        duration_s=300.0,
        tick_s=1.0,
        seed=seed,
        ues=(ue,) * 50,
        aps=(sat_ap, nr_ap(2000.0, 2000.0), nr_ap(2000.0, 2000.0)),
        rbur_window_ticks=10,
        min_power_dbm=-125.0,
        arrival_window_s=60.0,
        association_strategy="user_centric",
    ))


def strip_mobile_aps(s: Scenario) -> Scenario:
    """Remove every Intervening AP (the --no-mobile-aps convenience)."""
    kept = tuple(ap for ap in s.aps if not isinstance(ap.mobility, Intervening))
    return validate_scenario(replace(s, aps=kept))


def with_seed(s: Scenario, seed: int) -> Scenario:
    return validate_scenario(replace(s, seed=seed))
