"""UE and mobile-AP motion.

UEs move on straight lines at constant speed and reflect specularly off
the grid boundary.  Intervening APs loiter until some UE is unserved or
degraded, then fly toward the centroid of the distressed UEs at cruise
altitude.
"""

import math
import random
from dataclasses import dataclass, replace

from .scenario import ApSpec, Intervening, Scenario

MODE_LOITERING = "loitering"
MODE_TRANSIT = "transit"
MODE_SERVING = "serving"


@dataclass(frozen=True)
class Pose:
    x_m: float
    y_m: float
    z_m: float
    heading_rad: float
    speed_mps: float


@dataclass(frozen=True)
class InterventionState:
    mode: str = MODE_LOITERING
    target: tuple[float, float] | None = None  # present iff mode == transit


def init_ue_poses(scenario: Scenario, rng: random.Random) -> list[Pose]:
    """Independent uniform start positions, then independent uniform
    headings in [0, 2 pi).  Same seed, same list."""
    positions = [
        (rng.uniform(0.0, scenario.grid_width_m),
         rng.uniform(0.0, scenario.grid_height_m))
        for _ in scenario.ues
    ]
    headings = [rng.uniform(0.0, 2.0 * math.pi) for _ in scenario.ues]
    return [
        Pose(x_m=x, y_m=y, z_m=ue.height_m, heading_rad=h,
             speed_mps=ue.speed_mps)
        for (x, y), h, ue in zip(positions, headings, scenario.ues)
    ]


def _reflect_axis(value: float, limit: float) -> tuple[float, bool]:
    """Fold a coordinate back into [0, limit]; True when an odd number of
    reflections flipped the travel direction on this axis."""
    period = 2.0 * limit
    value %= period
    if value < 0:
        value += period
    if value > limit:
        return period - value, True
    return value, False


def step_ue(pose: Pose, dt_s: float, grid_w_m: float, grid_h_m: float) -> Pose:
    """Advance speed*dt along the heading with specular wall reflections."""
    if dt_s <= 0:
        raise ValueError("dt_s must be > 0")
    if pose.speed_mps == 0:
        return pose
    nx = pose.x_m + pose.speed_mps * dt_s * math.cos(pose.heading_rad)
    ny = pose.y_m + pose.speed_mps * dt_s * math.sin(pose.heading_rad)
    nx, flip_x = _reflect_axis(nx, grid_w_m)
    ny, flip_y = _reflect_axis(ny, grid_h_m)
    heading = pose.heading_rad
    if flip_x:
        heading = math.pi - heading
    if flip_y:
        heading = -heading
    heading %= 2.0 * math.pi
    return replace(pose, x_m=nx, y_m=ny, heading_rad=heading)


def step_mobile_ap(
    ap_pose: Pose,
    state: InterventionState,
    demand_snapshot: list[tuple[tuple[float, float], bool]],
    dt_s: float,
    spec: ApSpec,
) -> tuple[Pose, InterventionState]:
    """Intervention controller for one Intervening AP.

    demand_snapshot holds ((x, y), served_ok) per requesting-or-connected
    UE; served_ok is False for unserved UEs and for connections below
    their minimum bitrate.
    """
    if not isinstance(spec.mobility, Intervening):
        raise ValueError("step_mobile_ap requires an Intervening AP")
    distressed = [xy for xy, ok in demand_snapshot if not ok]
    altitude = spec.mobility.cruise_altitude_m
    if not distressed:
        pose = replace(ap_pose, z_m=altitude, speed_mps=0.0)
        return pose, InterventionState(MODE_LOITERING, None)

    tx = sum(x for x, _ in distressed) / len(distressed)
    ty = sum(y for _, y in distressed) / len(distressed)
    dx = tx - ap_pose.x_m
    dy = ty - ap_pose.y_m
    dist = math.hypot(dx, dy)
    reach = spec.mobility.max_speed_mps * dt_s
    if dist <= reach:
        pose = Pose(tx, ty, altitude, ap_pose.heading_rad, 0.0)
        return pose, InterventionState(MODE_SERVING, None)
    heading = math.atan2(dy, dx)
    pose = Pose(
        ap_pose.x_m + reach * math.cos(heading),
        ap_pose.y_m + reach * math.sin(heading),
        altitude,
        heading,
        spec.mobility.max_speed_mps,
    )
    return pose, InterventionState(MODE_TRANSIT, (tx, ty))
