"""Synthetic drive simulator over a parametric conventional-road route.

The simulator produces labeled 1 Hz register traces for the three driving
styles.  A route is a sequence of segments (straights, curves, roundabouts,
stop lines, speed bumps, slopes) plus optional slow-traffic zones; a style
profile fixes how a driver treats it: cruise speed relative to the limit,
acceleration and braking strength, cornering speed, stop dwell, and noise.

Kinematics are a longitudinal point mass sampled at 1 Hz.  At every step
the vehicle accelerates toward the lowest of the local target speed and the
braking envelopes of all upcoming slow points, then the sensed channels are
derived from the motion: fax from the commanded acceleration (plus the
gravity component on slopes), fay from v^2/r on curved geometry, faz from
gravity plus speed-bump jolts, fgz from the actual heading change, while
fgx/fgy stay noise-dominated with identical scales for every style so the
styles are statistically indistinguishable on them.

Everything is driven by counter-based generators, so a configuration maps
to one bit-exact trace on every platform.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigInvalid, ParseError
from .ingest import STANDARD_GRAVITY
from .records import Dataset, DrivingStyle, Register

SEGMENT_KINDS = ("straight", "curve", "roundabout", "stop", "speed_bump", "slope")

METERS_PER_DEG_LAT = 111320.0
_MAX_TRIP_STEPS = 7200


@dataclass(frozen=True)
class Segment:
    """One piece of road.  length is the along-path length in meters.

    radius/direction apply to curve and roundabout segments (direction +1
    bends right, -1 left; a roundabout's direction is its ring direction and
    its entry/exit arcs bend the opposite way).  grade is the slope percent,
    positive uphill.
    """

    kind: str
    length: float
    speed_limit: float
    radius: float = 0.0
    direction: int = 0
    grade: float = 0.0

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.length <= 0 or self.speed_limit <= 0:
            raise ValueError("segment length and speed limit must be positive")
        if self.kind in ("curve", "roundabout"):
            if self.radius <= 0 or self.direction not in (-1, 1):
                raise ValueError(f"{self.kind} segment needs radius > 0 and direction +/-1")


@dataclass(frozen=True)
class TrafficZone:
    """Stretch of slow traffic: every style is capped to cap_kmh inside it."""

    start: float
    end: float
    cap_kmh: float

    def __post_init__(self):
        if not (0 <= self.start < self.end) or self.cap_kmh <= 0:
            raise ValueError("traffic zone needs 0 <= start < end and a positive cap")


@dataclass(frozen=True)
class RouteSpec:
    """Ordered segments plus the start pose (heading in compass degrees)."""

    segments: tuple[Segment, ...]
    start_lat: float
    start_lon: float
    start_heading: float
    traffic_zones: tuple[TrafficZone, ...] = ()

    def __post_init__(self):
        if not self.segments:
            raise ValueError("route needs at least one segment")

    @property
    def total_length(self) -> float:
        return sum(seg.length for seg in self.segments)

    def segment_starts(self) -> list[float]:
        starts = [0.0]
        for seg in self.segments[:-1]:
            starts.append(starts[-1] + seg.length)
        return starts


@dataclass(frozen=True)
class StyleProfile:
    """How a driving style treats the road.

    cruise_wander is the stationary spread of a slow drift in the held
    cruise speed (attention drift; strongest for the cautious styles, small
    for the limit-pinned aggressive one).  The measurement noise scales for
    fgx/fgy (and the other sensed channels) are deliberately identical
    across the built-in profiles: those channels must not separate the
    styles.
    """

    style: DrivingStyle
    cruise_fraction: float      # of the local speed limit
    accel_mag: float            # m/s^2
    brake_mag: float            # m/s^2, positive
    corner_accel: float         # comfort lateral acceleration, m/s^2
    bump_speed_kmh: float       # speed over bumps
    stop_dwell_s: float         # mean full-stop duration at stop lines
    accel_noise: float          # m/s^2 jitter on the commanded acceleration
    cruise_wander: float = 0.0  # fractional slow drift of the cruise speed
    speed_noise_kmh: float = 0.4
    position_noise_m: float = 0.25
    accel_meas_noise: tuple[float, float, float] = (0.45, 0.35, 0.22)
    gyro_meas_noise: tuple[float, float, float] = (0.40, 0.40, 0.50)

    def __post_init__(self):
        if not (0.0 <= self.cruise_fraction <= 1.5):
            raise ValueError("cruise fraction out of range")
        if self.accel_mag <= 0 or self.brake_mag <= 0 or self.corner_accel <= 0:
            raise ValueError("acceleration magnitudes must be positive")


CON_PROFILE = StyleProfile(
    style=DrivingStyle.CON, cruise_fraction=0.740,
    accel_mag=0.9, brake_mag=1.2, corner_accel=1.7,
    bump_speed_kmh=15.0, stop_dwell_s=2.5, accel_noise=0.06,
    cruise_wander=0.050,
)
NOR_PROFILE = StyleProfile(
    style=DrivingStyle.NOR, cruise_fraction=0.856,
    accel_mag=1.5, brake_mag=1.9, corner_accel=2.6,
    bump_speed_kmh=25.0, stop_dwell_s=1.5, accel_noise=0.10,
    cruise_wander=0.055,
)
AGG_PROFILE = StyleProfile(
    style=DrivingStyle.AGG, cruise_fraction=1.02,
    accel_mag=2.7, brake_mag=3.4, corner_accel=4.3,
    bump_speed_kmh=38.0, stop_dwell_s=0.5, accel_noise=0.22,
    cruise_wander=0.020,
)

DEFAULT_PROFILES = {
    DrivingStyle.CON: CON_PROFILE,
    DrivingStyle.NOR: NOR_PROFILE,
    DrivingStyle.AGG: AGG_PROFILE,
}


def style_profile(style: DrivingStyle) -> StyleProfile:
    return DEFAULT_PROFILES[style]


@dataclass(frozen=True)
class SimConfig:
    """One trip: route + profile + seed + start clock.  1 s timestep only."""

    route: RouteSpec
    profile: StyleProfile
    seed: int
    start_time_of_day: float = 32400.0  # 09:00:00
    timestep: float = 1.0
    max_duration_s: int = 3600

    def __post_init__(self):
        if self.timestep != 1.0:
            raise ConfigInvalid("only the 1 s timestep is supported")
        if not (0.0 <= self.start_time_of_day < 86400.0):
            raise ConfigInvalid("start_time_of_day must be within one day")
        if self.max_duration_s < 1:
            raise ConfigInvalid("max_duration_s must be positive")


# ---------------------------------------------------------------------------
# default route


_BASE_SEGMENTS = (
    # (kind, length, limit, radius, direction, grade)
    ("straight", 1000.0, 80.0, 0.0, 0, 0.0),
    ("curve", 320.0, 80.0, 420.0, 1, 0.0),
    ("straight", 620.0, 80.0, 0.0, 0, 0.0),
    ("stop", 60.0, 50.0, 0.0, 0, 0.0),
    ("straight", 540.0, 80.0, 0.0, 0, 0.0),
    ("roundabout", 95.0, 40.0, 17.0, -1, 0.0),
    ("straight", 1100.0, 90.0, 0.0, 0, 0.0),
    ("curve", 360.0, 90.0, 650.0, -1, 0.0),
    ("slope", 740.0, 80.0, 0.0, 0, 4.5),
    ("straight", 420.0, 80.0, 0.0, 0, 0.0),
    ("speed_bump", 14.0, 30.0, 0.0, 0, 0.0),
    ("straight", 560.0, 80.0, 0.0, 0, 0.0),
    ("curve", 300.0, 80.0, 380.0, 1, 0.0),
    ("slope", 680.0, 90.0, 0.0, 0, -4.0),
    ("straight", 1000.0, 90.0, 0.0, 0, 0.0),
    ("roundabout", 88.0, 40.0, 16.0, -1, 0.0),
    ("straight", 640.0, 80.0, 0.0, 0, 0.0),
    ("curve", 340.0, 90.0, 520.0, 1, 0.0),
    ("stop", 55.0, 50.0, 0.0, 0, 0.0),
    ("straight", 1070.0, 90.0, 0.0, 0, 0.0),
)


def default_route(seed: int) -> RouteSpec:
    """A seeded ~10 km conventional-road route.

    The template carries two roundabouts, two stop lines, one speed bump and
    two slopes; segment lengths and curve radii are jittered per seed and
    rescaled so the total stays at 10 km, and one or two slow-traffic zones
    are dropped onto the long straights.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 101))))
    segments = []
    for kind, length, limit, radius, direction, grade in _BASE_SEGMENTS:
        length *= rng.uniform(0.92, 1.08)
        if radius:
            radius *= rng.uniform(0.85, 1.15)
        if grade:
            grade += rng.uniform(-0.8, 0.8)
        segments.append(Segment(kind, length, limit, radius, direction, grade))

    target_total = 10000.0 * (1.0 + rng.uniform(-0.004, 0.004))
    scale = target_total / sum(s.length for s in segments)
    segments = [replace(s, length=s.length * scale) for s in segments]
    total = sum(s.length for s in segments)

    n_zones = int(rng.integers(1, 3))
    zone_anchors = (0.33, 0.68)
    zones = []
    for i in range(n_zones):
        start = total * (zone_anchors[i] + rng.uniform(-0.04, 0.04))
        length = rng.uniform(180.0, 320.0)
        cap = rng.uniform(35.0, 48.0)
        zones.append(TrafficZone(start, start + length, cap))

    return RouteSpec(
        segments=tuple(segments),
        start_lat=39.358 + rng.uniform(-0.01, 0.01),
        start_lon=-0.51 + rng.uniform(-0.01, 0.01),
        start_heading=rng.uniform(50.0, 80.0),
        traffic_zones=tuple(zones),
    )


# ---------------------------------------------------------------------------
# route file I/O


def write_route(route: RouteSpec, path) -> None:
    """Plain-text route file: start pose, one segment per line, then zones."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# drivestyle route v1\n")
        fh.write(f"start {route.start_lat:.6f} {route.start_lon:.6f} "
                 f"{route.start_heading:.3f}\n")
        for seg in route.segments:
            line = f"segment {seg.kind} {seg.length:.3f} {seg.speed_limit:.1f}"
            if seg.kind in ("curve", "roundabout"):
                line += f" radius={seg.radius:.3f} direction={seg.direction:+d}"
            if seg.kind == "slope":
                line += f" grade={seg.grade:.3f}"
            fh.write(line + "\n")
        for zone in route.traffic_zones:
            fh.write(f"traffic {zone.start:.3f} {zone.end:.3f} {zone.cap_kmh:.1f}\n")


def read_route(path) -> RouteSpec:
    """Parse the route file format written by write_route."""
    start = None
    segments = []
    zones = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if parts[0] == "start" and len(parts) == 4:
                    start = (float(parts[1]), float(parts[2]), float(parts[3]))
                elif parts[0] == "segment" and len(parts) >= 4:
                    extras = {}
                    for extra in parts[4:]:
                        key, _, value = extra.partition("=")
                        extras[key] = float(value)
                    segments.append(Segment(
                        kind=parts[1],
                        length=float(parts[2]),
                        speed_limit=float(parts[3]),
                        radius=extras.get("radius", 0.0),
                        direction=int(extras.get("direction", 0)),
                        grade=extras.get("grade", 0.0),
                    ))
                elif parts[0] == "traffic" and len(parts) == 4:
                    zones.append(TrafficZone(float(parts[1]), float(parts[2]),
                                             float(parts[3])))
                else:
                    raise ValueError(f"unrecognized directive {parts[0]!r}")
            except (ValueError, IndexError) as exc:
                raise ParseError(lineno, 1, line, str(exc)) from None
    if start is None or not segments:
        raise ParseError(0, 0, "", "route file needs a start line and segments")
    return RouteSpec(tuple(segments), start[0], start[1], start[2], tuple(zones))


# ---------------------------------------------------------------------------
# simulation


_WANDER_RHO = 0.98  # per-second autocorrelation of the cruise drift


def _corner_speed(profile: StyleProfile, radius: float) -> float:
    return math.sqrt(profile.corner_accel * radius)


def _segment_target(seg: Segment, profile: StyleProfile, wander: float = 0.0) -> float:
    """Steady speed (m/s) the style holds inside a segment.

    The slow cruise drift scales only the limit-derived speed, never the
    geometry-bound cornering and bump speeds.
    """
    cruise = seg.speed_limit / 3.6 * profile.cruise_fraction * (1.0 + wander)
    if seg.kind == "curve":
        return min(cruise, _corner_speed(profile, seg.radius))
    if seg.kind == "roundabout":
        return min(cruise, _corner_speed(profile, seg.radius))
    if seg.kind == "speed_bump":
        return profile.bump_speed_kmh / 3.6
    return cruise


def _build_events(route: RouteSpec, profile: StyleProfile):
    """Upcoming slow points: (position, target speed m/s, is_stop)."""
    events = []
    starts = route.segment_starts()
    for seg, s0 in zip(route.segments, starts):
        if seg.kind == "stop":
            events.append([s0 + seg.length, 0.0, True])
        elif seg.kind in ("curve", "roundabout", "speed_bump"):
            events.append([s0, _segment_target(seg, profile), False])
    for zone in route.traffic_zones:
        events.append([zone.start, zone.cap_kmh / 3.6, False])
    events.sort(key=lambda e: e[0])
    return events


class _GeometryCursor:
    """Walks the route geometry, mapping arc length to pose.

    Curves are circular arcs; a roundabout is three arcs (entry 30% and exit
    30% bending opposite to the 40% ring) whose heading changes cancel, so
    crossing one leaves the course unchanged but produces the yaw signature.
    """

    def __init__(self, route: RouteSpec):
        self.route = route
        self.starts = route.segment_starts()
        self.lat = route.start_lat
        self.lon = route.start_lon
        self.heading = route.start_heading  # compass degrees, clockwise
        self.index = 0

    def _curvature(self, seg: Segment, u: float) -> float:
        if seg.kind == "curve":
            return seg.direction / seg.radius
        if seg.kind == "roundabout":
            ring = seg.direction / seg.radius
            if u < 0.3 * seg.length or u >= 0.7 * seg.length:
                return -ring / 1.5
            return ring
        return 0.0

    def _piece_end(self, seg: Segment, u: float) -> float:
        if seg.kind == "roundabout":
            for frac in (0.3, 0.7, 1.0):
                if u < frac * seg.length - 1e-9:
                    return frac * seg.length
        return seg.length

    def advance(self, s: float, ds: float) -> float:
        """Move ds meters from arc position s; returns heading change (deg)."""
        heading0 = self.heading
        north = 0.0
        east = 0.0
        remaining = ds
        cur = s
        while remaining > 1e-9 and self.index < len(self.route.segments):
            seg = self.route.segments[self.index]
            seg_start = self.starts[self.index]
            u = cur - seg_start
            if u >= seg.length - 1e-9:
                self.index += 1
                continue
            piece_end = self._piece_end(seg, u)
            step = min(remaining, piece_end - u)
            kappa = self._curvature(seg, u)
            dpsi = kappa * step  # radians, clockwise positive
            if kappa == 0.0:
                chord = step
            else:
                half = abs(dpsi) / 2.0
                chord = step * math.sin(half) / half
            bearing = math.radians(self.heading + math.degrees(dpsi) / 2.0)
            north += chord * math.cos(bearing)
            east += chord * math.sin(bearing)
            self.heading += math.degrees(dpsi)
            cur += step
            remaining -= step
        self.lat += north / METERS_PER_DEG_LAT
        self.lon += east / (METERS_PER_DEG_LAT * math.cos(math.radians(self.lat)))
        return self.heading - heading0

    def pitch(self, s: float) -> float:
        seg = self._segment_at(s)
        if seg is not None and seg.kind == "slope":
            return math.atan(seg.grade / 100.0)
        return 0.0

    def in_bump(self, s: float) -> bool:
        seg = self._segment_at(s)
        return seg is not None and seg.kind == "speed_bump"

    def _segment_at(self, s: float):
        for seg, s0 in zip(self.route.segments, self.starts):
            if s0 <= s < s0 + seg.length:
                return seg
        return None


def _local_target(route: RouteSpec, starts, profile: StyleProfile,
                  s: float, wander: float = 0.0) -> float:
    seg = route.segments[-1]
    for candidate, s0 in zip(route.segments, starts):
        if s0 <= s < s0 + candidate.length:
            seg = candidate
            break
    target = _segment_target(seg, profile, wander)
    for zone in route.traffic_zones:
        if zone.start <= s < zone.end:
            target = min(target, zone.cap_kmh / 3.6)
    return target


def simulate(cfg: SimConfig) -> Dataset:
    """Run one trip and return its labeled 1 Hz registers."""
    route, profile = cfg.route, cfg.profile
    # behavior and measurement noise use separate substreams
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence((cfg.seed, 1))))
    meas_rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence((cfg.seed, 2))))
    starts = route.segment_starts()
    total = route.total_length
    events = _build_events(route, profile)
    geo = _GeometryCursor(route)

    s = 0.0
    v = 0.0  # m/s
    wander = 0.0
    wander_step = profile.cruise_wander * math.sqrt(1.0 - _WANDER_RHO ** 2)
    clock = cfg.start_time_of_day
    dwell_left = 0
    dwell_armed_event = None
    event_idx = 0
    bump_fresh = True
    registers = []

    sig_fax, sig_fay, sig_faz = profile.accel_meas_noise
    sig_fgx, sig_fgy, sig_fgz = profile.gyro_meas_noise

    for _ in range(min(cfg.max_duration_s, _MAX_TRIP_STEPS)):
        # order: speed, lat, lon, fax, fay, faz, fgx, fgy, fgz
        eps = meas_rng.standard_normal(9)

        # expire events the vehicle has passed (stops only once served)
        while event_idx < len(events):
            pos, _, is_stop = events[event_idx]
            if is_stop:
                break
            if s >= pos:
                event_idx += 1
            else:
                break

        wander = _WANDER_RHO * wander + wander_step * float(rng.standard_normal())
        wander = max(-2.5 * profile.cruise_wander,
                     min(2.5 * profile.cruise_wander, wander))
        target = _local_target(route, starts, profile, s, wander)
        for pos, v_evt, is_stop in events[event_idx:]:
            gap = pos - s
            if gap > 600.0:
                break
            allowed = math.sqrt(v_evt * v_evt + 2.0 * profile.brake_mag * max(0.0, gap))
            target = min(target, allowed)

        # stop-line service: come to rest near the line, dwell, then move on
        if event_idx < len(events) and events[event_idx][2]:
            stop_pos = events[event_idx][0]
            if dwell_left == 0 and dwell_armed_event != event_idx \
                    and s >= stop_pos - 4.0 and v <= 0.8:
                dwell_left = max(0, int(round(profile.stop_dwell_s + rng.uniform(-0.5, 0.5))))
                dwell_armed_event = event_idx
                if dwell_left == 0:
                    event_idx += 1  # rolling stop

        if dwell_left > 0:
            accel_actual = -v
            v_new = 0.0
            dwell_left -= 1
            if dwell_left == 0:
                event_idx += 1
        else:
            a_cmd = max(-profile.brake_mag, min(profile.accel_mag, target - v))
            a_cmd += profile.accel_noise * float(rng.standard_normal())
            a_cmd = max(-(profile.brake_mag + 0.6), min(profile.accel_mag + 0.6, a_cmd))
            v_new = max(0.0, v + a_cmd)
            accel_actual = v_new - v

        ds = (v + v_new) / 2.0
        if s + ds >= total:
            break  # trip ends; a truncated final step would distort the path
        dpsi_deg = geo.advance(s, ds)
        s_new = s + ds
        s_mid = s + ds / 2.0
        clock += 1.0

        pitch = geo.pitch(s_mid)
        bump_jolt = 0.0
        if geo.in_bump(s_mid):
            amp = min(6.0, 0.10 * v_new * v_new)
            bump_jolt = amp if bump_fresh else -0.4 * amp
            bump_fresh = False
        else:
            bump_fresh = True

        yaw_rate_rad = math.radians(dpsi_deg)  # per 1 s step
        registers.append(Register(
            time_of_day=clock % 86400.0,
            latitude=geo.lat + profile.position_noise_m * eps[1] / METERS_PER_DEG_LAT,
            longitude=geo.lon + profile.position_noise_m * eps[2]
            / (METERS_PER_DEG_LAT * math.cos(math.radians(geo.lat))),
            velocity=max(0.0, v_new * 3.6
                         + profile.speed_noise_kmh * min(1.0, v_new) * eps[0]),
            fax=accel_actual + STANDARD_GRAVITY * math.sin(pitch) + sig_fax * eps[3],
            fay=v_new * yaw_rate_rad + sig_fay * eps[4],
            faz=STANDARD_GRAVITY * math.cos(pitch) + bump_jolt + sig_faz * eps[5],
            fgx=sig_fgx * eps[6],
            fgy=sig_fgy * eps[7],
            fgz=dpsi_deg + sig_fgz * eps[8],
            label=profile.style,
        ))
        s = s_new
        v = v_new

    return Dataset(tuple(registers), source="simulated")


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(parts).generate_state(1, np.uint64)[0])


def _jittered_profile(profile: StyleProfile, rng: np.random.Generator) -> StyleProfile:
    """Small per-repetition variation: no two drives are identical."""
    return replace(
        profile,
        cruise_fraction=profile.cruise_fraction * (1.0 + rng.uniform(-0.02, 0.02)),
        accel_mag=profile.accel_mag * (1.0 + rng.uniform(-0.06, 0.06)),
        brake_mag=profile.brake_mag * (1.0 + rng.uniform(-0.06, 0.06)),
    )


def simulate_experiment(route: RouteSpec, seed: int, repetitions: int = 3,
                        start_time_of_day: float = 32400.0) -> Dataset:
    """The full driving-test protocol: 3 styles x 3 repetitions, one driver.

    Each trip is a separate outing leaving around the same time of day
    (seeded departure jitter of up to ten minutes), so the clock mostly
    encodes progress along the route rather than naming the trip.  The
    registers are concatenated grouped by style.
    """
    schedule_rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence((seed, 202))))
    by_style: dict[DrivingStyle, list[Register]] = {
        DrivingStyle.CON: [], DrivingStyle.NOR: [], DrivingStyle.AGG: [],
    }
    for rep in range(repetitions):
        for style in (DrivingStyle.CON, DrivingStyle.NOR, DrivingStyle.AGG):
            jitter_rng = np.random.Generator(np.random.Philox(
                np.random.SeedSequence((seed, 303, int(style), rep))))
            profile = _jittered_profile(style_profile(style), jitter_rng)
            departure = start_time_of_day + float(schedule_rng.uniform(0.0, 600.0))
            cfg = SimConfig(
                route=route,
                profile=profile,
                seed=_derived_seed(seed, int(style), rep),
                start_time_of_day=departure % 86400.0,
            )
            by_style[style].extend(simulate(cfg).registers)

    ordered = (by_style[DrivingStyle.CON] + by_style[DrivingStyle.NOR]
               + by_style[DrivingStyle.AGG])
    return Dataset(tuple(ordered), source="simulated")
