"""Raw sensor ingestion: NMEA fixes, IMU counts, fusion, and the CSV log.

The node reads a GPS receiver emitting NMEA 0183 RMC sentences and an
inertial unit emitting signed 16-bit counts.  Both captured streams are fused
into 1 Hz registers: each valid fix becomes one register whose inertial
channels are the average of the IMU samples that fell inside the fix's
one-second window, converted to physical units.  Registers are persisted as
a CSV log, the file-based analogue of the node's SD card.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import (
    BadChecksum,
    MalformedField,
    ParseError,
    UnsupportedSentence,
)
from .records import Dataset, DrivingStyle, Register, validate_register

STANDARD_GRAVITY = 9.80665       # m/s^2
ACCEL_LSB_PER_G = 16384.0        # accelerometer sensitivity at the +/-2 g range
GYRO_LSB_PER_DPS = 131.0         # gyro sensitivity at the +/-250 deg/s range
KMH_PER_KNOT = 1.852

LOG_HEADER = "time_s,lat_deg,lon_deg,speed_kmh,fax,fay,faz,fgx,fgy,fgz,label"
_LOG_COLUMNS = LOG_HEADER.split(",")


@dataclass(frozen=True)
class NmeaFix:
    """One decoded RMC fix (times are UTC seconds since midnight)."""

    utc_time: float
    latitude: float
    longitude: float
    speed_kmh: float
    valid: bool


@dataclass(frozen=True)
class ImuRawSample:
    """One raw IMU reading: monotonic timestamp plus signed 16-bit counts."""

    timestamp: float
    ax: int
    ay: int
    az: int
    gx: int
    gy: int
    gz: int


def accel_raw_to_ms2(count: float) -> float:
    """Accelerometer counts to m/s^2 (count / LSB-per-g * standard gravity)."""
    return count / ACCEL_LSB_PER_G * STANDARD_GRAVITY


def gyro_raw_to_dps(count: float, lsb_per_dps: float = GYRO_LSB_PER_DPS) -> float:
    """Gyro counts to degrees/s at the given full-scale sensitivity."""
    return count / lsb_per_dps


def nmea_checksum(payload: str) -> int:
    """XOR of all characters between '$' and '*'."""
    value = 0
    for ch in payload:
        value ^= ord(ch)
    return value


def _split_checked(sentence: str) -> list[str]:
    line = sentence.strip()
    if not line.startswith("$"):
        raise MalformedField(f"sentence does not start with '$': {line[:20]!r}")
    star = line.rfind("*")
    if star == -1 or len(line) < star + 3:
        raise BadChecksum(f"missing checksum suffix: {line[:30]!r}")
    payload, suffix = line[1:star], line[star + 1:star + 3]
    try:
        declared = int(suffix, 16)
    except ValueError:
        raise BadChecksum(f"non-hex checksum {suffix!r}") from None
    if nmea_checksum(payload) != declared:
        raise BadChecksum(
            f"checksum mismatch: computed {nmea_checksum(payload):02X}, "
            f"declared {suffix.upper()}"
        )
    return payload.split(",")


def _parse_utc(field: str) -> float:
    if len(field) < 6:
        raise MalformedField(f"bad UTC time field: {field!r}")
    try:
        hours = int(field[0:2])
        minutes = int(field[2:4])
        seconds = float(field[4:])
    except ValueError:
        raise MalformedField(f"bad UTC time field: {field!r}") from None
    return hours * 3600.0 + minutes * 60.0 + seconds


def _parse_angle(field: str, hemi: str, degree_digits: int) -> float:
    # ddmm.mmmm (lat) or dddmm.mmmm (lon): degrees then decimal minutes
    if len(field) <= degree_digits:
        raise MalformedField(f"bad coordinate field: {field!r}")
    try:
        degrees = int(field[:degree_digits])
        minutes = float(field[degree_digits:])
    except ValueError:
        raise MalformedField(f"bad coordinate field: {field!r}") from None
    if minutes >= 60.0:
        raise MalformedField(f"minutes out of range in {field!r}")
    value = degrees + minutes / 60.0
    if hemi in ("S", "W"):
        return -value
    if hemi in ("N", "E"):
        return value
    raise MalformedField(f"bad hemisphere {hemi!r}")


def parse_rmc(sentence: str) -> NmeaFix:
    """Decode a $GPRMC/$GNRMC sentence into an NmeaFix.

    Speed over ground is converted from knots to km/h.  Fixes with status
    'V' are returned with valid=False (and zeroed channels when the receiver
    left them empty); downstream fusion skips them.
    """
    fields = _split_checked(sentence)
    talker = fields[0]
    if talker not in ("GPRMC", "GNRMC"):
        raise UnsupportedSentence(f"not an RMC sentence: ${talker}")
    if len(fields) < 8:
        raise MalformedField(f"RMC sentence has only {len(fields)} fields")

    status = fields[2]
    if status not in ("A", "V"):
        raise MalformedField(f"bad status flag {status!r}")
    valid = status == "A"

    if not valid and not fields[3]:
        # receivers commonly blank the position while searching for a fix
        utc = _parse_utc(fields[1]) if fields[1] else 0.0
        return NmeaFix(utc, 0.0, 0.0, 0.0, False)

    utc = _parse_utc(fields[1])
    lat = _parse_angle(fields[3], fields[4], 2)
    lon = _parse_angle(fields[5], fields[6], 3)
    try:
        knots = float(fields[7]) if fields[7] else 0.0
    except ValueError:
        raise MalformedField(f"bad speed field: {fields[7]!r}") from None
    if knots < 0:
        raise MalformedField(f"negative speed: {fields[7]!r}")
    return NmeaFix(utc, lat, lon, knots * KMH_PER_KNOT, valid)


@dataclass(frozen=True)
class FusionResult:
    """Registers produced by fusion plus the bookkeeping counters."""

    registers: tuple[Register, ...]
    valid_fixes: int
    dropped: int  # valid fixes with no IMU sample in their window

    def dataset(self, source: str = "ingested") -> Dataset:
        return Dataset(self.registers, source)


def fuse(
    fixes: Iterable[NmeaFix],
    imu: Iterable[ImuRawSample],
    gyro_lsb_per_dps: float = GYRO_LSB_PER_DPS,
) -> FusionResult:
    """Align both time-ordered streams into 1 Hz registers.

    Each valid fix at time t consumes the IMU samples with timestamp in
    (t - 1, t]; their per-channel averages are converted to physical units.
    Valid fixes with an empty window are dropped and counted, never fatal.
    IMU timestamps must be on the same time base as the fix times.
    """
    samples = list(imu)
    registers = []
    valid_fixes = 0
    dropped = 0
    start = 0
    for fix in fixes:
        if not fix.valid:
            continue
        valid_fixes += 1
        while start < len(samples) and samples[start].timestamp <= fix.utc_time - 1.0:
            start += 1
        end = start
        while end < len(samples) and samples[end].timestamp <= fix.utc_time:
            end += 1
        window = samples[start:end]
        start = end
        if not window:
            dropped += 1
            continue
        n = len(window)
        registers.append(Register(
            time_of_day=fix.utc_time,
            latitude=fix.latitude,
            longitude=fix.longitude,
            velocity=fix.speed_kmh,
            fax=accel_raw_to_ms2(sum(s.ax for s in window) / n),
            fay=accel_raw_to_ms2(sum(s.ay for s in window) / n),
            faz=accel_raw_to_ms2(sum(s.az for s in window) / n),
            fgx=gyro_raw_to_dps(sum(s.gx for s in window) / n, gyro_lsb_per_dps),
            fgy=gyro_raw_to_dps(sum(s.gy for s in window) / n, gyro_lsb_per_dps),
            fgz=gyro_raw_to_dps(sum(s.gz for s in window) / n, gyro_lsb_per_dps),
        ))
    return FusionResult(tuple(registers), valid_fixes, dropped)


def read_nmea_lines(lines: Iterable[str]) -> tuple[list[NmeaFix], int]:
    """Parse a captured NMEA stream, skipping unusable lines.

    Returns the decoded fixes and the count of lines that failed checksum
    or field parsing.  Non-RMC sentences are ignored silently (a live feed
    interleaves many sentence types).
    """
    fixes = []
    skipped = 0
    for line in lines:
        if not line.strip():
            continue
        try:
            fixes.append(parse_rmc(line))
        except UnsupportedSentence:
            continue
        except (BadChecksum, MalformedField):
            skipped += 1
    return fixes, skipped


_IMU_HEADER = "timestamp_s,ax,ay,az,gx,gy,gz"


def read_imu_csv(path) -> list[ImuRawSample]:
    """Read raw IMU counts from `timestamp_s,ax,ay,az,gx,gy,gz` CSV."""
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if lineno == 1 and line.replace(" ", "") == _IMU_HEADER:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise ParseError(lineno, 1, line, "expected 7 columns")
            try:
                ts = float(parts[0])
                counts = [int(p) for p in parts[1:]]
            except ValueError as exc:
                raise ParseError(lineno, 1, line, str(exc)) from None
            for col, c in enumerate(counts, start=2):
                if not -32768 <= c <= 32767:
                    raise ParseError(lineno, col, parts[col - 1],
                                     "count outside signed 16-bit range")
            samples.append(ImuRawSample(ts, *counts))
    return samples


def format_register(r: Register) -> str:
    """One CSV row; numeric fields carry six decimal digits."""
    label = r.label.name if r.label is not None else ""
    values = (r.time_of_day, r.latitude, r.longitude, r.velocity,
              r.fax, r.fay, r.faz, r.fgx, r.fgy, r.fgz)
    return ",".join(f"{v:.6f}" for v in values) + f",{label}"


def write_log(data: Dataset, path) -> None:
    """Write the register CSV log (header plus one row per register)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(LOG_HEADER + "\n")
        for r in data:
            fh.write(format_register(r) + "\n")


def parse_log_row(line: str, lineno: int) -> Register:
    parts = line.split(",")
    if len(parts) != len(_LOG_COLUMNS):
        raise ParseError(lineno, 1, line,
                         f"expected {len(_LOG_COLUMNS)} columns, got {len(parts)}")
    values = []
    for col, text in enumerate(parts[:-1], start=1):
        try:
            value = float(text)
        except ValueError:
            raise ParseError(lineno, col, text, "not a number") from None
        if not math.isfinite(value):
            raise ParseError(lineno, col, text, "not finite")
        values.append(value)
    label_text = parts[-1].strip()
    if label_text:
        try:
            label = DrivingStyle.from_label(label_text)
        except ValueError:
            raise ParseError(lineno, len(parts), label_text,
                             "unknown label") from None
    else:
        label = None
    register = Register(*values, label=label)
    try:
        return validate_register(register)
    except Exception as exc:
        raise ParseError(lineno, 1, line, str(exc)) from None


def read_log(path) -> Dataset:
    """Read a register CSV log written by write_log (or a compatible tool)."""
    path = Path(path)
    registers = []
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first and first != LOG_HEADER:
            raise ParseError(1, 1, first, "unexpected header")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            registers.append(parse_log_row(line, lineno))
    return Dataset(tuple(registers), source=str(path))
