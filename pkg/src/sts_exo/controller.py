"""Torso-pressure intention mapping and a kinematic drive simulator.

Ten 25 mm pressure sensors cover a 250 mm band around the torso bar, sensor 0
at the user's left end. Commands derive from the center of pressure and the
peak pressure: centered pressure drives forward, lateral offset turns the
base (COP toward the left end yields a positive, counter-clockwise turn
rate), and pressing both end sensors together for a debounce interval backs
up at a fixed low speed.

The COP offset is computed on a mid-centered sensor grid so that mirroring a
frame about the band midpoint negates the turn rate exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, RangeError

SENSOR_COUNT = 10
SENSOR_PITCH = 0.025          # m
BAND_LENGTH = SENSOR_COUNT * SENSOR_PITCH
BAND_MID = BAND_LENGTH / 2.0
DEFAULT_SENSOR_MAX = 0.16     # N/cm^2


@dataclass(frozen=True)
class PressureFrame:
    values: np.ndarray        # N/cm^2, sensor 0 .. 9
    timestamp: float = 0.0    # s

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (SENSOR_COUNT,):
            raise RangeError(f"need {SENSOR_COUNT} sensor values, got {vals.shape}")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise RangeError("sensor values must be finite and non-negative")
        object.__setattr__(self, "values", vals)

    def mirrored(self) -> "PressureFrame":
        return PressureFrame(self.values[::-1].copy(), self.timestamp)


@dataclass(frozen=True)
class VelocityCommand:
    v: float       # m/s
    omega: float   # rad/s


@dataclass(frozen=True)
class ControlGains:
    v_max: float = 1.4            # full walking speed
    omega_max: float = 1.5
    k1: float | None = None       # (m/s) per (N/cm^2); defaults saturate at sensor_max
    k2: float | None = None
    sensor_max: float = DEFAULT_SENSOR_MAX
    backward_threshold: float = 0.08
    rate_limit: tuple[float, float] = (2.0, 4.0)   # m/s^2, rad/s^2
    debounce_frames: int = 3
    reverse_speed_frac: float = 0.25

    def __post_init__(self):
        if self.v_max <= 0 or self.omega_max <= 0 or self.sensor_max <= 0:
            raise RangeError("limits must be positive")
        if self.k1 is None:
            object.__setattr__(self, "k1", self.v_max / self.sensor_max)
        if self.k2 is None:
            object.__setattr__(self, "k2", self.omega_max / self.sensor_max)
        if self.k1 <= 0 or self.k2 <= 0:
            raise RangeError("gains must be positive")
        if min(self.rate_limit) <= 0 or self.debounce_frames < 1:
            raise RangeError("rate limits must be positive, debounce_frames >= 1")


def _cop_offset(values: np.ndarray) -> float:
    """Signed COP offset from the band midpoint in sensor-index units (-4.5 .. 4.5)."""
    total = values.sum()
    if total <= 0.0:
        return 0.0
    idx = np.arange(SENSOR_COUNT) - (SENSOR_COUNT - 1) / 2.0
    return float((values * idx).sum() / total)


def compute_cop(frame: PressureFrame) -> tuple[float, float]:
    """(rho, P): center of pressure along the band (m) and peak pressure.

    rho is the band midpoint when no sensor is pressed.
    """
    offset = _cop_offset(frame.values)
    return BAND_MID + offset * SENSOR_PITCH, float(frame.values.max())


def detect_backward(frame: PressureFrame, gains: ControlGains) -> bool:
    """Instantaneous both-end-sensors condition; debouncing lives in PressureController."""
    return bool(frame.values[0] > gains.backward_threshold and
                frame.values[-1] > gains.backward_threshold)


def map_to_velocity(frame: PressureFrame, gains: ControlGains) -> VelocityCommand:
    """Proportional split of K * P into forward speed and turn rate by COP offset."""
    vals = np.minimum(frame.values, gains.sensor_max)
    P = float(vals.max())
    if P <= 0.0:
        return VelocityCommand(0.0, 0.0)
    offset = _cop_offset(vals) / ((SENSOR_COUNT - 1) / 2.0)   # normalized [-1, 1]
    v = gains.k1 * P * (1.0 - abs(offset))
    omega = -gains.k2 * P * offset          # COP left of center turns CCW
    v = min(max(v, 0.0), gains.v_max)
    omega = min(max(omega, -gains.omega_max), gains.omega_max)
    return VelocityCommand(v, omega)


class PressureController:
    """Single-owner mapping with backward debounce and command rate limiting.

    One instance per sensor stream; update() consumes frames in time order.
    """

    def __init__(self, gains: ControlGains):
        self.gains = gains
        self._backward_count = 0
        self._last: VelocityCommand | None = None
        self._last_time: float | None = None

    def update(self, frame: PressureFrame) -> VelocityCommand:
        g = self.gains
        if detect_backward(frame, g):
            self._backward_count += 1
        else:
            self._backward_count = 0
        if self._backward_count >= g.debounce_frames:
            cmd = VelocityCommand(-g.reverse_speed_frac * g.v_max, 0.0)
        else:
            cmd = map_to_velocity(frame, g)
        if self._last is not None and frame.timestamp > self._last_time:
            dt = frame.timestamp - self._last_time
            dv = min(max(cmd.v - self._last.v, -g.rate_limit[0] * dt),
                     g.rate_limit[0] * dt)
            dw = min(max(cmd.omega - self._last.omega, -g.rate_limit[1] * dt),
                     g.rate_limit[1] * dt)
            cmd = VelocityCommand(self._last.v + dv, self._last.omega + dw)
        self._last, self._last_time = cmd, frame.timestamp
        return cmd


def simulate_drive(commands, dt: float, gains: ControlGains | None = None) -> np.ndarray:
    """Integrate unicycle kinematics under a command sequence.

    Uses the exact constant-twist arc over each step, so a constant turn
    closes its circle to machine precision. When gains are given, the
    acceleration rate limits are applied between successive commands.
    Returns poses (len(commands) + 1, 3) as (x, y, heading).
    """
    if dt <= 0:
        raise RangeError("dt must be positive")
    path = np.zeros((len(commands) + 1, 3))
    v_act, w_act = 0.0, 0.0
    x, y, th = 0.0, 0.0, 0.0
    for k, cmd in enumerate(commands):
        if gains is None:
            v_act, w_act = cmd.v, cmd.omega
        else:
            dv_max = gains.rate_limit[0] * dt
            dw_max = gains.rate_limit[1] * dt
            v_act += min(max(cmd.v - v_act, -dv_max), dv_max)
            w_act += min(max(cmd.omega - w_act, -dw_max), dw_max)
        if abs(w_act) > 1e-12:
            x += v_act / w_act * (math.sin(th + w_act * dt) - math.sin(th))
            y += -v_act / w_act * (math.cos(th + w_act * dt) - math.cos(th))
            th += w_act * dt
        else:
            x += v_act * math.cos(th) * dt
            y += v_act * math.sin(th) * dt
        path[k + 1] = (x, y, th)
    return path


def read_pressure_log(path) -> list[PressureFrame]:
    """Read a CSV pressure log with header t,s0..s9."""
    frames = []
    expected = ["t"] + [f"s{i}" for i in range(SENSOR_COUNT)]
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != expected:
            raise ParseError(f"pressure log must start with header {','.join(expected)}",
                             line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != SENSOR_COUNT + 1:
                raise ParseError(f"expected {SENSOR_COUNT + 1} columns, got {len(row)}",
                                 line=lineno)
            try:
                t = float(row[0])
                vals = np.array([float(v) for v in row[1:]])
            except ValueError as exc:
                raise ParseError(f"unparseable number in row: {exc}", line=lineno) \
                    from exc
            try:
                frames.append(PressureFrame(vals, t))
            except RangeError as exc:
                raise ParseError(str(exc), line=lineno) from exc
    return frames
