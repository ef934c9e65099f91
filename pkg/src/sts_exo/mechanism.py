"""Direction-dependent double wire-pulley transmission and gas-spring actuator.

Frames and conventions
----------------------
Everything is planar. The base frame (link 1, the shank-side exoskeleton
frame) has its origin at the knee joint with world-aligned axes: +x points
in the user's facing direction, +y up. Anchor points n, o, p live in this
frame. The thigh frame (link 2) also originates at the knee; its +x axis
points along the thigh toward the hip, so a thigh-local point x maps to the
base frame as R(pi - q2) x, where q2 is the knee transition coordinate
(0 = seated, pi/2 = standing).

The hip coordinate q3 is 0 for an upright seated torso, positive leaning
forward, and -pi/2 at upright standing. The backward-engagement field `beta`
is the lean relative to standing, so circuit P2 engages at the absolute hip
angle q_s + beta.

Wires are massless, inextensible, straight between anchors, with arc wrap
only at the hip pulley; routing losses are lumped into a single efficiency.
Free wire length of each circuit:

    P1:  |p - w(q2)| + |v(q2) - o| + r1 * q3
    P2:  |n - u(q2)| - r2 * q3

Holding an engaged circuit's length constant at its engagement value yields
the hip-knee coupling map in closed form.

Joint load torques `tau2`, `tau3` passed to the moment-balance functions are
the chain-coordinate inverse-dynamics torques (see `dynamics`); the returned
knee moment Mo is the residual demand in the q2 direction (positive =
extension assistance required).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (CouplingInfeasible, GeometryError, RangeError, SchemaError,
                     SlackWireError, StrokeError)

D2R = math.pi / 180.0

# default pulley radius bounds [m]
RADIUS_BOUNDS = (0.01, 0.08)

# hip angle range searched by the coupling maps [rad]
HIP_RANGE = (-150.0 * D2R, 80.0 * D2R)

_EPS_LEN = 1e-9


@dataclass(frozen=True)
class EngagementAngles:
    """Transition angle configuration (rad).

    gamma: forward lean engaging P1, measured from the upright seated torso.
    beta:  backward lean engaging P2, measured from the standing torso q_s
           (negative values lean backward); the absolute engagement hip angle
           is q_s + beta.
    delta: final sitting hip angle. q_s: standing hip angle.
    q_o / q_f: knee angle seated / standing.
    """

    gamma: float = 24.0 * D2R
    beta: float = -12.0 * D2R
    delta: float = -45.0 * D2R
    q_s: float = -90.0 * D2R
    q_o: float = 0.0
    q_f: float = 90.0 * D2R
    hysteresis: float = 0.5 * D2R

    def __post_init__(self):
        if not self.q_o < self.q_f:
            raise RangeError("need q_o < q_f")
        if not self.gamma > self.q_s:
            raise RangeError("need gamma > q_s")
        if not self.beta > self.delta:
            raise RangeError("need beta > delta")
        if self.hysteresis < 0:
            raise RangeError("hysteresis must be >= 0")

    @property
    def beta_abs(self) -> float:
        """Absolute hip angle at which P2 engages."""
        return self.q_s + self.beta


@dataclass(frozen=True)
class DesignVector:
    """Optimization argument: pulley anchors, radii and transmission efficiency.

    u, v, w are thigh-frame points; n, o, p base-frame points; all in meters.
    """

    u: tuple[float, float]
    v: tuple[float, float]
    w: tuple[float, float]
    n: tuple[float, float]
    o: tuple[float, float]
    p: tuple[float, float]
    r1: float
    r2: float
    eta: float = 1.0

    def __post_init__(self):
        vals = [*self.u, *self.v, *self.w, *self.n, *self.o, *self.p,
                self.r1, self.r2, self.eta]
        if any(not math.isfinite(v) for v in vals):
            raise RangeError("non-finite design entries")
        if self.r1 <= 0 or self.r2 <= 0:
            raise GeometryError("pulley radii must be positive")
        if not 0.0 < self.eta <= 1.0:
            raise RangeError(f"eta must be in (0, 1], got {self.eta}")

    def to_array(self) -> np.ndarray:
        return np.array([*self.u, *self.v, *self.w, *self.n, *self.o, *self.p,
                         self.r1, self.r2, self.eta])

    @classmethod
    def from_array(cls, x) -> "DesignVector":
        x = [float(v) for v in x]
        if len(x) != 15:
            raise RangeError(f"design array must have 15 entries, got {len(x)}")
        return cls(u=(x[0], x[1]), v=(x[2], x[3]), w=(x[4], x[5]),
                   n=(x[6], x[7]), o=(x[8], x[9]), p=(x[10], x[11]),
                   r1=x[12], r2=x[13], eta=x[14])


@dataclass(frozen=True)
class WireTensions:
    """Circuit tensions in N; zero entries mean the circuit is disengaged."""

    T_i: float = 0.0
    T_o: float = 0.0
    T_u: float = 0.0

    def __post_init__(self):
        if min(self.T_i, self.T_o, self.T_u) < 0:
            raise SlackWireError("wire tensions cannot be negative")


@dataclass(frozen=True)
class GasSpring:
    f0: float                 # zero-crossing (preload) force, N
    ka: float                 # spring rate, N/m
    Da: float                 # damping, N s/m
    stroke: float             # m
    eta_t: float = 1.0        # power-transfer efficiency
    lam: tuple[float, float, float] = (0.0, 0.0, 0.0)  # fitted polynomial, N / N/m / N/m^2
    force_mode: str = "ideal"  # "ideal" | "fitted"
    compression_scale: float = 1.0
    extension_scale: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.f0 <= 0 or self.stroke <= 0:
            raise RangeError("f0 and stroke must be positive")
        if not 0.0 < self.eta_t <= 1.0:
            raise RangeError("eta_t must be in (0, 1]")
        if self.force_mode not in ("ideal", "fitted"):
            raise RangeError(f"unknown force_mode {self.force_mode!r}")


@dataclass(frozen=True)
class ActuatorPlacement:
    a: tuple[float, float]    # thigh-frame mount
    b: tuple[float, float]    # base-frame mount
    spring_count: int = 2
    free_length: float | None = None  # extended spring length; set via fit_free_length

    def __post_init__(self):
        if self.spring_count not in (2, 3):
            raise RangeError("spring_count must be 2 or 3")


# ---------------------------------------------------------------------------
# geometry helpers

def thigh_to_base(point, q2):
    """Map a thigh-frame point into the base frame at knee angle q2.

    Accepts scalar or array q2; returns shape (2,) or (N, 2).
    """
    x, y = point
    q2 = np.asarray(q2, dtype=float)
    c, s = -np.cos(q2), np.sin(q2)      # cos/sin of (pi - q2)
    out = np.stack([c * x - s * y, s * x + c * y], axis=-1)
    return out


def _dist(a, b):
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return np.linalg.norm(d, axis=-1)


def _p1_segment_sum(design: DesignVector, q2):
    w_b = thigh_to_base(design.w, q2)
    v_b = thigh_to_base(design.v, q2)
    return _dist(np.asarray(design.p), w_b) + _dist(v_b, np.asarray(design.o))


def _p2_segment(design: DesignVector, q2):
    u_b = thigh_to_base(design.u, q2)
    return _dist(np.asarray(design.n), u_b)


# ---------------------------------------------------------------------------
# circuit lengths and coupling maps

def circuit_length_p1(design: DesignVector, q2, q3):
    """Free wire length of the standing circuit at posture (q2, q3)."""
    if design.r1 <= 0:
        raise GeometryError("r1 must be positive")
    return _p1_segment_sum(design, q2) + design.r1 * np.asarray(q3, dtype=float)


def circuit_length_p2(design: DesignVector, q2, q3):
    """Free wire length of the sitting circuit at posture (q2, q3)."""
    if design.r2 <= 0:
        raise GeometryError("r2 must be positive")
    return _p2_segment(design, q2) - design.r2 * np.asarray(q3, dtype=float)


def coupling_map_standing(design: DesignVector, angles: EngagementAngles, q2,
                          hip_range: tuple[float, float] = HIP_RANGE):
    """Hip angle coupled to q2 by the taut P1 circuit (engaged at (q_o, gamma))."""
    engaged_length = _p1_segment_sum(design, angles.q_o) + design.r1 * angles.gamma
    q3 = (engaged_length - _p1_segment_sum(design, q2)) / design.r1
    lo, hi = hip_range
    if np.any(q3 < lo) or np.any(q3 > hi):
        raise CouplingInfeasible(
            f"standing coupling leaves hip range [{lo:.3f}, {hi:.3f}] rad")
    return q3


def coupling_map_sitting(design: DesignVector, angles: EngagementAngles, q2,
                         hip_range: tuple[float, float] = HIP_RANGE):
    """Hip angle coupled to q2 by the taut P2 circuit (engaged at (q_f, q_s + beta))."""
    engaged_length = _p2_segment(design, angles.q_f) - design.r2 * angles.beta_abs
    q3 = (_p2_segment(design, q2) - engaged_length) / design.r2
    lo, hi = hip_range
    if np.any(q3 < lo) or np.any(q3 > hi):
        raise CouplingInfeasible(
            f"sitting coupling leaves hip range [{lo:.3f}, {hi:.3f}] rad")
    return q3


def coupling_residuals(design: DesignVector, angles: EngagementAngles) -> tuple[float, float]:
    """Endpoint misses of the synchronous-motion equality constraints (rad).

    First entry: standing map miss q3(q_f) - q_s. Second: sitting map miss
    q3(q_o) - delta. Both are zero when the wire-length equality constraints
    hold exactly.
    """
    sum_o = _p1_segment_sum(design, angles.q_o)
    sum_f = _p1_segment_sum(design, angles.q_f)
    res_std = (angles.gamma + (sum_o - sum_f) / design.r1) - angles.q_s
    seg_f = _p2_segment(design, angles.q_f)
    seg_o = _p2_segment(design, angles.q_o)
    res_sit = (angles.beta_abs + (seg_o - seg_f) / design.r2) - angles.delta
    return float(res_std), float(res_sit)


# ---------------------------------------------------------------------------
# knee moment balance

def _unit(vec, what: str):
    norm = np.linalg.norm(vec)
    if norm < _EPS_LEN:
        raise GeometryError(f"coincident anchor points: {what} segment has zero length")
    return vec / norm


def knee_moment_standing(design: DesignVector, angles: EngagementAngles, q2: float,
                         tau2: float, tau3: float) -> tuple[float, WireTensions]:
    """Net knee demand and P1 tensions for the standing-direction hip load.

    The hip-pulley balance gives the pulley-side tension T_i = tau3 / r1
    (requires tau3 >= 0: the torso leans forward); the transmitted segment
    carries T_o = eta * T_i. Mo = -tau2 + (w x T_i) + (v x T_o) with the
    anchor positions in the base frame.
    """
    T_i = tau3 / design.r1
    if T_i < -1e-12:
        raise SlackWireError(
            f"standing circuit needs tension {T_i:.3f} N: hip load is in the "
            f"sitting direction")
    T_i = max(T_i, 0.0)
    T_o = design.eta * T_i

    w_b = thigh_to_base(design.w, q2)
    v_b = thigh_to_base(design.v, q2)
    p = np.asarray(design.p, dtype=float)
    o = np.asarray(design.o, dtype=float)

    if T_i == 0.0:
        return -tau2, WireTensions()
    f_w = T_i * _unit(p - w_b, "p-w")
    f_v = T_o * _unit(o - v_b, "v-o")
    mo = -tau2 + float(np.cross(w_b, f_w)) + float(np.cross(v_b, f_v))
    return mo, WireTensions(T_i=T_i, T_o=T_o)


def knee_moment_sitting(design: DesignVector, angles: EngagementAngles, q2: float,
                        tau2: float, tau3: float) -> tuple[float, WireTensions]:
    """Net knee demand and P2 tension for the sitting-direction hip load.

    The pulley balance with the lumped efficiency delivers T_u = eta * |tau3|
    / r2 at the u anchor (requires tau3 <= 0: the torso leans backward).
    """
    T_pulley = -tau3 / design.r2
    if T_pulley < -1e-12:
        raise SlackWireError(
            f"sitting circuit needs tension {T_pulley:.3f} N: hip load is in "
            f"the standing direction")
    T_u = design.eta * max(T_pulley, 0.0)

    if T_u == 0.0:
        return -tau2, WireTensions()
    u_b = thigh_to_base(design.u, q2)
    n = np.asarray(design.n, dtype=float)
    f_u = T_u * _unit(n - u_b, "n-u")
    mo = -tau2 + float(np.cross(u_b, f_u))
    return mo, WireTensions(T_u=T_u)


def knee_moment_standing_batch(design: DesignVector, q2_arr, tau2_arr, tau3_arr):
    """Vectorized standing balance; clamps slack (tau3 < 0) samples to zero tension.

    Returns (Mo, T_i, T_o) arrays.
    """
    q2_arr = np.asarray(q2_arr, dtype=float)
    T_i = np.maximum(np.asarray(tau3_arr, dtype=float) / design.r1, 0.0)
    T_o = design.eta * T_i
    w_b = thigh_to_base(design.w, q2_arr)
    v_b = thigh_to_base(design.v, q2_arr)
    seg_wp = np.asarray(design.p) - w_b
    seg_vo = np.asarray(design.o) - v_b
    len_wp = np.linalg.norm(seg_wp, axis=-1)
    len_vo = np.linalg.norm(seg_vo, axis=-1)
    if np.any(len_wp < _EPS_LEN) or np.any(len_vo < _EPS_LEN):
        raise GeometryError("coincident anchor points in standing circuit")
    cross_w = (w_b[..., 0] * seg_wp[..., 1] - w_b[..., 1] * seg_wp[..., 0]) / len_wp
    cross_v = (v_b[..., 0] * seg_vo[..., 1] - v_b[..., 1] * seg_vo[..., 0]) / len_vo
    mo = -np.asarray(tau2_arr, dtype=float) + T_i * cross_w + T_o * cross_v
    return mo, T_i, T_o


def knee_moment_sitting_batch(design: DesignVector, q2_arr, tau2_arr, tau3_arr):
    """Vectorized sitting balance; clamps slack (tau3 > 0) samples to zero tension."""
    q2_arr = np.asarray(q2_arr, dtype=float)
    T_u = design.eta * np.maximum(-np.asarray(tau3_arr, dtype=float) / design.r2, 0.0)
    u_b = thigh_to_base(design.u, q2_arr)
    seg_un = np.asarray(design.n) - u_b
    len_un = np.linalg.norm(seg_un, axis=-1)
    if np.any(len_un < _EPS_LEN):
        raise GeometryError("coincident anchor points in sitting circuit")
    cross_u = (u_b[..., 0] * seg_un[..., 1] - u_b[..., 1] * seg_un[..., 0]) / len_un
    mo = -np.asarray(tau2_arr, dtype=float) + T_u * cross_u
    return mo, T_u


# ---------------------------------------------------------------------------
# gas spring actuator

def spring_force(spring: GasSpring, dx: float, dxdt: float = 0.0) -> float:
    """Axial force at compression dx (m) and compression rate dxdt (m/s)."""
    if not (-1e-9 <= dx <= spring.stroke + 1e-9):
        raise StrokeError(f"compression {dx:.4f} m outside [0, {spring.stroke}] m")
    dx = min(max(dx, 0.0), spring.stroke)
    if spring.force_mode == "ideal":
        static = (spring.f0 + spring.ka * dx) * spring.eta_t
    else:
        lam0, lam1, lam2 = spring.lam
        static = (lam0 + lam1 * dx + lam2 * dx * dx) * spring.eta_t
        if dxdt > 0:
            static *= spring.compression_scale
        elif dxdt < 0:
            static *= spring.extension_scale
    return static + spring.Da * dxdt


def spring_length(placement: ActuatorPlacement, q2):
    """Distance between the actuator mounts at knee angle q2."""
    a_b = thigh_to_base(placement.a, q2)
    return _dist(a_b, np.asarray(placement.b))


def fit_free_length(placement: ActuatorPlacement, angles: EngagementAngles,
                    samples: int = 181) -> ActuatorPlacement:
    """Return a placement whose free length puts the spring fully extended at
    the longest mount distance over the transition range."""
    q2 = np.linspace(angles.q_o, angles.q_f, samples)
    l_max = float(np.max(spring_length(placement, q2)))
    return ActuatorPlacement(a=placement.a, b=placement.b,
                             spring_count=placement.spring_count, free_length=l_max)


def actuator_torque(placement: ActuatorPlacement, spring: GasSpring,
                    q2: float, q2d: float = 0.0) -> float:
    """Knee torque (q2 direction) delivered by spring_count parallel springs."""
    if placement.free_length is None:
        raise RangeError("placement.free_length unset; call fit_free_length first")
    a_b = thigh_to_base(placement.a, q2)
    b = np.asarray(placement.b, dtype=float)
    rel = a_b - b
    length = float(np.linalg.norm(rel))
    if length < _EPS_LEN:
        raise GeometryError("actuator mounts coincide")
    dx = placement.free_length - length
    # d(length)/dq2 = cross(a_b, b) / length; compression rate is its negative
    dlen_dq2 = float(np.cross(a_b, b)) / length
    dxdt = -dlen_dq2 * q2d
    force = placement.spring_count * spring_force(spring, dx, dxdt)
    f_vec = force * rel / length
    return -float(np.cross(a_b, f_vec))


def actuator_torque_batch(placement: ActuatorPlacement, spring: GasSpring,
                          q2_arr, q2d_arr=0.0):
    """Vectorized actuator torque; raises StrokeError if any sample leaves the stroke."""
    if placement.free_length is None:
        raise RangeError("placement.free_length unset; call fit_free_length first")
    q2_arr = np.asarray(q2_arr, dtype=float)
    a_b = thigh_to_base(placement.a, q2_arr)
    b = np.asarray(placement.b, dtype=float)
    rel = a_b - b
    length = np.linalg.norm(rel, axis=-1)
    if np.any(length < _EPS_LEN):
        raise GeometryError("actuator mounts coincide")
    dx = placement.free_length - length
    if np.any(dx < -1e-9) or np.any(dx > spring.stroke + 1e-9):
        raise StrokeError("actuator sweep leaves the spring stroke")
    dx = np.clip(dx, 0.0, spring.stroke)
    cross_ab = a_b[..., 0] * b[1] - a_b[..., 1] * b[0]
    dxdt = -(cross_ab / length) * np.asarray(q2d_arr, dtype=float)
    if spring.force_mode == "ideal":
        static = (spring.f0 + spring.ka * dx) * spring.eta_t
    else:
        lam0, lam1, lam2 = spring.lam
        static = (lam0 + lam1 * dx + lam2 * dx * dx) * spring.eta_t
        scale = np.where(dxdt > 0, spring.compression_scale,
                         np.where(dxdt < 0, spring.extension_scale, 1.0))
        static = static * scale
    force = placement.spring_count * (static + spring.Da * dxdt)
    cross_af = a_b[..., 0] * rel[..., 1] - a_b[..., 1] * rel[..., 0]
    return -force * cross_af / length


# ---------------------------------------------------------------------------
# placement areas

def point_in_polygon(point, polygon) -> bool:
    """Even-odd rule; points on the boundary count as inside."""
    x, y = float(point[0]), float(point[1])
    inside = False
    verts = list(polygon)
    for i in range(len(verts)):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % len(verts)]
        if _point_on_segment(x, y, x1, y1, x2, y2):
            return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def _point_on_segment(x, y, x1, y1, x2, y2, tol=1e-12):
    cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
    if abs(cross) > tol:
        return False
    dot = (x - x1) * (x - x2) + (y - y1) * (y - y2)
    return dot <= tol


def distance_to_polygon(point, polygon) -> float:
    """0 inside the polygon, else the distance to the nearest edge."""
    if point_in_polygon(point, polygon):
        return 0.0
    p = np.asarray(point, dtype=float)
    verts = np.asarray(polygon, dtype=float)
    best = math.inf
    for i in range(len(verts)):
        a, b = verts[i], verts[(i + 1) % len(verts)]
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
        best = min(best, float(np.linalg.norm(p - (a + t * ab))))
    return best


def rectangle(x_min, x_max, y_min, y_max):
    return ((x_min, y_min), (x_max, y_min), (x_max, y_max), (x_min, y_max))


# default placement areas: thigh-frame envelope A2, base-frame envelope A1
DEFAULT_A2 = rectangle(0.03, 0.40, -0.07, 0.07)
DEFAULT_A1 = rectangle(-0.12, 0.18, -0.45, 0.05)


# ---------------------------------------------------------------------------
# spring catalog

CATALOG_COLUMNS = ("name", "f0", "ka", "Da", "stroke",
                   "lambda0", "lambda1", "lambda2", "eta_t")


def load_spring_catalog(path, force_mode: str = "ideal") -> list[GasSpring]:
    """Read a gas-spring catalog CSV: name,f0,ka,Da,stroke,lambda0,lambda1,lambda2,eta_t."""
    springs = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not set(CATALOG_COLUMNS).issubset(reader.fieldnames):
            raise SchemaError(f"spring catalog must have columns {CATALOG_COLUMNS}, "
                              f"got {reader.fieldnames}")
        for rec in reader:
            try:
                springs.append(GasSpring(
                    name=rec["name"].strip(),
                    f0=float(rec["f0"]), ka=float(rec["ka"]), Da=float(rec["Da"]),
                    stroke=float(rec["stroke"]),
                    lam=(float(rec["lambda0"]), float(rec["lambda1"]),
                         float(rec["lambda2"])),
                    eta_t=float(rec["eta_t"]), force_mode=force_mode,
                ))
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"unparseable spring row {rec!r}") from exc
    if not springs:
        raise SchemaError("spring catalog is empty")
    return springs
