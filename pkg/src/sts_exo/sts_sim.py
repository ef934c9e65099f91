"""Five-stage sit-to-stand / stand-to-sit transition simulation.

The transition cycle follows SeatedFree -> SitToStand -> Standing ->
StandToSit -> Seated -> SeatedFree. Standing engages the P1 circuit after a
forward torso lean of gamma; sitting engages P2 after a backward lean of
beta past the standing posture.

Postures are described by the transition coordinates (q2, q3): knee angle
q2 (0 seated, pi/2 standing) and hip angle q3 (0 upright seated, -pi/2
standing). They map onto the chain coordinates of `dynamics` as

    qc_ankle = pi/2,  qc_knee = pi/2 - q2,  qc_hip = -(pi/2 + q3),

with the torso-crouch and arm joints held at configured angles. Quasi-static
sweeps evaluate loads on a knee-angle grid; dynamic mode integrates the
single coupled degree of freedom along the engaged wire constraint.

While seated (stage 1/5) the seat carries the body and the chain is clamped
at the hip: only the torso lean moves. Trace samples still record the
full-chain knee demand, which is the load the exoskeleton sees at lift-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .anthro import AnthroInput, BodyModel, SegmentParams, build_body_model
from .dynamics import ComPoint, JointState, inverse_dynamics, mass_matrix, static_joint_torques
from .errors import RangeError, StallError
from .mechanism import (ActuatorPlacement, DesignVector, EngagementAngles, GasSpring,
                        actuator_torque_batch, coupling_map_sitting, coupling_map_standing,
                        fit_free_length, knee_moment_sitting_batch,
                        knee_moment_standing_batch, spring_length)
from . import errors

D2R = math.pi / 180.0

DEFAULT_ARM_ANGLES = (0.0, -30.0 * D2R, 110.0 * D2R, 0.0)  # crouch, shoulder, elbow, wrist

SIT_TO_STAND = "sit_to_stand"
STAND_TO_SIT = "stand_to_sit"


class Stage(Enum):
    SEATED_FREE = "SeatedFree"
    SIT_TO_STAND = "SitToStand"
    STANDING = "Standing"
    STAND_TO_SIT = "StandToSit"
    SEATED = "Seated"


# the Fig.-3 cycle 1 -> 2 -> 3 -> 4 -> 5 -> 1
STAGE_CYCLE = {
    Stage.SEATED_FREE: Stage.SIT_TO_STAND,
    Stage.SIT_TO_STAND: Stage.STANDING,
    Stage.STANDING: Stage.STAND_TO_SIT,
    Stage.STAND_TO_SIT: Stage.SEATED,
    Stage.SEATED: Stage.SEATED_FREE,
}


@dataclass(frozen=True)
class StageState:
    stage: Stage
    lock_engaged: bool = False

    def advance(self) -> "StageState":
        return StageState(STAGE_CYCLE[self.stage], lock_engaged=False)


def locomotion_permitted(state: StageState) -> bool:
    """Driving is allowed only in a locked end posture."""
    return state.lock_engaged and state.stage in (Stage.STANDING, Stage.SEATED)


def check_engagement(angles: EngagementAngles, q3: float, state: StageState) -> str:
    """Which circuit is engaged at hip angle q3 in the given stage: none/p1/p2.

    Engagement from a free stage requires fully crossing the threshold; the
    hysteresis band only debounces re-checks near the threshold.
    """
    if state.lock_engaged:
        return "none"
    if state.stage == Stage.SIT_TO_STAND:
        return "p1"
    if state.stage == Stage.STAND_TO_SIT:
        return "p2"
    if state.stage == Stage.SEATED_FREE and q3 >= angles.gamma:
        return "p1"
    if state.stage == Stage.STANDING and q3 <= angles.beta_abs:
        return "p2"
    return "none"


@dataclass(frozen=True)
class ExoModel:
    """Three-link exoskeleton: base (shank), thigh and torso-support links."""

    link_masses: tuple[float, float, float] = (10.0, 4.0, 2.5)
    link_lengths: tuple[float, float, float] = (0.45, 0.42, 0.45)
    link_com_offsets: tuple[float, float, float] | None = None
    link_inertias: tuple[float, float, float] | None = None
    interface_stiffness: tuple[float, float] = (0.0, 0.0)   # K_i at knee, hip
    interface_damping: tuple[float, float] = (2.0, 2.0)     # D_i at knee, hip

    def __post_init__(self):
        if any(m < 0 for m in self.link_masses):
            raise RangeError("exo link masses must be >= 0")
        if any(k < 0 for k in self.interface_stiffness) or \
           any(d < 0 for d in self.interface_damping):
            raise RangeError("interface impedance must be >= 0")
        if self.link_com_offsets is None:
            object.__setattr__(self, "link_com_offsets",
                               tuple(0.5 * l for l in self.link_lengths))
        if self.link_inertias is None:
            object.__setattr__(self, "link_inertias",
                               tuple(m * l * l / 12.0 for m, l in
                                     zip(self.link_masses, self.link_lengths)))

    def chain(self) -> BodyModel:
        segs = tuple(
            SegmentParams(length=l, mass=m, com_offset=c, inertia=i)
            for l, m, c, i in zip(self.link_lengths, self.link_masses,
                                  self.link_com_offsets, self.link_inertias))
        return BodyModel(segments=segs)


@dataclass(frozen=True)
class TransitionTrace:
    direction: str
    t: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    Mo: np.ndarray
    Mo_norm: np.ndarray
    tau_a: np.ndarray
    com: np.ndarray           # system (user + exo) COM, shape (N, 2)
    stage: tuple[str, ...]
    engagement_index: int     # first coupled sample
    moment_ref: float

    CSV_HEADER = "t,q2,q3,Mo,Mo_norm,tau_a,com_x,com_y,stage"

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise RangeError("trace times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            f.write(self.CSV_HEADER + "\n")
            for k in range(len(self.t)):
                row = [self.t[k], self.q2[k], self.q3[k], self.Mo[k],
                       self.Mo_norm[k], self.tau_a[k], self.com[k, 0], self.com[k, 1]]
                f.write(",".join(repr(float(v)) for v in row) +
                        f",{self.stage[k]}\n")


@dataclass(frozen=True)
class SimOptions:
    dq: float = 0.5 * D2R            # quasi-static sweep resolution
    duration: float = 6.0            # nominal transition time mapped onto QS traces
    arm_angles: tuple[float, float, float, float] = DEFAULT_ARM_ANGLES
    gravity: float = 9.81
    moment_ref: float | None = None  # normalization; computed when None
    raise_on_stall: bool = True
    # dynamic mode
    dt: float = 1e-3
    timeout: float = 20.0
    drive_torque: float = 30.0       # surrogate volitional torso torque magnitude, N m
    seed: int = 0                    # recorded for reproducibility; the model is deterministic


@dataclass(frozen=True)
class FeasibilityVerdict:
    standing_ok: bool
    sitting_ok: bool
    stroke_ok: bool
    coupling_ok: bool
    feasible: bool
    standing_margin: float     # min(tau_a - Mo) over the standing sweep
    sitting_margin: float      # min(Mo - tau_a) over the sitting sweep
    stall_angle: float | None = None
    note: str = ""


def transition_posture(q2, q3, arm_angles=DEFAULT_ARM_ANGLES) -> np.ndarray:
    """Chain coordinates (..., 7) for transition coordinates q2, q3."""
    q2 = np.asarray(q2, dtype=float)
    q3 = np.asarray(q3, dtype=float)
    shape = np.broadcast_shapes(q2.shape, q3.shape)
    Q = np.empty(shape + (7,))
    Q[..., 0] = math.pi / 2
    Q[..., 1] = math.pi / 2 - q2
    Q[..., 2] = -(math.pi / 2 + q3)
    for j, a in enumerate(arm_angles):
        Q[..., 3 + j] = a
    return Q


def joint_loads(body: BodyModel, exo: ExoModel, q2, q3,
                arm_angles=DEFAULT_ARM_ANGLES, gravity: float = 9.81):
    """Static chain torques (tau2, tau3) of the coupled human + exo system.

    Returned in chain convention, as consumed by the mechanism moment balance.
    """
    Q = transition_posture(q2, q3, arm_angles)
    tau_h = static_joint_torques(body, Q, gravity)
    tau_e = static_joint_torques(exo.chain(), Q[..., :3], gravity)
    tau2 = tau_h[..., 1] + tau_e[..., 1]
    tau3 = tau_h[..., 2] + tau_e[..., 2]
    return tau2, tau3


def _chain_com_batch(chain: BodyModel, Q: np.ndarray):
    """Vectorized per-posture COM of a chain, Q shape (..., n) -> (..., 2)."""
    theta = np.cumsum(Q, axis=-1)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    lengths = np.array([s.length for s in chain.segments])
    offsets = np.array([s.com_offset for s in chain.segments])
    masses = np.array([s.mass for s in chain.segments])
    zeros = np.zeros(Q.shape[:-1] + (1,))
    jx = np.concatenate([zeros, np.cumsum(lengths * cos_t, axis=-1)], axis=-1)
    jy = np.concatenate([zeros, np.cumsum(lengths * sin_t, axis=-1)], axis=-1)
    cx = jx[..., :-1] + offsets * cos_t
    cy = jy[..., :-1] + offsets * sin_t
    msum = masses.sum()
    if msum <= 0:
        return np.full(Q.shape[:-1] + (2,), np.nan)
    return np.stack([(masses * cx).sum(axis=-1) / msum,
                     (masses * cy).sum(axis=-1) / msum], axis=-1)


def combined_com(body: BodyModel, exo: ExoModel, q2, q3, coupling=None,
                 arm_angles=DEFAULT_ARM_ANGLES):
    """(user_com, system_com) at a posture; q3 may come from a coupling map."""
    if coupling is not None:
        q3 = coupling(q2)
    Q = transition_posture(q2, q3, arm_angles)
    user = _chain_com_batch(body, Q)
    exo_chain = exo.chain()
    exo_com = _chain_com_batch(exo_chain, Q[..., :3])
    m_u, m_e = body.total_mass, exo_chain.total_mass
    if m_u + m_e <= 0:
        raise errors.SingularityError("combined COM undefined for zero total mass")
    if m_u <= 0:
        system = exo_com
    elif m_e <= 0:
        system = user
    else:
        system = (m_u * user + m_e * exo_com) / (m_u + m_e)
    if np.ndim(q2) == 0 and np.ndim(q3) == 0:
        u = ComPoint(float(user[..., 0]), float(user[..., 1]))
        s = ComPoint(float(system[..., 0]), float(system[..., 1]))
        return u, s
    return user, system


_MOMENT_REF_CACHE: dict[tuple, float] = {}


def moment_reference(exo: ExoModel, angles: EngagementAngles,
                     arm_angles=DEFAULT_ARM_ANGLES, gravity: float = 9.81,
                     ref_mass: float = 90.0, ref_height: float = 1.75) -> float:
    """Normalization constant: max static knee demand of the reference user.

    Swept over the seated torso range [delta, gamma] at q2 = q_o for a
    90 kg / 1.75 m default-table body plus the exoskeleton.
    """
    key = (exo.link_masses, exo.link_lengths, angles.q_o, angles.gamma, angles.delta,
           tuple(arm_angles), gravity, ref_mass, ref_height)
    if key not in _MOMENT_REF_CACHE:
        body = build_body_model(AnthroInput(ref_mass, ref_height, 3, "reference"))
        q3 = np.linspace(angles.delta, angles.gamma, 121)
        tau2, _ = joint_loads(body, exo, np.full_like(q3, angles.q_o), q3,
                              arm_angles, gravity)
        _MOMENT_REF_CACHE[key] = float(np.max(-tau2))
    return _MOMENT_REF_CACHE[key]


def _sweep_grid(angles: EngagementAngles, dq: float) -> np.ndarray:
    m = max(2, int(round((angles.q_f - angles.q_o) / dq)))
    return np.linspace(angles.q_o, angles.q_f, m + 1)


def standing_sweep(body: BodyModel, exo: ExoModel, design: DesignVector,
                   angles: EngagementAngles, opts: SimOptions = SimOptions()):
    """Coupled quasi-static standing sweep: (q2, q3, tau2, tau3, Mo, T_i, T_o)."""
    q2 = _sweep_grid(angles, opts.dq)
    q3 = coupling_map_standing(design, angles, q2)
    tau2, tau3 = joint_loads(body, exo, q2, q3, opts.arm_angles, opts.gravity)
    mo, t_i, t_o = knee_moment_standing_batch(design, q2, tau2, tau3)
    return q2, q3, tau2, tau3, mo, t_i, t_o


def sitting_sweep(body: BodyModel, exo: ExoModel, design: DesignVector,
                  angles: EngagementAngles, opts: SimOptions = SimOptions()):
    """Coupled quasi-static sitting sweep, ordered q_f -> q_o."""
    q2 = _sweep_grid(angles, opts.dq)[::-1]
    q3 = coupling_map_sitting(design, angles, q2)
    tau2, tau3 = joint_loads(body, exo, q2, q3, opts.arm_angles, opts.gravity)
    mo, t_u = knee_moment_sitting_batch(design, q2, tau2, tau3)
    return q2, q3, tau2, tau3, mo, t_u


def _ensure_free_length(placement: ActuatorPlacement,
                        angles: EngagementAngles) -> ActuatorPlacement:
    return placement if placement.free_length is not None \
        else fit_free_length(placement, angles)


def _system_com_batch(body, exo, q2, q3, arm_angles):
    user, system = combined_com(body, exo, np.asarray(q2, dtype=float),
                                np.asarray(q3, dtype=float), arm_angles=arm_angles)
    return np.atleast_2d(system)


def simulate_transition(body: BodyModel, exo: ExoModel, design: DesignVector,
                        placement: ActuatorPlacement, spring: GasSpring,
                        angles: EngagementAngles, direction: str = SIT_TO_STAND,
                        mode: str = "quasi_static",
                        opts: SimOptions = SimOptions()) -> TransitionTrace:
    """Simulate one full transition, including the free torso lean-in phase."""
    if direction not in (SIT_TO_STAND, STAND_TO_SIT):
        raise RangeError(f"unknown direction {direction!r}")
    if mode not in ("quasi_static", "dynamic"):
        raise RangeError(f"unknown mode {mode!r}")
    placement = _ensure_free_length(placement, angles)
    ref = opts.moment_ref if opts.moment_ref is not None else \
        moment_reference(exo, angles, opts.arm_angles, opts.gravity)

    if mode == "quasi_static":
        return _simulate_quasi_static(body, exo, design, placement, spring,
                                      angles, direction, opts, ref)
    return _simulate_dynamic(body, exo, design, placement, spring,
                             angles, direction, opts, ref)


def _lean_phase(angles: EngagementAngles, direction: str, dq: float):
    if direction == SIT_TO_STAND:
        n = max(2, int(round(abs(angles.gamma) / dq)))
        return np.linspace(0.0, angles.gamma, n, endpoint=False), angles.q_o, \
            Stage.SEATED_FREE
    n = max(2, int(round(abs(angles.beta) / dq)))
    return np.linspace(angles.q_s, angles.beta_abs, n, endpoint=False), angles.q_f, \
        Stage.STANDING


def _simulate_quasi_static(body, exo, design, placement, spring, angles,
                           direction, opts, ref):
    q3_lean, q2_fixed, lean_stage = _lean_phase(angles, direction, opts.dq)
    q2_lean = np.full_like(q3_lean, q2_fixed)
    tau2_l, tau3_l = joint_loads(body, exo, q2_lean, q3_lean, opts.arm_angles,
                                 opts.gravity)
    nominal_rate = (angles.q_f - angles.q_o) / opts.duration

    if direction == SIT_TO_STAND:
        q2, q3, tau2, tau3, mo, _, _ = standing_sweep(body, exo, design, angles, opts)
        tau_a = actuator_torque_batch(placement, spring, q2, nominal_rate)
        coupled_stage, end_stage = Stage.SIT_TO_STAND, Stage.STANDING
        deficit = mo - tau_a          # > 0 where the actuator cannot lift
    else:
        q2, q3, tau2, tau3, mo, _ = sitting_sweep(body, exo, design, angles, opts)
        tau_a = actuator_torque_batch(placement, spring, q2, -nominal_rate)
        coupled_stage, end_stage = Stage.STAND_TO_SIT, Stage.SEATED
        deficit = tau_a - mo          # > 0 where the actuator blocks the descent

    mo_lean = -tau2_l                 # lift-off demand while the seat carries the body
    tau_a_lean = np.full_like(mo_lean, tau_a[0])

    all_q2 = np.concatenate([q2_lean, q2])
    all_q3 = np.concatenate([q3_lean, q3])
    all_mo = np.concatenate([mo_lean, mo])
    all_tau_a = np.concatenate([tau_a_lean, tau_a])
    stages = (lean_stage.value,) * len(q3_lean) + \
        (coupled_stage.value,) * (len(q2) - 1) + (end_stage.value,)
    n_total = len(all_q2)
    t = np.linspace(0.0, opts.duration, n_total)
    com = _system_com_batch(body, exo, all_q2, all_q3, opts.arm_angles)

    trace = TransitionTrace(
        direction=direction, t=t, q2=all_q2, q3=all_q3, Mo=all_mo,
        Mo_norm=all_mo / ref, tau_a=all_tau_a, com=com, stage=stages,
        engagement_index=len(q3_lean), moment_ref=ref)

    if opts.raise_on_stall and np.any(deficit > 0):
        k = int(np.argmax(deficit > 0))
        raise StallError(
            f"{direction} stalls at q2 = {q2[k] / D2R:.1f} deg "
            f"(moment deficit {deficit[k]:.1f} N m)",
            stall_angle=float(q2[k]), trace=trace)
    return trace


def _simulate_dynamic(body, exo, design, placement, spring, angles,
                      direction, opts, ref):
    """Integrate the single coupled DOF q2 along the engaged wire constraint."""
    exo_chain = exo.chain()
    standing = direction == SIT_TO_STAND

    if standing:
        def q3_of(q2):
            return float(coupling_map_standing(design, angles, q2))
        q2_start, q2_end = angles.q_o, angles.q_f
        drive = -abs(opts.drive_torque)   # forward push on the torso support
        sign = 1.0
    else:
        def q3_of(q2):
            return float(coupling_map_sitting(design, angles, q2))
        q2_start, q2_end = angles.q_f, angles.q_o
        drive = abs(opts.drive_torque)
        sign = -1.0

    h = 1e-6

    def jac(q2):
        """d(chain q)/dq2 along the coupled path for the 7-joint chain."""
        dq3 = (q3_of(q2 + h) - q3_of(q2 - h)) / (2 * h)
        J = np.zeros(7)
        J[1] = -1.0
        J[2] = -dq3
        return J, dq3

    D2, D3 = exo.interface_damping

    def accel(q2, q2d):
        J, dq3 = jac(q2)
        Jp, _ = jac(q2 + h)
        Jm, _ = jac(q2 - h)
        Jdot_scale = (Jp - Jm) / (2 * h)       # dJ/dq2
        q = transition_posture(q2, q3_of(q2), opts.arm_angles)
        qd = J * q2d
        qdd_bias = Jdot_scale * q2d ** 2
        # generalized inertia and bias from both chains, 2 ID calls each:
        # tau(qdd) = (M J) q2dd + [M (dJ/dq2) q2d^2 + C qd + g]
        MJ_h = inverse_dynamics(body, JointState(q, np.zeros(7), J), gravity=0.0)
        b_h = inverse_dynamics(body, JointState(q, qd, qdd_bias), opts.gravity)
        MJ_e = inverse_dynamics(exo_chain, JointState(q[:3], np.zeros(3), J[:3]),
                                gravity=0.0)
        b_e = inverse_dynamics(exo_chain, JointState(q[:3], qd[:3], qdd_bias[:3]),
                               opts.gravity)
        A = float(J @ MJ_h + J[:3] @ MJ_e)
        bias = float(J @ b_h + J[:3] @ b_e)
        tau_a = _tau_a_scalar(placement, spring, q2, q2d)
        d_eff = D2 + D3 * dq3 ** 2
        Q = tau_a + drive * dq3 - d_eff * q2d
        q2dd = (Q - bias) / A
        tau2 = float(b_h[1] + b_e[1] + (MJ_h[1] + MJ_e[1]) * q2dd)
        tau3 = float(b_h[2] + b_e[2] + (MJ_h[2] + MJ_e[2]) * q2dd)
        return q2dd, tau2, tau3, tau_a

    def _tau_a_scalar(pl, sp, q2, q2d):
        return float(actuator_torque_batch(pl, sp, np.asarray([q2]),
                                           np.asarray([q2d]))[0])

    # kinematic lean-in phase
    q3_lean, q2_fixed, lean_stage = _lean_phase(angles, direction, opts.dq)
    tau2_l, _ = joint_loads(body, exo, np.full_like(q3_lean, q2_fixed), q3_lean,
                            opts.arm_angles, opts.gravity)
    lean_t = np.arange(len(q3_lean)) * opts.dt

    rows = []  # (t, q2, q3, Mo, tau_a)
    t = lean_t[-1] + opts.dt if len(lean_t) else 0.0
    q2, q2d = q2_start, 0.0
    coupled_stage = Stage.SIT_TO_STAND if standing else Stage.STAND_TO_SIT
    end_stage = Stage.STANDING if standing else Stage.SEATED

    while (q2 - q2_end) * sign < 0:
        if t > opts.timeout + lean_t[-1]:
            raise StallError(f"dynamic {direction} timed out at q2 = "
                             f"{q2 / D2R:.1f} deg", stall_angle=float(q2))
        a1, tau2, tau3, tau_a = accel(q2, q2d)
        if standing:
            mo, _, _ = knee_moment_standing_batch(design, np.asarray([q2]),
                                                  np.asarray([tau2]), np.asarray([tau3]))
        else:
            mo, _ = knee_moment_sitting_batch(design, np.asarray([q2]),
                                              np.asarray([tau2]), np.asarray([tau3]))
        rows.append((t, q2, q3_of(q2), float(mo[0]), tau_a))
        # RK4 on (q2, q2d)
        dt = opts.dt
        k1v = a1
        k2v, *_ = accel(q2 + dt / 2 * q2d, q2d + dt / 2 * k1v)
        k3v, *_ = accel(q2 + dt / 2 * (q2d + dt / 2 * k1v), q2d + dt / 2 * k2v)
        k4v, *_ = accel(q2 + dt * (q2d + dt / 2 * k2v), q2d + dt * k3v)
        q2 = q2 + dt * (q2d + dt / 6 * (k1v + k2v + k3v))
        q2d = q2d + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        t += dt

    rows.append((t, q2_end, q3_of(q2_end), rows[-1][3] if rows else 0.0,
                 rows[-1][4] if rows else 0.0))
    arr = np.array([[r[0], r[1], r[2], r[3], r[4]] for r in rows])
    all_t = np.concatenate([lean_t, arr[:, 0]])
    all_q2 = np.concatenate([np.full_like(q3_lean, q2_fixed), arr[:, 1]])
    all_q3 = np.concatenate([q3_lean, arr[:, 2]])
    all_mo = np.concatenate([-tau2_l, arr[:, 3]])
    all_tau_a = np.concatenate([np.full_like(q3_lean, arr[0, 4]), arr[:, 4]])
    stages = (lean_stage.value,) * len(q3_lean) + \
        (coupled_stage.value,) * (len(arr) - 1) + (end_stage.value,)
    com = _system_com_batch(body, exo, all_q2, all_q3, opts.arm_angles)
    return TransitionTrace(direction=direction, t=all_t, q2=all_q2, q3=all_q3,
                           Mo=all_mo, Mo_norm=all_mo / ref, tau_a=all_tau_a,
                           com=com, stage=stages, engagement_index=len(q3_lean),
                           moment_ref=ref)


def feasibility_report(body: BodyModel, exo: ExoModel, design: DesignVector,
                       placement: ActuatorPlacement, spring: GasSpring,
                       angles: EngagementAngles,
                       opts: SimOptions = SimOptions()) -> FeasibilityVerdict:
    """Check the standing/sitting support constraints, stroke and coupling.

    Zero-load sweeps (no gravity) satisfy both support constraints trivially:
    nothing needs lifting and nothing needs yielding against.
    """
    placement = _ensure_free_length(placement, angles)
    nominal_rate = (angles.q_f - angles.q_o) / opts.duration
    try:
        q2s, *_ , mo_st, _, _ = standing_sweep(body, exo, design, angles, opts)
        q2t, *_ , mo_sit, _ = sitting_sweep(body, exo, design, angles, opts)
    except errors.CouplingInfeasible as exc:
        return FeasibilityVerdict(False, False, False, False, False,
                                  -math.inf, -math.inf, note=str(exc))
    q2_grid = _sweep_grid(angles, opts.dq)
    lengths = spring_length(placement, q2_grid)
    dx = placement.free_length - lengths
    stroke_ok = bool(np.all(dx >= -1e-9) and np.all(dx <= spring.stroke + 1e-9))
    if not stroke_ok:
        return FeasibilityVerdict(False, False, False, True, False,
                                  -math.inf, -math.inf,
                                  note="spring stroke exceeded over the sweep")
    tau_a_st = actuator_torque_batch(placement, spring, q2s, nominal_rate)
    tau_a_sit = actuator_torque_batch(placement, spring, q2t, -nominal_rate)
    standing_margin = float(np.min(tau_a_st - mo_st))
    sitting_margin = float(np.min(mo_sit - tau_a_sit))
    unloaded = float(np.max(np.abs(mo_st))) < 1e-9 and \
        float(np.max(np.abs(mo_sit))) < 1e-9
    standing_ok = unloaded or standing_margin >= 0.0
    sitting_ok = unloaded or sitting_margin >= 0.0
    stall = None
    if not standing_ok:
        stall = float(q2s[int(np.argmin(tau_a_st - mo_st))])
    return FeasibilityVerdict(standing_ok, sitting_ok, stroke_ok, True,
                              standing_ok and sitting_ok and stroke_ok,
                              standing_margin, sitting_margin, stall_angle=stall)


def com_excursion(body: BodyModel, exo: ExoModel, angles: EngagementAngles,
                  direction: str = SIT_TO_STAND,
                  arm_angles=DEFAULT_ARM_ANGLES) -> float:
    """Horizontal user-COM travel (m) of the engagement lean.

    Sit-to-stand: upright seated to the gamma lean at q_o. Stand-to-sit:
    upright standing to the beta lean at q_f.
    """
    if direction == SIT_TO_STAND:
        q2, q3_from, q3_to = angles.q_o, 0.0, angles.gamma
    else:
        q2, q3_from, q3_to = angles.q_f, angles.q_s, angles.beta_abs
    u0, _ = combined_com(body, exo, q2, q3_from, arm_angles=arm_angles)
    u1, _ = combined_com(body, exo, q2, q3_to, arm_angles=arm_angles)
    return abs(u1.x - u0.x)


@dataclass(frozen=True)
class GridCell:
    mass: float
    height: float
    feasible: bool
    excursion_stand: float    # m
    excursion_sit: float      # m
    standing_margin: float
    sitting_margin: float
    stall_angle: float | None
    spring_count: int


def user_grid_report(masses, heights, exo: ExoModel, design: DesignVector,
                     placement: ActuatorPlacement, spring: GasSpring,
                     angles: EngagementAngles, spring_count: int | None = None,
                     opts: SimOptions = SimOptions(), table=None) -> list[GridCell]:
    """Feasibility and engagement COM excursions over a user mass/height grid."""
    cells = []
    for mass in masses:
        for height in heights:
            count = spring_count or placement.spring_count
            body = build_body_model(
                AnthroInput(float(mass), float(height), count,
                            f"{mass:.0f}kg_{height:.2f}m"), table)
            pl = replace(placement, spring_count=count)
            verdict = feasibility_report(body, exo, design, pl, spring, angles, opts)
            cells.append(GridCell(
                mass=float(mass), height=float(height), feasible=verdict.feasible,
                excursion_stand=com_excursion(body, exo, angles, SIT_TO_STAND,
                                              opts.arm_angles),
                excursion_sit=com_excursion(body, exo, angles, STAND_TO_SIT,
                                            opts.arm_angles),
                standing_margin=verdict.standing_margin,
                sitting_margin=verdict.sitting_margin,
                stall_angle=verdict.stall_angle, spring_count=count))
    return cells


def feasible_region_contiguous(cells: list[GridCell]) -> bool:
    """True when the feasible cells form one 4-connected component on the grid."""
    masses = sorted({c.mass for c in cells})
    heights = sorted({c.height for c in cells})
    idx = {(c.mass, c.height): c.feasible for c in cells}
    feas = {(i, j) for i, m in enumerate(masses) for j, h in enumerate(heights)
            if idx[(m, h)]}
    if not feas:
        return False
    stack = [next(iter(feas))]
    seen = set()
    while stack:
        cell = stack.pop()
        if cell in seen or cell not in feas:
            continue
        seen.add(cell)
        i, j = cell
        stack.extend([(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)])
    return seen == feas
