"""Planar open-chain rigid-body dynamics for the sagittal human/exo models.

Joint coordinates are relative revolute angles; the absolute angle of segment
i is the cumulative sum q_1 + ... + q_i measured from the +x axis, so q = 0
lays the whole chain out horizontally. The first joint is ground-fixed at the
origin and gravity acts along -y.

Inverse dynamics is a recursive Newton-Euler pass; the mass matrix comes from
unit-acceleration columns, which keeps every quantity oracle-checkable against
closed-form two-link results and finite-difference potential gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anthro import BodyModel
from .errors import NumericError, SingularityError


@dataclass(frozen=True)
class JointState:
    q: np.ndarray    # rad
    qd: np.ndarray   # rad/s
    qdd: np.ndarray  # rad/s^2

    def __post_init__(self):
        for name in ("q", "qd", "qdd"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"non-finite entries in JointState.{name}")
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class ComPoint:
    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


def _perp(v: np.ndarray) -> np.ndarray:
    return np.array([-v[1], v[0]])


def _cross(a: np.ndarray, b: np.ndarray) -> float:
    return a[0] * b[1] - a[1] * b[0]


def _check_finite(*arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericError("non-finite joint state")


def joint_positions(model: BodyModel, q: np.ndarray) -> np.ndarray:
    """Positions of joints 1..n plus the chain tip, shape (n+1, 2)."""
    q = np.asarray(q, dtype=float)
    theta = np.cumsum(q)
    pts = np.zeros((model.n + 1, 2))
    for i, seg in enumerate(model.segments):
        u = np.array([np.cos(theta[i]), np.sin(theta[i])])
        pts[i + 1] = pts[i] + seg.length * u
    return pts


def com_positions(model: BodyModel, q: np.ndarray) -> np.ndarray:
    """Per-segment COM positions in the base frame, shape (n, 2)."""
    q = np.asarray(q, dtype=float)
    theta = np.cumsum(q)
    pts = joint_positions(model, q)
    out = np.zeros((model.n, 2))
    for i, seg in enumerate(model.segments):
        u = np.array([np.cos(theta[i]), np.sin(theta[i])])
        out[i] = pts[i] + seg.com_offset * u
    return out


def inverse_dynamics(model: BodyModel, state: JointState, gravity: float = 9.81) -> np.ndarray:
    """Joint torques tau = M(q) qdd + C(q, qd) qd + g(q), recursive Newton-Euler."""
    q, qd, qdd = state.q, state.qd, state.qdd
    _check_finite(q, qd, qdd)
    n = model.n
    if len(q) != n:
        raise NumericError(f"state has {len(q)} joints, model has {n}")
    g_vec = np.array([0.0, -float(gravity)])

    omega = np.cumsum(qd)
    alpha = np.cumsum(qdd)
    theta = np.cumsum(q)

    # outward pass: joint origins and COM accelerations
    a_joint = np.zeros((n + 1, 2))
    p_joint = np.zeros((n + 1, 2))
    a_com = np.zeros((n, 2))
    for i, seg in enumerate(model.segments):
        u = np.array([np.cos(theta[i]), np.sin(theta[i])])
        r = seg.length * u
        c = seg.com_offset * u
        a_com[i] = a_joint[i] + alpha[i] * _perp(c) - omega[i] ** 2 * c
        a_joint[i + 1] = a_joint[i] + alpha[i] * _perp(r) - omega[i] ** 2 * r
        p_joint[i + 1] = p_joint[i] + r

    # inward pass: force/moment balance about each joint
    tau = np.zeros(n)
    f_child = np.zeros(2)
    n_child = 0.0
    for i in range(n - 1, -1, -1):
        seg = model.segments[i]
        u = np.array([np.cos(theta[i]), np.sin(theta[i])])
        r = seg.length * u
        c = seg.com_offset * u
        F = seg.mass * (a_com[i] - g_vec)
        tau[i] = seg.inertia * alpha[i] + _cross(c, F) + _cross(r, f_child) + n_child
        f_child = F + f_child
        n_child = tau[i]
    return tau


def mass_matrix(model: BodyModel, q: np.ndarray) -> np.ndarray:
    """Symmetric positive-definite joint-space inertia, by unit-acceleration columns."""
    q = np.asarray(q, dtype=float)
    n = model.n
    M = np.zeros((n, n))
    zeros = np.zeros(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        M[:, j] = inverse_dynamics(model, JointState(q, zeros, e), gravity=0.0)
    return M


def bias_forces(model: BodyModel, q: np.ndarray, qd: np.ndarray,
                gravity: float = 9.81) -> np.ndarray:
    """Coriolis-centrifugal plus gravity torques (inverse dynamics at zero acceleration)."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    return inverse_dynamics(model, JointState(q, qd, np.zeros_like(q)), gravity=gravity)


def forward_dynamics(model: BodyModel, q: np.ndarray, qd: np.ndarray,
                     tau: np.ndarray, gravity: float = 9.81) -> np.ndarray:
    """Joint accelerations from applied torques: qdd = M(q)^-1 (tau - bias)."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    tau = np.asarray(tau, dtype=float)
    _check_finite(q, qd, tau)
    M = mass_matrix(model, q)
    rhs = tau - bias_forces(model, q, qd, gravity)
    try:
        qdd = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("singular mass matrix (zero-mass chain?)") from exc
    if not np.all(np.isfinite(qdd)):
        raise SingularityError("non-finite accelerations from mass-matrix solve")
    return qdd


def sesc_com(model: BodyModel, q: np.ndarray, base: tuple[float, float] = (0.0, 0.0)) -> ComPoint:
    """Whole-body COM: mass-weighted sum of segment COM positions in the base frame."""
    if model.total_mass <= 0.0:
        raise SingularityError("COM undefined for zero total mass")
    coms = com_positions(model, q)
    masses = np.array([s.mass for s in model.segments])
    c = (masses[:, None] * coms).sum(axis=0) / model.total_mass
    return ComPoint(c[0] + base[0], c[1] + base[1])


def potential_energy(model: BodyModel, q: np.ndarray, gravity: float = 9.81) -> float:
    coms = com_positions(model, q)
    masses = np.array([s.mass for s in model.segments])
    return float(gravity * (masses * coms[:, 1]).sum())


def kinetic_energy(model: BodyModel, q: np.ndarray, qd: np.ndarray) -> float:
    qd = np.asarray(qd, dtype=float)
    return float(0.5 * qd @ mass_matrix(model, q) @ qd)


def static_joint_torques(model: BodyModel, Q: np.ndarray, gravity: float = 9.81) -> np.ndarray:
    """Gravity-only joint torques for a batch of postures, shape (..., n) -> (..., n).

    Closed-form statics (equal to inverse_dynamics at rest): the torque at
    joint j is the weight of every outboard segment times its horizontal
    offset from joint j.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    theta = np.cumsum(Q, axis=-1)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    lengths = np.array([s.length for s in model.segments])
    offsets = np.array([s.com_offset for s in model.segments])
    masses = np.array([s.mass for s in model.segments])

    # x of joint i (prefix sums of projected segment lengths), then COM x
    seg_dx = lengths * cos_t
    joint_x = np.concatenate([np.zeros(Q.shape[:-1] + (1,)),
                              np.cumsum(seg_dx, axis=-1)], axis=-1)
    com_x = joint_x[..., :-1] + offsets * cos_t

    wx = masses * gravity * com_x               # weight moments about x=0
    w = masses * gravity * np.ones_like(com_x)  # outboard weights
    # suffix sums over segments i >= j
    wx_suffix = np.cumsum(wx[..., ::-1], axis=-1)[..., ::-1]
    w_suffix = np.cumsum(w[..., ::-1], axis=-1)[..., ::-1]
    tau = wx_suffix - joint_x[..., :-1] * w_suffix
    return tau.reshape(Q.shape)


def integrate_rk4(model: BodyModel, q0: np.ndarray, qd0: np.ndarray, tau_fn,
                  dt: float, t_end: float, gravity: float = 9.81):
    """Fixed-step RK4 integration of the chain under tau_fn(t, q, qd) -> tau.

    Returns (t, Q, Qd) with Q, Qd of shape (steps + 1, n).
    """
    if dt <= 0 or t_end <= 0:
        raise NumericError("dt and t_end must be positive")
    steps = int(round(t_end / dt))
    n = model.n
    Q = np.zeros((steps + 1, n))
    Qd = np.zeros((steps + 1, n))
    Q[0], Qd[0] = np.asarray(q0, dtype=float), np.asarray(qd0, dtype=float)
    t = np.arange(steps + 1) * dt

    def deriv(ti, q, qd):
        return qd, forward_dynamics(model, q, qd, tau_fn(ti, q, qd), gravity)

    for k in range(steps):
        ti, q, qd = t[k], Q[k], Qd[k]
        k1q, k1v = deriv(ti, q, qd)
        k2q, k2v = deriv(ti + dt / 2, q + dt / 2 * k1q, qd + dt / 2 * k1v)
        k3q, k3v = deriv(ti + dt / 2, q + dt / 2 * k2q, qd + dt / 2 * k2v)
        k4q, k4v = deriv(ti + dt, q + dt * k3q, qd + dt * k3v)
        Q[k + 1] = q + dt / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
        Qd[k + 1] = qd + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return t, Q, Qd
