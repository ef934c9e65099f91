"""Multi-objective design search for the wire-pulley transmission.

A generic real-coded NSGA-II engine (fast non-dominated sorting, crowding
distance, binary tournament, simulated binary crossover, polynomial mutation,
constraint domination) drives a 15-dimensional design problem: six anchor
points, two pulley radii and the transmission efficiency. The three
objectives are the normalized knee moment load, the deviation of the coupled
hip motion from a straight line, and the deviation of the knee load curve
from an ideal linear-actuator profile.

Equality constraints (the synchronous-motion endpoint conditions) are
handled by penalty with a small tolerance; anchor-area membership adds the
exit distance to the violation. The passive actuator is placed afterwards by
a separate constrained maximization over a discrete spring catalog.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .anthro import BodyModel
from .errors import (CouplingInfeasible, DivisionGuard, GeometryError, NoFeasibleActuator,
                     NoFeasibleDesign, RangeError, SlackWireError, StrokeError)
from .mechanism import (DEFAULT_A1, DEFAULT_A2, RADIUS_BOUNDS, ActuatorPlacement,
                        DesignVector, EngagementAngles, GasSpring,
                        actuator_torque_batch, coupling_map_sitting,
                        coupling_map_standing, coupling_residuals, distance_to_polygon,
                        fit_free_length, spring_length)
from .sts_sim import ExoModel, SimOptions, joint_loads, moment_reference
from .mechanism import knee_moment_sitting_batch, knee_moment_standing_batch

D2R = math.pi / 180.0

_INFEASIBLE_BUMP = 1.0
_SENTINEL = (math.inf, math.inf, math.inf)


# ---------------------------------------------------------------------------
# domain types

@dataclass(frozen=True)
class ObjectiveVector:
    j_moment: float
    j_motion: float
    j_torque: float

    def as_array(self) -> np.ndarray:
        return np.array([self.j_moment, self.j_motion, self.j_torque])


@dataclass(frozen=True)
class Candidate:
    design: DesignVector
    objectives: ObjectiveVector
    constraint_violation: float
    feasible: bool


@dataclass(frozen=True)
class ParetoFront:
    members: tuple[Candidate, ...]
    generation: int
    hypervolume: float

    def __post_init__(self):
        objs = np.array([c.objectives.as_array() for c in self.members])
        for i in range(len(objs)):
            for j in range(len(objs)):
                if i != j and _dominates(objs[i], objs[j]):
                    raise RangeError("ParetoFront contains dominated members")


@dataclass(frozen=True)
class NormConstants:
    """Objective normalization: reference knee moment and sweep resolution."""

    moment_ref: float
    dq: float = 0.5 * D2R

    def __post_init__(self):
        if self.moment_ref <= 0 or self.dq <= 0:
            raise RangeError("moment_ref and dq must be positive")

    def sample_count(self, angles: EngagementAngles) -> int:
        return max(2, int(round((angles.q_f - angles.q_o) / self.dq)))

    def grid(self, angles: EngagementAngles) -> np.ndarray:
        return np.linspace(angles.q_o, angles.q_f, self.sample_count(angles) + 1)


@dataclass(frozen=True)
class DesignContext:
    """Everything a candidate evaluation needs; must stay picklable."""

    body: BodyModel
    exo: ExoModel
    angles: EngagementAngles
    spring: GasSpring
    nominal_placement: ActuatorPlacement
    norms: NormConstants
    area_a1: tuple = DEFAULT_A1
    area_a2: tuple = DEFAULT_A2
    eta_bounds: tuple[float, float] = (0.5, 1.0)
    radius_bounds: tuple[float, float] = RADIUS_BOUNDS
    feasibility_tol: float = 1e-3
    area_weight: float = 1.0
    gravity: float = 9.81
    arm_angles: tuple = None
    seed_designs: tuple = ()   # designs injected into the initial population

    def __post_init__(self):
        if self.arm_angles is None:
            from .sts_sim import DEFAULT_ARM_ANGLES
            object.__setattr__(self, "arm_angles", DEFAULT_ARM_ANGLES)
        if self.nominal_placement.free_length is None:
            object.__setattr__(self, "nominal_placement",
                               fit_free_length(self.nominal_placement, self.angles))


def make_context(body, exo, angles, spring, placement, dq=0.5 * D2R, **kwargs) -> DesignContext:
    ref = moment_reference(exo, angles)
    return DesignContext(body=body, exo=exo, angles=angles, spring=spring,
                         nominal_placement=placement,
                         norms=NormConstants(moment_ref=ref, dq=dq), **kwargs)


# ---------------------------------------------------------------------------
# objectives (quasi-static sweeps shared through these helpers)

def _sweeps(design: DesignVector, ctx_or_args):
    """Standing and sitting (q2, Mo) arrays for a design."""
    body, exo, angles, norms, arm, g = ctx_or_args
    q2 = norms.grid(angles)
    q3_st = coupling_map_standing(design, angles, q2)
    tau2, tau3 = joint_loads(body, exo, q2, q3_st, arm, g)
    mo_st, _, _ = knee_moment_standing_batch(design, q2, tau2, tau3)
    q2_sit = q2[::-1]
    q3_sit = coupling_map_sitting(design, angles, q2_sit)
    tau2s, tau3s = joint_loads(body, exo, q2_sit, q3_sit, arm, g)
    mo_sit, _ = knee_moment_sitting_batch(design, q2_sit, tau2s, tau3s)
    return q2, q3_st, mo_st, q2_sit, q3_sit, mo_sit


def _args(body, exo, angles, norms, arm_angles=None, gravity=9.81):
    if arm_angles is None:
        from .sts_sim import DEFAULT_ARM_ANGLES
        arm_angles = DEFAULT_ARM_ANGLES
    return body, exo, angles, norms, arm_angles, gravity


def moment_terms_from_profiles(mo_st, mo_sit, moment_ref) -> tuple[float, float]:
    """Standing term mean(Mo)/ref; sitting term ref * mean(1/Mo).

    The sitting reciprocal rewards a large braking load on the way down;
    a sitting moment at or below zero is guarded (the term is undefined).
    """
    mo_sit = np.asarray(mo_sit, dtype=float)
    if np.any(mo_sit <= moment_ref * 1e-6):
        raise DivisionGuard("sitting knee moment crosses zero inside the sweep")
    return (float(np.mean(mo_st) / moment_ref),
            float(moment_ref * np.mean(1.0 / mo_sit)))


def linear_deviation(values, line, span) -> float:
    """Mean absolute deviation from a reference line, normalized by a span."""
    return float(np.mean(np.abs(np.asarray(values) - np.asarray(line))) / span)


def moment_load_terms(design, body, exo, angles, norms, arm_angles=None,
                      gravity=9.81) -> tuple[float, float]:
    """Standing and sitting terms of the moment-load objective."""
    _, _, mo_st, _, _, mo_sit = _sweeps(design, _args(body, exo, angles, norms,
                                                      arm_angles, gravity))
    return moment_terms_from_profiles(mo_st, mo_sit, norms.moment_ref)


def objective_moment_load(design, body, exo, angles, norms, **kw) -> float:
    standing, sitting = moment_load_terms(design, body, exo, angles, norms, **kw)
    return standing + sitting


def objective_motion_linearity(design, angles, norms) -> float:
    """Normalized mean deviation of both coupling maps from straight lines."""
    q2 = norms.grid(angles)
    q3_st = coupling_map_standing(design, angles, q2)
    line_st = angles.gamma + (angles.q_s - angles.gamma) * \
        (q2 - angles.q_o) / (angles.q_f - angles.q_o)
    span_st = angles.gamma - angles.q_s
    q2_sit = q2[::-1]
    q3_sit = coupling_map_sitting(design, angles, q2_sit)
    line_sit = angles.beta_abs + (angles.delta - angles.beta_abs) * \
        (angles.q_f - q2_sit) / (angles.q_f - angles.q_o)
    span_sit = angles.delta - angles.beta_abs
    return linear_deviation(q3_st, line_st, span_st) + \
        linear_deviation(q3_sit, line_sit, span_sit)


def motion_linearity_terms(design, angles, norms) -> tuple[float, float]:
    """Per-direction normalized linear-fit errors of the coupling maps."""
    q2 = norms.grid(angles)
    q3_st = coupling_map_standing(design, angles, q2)
    line_st = angles.gamma + (angles.q_s - angles.gamma) * \
        (q2 - angles.q_o) / (angles.q_f - angles.q_o)
    q2_sit = q2[::-1]
    q3_sit = coupling_map_sitting(design, angles, q2_sit)
    line_sit = angles.beta_abs + (angles.delta - angles.beta_abs) * \
        (angles.q_f - q2_sit) / (angles.q_f - angles.q_o)
    return (linear_deviation(q3_st, line_st, angles.gamma - angles.q_s),
            linear_deviation(q3_sit, line_sit, angles.delta - angles.beta_abs))


def ideal_moment_line(placement: ActuatorPlacement, spring: GasSpring,
                      angles: EngagementAngles, q2) -> np.ndarray:
    """Linear knee-moment profile of the ideal (static, lossless-damping)
    actuator between the sweep endpoints."""
    ideal = replace(spring, force_mode="ideal")
    ends = actuator_torque_batch(placement, ideal,
                                 np.array([angles.q_o, angles.q_f]), 0.0)
    frac = (np.asarray(q2, dtype=float) - angles.q_o) / (angles.q_f - angles.q_o)
    return ends[0] + (ends[1] - ends[0]) * frac


def objective_torque_linearity(design, placement, spring, body, exo, angles,
                               norms, arm_angles=None, gravity=9.81) -> float:
    """Normalized mean |Mo - M_l| over both sweeps."""
    placement = placement if placement.free_length is not None else \
        fit_free_length(placement, angles)
    q2, _, mo_st, q2_sit, _, mo_sit = _sweeps(
        design, _args(body, exo, angles, norms, arm_angles, gravity))
    m_line = ideal_moment_line(placement, spring, angles, q2)
    m_line_sit = ideal_moment_line(placement, spring, angles, q2_sit)
    ref = norms.moment_ref
    return linear_deviation(mo_st, m_line, ref) + \
        linear_deviation(mo_sit, m_line_sit, ref)


def torque_linearity_terms(design, placement, spring, body, exo, angles, norms,
                           arm_angles=None, gravity=9.81) -> tuple[float, float]:
    """Standing / sitting torque-linearity errors, reported separately."""
    placement = placement if placement.free_length is not None else \
        fit_free_length(placement, angles)
    q2, _, mo_st, q2_sit, _, mo_sit = _sweeps(
        design, _args(body, exo, angles, norms, arm_angles, gravity))
    m_line = ideal_moment_line(placement, spring, angles, q2)
    m_line_sit = ideal_moment_line(placement, spring, angles, q2_sit)
    ref = norms.moment_ref
    return (linear_deviation(mo_st, m_line, ref),
            linear_deviation(mo_sit, m_line_sit, ref))


def constraint_violation(design: DesignVector, ctx: DesignContext) -> float:
    """Equality-constraint residuals (rad) plus anchor area-exit distances."""
    res_std, res_sit = coupling_residuals(design, ctx.angles)
    v = abs(res_std) + abs(res_sit)
    for pt in (design.u, design.v, design.w):
        v += ctx.area_weight * distance_to_polygon(pt, ctx.area_a2)
    for pt in (design.n, design.o, design.p):
        v += ctx.area_weight * distance_to_polygon(pt, ctx.area_a1)
    lo, hi = ctx.radius_bounds
    for r in (design.r1, design.r2):
        v += max(0.0, lo - r) + max(0.0, r - hi)
    elo, ehi = ctx.eta_bounds
    v += max(0.0, elo - design.eta) + max(0.0, design.eta - ehi)
    return float(v)


def evaluate_candidate(design: DesignVector, ctx: DesignContext) -> Candidate:
    """Violation is always computed; objectives only for near-feasible designs."""
    violation = constraint_violation(design, ctx)
    if violation > ctx.feasibility_tol:
        return Candidate(design, ObjectiveVector(*_SENTINEL), violation, False)
    try:
        standing, sitting = moment_load_terms(
            design, ctx.body, ctx.exo, ctx.angles, ctx.norms,
            arm_angles=ctx.arm_angles, gravity=ctx.gravity)
        j_motion = objective_motion_linearity(design, ctx.angles, ctx.norms)
        j_torque = objective_torque_linearity(
            design, ctx.nominal_placement, ctx.spring, ctx.body, ctx.exo,
            ctx.angles, ctx.norms, arm_angles=ctx.arm_angles, gravity=ctx.gravity)
    except (CouplingInfeasible, DivisionGuard, GeometryError, SlackWireError,
            StrokeError):
        return Candidate(design, ObjectiveVector(*_SENTINEL),
                         violation + _INFEASIBLE_BUMP, False)
    objs = ObjectiveVector(standing + sitting, j_motion, j_torque)
    if not np.all(np.isfinite(objs.as_array())):
        return Candidate(design, ObjectiveVector(*_SENTINEL),
                         violation + _INFEASIBLE_BUMP, False)
    return Candidate(design, objs, violation, True)


# ---------------------------------------------------------------------------
# generic NSGA-II engine

@dataclass(frozen=True)
class OptimizerConfig:
    population: int = 100
    generations: int = 200
    crossover_prob: float = 0.9
    sbx_eta: float = 15.0
    mutation_prob: float | None = None   # default 1 / n_vars
    mutation_eta: float = 20.0
    seed: int = 0
    workers: int = 1
    reference_point: tuple = (5.0, 5.0, 5.0)
    feasibility_tol: float = 1e-3

    def __post_init__(self):
        if self.population < 8 or self.population % 2:
            raise RangeError("population must be an even number >= 8")
        if self.generations < 1:
            raise RangeError("generations must be >= 1")


def _dominates(fa, fb) -> bool:
    return bool(np.all(fa <= fb) and np.any(fa < fb))


def _domination_matrix(F: np.ndarray, V: np.ndarray, tol: float) -> np.ndarray:
    """D[i, j] True when i constraint-dominates j."""
    feas = V <= tol
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    obj_dom = le & lt
    both_feas = feas[:, None] & feas[None, :]
    both_infeas = ~feas[:, None] & ~feas[None, :]
    D = (feas[:, None] & ~feas[None, :]) \
        | (both_infeas & (V[:, None] < V[None, :])) \
        | (both_feas & obj_dom)
    np.fill_diagonal(D, False)
    return D


def fast_non_dominated_sort(F: np.ndarray, V: np.ndarray, tol: float = 1e-3):
    """Fronts (lists of indices) under the constraint-domination rule."""
    D = _domination_matrix(F, V, tol)
    n_dominators = D.sum(axis=0)
    fronts = []
    remaining = np.ones(len(F), dtype=bool)
    counts = n_dominators.copy()
    while remaining.any():
        current = np.where(remaining & (counts == 0))[0]
        if len(current) == 0:   # numerical safety net; cannot happen for finite F
            current = np.where(remaining)[0]
        fronts.append(current)
        remaining[current] = False
        counts = counts - D[current].sum(axis=0)
    return fronts


def crowding_distance(F: np.ndarray) -> np.ndarray:
    n, m = F.shape
    if n <= 2:
        return np.full(n, np.inf)
    dist = np.zeros(n)
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        lo, hi = F[order[0], k], F[order[-1], k]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi - lo <= 0 or not np.isfinite(hi - lo):
            continue
        gaps = (F[order[2:], k] - F[order[:-2], k]) / (hi - lo)
        dist[order[1:-1]] += gaps
    return dist


def _rank_and_crowd(F, V, tol):
    fronts = fast_non_dominated_sort(F, V, tol)
    rank = np.zeros(len(F), dtype=int)
    crowd = np.zeros(len(F))
    for r, idx in enumerate(fronts):
        rank[idx] = r
        crowd[idx] = crowding_distance(F[idx])
    return rank, crowd, fronts


def _sbx_pair(p1, p2, lower, upper, eta, rng):
    c1, c2 = p1.copy(), p2.copy()
    u = rng.random(len(p1))
    beta = np.where(u <= 0.5, (2 * u) ** (1 / (eta + 1)),
                    (1 / (2 * (1 - u))) ** (1 / (eta + 1)))
    mask = rng.random(len(p1)) < 0.5
    c1[mask] = 0.5 * ((1 + beta[mask]) * p1[mask] + (1 - beta[mask]) * p2[mask])
    c2[mask] = 0.5 * ((1 - beta[mask]) * p1[mask] + (1 + beta[mask]) * p2[mask])
    return np.clip(c1, lower, upper), np.clip(c2, lower, upper)


def _poly_mutate(x, lower, upper, prob, eta, rng):
    y = x.copy()
    u = rng.random(len(x))
    do = rng.random(len(x)) < prob
    delta = np.where(u < 0.5, (2 * u) ** (1 / (eta + 1)) - 1,
                     1 - (2 * (1 - u)) ** (1 / (eta + 1)))
    y[do] = y[do] + delta[do] * (upper[do] - lower[do])
    return np.clip(y, lower, upper)


def _evaluate_population(problem, X, workers: int):
    rows = [X[i] for i in range(len(X))]
    if workers <= 1:
        results = [problem.evaluate(x) for x in rows]
    else:
        chunk = max(1, len(rows) // workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(problem.evaluate, rows, chunksize=chunk))
    F = np.array([r[0] for r in results], dtype=float)
    V = np.array([r[1] for r in results], dtype=float)
    return F, V


@dataclass
class EngineResult:
    X: np.ndarray
    F: np.ndarray
    V: np.ndarray
    front_indices: np.ndarray
    history: list


def run_nsga2(problem, config: OptimizerConfig) -> EngineResult:
    """Generic engine; `problem` provides n_var, n_obj, lower, upper, evaluate."""
    rng = np.random.default_rng(config.seed)
    n = problem.n_var
    pop = config.population
    lower = np.asarray(problem.lower, dtype=float)
    upper = np.asarray(problem.upper, dtype=float)
    pm = config.mutation_prob if config.mutation_prob is not None else 1.0 / n
    tol = config.feasibility_tol

    X = lower + rng.random((pop, n)) * (upper - lower)
    guesses = getattr(problem, "initial_guesses", lambda: None)()
    if guesses is not None and len(guesses):
        k = min(len(guesses), pop)
        X[:k] = np.clip(np.asarray(guesses, dtype=float)[:k], lower, upper)
    F, V = _evaluate_population(problem, X, config.workers)
    history = []

    for gen in range(config.generations):
        rank, crowd, _ = _rank_and_crowd(F, V, tol)

        def better(i, j):
            if rank[i] != rank[j]:
                return i if rank[i] < rank[j] else j
            if crowd[i] != crowd[j]:
                return i if crowd[i] > crowd[j] else j
            return min(i, j)

        children = np.empty_like(X)
        k = 0
        while k < pop:
            picks = rng.integers(0, pop, size=4)
            p1 = better(picks[0], picks[1])
            p2 = better(picks[2], picks[3])
            if rng.random() < config.crossover_prob:
                c1, c2 = _sbx_pair(X[p1], X[p2], lower, upper, config.sbx_eta, rng)
            else:
                c1, c2 = X[p1].copy(), X[p2].copy()
            children[k] = _poly_mutate(c1, lower, upper, pm, config.mutation_eta, rng)
            if k + 1 < pop:
                children[k + 1] = _poly_mutate(c2, lower, upper, pm,
                                               config.mutation_eta, rng)
            k += 2

        Fc, Vc = _evaluate_population(problem, children, config.workers)
        X_all = np.vstack([X, children])
        F_all = np.vstack([F, Fc])
        V_all = np.concatenate([V, Vc])

        _, _, fronts = _rank_and_crowd(F_all, V_all, tol)
        chosen = []
        for idx in fronts:
            if len(chosen) + len(idx) <= pop:
                chosen.extend(sorted(idx))
            else:
                cd = crowding_distance(F_all[idx])
                order = sorted(range(len(idx)), key=lambda t: (-cd[t], idx[t]))
                chosen.extend(idx[t] for t in order[: pop - len(chosen)])
                break
        chosen = np.array(chosen)
        X, F, V = X_all[chosen], F_all[chosen], V_all[chosen]

        feas_front = _feasible_front(F, V, tol)
        hv = hypervolume(F[feas_front], config.reference_point) \
            if len(feas_front) else 0.0
        history.append({
            "generation": gen,
            "feasible": int(np.sum(V <= tol)),
            "best": [float(np.min(F[V <= tol, k])) if np.any(V <= tol) else math.inf
                     for k in range(problem.n_obj)],
            "hypervolume": hv,
        })

    front = _feasible_front(F, V, tol)
    return EngineResult(X=X, F=F, V=V, front_indices=front, history=history)


def _feasible_front(F, V, tol) -> np.ndarray:
    feas = np.where(V <= tol)[0]
    if len(feas) == 0:
        return feas
    Ff = F[feas]
    keep = []
    for i in range(len(feas)):
        if not any(_dominates(Ff[j], Ff[i]) for j in range(len(feas)) if j != i):
            keep.append(feas[i])
    return np.array(keep, dtype=int)


# ---------------------------------------------------------------------------
# hypervolume (2 and 3 objectives)

def hypervolume(F: np.ndarray, ref) -> float:
    """Dominated hypervolume of a minimization front wrt a reference point."""
    F = np.asarray(F, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if F.ndim != 2 or len(F) == 0:
        return 0.0
    F = F[np.all(F < ref, axis=1)]
    if len(F) == 0:
        return 0.0
    if F.shape[1] == 2:
        return _hv2(F, ref)
    if F.shape[1] == 3:
        return _hv3(F, ref)
    raise RangeError("hypervolume implemented for 2 or 3 objectives")


def _pareto_filter(F: np.ndarray) -> np.ndarray:
    keep = np.ones(len(F), dtype=bool)
    for i in range(len(F)):
        if keep[i]:
            dominated = np.all(F <= F[i], axis=1) & np.any(F < F[i], axis=1)
            keep &= ~dominated
            keep[i] = True
    return F[keep]


def _hv2(F: np.ndarray, ref) -> float:
    F = _pareto_filter(F)
    order = np.lexsort((F[:, 1], F[:, 0]))
    F = F[order]
    hv = 0.0
    y_prev = ref[1]
    for x, y in F:
        if y < y_prev:
            hv += (ref[0] - x) * (y_prev - y)
            y_prev = y
    return float(hv)


def _hv3(F: np.ndarray, ref) -> float:
    F = _pareto_filter(F)
    zs = np.unique(F[:, 2])
    hv = 0.0
    for k, z in enumerate(zs):
        z_next = zs[k + 1] if k + 1 < len(zs) else ref[2]
        sub = F[F[:, 2] <= z][:, :2]
        hv += _hv2(sub, ref[:2]) * (z_next - z)
    return float(hv)


# ---------------------------------------------------------------------------
# the exoskeleton design problem

@dataclass
class ExoDesignProblem:
    ctx: DesignContext

    def __post_init__(self):
        a2 = np.asarray(self.ctx.area_a2, dtype=float)
        a1 = np.asarray(self.ctx.area_a1, dtype=float)
        lo2, hi2 = a2.min(axis=0), a2.max(axis=0)
        lo1, hi1 = a1.min(axis=0), a1.max(axis=0)
        r_lo, r_hi = self.ctx.radius_bounds
        e_lo, e_hi = self.ctx.eta_bounds
        self.lower = np.array([*lo2, *lo2, *lo2, *lo1, *lo1, *lo1, r_lo, r_lo, e_lo])
        self.upper = np.array([*hi2, *hi2, *hi2, *hi1, *hi1, *hi1, r_hi, r_hi, e_hi])
        self.n_var = 15
        self.n_obj = 3

    def evaluate(self, x):
        cand = evaluate_candidate(DesignVector.from_array(x), self.ctx)
        return cand.objectives.as_array(), cand.constraint_violation

    def initial_guesses(self):
        if not self.ctx.seed_designs:
            return None
        return np.array([d.to_array() for d in self.ctx.seed_designs])


def nsga2_run(config: OptimizerConfig, ctx: DesignContext) -> tuple[ParetoFront, EngineResult]:
    """Full design search; raises NoFeasibleDesign when nothing satisfies the
    equality constraints after all generations."""
    problem = ExoDesignProblem(ctx)
    result = run_nsga2(problem, config)
    if len(result.front_indices) == 0:
        k = int(np.argmin(result.V))
        raise NoFeasibleDesign(
            f"no feasible design after {config.generations} generations; "
            f"best violation {result.V[k]:.4f}",
            best_violation=float(result.V[k]),
            best_design=DesignVector.from_array(result.X[k]))
    members = tuple(
        Candidate(DesignVector.from_array(result.X[i]),
                  ObjectiveVector(*result.F[i]), float(result.V[i]), True)
        for i in result.front_indices)
    hv = hypervolume(result.F[result.front_indices], config.reference_point)
    front = ParetoFront(members=members, generation=config.generations,
                        hypervolume=hv)
    return front, result


def choose_solution(front: ParetoFront,
                    weights: tuple[float, float, float] = (1.0, 3.0, 1.0)) -> Candidate:
    """Post-hoc pick from the front: normalized weighted sum, motion linearity
    weighted highest by default."""
    objs = np.array([c.objectives.as_array() for c in front.members])
    lo, hi = objs.min(axis=0), objs.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    score = ((objs - lo) / span) @ np.asarray(weights, dtype=float)
    return front.members[int(np.argmin(score))]


# ---------------------------------------------------------------------------
# actuator placement (independent constrained maximization)

def _design_load_sweeps(design, ctx):
    angles, norms = ctx.angles, ctx.norms
    q2 = norms.grid(angles)
    q3_st = coupling_map_standing(design, angles, q2)
    tau2, tau3 = joint_loads(ctx.body, ctx.exo, q2, q3_st, ctx.arm_angles, ctx.gravity)
    mo_st, _, _ = knee_moment_standing_batch(design, q2, tau2, tau3)
    q3_sit = coupling_map_sitting(design, angles, q2)
    tau2s, tau3s = joint_loads(ctx.body, ctx.exo, q2, q3_sit, ctx.arm_angles,
                               ctx.gravity)
    mo_sit, _ = knee_moment_sitting_batch(design, q2, tau2s, tau3s)
    return q2, mo_st, mo_sit      # both moment arrays indexed by ascending q2


def _scan_mounts(a_pt, b_pts, count, spring, q2, mo_st, mo_sit, rate):
    """Feasible placements and objectives for one thigh mount against many
    base mounts; vectorized over mounts and sweep samples."""
    from .mechanism import thigh_to_base
    a_b = thigh_to_base(a_pt, q2)                       # (m, 2)
    rel = a_b[None, :, :] - b_pts[:, None, :]           # (B, m, 2)
    length = np.linalg.norm(rel, axis=-1)               # (B, m)
    ok = np.all(length > 1e-6, axis=1)
    free_len = length.max(axis=1)                       # (B,)
    dx = free_len[:, None] - length
    ok &= np.all(dx <= spring.stroke + 1e-9, axis=1)
    cross_ab = a_b[None, :, 0] * b_pts[:, 1, None] - a_b[None, :, 1] * b_pts[:, 0, None]
    cross_af = a_b[None, :, 0] * rel[..., 1] - a_b[None, :, 1] * rel[..., 0]

    def torque(branch_rate):
        dxdt = -(cross_ab / length) * branch_rate
        if spring.force_mode == "ideal":
            static = (spring.f0 + spring.ka * dx) * spring.eta_t
        else:
            lam0, lam1, lam2 = spring.lam
            static = (lam0 + lam1 * dx + lam2 * dx * dx) * spring.eta_t
            static = static * np.where(dxdt > 0, spring.compression_scale,
                                       np.where(dxdt < 0, spring.extension_scale, 1.0))
        force = count * (static + spring.Da * dxdt)
        return -force * cross_af / length

    tau_st = torque(rate)
    tau_sit = torque(-rate)
    ok &= np.all(tau_st - mo_st[None, :] >= 0, axis=1)
    ok &= np.all(mo_sit[None, :] - tau_sit >= 0, axis=1)
    obj = np.where(ok, tau_st.sum(axis=1), -np.inf)
    return obj, free_len


def place_actuator(design: DesignVector, spring_catalog: list[GasSpring],
                   ctx: DesignContext, grid: int = 12,
                   refine_steps: int = 40) -> tuple[ActuatorPlacement, GasSpring]:
    """Maximize the summed standing actuator torque subject to the transition
    constraints (lift on the way up, yield on the way down) and stroke limits.

    Coarse grid over both mount areas and the discrete catalog, then a
    deterministic pattern-search refinement of the mounts.
    """
    if not spring_catalog:
        raise NoFeasibleActuator("empty spring catalog")
    angles = ctx.angles
    q2, mo_st, mo_sit = _design_load_sweeps(design, ctx)
    rate = (angles.q_f - angles.q_o) / 6.0

    a2 = np.asarray(ctx.area_a2, dtype=float)
    a1 = np.asarray(ctx.area_a1, dtype=float)
    lo2, hi2 = a2.min(axis=0), a2.max(axis=0)
    lo1, hi1 = a1.min(axis=0), a1.max(axis=0)
    a_pts = [(xa, ya)
             for xa in np.linspace(lo2[0], hi2[0], grid)
             for ya in np.linspace(lo2[1], hi2[1], grid)
             if distance_to_polygon((xa, ya), ctx.area_a2) == 0]
    b_list = [(xb, yb)
              for xb in np.linspace(lo1[0], hi1[0], grid)
              for yb in np.linspace(lo1[1], hi1[1], grid)
              if distance_to_polygon((xb, yb), ctx.area_a1) == 0]
    b_pts = np.asarray(b_list, dtype=float)

    best = None   # (objective, a, b, count, spring)
    for spring in spring_catalog:
        for count in (2, 3):
            for a_pt in a_pts:
                obj, _ = _scan_mounts(a_pt, b_pts, count, spring, q2, mo_st,
                                      mo_sit, rate)
                k = int(np.argmax(obj))
                if np.isfinite(obj[k]) and (best is None or obj[k] > best[0]):
                    best = (float(obj[k]), a_pt, tuple(b_pts[k]), count, spring)
    if best is None:
        raise NoFeasibleActuator(
            "no placement satisfies the standing/sitting constraints")

    # pattern-search refinement of the winning mounts
    obj_best, a, b, count, spring = best
    a, b = np.asarray(a), np.asarray(b)
    step = max((hi2 - lo2).max(), (hi1 - lo1).max()) / grid

    def probe(pa, pb):
        if distance_to_polygon(tuple(pa), ctx.area_a2) > 0 or \
           distance_to_polygon(tuple(pb), ctx.area_a1) > 0:
            return -np.inf
        obj, _ = _scan_mounts(tuple(pa), np.asarray([pb]), count, spring, q2,
                              mo_st, mo_sit, rate)
        return float(obj[0])

    for _ in range(refine_steps):
        improved = False
        for delta in ((step, 0), (-step, 0), (0, step), (0, -step)):
            for target in ("a", "b"):
                na = a + delta if target == "a" else a
                nb = b + delta if target == "b" else b
                got = probe(na, nb)
                if got > obj_best:
                    obj_best, a, b = got, na, nb
                    improved = True
        if not improved:
            step /= 2
            if step < 1e-4:
                break
    final = fit_free_length(ActuatorPlacement(a=tuple(a), b=tuple(b),
                                              spring_count=count), angles)
    return final, spring
