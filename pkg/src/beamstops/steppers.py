"""Time integration of the discretized beam-with-stops problem.

One family of three-level schemes, parameterized by beta in [0, 1/2]
(beta = 1/2 is the unconditionally stable member, the Newmark average
with gamma = 1/2):

    (M + dt^2 beta S) u^{n+1} = (2M - dt^2 (1-2 beta) S) u^n
                                - (M + dt^2 beta S) u^{n-1} + dt^2 G^n

with G^n the beta-weighted combination of time-averaged loads.  Three
ways to close the step at the stops:

* ``linear``    — no stops, plain banded solve;
* ``signorini`` — the step minimizes the quadratic over the admissible
  box: unconstrained solve, project the constrained DOF onto its
  bounds, re-solve the pinned system if a bound engaged (or projected
  Gauss-Seidel for distributed obstacles);
* ``penalty``   — the stops are stiff one-sided springs of compliance
  eps, treated implicitly at level n+1 through an exact three-case
  analysis (the spring force is piecewise linear, so each case is one
  pre-factored banded solve).

Runs are vetoed up front when dt exceeds the stability limit for the
chosen beta (overridable with ``force``).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .diagnostics import ContactAudit, discrete_energy
from .fem import (
    BeamModel,
    DofMap,
    LoadAssembler,
    Mesh,
    assemble,
    interpolate_profile,
    lifting,
    lifting_slope,
)
from .linalg import (
    BandedSpd,
    BoxConstraint,
    PinnedDofSolver,
    pgs_box,
)
from .stability import UnstableTimeStepError, check_matrices


class PenaltyConsistencyError(Exception):
    """No contact case of the implicit penalty solve was self-consistent."""


# ---------------------------------------------------------------------------
# parameters and state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchemeParams:
    """Scheme weight beta, step dt and horizon T (N = round(T/dt) steps)."""

    beta: float
    dt: float
    T: float

    def __post_init__(self):
        if not 0.0 <= self.beta <= 0.5:
            raise ValueError("beta must lie in [0, 1/2]")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.T < 0.0:
            raise ValueError("horizon must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass(frozen=True)
class PenaltyParams:
    """Penalty-scheme parameters; inv_eps is the spring stiffness 1/eps."""

    inv_eps: float
    dt: float
    T: float
    beta: float = 0.25

    def __post_init__(self):
        if self.inv_eps < 0.0:
            raise ValueError("inv_eps must be non-negative")
        if not 0.0 <= self.beta <= 0.5:
            raise ValueError("beta must lie in [0, 1/2]")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.T < 0.0:
            raise ValueError("horizon must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass(frozen=True)
class SchemeState:
    """Two consecutive DOF vectors (u^{n-1}, u^n) and the index n."""

    u_prev: np.ndarray
    u_curr: np.ndarray
    n: int


def init_states(
    model: BeamModel,
    mesh: Mesh,
    params,
    u0=None,
    v0=None,
) -> SchemeState:
    """Interpolate the initial data and build the starting pair.

    ``u0``/``v0`` are (value, slope) callable pairs or raw DOF vectors;
    omitted, they default to the beam at rest in the lab frame:
    u0 = -phi(0) h(x), v0 = -phi'(0) h(x) with h the lifting profile.
    u0 must satisfy the stops; u1 = u0 + dt v0 is projected onto them.
    """
    dofs = DofMap(mesh.J)
    box = model.box(dofs, mesh)

    def as_vector(data, scale_default):
        if data is None:
            c = scale_default
            return interpolate_profile(
                mesh,
                lambda x: -c * lifting(x, model.L)[0],
                lambda x: -c * lifting_slope(x, model.L),
            )
        if isinstance(data, np.ndarray):
            if data.shape[0] != dofs.ndof:
                raise ValueError("initial DOF vector has the wrong length")
            return np.asarray(data, dtype=float).copy()
        value_fn, slope_fn = data
        return interpolate_profile(mesh, value_fn, slope_fn)

    vec_u0 = as_vector(u0, float(model.phi.value(0.0)))
    if not box.contains(vec_u0):
        raise ValueError("initial displacement violates the stops")
    vec_v0 = as_vector(v0, float(model.phi.d1(0.0)))
    vec_u1 = box.project(vec_u0 + params.dt * vec_v0)
    return SchemeState(u_prev=vec_u0, u_curr=vec_u1, n=1)


# ---------------------------------------------------------------------------
# one step of each scheme
# ---------------------------------------------------------------------------


def effective_matrix(mass: BandedSpd, stiffness: BandedSpd, params) -> BandedSpd:
    """A = M + dt^2 beta S (the matrix inverted every step)."""
    return BandedSpd.lincomb(1.0, mass, params.dt**2 * params.beta, stiffness)


def transfer_matrix(mass: BandedSpd, stiffness: BandedSpd, params) -> BandedSpd:
    """B = 2M - dt^2 (1-2 beta) S (applied to u^n in the right-hand side)."""
    return BandedSpd.lincomb(
        2.0, mass, -(params.dt**2) * (1.0 - 2.0 * params.beta), stiffness
    )


def rhs(mass: BandedSpd, stiffness: BandedSpd, state: SchemeState, g_n: np.ndarray, params) -> np.ndarray:
    """Right-hand side F^n built from the state pair and the load G^n."""
    dt2 = params.dt**2
    beta = params.beta
    uc, up = state.u_curr, state.u_prev
    return (
        2.0 * mass.matvec(uc)
        - dt2 * (1.0 - 2.0 * beta) * stiffness.matvec(uc)
        - mass.matvec(up)
        - dt2 * beta * stiffness.matvec(up)
        + dt2 * np.asarray(g_n, dtype=float)
    )


def newmark_linear_step(state: SchemeState, f_n: np.ndarray, factor) -> SchemeState:
    """Unconstrained step: solve A u^{n+1} = F^n."""
    u_next = factor.solve(np.asarray(f_n, dtype=float))
    return SchemeState(u_prev=state.u_curr, u_curr=u_next, n=state.n + 1)


class PgsStepSolver:
    """Projected Gauss-Seidel step solver with cross-step warm starts."""

    def __init__(self, a: BandedSpd, box: BoxConstraint, tol: float = 1e-10, max_iter=None):
        self.a = a
        self.box = box
        self.tol = tol
        self.max_iter = max_iter
        self._warm = None

    def solve_with_case(self, f: np.ndarray):
        u = pgs_box(self.a, f, self.box, x0=self._warm, tol=self.tol, max_iter=self.max_iter)
        self._warm = u.copy()
        return u, None


def signorini_step(state: SchemeState, f_n: np.ndarray, solver) -> SchemeState:
    """Constrained step: minimize the step quadratic over the stop box.

    ``solver`` is a pre-factored :class:`~beamstops.linalg.PinnedDofSolver`
    (tip-only stops) or a :class:`PgsStepSolver` (distributed obstacles).
    """
    u_next, _ = solver.solve_with_case(np.asarray(f_n, dtype=float))
    return SchemeState(u_prev=state.u_curr, u_curr=u_next, n=state.n + 1)


class PenaltyTipSolver:
    """Implicit solve of one penalty step with stops on a single DOF.

    The spring force p(u) = -(1/eps)[max(u - g_hi, 0) - max(g_lo - u, 0)]
    enters the step beta-weighted like the elastic force; the n+1 term
    makes the system piecewise linear in the constrained coordinate with
    three branches (free / pressing upper / pressing lower).  The
    reduced equation for that coordinate is strictly increasing, so
    exactly one branch is self-consistent; both branch matrices (A and
    the diagonal-bumped A + dt^2 beta/eps e_c e_c^T) are factored once.
    """

    def __init__(self, a: BandedSpd, index: int, lower: float, upper: float, params: PenaltyParams):
        if np.isfinite(lower) and lower >= 0.0 or np.isfinite(upper) and upper <= 0.0:
            raise ValueError("stops must straddle zero")
        self.index = index
        self.lower = lower
        self.upper = upper
        self.inv_eps = params.inv_eps
        self.dt2 = params.dt**2
        self.beta = params.beta
        self.full_factor = a.cholesky()
        self.bump = self.dt2 * self.beta * self.inv_eps
        if self.bump > 0.0:
            self.bumped_factor = a.with_diagonal_bump(index, self.bump).cholesky()
        else:
            self.bumped_factor = self.full_factor

    def spring(self, tip: float) -> float:
        """Penalty force of the stops on the tip (negative at the upper stop)."""
        if tip > self.upper:
            return -self.inv_eps * (tip - self.upper)
        if tip < self.lower:
            return -self.inv_eps * (tip - self.lower)
        return 0.0

    def advance(self, state: SchemeState, f_n: np.ndarray) -> np.ndarray:
        c = self.index
        hist = (1.0 - 2.0 * self.beta) * self.spring(state.u_curr[c]) + self.beta * self.spring(
            state.u_prev[c]
        )
        base = np.asarray(f_n, dtype=float).copy()
        base[c] += self.dt2 * hist
        u = self.full_factor.solve(base)
        if self.bump == 0.0 or self.lower <= u[c] <= self.upper:
            return u
        if u[c] > self.upper:
            bound = self.upper
        else:
            bound = self.lower
        base[c] += self.bump * bound
        u2 = self.bumped_factor.solve(base)
        tiny = 1e-12 * max(1.0, abs(bound))
        if (bound == self.upper and u2[c] >= bound - tiny) or (
            bound == self.lower and u2[c] <= bound + tiny
        ):
            return u2
        raise PenaltyConsistencyError(
            f"no consistent contact case at step {state.n} (tip {u[c]:.6g} vs {u2[c]:.6g})"
        )


def penalty_step(state: SchemeState, f_n: np.ndarray, solver: PenaltyTipSolver) -> SchemeState:
    """Penalty step; with inv_eps = 0 it coincides with the linear step."""
    u_next = solver.advance(state, f_n)
    return SchemeState(u_prev=state.u_curr, u_curr=u_next, n=state.n + 1)


# ---------------------------------------------------------------------------
# full runs
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Recorded run output plus per-step extrema.

    The recorded velocity is the backward difference (u^n - u^{n-1})/dt
    at the tip; ``reaction`` is the scheme-native dt^2-scaled contact
    force at the tip DOF ((A u - F) for the stops, dt^2 times the spring
    force for the penalty scheme) and ``reaction_physical`` rescales it
    by 1/dt^2.  ``max_abs_tip``/``max_violation`` are tracked at every
    step, not just the recorded ones.
    """

    t: np.ndarray
    u_tip: np.ndarray
    v_tip: np.ndarray
    energy: np.ndarray
    reaction: np.ndarray
    violation: np.ndarray
    scheme: str
    beta: float
    dt: float
    tip_lower: float
    tip_upper: float
    n_steps: int
    record_stride: int
    max_abs_tip: float
    max_violation: float
    audit: ContactAudit | None
    wall_time: float

    CSV_HEADER = "t,u_tip,v_tip,energy,reaction,violation"

    @property
    def reaction_physical(self) -> np.ndarray:
        return self.reaction / self.dt**2

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for i in range(self.t.shape[0]):
            lines.append(
                f"{self.t[i]:.17g},{self.u_tip[i]:.17g},{self.v_tip[i]:.17g},"
                f"{self.energy[i]:.17g},{self.reaction[i]:.17g},{self.violation[i]:.17g}"
            )
        return "\n".join(lines) + "\n"


def _tip_bounds(box: BoxConstraint, tip: int):
    return float(box.lower[tip]), float(box.upper[tip])


def run(
    model: BeamModel,
    mesh: Mesh,
    params,
    kind: str = "signorini",
    u0=None,
    v0=None,
    record_stride: int | None = None,
    alpha: float = 0.01,
    force: bool = False,
    solver_choice: str = "auto",
    pgs_tol: float = 1e-10,
    audit: bool | str = "auto",
    seed: int = 0,
) -> Trajectory:
    """Integrate the beam from t=0 to T and record the tip history.

    ``kind`` picks the step closure ("signorini", "linear", "penalty" —
    the latter requires :class:`PenaltyParams`).  A stability veto is
    raised when dt exceeds the exact-kappa limit for beta < 1/2 unless
    ``force`` is set.  ``audit`` enables per-step complementarity
    accounting on the direct contact path ("auto": on for signorini).
    """
    t_begin = time.perf_counter()
    if kind not in ("signorini", "linear", "penalty"):
        raise ValueError(f"unknown scheme kind {kind!r}")
    if kind == "penalty" and not isinstance(params, PenaltyParams):
        raise ValueError("penalty runs need PenaltyParams")

    dofs = DofMap(mesh.J)
    gm = assemble(mesh, model)
    box = model.box(dofs, mesh)
    tip = dofs.tip_disp
    tip_lo, tip_hi = _tip_bounds(box, tip)

    report = check_matrices(
        gm.mass, gm.stiffness, mesh.h, model.k2, params.beta, params.dt,
        alpha=alpha, seed=seed,
    )
    if report.verdict == "violated" and not force:
        raise UnstableTimeStepError(report)

    a_mat = effective_matrix(gm.mass, gm.stiffness, params)
    b_mat = transfer_matrix(gm.mass, gm.stiffness, params)
    dt = params.dt
    dt2 = dt * dt
    n_total = params.n_steps

    # step closure -----------------------------------------------------------
    single = box.single_bounded_dof()
    penalty_solver = None
    direct_solver = None
    pgs_solver = None
    linear_factor = None
    if kind == "linear":
        linear_factor = a_mat.cholesky()
    elif kind == "penalty":
        if not model.tip_only:
            raise ValueError("penalty stops act on the tip only")
        penalty_solver = PenaltyTipSolver(a_mat, tip, tip_lo, tip_hi, params)
    else:
        unconstrained = single is None and not np.any(box.finite_mask())
        if unconstrained:
            direct_solver = PinnedDofSolver(a_mat, tip, -np.inf, np.inf)
        elif solver_choice == "pgs" or (solver_choice == "auto" and single is None):
            pgs_solver = PgsStepSolver(a_mat, box, tol=pgs_tol)
        elif solver_choice in ("auto", "direct"):
            if single is None:
                raise ValueError("the direct solver needs tip-only stops")
            c, lo, hi = single
            direct_solver = PinnedDofSolver(a_mat, c, lo, hi)
        else:
            raise ValueError(f"unknown solver choice {solver_choice!r}")
    # complementarity audit only makes sense on the direct contact path
    do_audit = direct_solver is not None and audit in (True, "auto")

    state = init_states(model, mesh, params, u0=u0, v0=v0)
    u_prev, u_curr = state.u_prev, state.u_curr

    loads = LoadAssembler(mesh, model)
    horizon = params.T

    stride = record_stride
    if stride is None:
        stride = max(1, math.ceil(n_total / 20000)) if n_total else 1
    if stride < 1:
        raise ValueError("record_stride must be >= 1")

    rec_t, rec_tip, rec_v, rec_e, rec_r, rec_viol = [], [], [], [], [], []
    contact_audit = ContactAudit() if do_audit else None

    def tip_violation(u):
        v = 0.0
        if np.isfinite(tip_hi):
            v = max(v, u[tip] - tip_hi)
        if np.isfinite(tip_lo):
            v = max(v, tip_lo - u[tip])
        return v

    if box.single_bounded_dof() is not None or not np.any(box.finite_mask()):
        step_violation = tip_violation
    else:
        lo_b, hi_b = box.lower, box.upper

        def step_violation(u):
            return float(
                max(np.max(np.maximum(u - hi_b, 0.0)), np.max(np.maximum(lo_b - u, 0.0)))
            )

    beta = params.beta

    def record(n, up, uc, reaction):
        rec_t.append(n * dt)
        rec_tip.append(uc[tip])
        rec_v.append((uc[tip] - up[tip]) / dt)
        rec_e.append(discrete_energy((up, uc), gm.mass, gm.stiffness, beta, dt))
        rec_r.append(reaction)
        rec_viol.append(step_violation(uc))

    def penalty_reaction(u):
        return dt2 * penalty_solver.spring(u[tip]) if penalty_solver else 0.0

    max_abs_tip = max(abs(u_prev[tip]), abs(u_curr[tip]))
    max_violation = max(step_violation(u_prev), step_violation(u_curr))

    # t=0 row: u^0 with the forward-difference velocity of the starting pair
    rec_t.append(0.0)
    rec_tip.append(u_prev[tip])
    rec_v.append((u_curr[tip] - u_prev[tip]) / dt)
    rec_e.append(discrete_energy((u_prev, u_curr), gm.mass, gm.stiffness, beta, dt))
    rec_r.append(penalty_reaction(u_prev))
    rec_viol.append(step_violation(u_prev))
    if n_total >= 1 and (stride == 1 or n_total == 1):
        record(1, u_prev, u_curr, penalty_reaction(u_curr))

    # time-averaged loads for the sliding three-window stencil
    f_m = loads.time_averaged(0, dt, horizon)
    f_c = loads.time_averaged(1, dt, horizon) if n_total >= 2 else None
    f_p = loads.time_averaged(2, dt, horizon) if n_total >= 2 else None
    for n in range(1, n_total):
        g_n = beta * (f_p + f_m) + (1.0 - 2.0 * beta) * f_c
        f_vec = b_mat.matvec(u_curr) - a_mat.matvec(u_prev) + dt2 * g_n

        if kind == "linear":
            u_next = linear_factor.solve(f_vec)
            case = 0
        elif kind == "penalty":
            u_next = penalty_solver.advance(SchemeState(u_prev, u_curr, n), f_vec)
            case = 0
        elif direct_solver is not None:
            u_next, case = direct_solver.solve_with_case(f_vec)
        else:
            u_next, case = pgs_solver.solve_with_case(f_vec)

        step = n + 1
        tip_val = u_next[tip]
        max_abs_tip = max(max_abs_tip, abs(tip_val))
        viol = step_violation(u_next)
        max_violation = max(max_violation, viol)

        reaction = None
        if contact_audit is not None:
            r = a_mat.matvec(u_next) - f_vec
            reaction = float(r[tip])
            off = np.abs(r)
            off[tip] = 0.0
            side = "inactive" if case == 0 else ("upper" if case > 0 else "lower")
            contact_audit.update(side, reaction, float(off.max()))

        if step % stride == 0 or step == n_total:
            if reaction is None:
                if kind == "penalty":
                    reaction = penalty_reaction(u_next)
                elif kind == "linear":
                    reaction = 0.0
                else:
                    reaction = float((a_mat.matvec(u_next) - f_vec)[tip])
            record(step, u_curr, u_next, reaction)

        u_prev = u_curr
        u_curr = u_next
        if n + 1 < n_total:
            f_m = f_c
            f_c = f_p
            f_p = loads.time_averaged(n + 2, dt, horizon)

    wall = time.perf_counter() - t_begin
    return Trajectory(
        t=np.array(rec_t),
        u_tip=np.array(rec_tip),
        v_tip=np.array(rec_v),
        energy=np.array(rec_e),
        reaction=np.array(rec_r),
        violation=np.array(rec_viol),
        scheme=kind,
        beta=params.beta,
        dt=dt,
        tip_lower=tip_lo,
        tip_upper=tip_hi,
        n_steps=n_total,
        record_stride=stride,
        max_abs_tip=float(max_abs_tip),
        max_violation=float(max_violation),
        audit=contact_audit,
        wall_time=wall,
    )
