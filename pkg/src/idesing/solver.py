"""Numerical integration of constant-rank IDE.

At each point the linear algebraic system ``a(x) v = f(x)`` is solved by
SVD; a vector field is selected from the resulting affine distribution and
advanced with fixed-step classical RK4. Optional Gauss-Newton projection
keeps the state on a constraint set. Rank changes end a segment; impasse
points are traversed by integrating the kernel field of the homogenized
system ``[a(x), -f(x)] (xdot, tdot) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .ide import ConstraintSet, IdeSystem, homogenize

BLOW_UP = 1e12


class NoSolutionAtPoint(ArithmeticError):
    """``rank [a(x), f(x)] > rank a(x)``: the LAS is inconsistent at ``x``."""

    def __init__(self, point, residual: float):
        super().__init__(f"no solution at {np.array2string(np.asarray(point), precision=6)} (residual {residual:.3e})")
        self.point = np.asarray(point)
        self.residual = residual


class AmbiguousDirection(ValueError):
    """The homogenized kernel is not one-dimensional."""


@dataclass
class AffineDistribution:
    """Solutions ``particular + null_basis @ c`` of ``a(x) v = f(x)`` at ``point``."""

    point: np.ndarray
    particular: np.ndarray
    null_basis: np.ndarray
    rank: int
    rank_af: int
    sigma: np.ndarray
    a: np.ndarray
    f: np.ndarray
    scale: float = 1.0
    left: Optional[np.ndarray] = None
    right: Optional[np.ndarray] = None

    def contains(self, v: np.ndarray, tol: float = 1e-8) -> bool:
        """``v`` solves the LAS as well as ``particular`` does, up to ``tol`` relative."""
        r = np.linalg.norm(self.a @ v - self.f)
        r0 = np.linalg.norm(self.a @ self.particular - self.f)
        scale = (self.sigma[0] if self.sigma.size else 0.0) * np.linalg.norm(v) + np.linalg.norm(self.f)
        return bool(r <= r0 + tol * max(scale, 1.0))


Selector = Union[str, Callable[[AffineDistribution], np.ndarray]]


def _svd_rank(sigma: np.ndarray, tol: float, reference: float) -> int:
    if reference == 0:
        return 0
    return int(np.sum(sigma > tol * reference))


def solve_las(s: IdeSystem, x, tol: float = 1e-8, consistency_tol: float = 1e-6) -> AffineDistribution:
    """Affine space of solutions of the LAS at ``x``.

    The rank uses singular values of ``a(x)`` thresholded at ``tol`` times the
    norm of ``[a(x), f(x)]``. Raises :class:`NoSolutionAtPoint` when the
    least-squares residual exceeds ``consistency_tol`` relative to the data.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (s.n,):
        raise ValueError(f"point has shape {x.shape}, expected ({s.n},)")
    A = s.eval_a(x)
    F = s.eval_f(x)
    n = s.n
    if s.m == 0:
        return AffineDistribution(x, np.zeros(n), np.eye(n), 0, 0, np.zeros(0), A, F, 0.0, np.zeros((0, 0)), np.eye(n))
    U, S, Vt = np.linalg.svd(A, full_matrices=True)
    # within a factor sqrt(2) of |[a, f]|_2 without a second decomposition
    ref = math.hypot(S[0] if S.size else 0.0, np.linalg.norm(F))
    r = _svd_rank(S, tol, ref)
    coeffs = (U[:, :r].T @ F) / S[:r]
    particular = Vt[:r].T @ coeffs
    null_basis = Vt[r:].T
    resid = np.linalg.norm(A @ particular - F)
    scale = max((S[0] if S.size else 0.0) * np.linalg.norm(particular) + np.linalg.norm(F), 1.0)
    raf = r + (1 if np.linalg.norm(F - U[:, :r] @ (U[:, :r].T @ F)) > tol * ref else 0)
    if resid > consistency_tol * scale:
        raise NoSolutionAtPoint(x, resid)
    return AffineDistribution(x, particular, null_basis, r, raf, S, A, F, ref, U, Vt)


def select_vector_field(d: AffineDistribution, selector: Selector = "min_norm", tol: float = 1e-8) -> np.ndarray:
    """Pick one member of the affine distribution.

    ``"min_norm"`` returns the particular solution (orthogonal to the kernel).
    A callable receives the distribution and must return a member of it.
    """
    if selector == "min_norm" or d.null_basis.shape[1] == 0:
        return d.particular
    if not callable(selector):
        raise ValueError(f"unknown selector {selector!r}")
    v = np.asarray(selector(d), dtype=float)
    offset = v - d.particular
    off_kernel = offset - d.null_basis @ (d.null_basis.T @ offset)
    if np.linalg.norm(off_kernel) > tol * max(1.0, np.linalg.norm(v)) or not d.contains(v, max(tol, 1e-8)):
        raise ValueError("selector output is not in the affine distribution")
    return v


def tangent_selector(constraints: ConstraintSet) -> Callable[[AffineDistribution], np.ndarray]:
    """Selector returning the member closest to tangency with ``{constraints = 0}``.

    Among ``particular + N c`` it minimizes ``|Dphi(x) v|`` and, within
    that, ``|c|``.
    """

    def select(d: AffineDistribution) -> np.ndarray:
        J = constraints.evaluate_jacobian(d.point)
        N = d.null_basis
        c = np.linalg.lstsq(J @ N, -(J @ d.particular), rcond=None)[0]
        return d.particular + N @ c

    return select


@dataclass
class Projection:
    point: np.ndarray
    converged: bool
    iterations: int
    residual: float


def project_onto_constraints(x, c: ConstraintSet, tol: float = 1e-13, max_iter: int = 10) -> Projection:
    """Gauss-Newton with min-norm steps ``x <- x - Jphi(x)^+ phi(x)``."""
    x = np.array(x, dtype=float)
    if not len(c):
        return Projection(x, True, 0, 0.0)
    phi = c.evaluate(x)
    norm = float(np.linalg.norm(phi))
    for it in range(max_iter):
        if norm < tol:
            return Projection(x, True, it, norm)
        step = np.linalg.lstsq(c.evaluate_jacobian(x), phi, rcond=None)[0]
        x = x - step
        phi = c.evaluate(x)
        new = float(np.linalg.norm(phi))
        if new >= norm and new < 1e3 * tol:
            # rounding floor reached
            return Projection(x, True, it + 1, new)
        norm = new
    return Projection(x, norm < tol, max_iter, norm)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class TrajectorySegment:
    system_id: str
    variables: tuple[str, ...]
    times: np.ndarray
    states: np.ndarray
    residual: np.ndarray
    constraint_norm: np.ndarray
    rank_a: np.ndarray
    rank_af: np.ndarray
    termination: str = "completed"
    event: Optional[dict] = None
    level: int = 0
    parameter: str = "time"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float).reshape(len(self.times), len(self.variables))
        self.residual = np.asarray(self.residual, dtype=float)
        self.constraint_norm = np.asarray(self.constraint_norm, dtype=float)
        self.rank_a = np.asarray(self.rank_a, dtype=int)
        self.rank_af = np.asarray(self.rank_af, dtype=int)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def initial_state(self) -> np.ndarray:
        return self.states[0]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def split(self, index: int) -> tuple["TrajectorySegment", "TrajectorySegment"]:
        """Two segments sharing the row ``index``."""
        def part(sl):
            return replace(
                self,
                times=self.times[sl], states=self.states[sl], residual=self.residual[sl],
                constraint_norm=self.constraint_norm[sl], rank_a=self.rank_a[sl], rank_af=self.rank_af[sl],
            )
        first = part(slice(0, index + 1))
        first.termination = "completed"
        first.event = None
        return first, part(slice(index, None))


@dataclass
class Trajectory:
    segments: list[TrajectorySegment] = field(default_factory=list)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.segments[0].variables

    @property
    def termination(self) -> str:
        return self.segments[-1].termination

    @property
    def times(self) -> np.ndarray:
        return np.concatenate([s.times for s in self.segments])

    @property
    def states(self) -> np.ndarray:
        return np.vstack([s.states for s in self.segments])

    @property
    def final_state(self) -> np.ndarray:
        return self.segments[-1].final_state


@dataclass
class IntegrationOptions:
    """Fixed-step RK4 settings.

    In direct mode ``t_span`` is the time interval (``t1 < t0`` integrates
    backwards). In homogeneous mode it is the range of the arc-length
    parameter, starting from the initial point; a negative range runs the
    curve against its initial orientation.
    """

    step: float = 1e-3
    t_span: tuple[float, float] = (0.0, 1.0)
    projection_constraints: Optional[ConstraintSet] = None
    project_every: int = 1
    rank_tol: float = 1e-8
    consistency_tol: float = 1e-6
    event_tol: float = 1e-10
    approach_steps: float = 10.0
    mode: str = "direct"
    selector: Selector = "min_norm"
    projection_tol: float = 1e-13
    projection_max_iter: int = 10

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        t0, t1 = self.t_span
        if not (math.isfinite(t0) and math.isfinite(t1)) or t0 == t1:
            raise ValueError("t_span must be two distinct finite numbers")
        if self.mode not in ("direct", "homogeneous"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.project_every < 1:
            raise ValueError("project_every must be at least 1")


def _rk4(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> tuple[np.ndarray, list[np.ndarray]]:
    k1 = fun(x)
    k2 = fun(x + 0.5 * h * k1)
    k3 = fun(x + 0.5 * h * k2)
    k4 = fun(x + h * k3)
    stages = [x + 0.5 * h * k1, x + 0.5 * h * k2, x + h * k3]
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), stages


def rk4_step(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step for ``xdot = fun(x)``."""
    return _rk4(fun, np.asarray(x, dtype=float), h)[0]


def integrate_ode(
    fun: Callable[[np.ndarray], np.ndarray],
    x0,
    t_span: tuple[float, float],
    step: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step RK4 for an explicit ODE; the last step is shortened to land on ``t1``."""
    t0, t1 = t_span
    direction = 1.0 if t1 > t0 else -1.0
    nsteps = max(1, int(math.ceil(abs(t1 - t0) / step - 1e-9)))
    times = t0 + direction * step * np.arange(nsteps + 1)
    times[-1] = t1
    x = np.asarray(x0, dtype=float)
    states = np.empty((nsteps + 1, x.size))
    states[0] = x
    for i in range(nsteps):
        x = rk4_step(fun, x, times[i + 1] - times[i])
        states[i + 1] = x
    return times, states


class _Frame:
    """Signed measure of the top ``r`` singular block of ``a`` in frozen singular frames."""

    def __init__(self, d: AffineDistribution):
        r = d.rank
        self.r = r
        self.U = d.left[:, :r]
        self.V = d.right[:r].T

    def sign(self, A: np.ndarray) -> float:
        if self.r == 0:
            return 1.0
        return float(np.sign(np.linalg.det(self.U.T @ A @ self.V)))


def detect_rank_event(ranks: Sequence[int]) -> Optional[int]:
    """Index of the first rank differing from the initial one, or ``None``."""
    ranks = list(ranks)
    for i, r in enumerate(ranks):
        if r != ranks[0]:
            return i
    return None


class _DirectIntegrator:
    def __init__(self, s: IdeSystem, opts: IntegrationOptions, system_id: str):
        self.s = s
        self.opts = opts
        self.system_id = system_id
        self.c = opts.projection_constraints

    def las(self, x: np.ndarray) -> AffineDistribution:
        return solve_las(self.s, x, self.opts.rank_tol, self.opts.consistency_tol)

    def field(self, x: np.ndarray) -> np.ndarray:
        return select_vector_field(self.las(x), self.opts.selector)

    def constraint_norm(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.c.evaluate(x))) if self.c is not None and len(self.c) else 0.0

    def project(self, x: np.ndarray) -> np.ndarray:
        if self.c is None or not len(self.c):
            return x
        return project_onto_constraints(x, self.c, self.opts.projection_tol, self.opts.projection_max_iter).point

    def attempt(self, x: np.ndarray, h: float, r0: int, frame: _Frame, project: bool):
        """One RK4 step (plus projection); ``(x_new, d_new)`` or ``None`` on a rank crossing."""
        try:
            x_new, stages = _rk4(self.field, x, h)
        except NoSolutionAtPoint:
            return None
        if r0:
            for p in stages:
                if frame.sign(self.s.eval_a(p)) < 0:
                    return None
        if project:
            x_new = self.project(x_new)
        if not np.all(np.isfinite(x_new)):
            return None
        try:
            d = self.las(x_new)
        except NoSolutionAtPoint:
            return None
        if d.rank != r0 or frame.sign(d.a) < 0:
            return None
        return x_new, d

    def refine_homogeneous(self, x: np.ndarray, t: float, direction: float, frame: _Frame, window: float):
        """Locate a rank crossing ahead of ``(x, t)`` along the homogenized kernel field."""
        b = homogenize(self.s)
        y = np.append(x, t)
        try:
            k = _kernel_direction(b, y, self.opts.rank_tol)
        except AmbiguousDirection:
            return None
        if k[-1] == 0:
            return None
        k = k * np.sign(k[-1] * direction)
        ref = k.copy()
        ds = abs(self.opts.step) * np.linalg.norm(self.field(x)) / 8 + abs(self.opts.step) / 8

        def g(y):
            return _kernel_direction(b, y, self.opts.rank_tol, ref_holder[0])

        ref_holder = [ref]

        def crossed(y):
            A = self.s.eval_a(y[:-1])
            if frame.sign(A) < 0:
                return True
            sv = np.linalg.svd(A, compute_uv=False)
            scale = np.linalg.norm(np.column_stack([A, self.s.eval_f(y[:-1])]), 2)
            return frame.r > 0 and sv[frame.r - 1] <= self.opts.rank_tol * scale

        travelled = 0.0
        for _ in range(100000):
            try:
                y_new = _rk4(g, y, ds)[0]
            except AmbiguousDirection:
                y_new = None
            if y_new is None or crossed(y_new):
                lo, hi = 0.0, ds
                y_lo = y
                while (hi - lo) > self.opts.event_tol:
                    mid = 0.5 * (lo + hi)
                    try:
                        y_mid = _rk4(g, y, mid)[0]
                        bad = crossed(y_mid)
                    except AmbiguousDirection:
                        bad = True
                    if bad:
                        hi = mid
                    else:
                        lo, y_lo = mid, y_mid
                y_hi = _rk4(g, y, hi)[0]
                return 0.5 * (y_lo + y_hi)
            ref_holder[0] = g(y_new)
            travelled += abs(y_new[-1] - y[-1])
            y = y_new
            if travelled > window:
                return None
        return None

    def refine_bisect(self, x: np.ndarray, t: float, h: float, r0: int, frame: _Frame) -> tuple[np.ndarray, float]:
        lo, hi = 0.0, abs(h)
        sgn = math.copysign(1.0, h)
        x_lo = x
        while hi - lo > self.opts.event_tol:
            mid = 0.5 * (lo + hi)
            res = self.attempt(x, sgn * mid, r0, frame, False)
            if res is None:
                hi = mid
            else:
                lo, x_lo = mid, res[0]
        return x_lo, t + sgn * lo


def _kernel_direction(b: IdeSystem, y: np.ndarray, tol: float, ref: Optional[np.ndarray] = None) -> np.ndarray:
    B = b.eval_a(y)
    _, S, Vt = np.linalg.svd(B, full_matrices=True)
    ref_scale = S[0] if S.size else 0.0
    r = _svd_rank(S, tol, ref_scale)
    dim = b.n - r
    if dim != 1:
        raise AmbiguousDirection(f"kernel dimension {dim} at {y}")
    k = Vt[-1]
    if ref is None:
        if abs(k[-1]) > 1e-12:
            return k if k[-1] > 0 else -k
        first = k[np.flatnonzero(np.abs(k) > 1e-12)[0]]
        return k if first > 0 else -k
    dot = float(k @ ref)
    if abs(dot) < 0.1 * np.linalg.norm(ref):
        raise AmbiguousDirection("orientation could not be continued")
    return k if dot > 0 else -k


def _classify_failure(it: _DirectIntegrator, x_ev: np.ndarray, r0: int) -> str:
    """``rank_event`` when ``a`` is nearly rank-deficient at the refined crossing, else ``no_solution``."""
    if r0 == 0 or not np.all(np.isfinite(x_ev)):
        return "no_solution" if r0 == 0 else "rank_event"
    A = it.s.eval_a(x_ev)
    F = it.s.eval_f(x_ev)
    S = np.linalg.svd(A, compute_uv=False)
    ref = math.hypot(S[0], np.linalg.norm(F))
    return "rank_event" if S[r0 - 1] <= math.sqrt(it.opts.rank_tol) * ref else "no_solution"


def integrate(s: IdeSystem, x0, opts: IntegrationOptions, system_id: Optional[str] = None) -> Trajectory:
    """Integrate ``a(x) xdot = f(x)`` from ``x0`` with fixed-step RK4.

    Stops at ``t_span[1]`` (``completed``), at a change of ``rank a``
    (``rank_event``, with the crossing refined and appended as the last row),
    when the LAS loses solvability (``no_solution``) or when ``|x|`` exceeds
    1e12 (``blow_up``).
    """
    if opts.mode == "homogeneous":
        return integrate_homogeneous(s, x0, opts.t_span[0], opts, system_id)
    system_id = system_id or s.name
    it = _DirectIntegrator(s, opts, system_id)
    x = np.asarray(x0, dtype=float)
    if x.shape != (s.n,):
        raise ValueError(f"initial state has shape {x.shape}, expected ({s.n},)")
    x = it.project(x)
    d0 = it.las(x)
    r0 = d0.rank
    t0, t1 = opts.t_span
    direction = 1.0 if t1 > t0 else -1.0
    h_nom = direction * opts.step

    times, states, resid, cnorm, ra, raf = [], [], [], [], [], []

    def record(t, x, d: Optional[AffineDistribution]):
        times.append(t)
        states.append(x.copy())
        if d is not None:
            v = select_vector_field(d, opts.selector)
            resid.append(float(np.linalg.norm(d.a @ v - d.f)))
            ra.append(d.rank)
            raf.append(d.rank_af)
        else:
            from .stratification import point_ranks

            resid.append(float("nan"))
            r_a, r_af = point_ranks(s, x, opts.rank_tol)
            ra.append(r_a)
            raf.append(r_af)
        cnorm.append(it.constraint_norm(x))

    record(t0, x, d0)
    d = d0
    termination = "completed"
    event = None
    t = t0
    sigma_prev = None
    skip_approach = 0
    step_index = 0

    def finish_at(y: np.ndarray, method: str):
        record(float(y[-1]), y[:-1], None)
        return {"t": float(y[-1]), "state": y[:-1].tolist(), "method": method}

    nsteps = max(1, int(math.ceil(abs(t1 - t0) / opts.step - 1e-9)))
    for k in range(1, nsteps + 1):
        t_next = t1 if k == nsteps else t0 + k * h_nom
        h = t_next - t
        frame = _Frame(d)
        sigma_here = d.sigma[r0 - 1] / max(d.scale, 1e-300) if r0 else None
        # predicted time until the r0-th singular value reaches zero
        if sigma_prev is not None and sigma_here is not None and skip_approach == 0:
            rate = (sigma_prev - sigma_here) / abs(h_nom)
            if rate > 0 and sigma_here / rate < opts.approach_steps * abs(h_nom):
                found = it.refine_homogeneous(x, t, direction, frame, (opts.approach_steps + 1) * abs(h_nom))
                if found is not None:
                    termination = "rank_event"
                    event = finish_at(found, "homogeneous")
                    break
                skip_approach = int(opts.approach_steps)
        skip_approach = max(0, skip_approach - 1)
        sigma_prev = sigma_here
        step_index += 1
        res = it.attempt(x, h, r0, frame, step_index % opts.project_every == 0)
        if res is None:
            found = it.refine_homogeneous(x, t, direction, frame, 2 * abs(h))
            if found is not None:
                termination = "rank_event"
                event = finish_at(found, "homogeneous")
                break
            x_ev, t_ev = it.refine_bisect(x, t, h, r0, frame)
            termination = _classify_failure(it, x_ev, r0)
            event = {"t": float(t_ev), "state": x_ev.tolist(), "method": "bisection"}
            if t_ev != t:
                record(t_ev, x_ev, None)
            break
        x_new, d_new = res
        if np.linalg.norm(x_new) > BLOW_UP:
            termination = "blow_up"
            break
        t = t_next
        x, d = x_new, d_new
        record(t, x, d)

    seg = TrajectorySegment(system_id, s.variables, times, states, resid, cnorm, ra, raf, termination, event)
    return Trajectory([seg])


def integrate_homogeneous(
    s: IdeSystem,
    x0,
    t0: float,
    opts: IntegrationOptions,
    system_id: Optional[str] = None,
) -> Trajectory:
    """Follow the kernel line field of ``[a(x), -f(x)]`` through ``(x0, t0)``.

    The curve is parametrized by arc length; ``t`` is the last state
    coordinate. Orientation is continued from step to step, so points where
    ``tdot`` vanishes (impasse points) are passed through.
    """
    b = homogenize(s)
    system_id = system_id or b.name
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (s.n,):
        raise ValueError(f"initial state has shape {x0.shape}, expected ({s.n},)")
    c = opts.projection_constraints
    y = np.append(x0, float(t0))
    if c is not None and len(c):
        y[:-1] = project_onto_constraints(y[:-1], c, opts.projection_tol, opts.projection_max_iter).point
    s0, s1 = opts.t_span
    sign = 1.0 if s1 > s0 else -1.0
    ref = _kernel_direction(b, y, opts.rank_tol) * sign
    holder = [ref]

    def g(y):
        return _kernel_direction(b, y, opts.rank_tol, holder[0])

    from .stratification import point_ranks

    params, states, resid, cnorm, ra, raf = [], [], [], [], [], []

    def record(p, y, k):
        params.append(p)
        states.append(y.copy())
        resid.append(float(np.linalg.norm(b.eval_a(y) @ k)))
        cnorm.append(float(np.linalg.norm(c.evaluate(y[:-1]))) if c is not None and len(c) else 0.0)
        r_a, r_af = point_ranks(s, y[:-1], opts.rank_tol)
        ra.append(r_a)
        raf.append(r_af)

    record(s0, y, ref)
    p = s0
    termination = "completed"
    length = abs(s1 - s0)
    travelled = 0.0
    step_index = 0
    while length - travelled > 1e-12 * opts.step:
        h = min(opts.step, length - travelled)
        try:
            y_new = _rk4(g, y, h)[0]
            k_new = g(y_new)
        except AmbiguousDirection:
            termination = "rank_event"
            break
        step_index += 1
        if c is not None and len(c) and step_index % opts.project_every == 0:
            y_new[:-1] = project_onto_constraints(y_new[:-1], c, opts.projection_tol, opts.projection_max_iter).point
        if not np.all(np.isfinite(y_new)) or np.linalg.norm(y_new) > BLOW_UP:
            termination = "blow_up"
            break
        holder[0] = k_new
        y = y_new
        travelled += h
        p = s0 + sign * travelled
        record(p, y, k_new)
    variables = b.variables
    seg = TrajectorySegment(system_id, variables, params, states, resid, cnorm, ra, raf, termination, parameter="arc")
    return Trajectory([seg])
