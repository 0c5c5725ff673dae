"""The symmetric elastic sphere rolling without sliding and without spin
about the vertical.

State ``(z, u, v0)``: ``z`` is the body symmetry axis in space,
``u = zdot x z`` and ``v0`` the angular velocity component along ``z``.
The full 8 x 7 system is singular everywhere (generic rank of ``a`` is 4);
its singular set contains the invariant manifold M1b ~ S^2 x S^1 cut out by

    u3 - v0 z3 = 0,  |u|^2 + lam v0^2 - mu = 0,  |z|^2 - 1 = 0,  z.u = 0

with ``mu = 2 eps / (1 + beta)`` and ``lam = (alpha + beta) / (1 + beta)``.
On M1b the angles ``(theta, phi, psi)`` give a chart in which the dynamics
reduce to a planar system in ``(theta, w = phi - psi)`` with first integral
``sin(theta) cos(w)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .desingularization import DesingMap, LiftedSystem
from .ide import ConstraintSet, IdeSystem, make_system, project_range, restrict_by_constraints
from .parsing import parse_polynomial
from .polynomial import Polynomial, PolynomialMatrix
from .solver import (
    IntegrationOptions,
    Trajectory,
    TrajectorySegment,
    integrate,
    rk4_step,
    tangent_selector,
)

VARIABLES = ("z1", "z2", "z3", "u1", "u2", "u3", "v0")
SIN_GUARD = 1e-8


class SinThetaZero(ArithmeticError):
    """The chart dynamics are singular at sin(theta) = 0."""


def _rational(value) -> Fraction:
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class SphereParams:
    alpha: Fraction = Fraction(2)
    beta: Fraction = Fraction(1)
    epsilon: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("alpha", "beta", "epsilon"):
            value = _rational(getattr(self, name))
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_physical(cls, I1, I3, mass, radius, epsilon) -> "SphereParams":
        """``alpha = I3/I1``, ``beta = M r^2 / I1``."""
        I1, I3, mass, radius = (_rational(v) for v in (I1, I3, mass, radius))
        if min(I1, I3, mass, radius) <= 0:
            raise ValueError("physical parameters must be positive")
        return cls(I3 / I1, mass * radius**2 / I1, epsilon)

    @property
    def mu(self) -> Fraction:
        return 2 * self.epsilon / (1 + self.beta)

    @property
    def lam(self) -> Fraction:
        return (self.alpha + self.beta) / (1 + self.beta)

    @property
    def b(self) -> float:
        return math.sqrt(self.mu)

    def a_of(self, theta):
        """``a(theta) = sqrt(mu / (lam sin^2 + cos^2))``."""
        s, c = np.sin(theta), np.cos(theta)
        return np.sqrt(float(self.mu) / (float(self.lam) * s * s + c * c))

    def as_dict(self) -> dict:
        return {k: str(getattr(self, k)) for k in ("alpha", "beta", "epsilon")}


@dataclass(frozen=True)
class AmbientState:
    z: np.ndarray
    u: np.ndarray
    v0: float

    @classmethod
    def from_vector(cls, x) -> "AmbientState":
        x = np.asarray(x, dtype=float)
        return cls(x[:3].copy(), x[3:6].copy(), float(x[6]))

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.z, self.u, [self.v0]])


@dataclass(frozen=True)
class ChartPoint:
    theta: float
    phi: float
    psi: float

    @property
    def w(self) -> float:
        return self.phi - self.psi

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.theta, self.phi, self.psi])


# ---------------------------------------------------------------------------
# polynomial systems


def _params(p: SphereParams) -> dict:
    return {"alpha": p.alpha, "beta": p.beta, "epsilon": p.epsilon, "lam": p.lam, "mu": p.mu}


def _poly(text: str, p: SphereParams) -> Polynomial:
    return parse_polynomial(text, VARIABLES, _params(p))


_KINEMATICS = ["z2*u3 - z3*u2", "z3*u1 - z1*u3", "z1*u2 - z2*u1"]
_USQ = "(u1^2 + u2^2 + u3^2)"


def _rows(n: int, entries: dict) -> list:
    row = ["0"] * 7
    for k, v in entries.items():
        row[k] = v
    return row


def build_full_system(p: SphereParams = SphereParams()) -> IdeSystem:
    """Equations of motion with the energy and geometric constraints, 8 x 7."""
    a = [_rows(7, {i: "1"}) for i in range(3)]
    a.append(_rows(7, {3: "-(1+beta)*z2*z3", 4: "(1+beta)*z1*z3"}))
    a += [["0"] * 7 for _ in range(4)]
    f = _KINEMATICS + [
        "-(alpha+beta)*u3^2",
        f"(1+beta)*z3^2*{_USQ} + (alpha+beta)*u3^2 - 2*epsilon*z3^2",
        "z1^2 + z2^2 + z3^2 - 1",
        "z1*u1 + z2*u2 + z3*u3",
        f"2*epsilon - (1+beta)*{_USQ} - (alpha+beta)*v0^2",
    ]
    return _system(a, f, p, "sphere_full")


def _system(a, f, p: SphereParams, name: str) -> IdeSystem:
    return make_system(VARIABLES, [[_poly(e, p) for e in row] for row in a], [_poly(e, p) for e in f], name)


def m1b_constraints(p: SphereParams = SphereParams()) -> ConstraintSet:
    """The four equations defining M1b."""
    texts = ["u3 - v0*z3", f"{_USQ} + lam*v0^2 - mu", "z1^2 + z2^2 + z3^2 - 1", "z1*u1 + z2*u2 + z3*u3"]
    return ConstraintSet(tuple(_poly(t, p) for t in texts), VARIABLES)


def _lifted_dynamics(p: SphereParams) -> IdeSystem:
    a = [_rows(7, {i: "1"}) for i in range(3)]
    a.append(_rows(7, {3: "z2", 4: "-z1"}))
    return _system(a, _KINEMATICS + ["lam*v0*u3"], p, "sphere_lifted")


def build_lifted_system(p: SphereParams = SphereParams()) -> LiftedSystem:
    """Four dynamic rows on M1b plus its four defining equations (8 x 7).

    The fourth row is the full system's fourth row divided by
    ``-(1+beta) z3`` with ``u3 = v0 z3`` substituted, so the two agree on
    M1b wherever ``z3 != 0``.
    """
    c = m1b_constraints(p)
    system = restrict_by_constraints(_lifted_dynamics(p), c, "appended")
    return LiftedSystem(system, 1, build_full_system(p), DesingMap.identity(VARIABLES, c), None)


def build_extended_lifted_system(p: SphereParams = SphereParams()) -> IdeSystem:
    """11 x 7 form: the lifted dynamics, the differentiated constraints and
    the constraints, with the row ``z . zdot = 0`` dropped.

    Derived from the 12-row restriction (dynamic rows, ``Dphi``, ``phi``) by
    the row operations

    * ``D(z.u) - sum_i u_i * row_i``, which leaves ``z . udot = 0``,
    * ``D(|u|^2 + lam v0^2) / 2``,
    * ``D(u3 - v0 z3) + v0 * row_3``.
    """
    c = m1b_constraints(p)
    r = restrict_by_constraints(_lifted_dynamics(p), c, "appended_with_derivative")
    V = VARIABLES
    zero = Polynomial.zero(V)

    def var(name):
        return Polynomial.variable(V, name)

    def unit(k, coeff=1):
        row = [zero] * r.m
        row[k] = Polynomial.constant(V, coeff)
        return row

    # rows of r: 0-3 dynamics, 4-7 D(phi_1..phi_4), 8-11 phi
    g = [unit(0), unit(1), unit(2), unit(3)]
    tangent_zu = unit(7)
    for i, name in enumerate(("u1", "u2", "u3")):
        tangent_zu[i] = -var(name)
    g.append(tangent_zu)
    g.append(unit(5, Fraction(1, 2)))
    tangent_u3 = unit(4)
    tangent_u3[2] = var("v0")
    g.append(tangent_u3)
    g += [unit(k) for k in range(8, 12)]
    gm = PolynomialMatrix.from_rows(g, V)
    return project_range(r, gm, name="sphere_extended")


def build_branch_system(p: SphereParams, branch: str) -> IdeSystem:
    """Full system restricted to ``{z3 = 0}`` or ``{z1 = z2 = 0}`` (derivative form)."""
    if branch == "z3_zero":
        gens = ("z3",)
    elif branch == "z12_zero":
        gens = ("z1", "z2")
    else:
        raise ValueError(f"unknown branch {branch!r}")
    c = ConstraintSet(tuple(_poly(g, p) for g in gens), VARIABLES)
    return restrict_by_constraints(build_full_system(p), c, "appended_with_derivative").renamed(f"sphere_{branch}")


# ---------------------------------------------------------------------------
# chart


def _embed(theta, phi, psi, p: SphereParams) -> np.ndarray:
    """Chart map on arrays; works with complex input for complex-step derivatives."""
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    w = phi - psi
    sw, cw = np.sin(w), np.cos(w)
    a = np.sqrt(float(p.mu) / (float(p.lam) * st * st + ct * ct))
    b = p.b
    return np.stack(
        [
            st * cp,
            st * sp,
            ct,
            -a * cw * ct * ct * cp - b * sw * sp,
            -a * cw * ct * ct * sp + b * sw * cp,
            a * cw * ct * st,
            a * cw * st,
        ],
        axis=-1,
    )


def chart_embed(c: ChartPoint | Sequence[float], p: SphereParams = SphereParams()) -> AmbientState:
    theta, phi, psi = c.vector if isinstance(c, ChartPoint) else c
    return AmbientState.from_vector(_embed(float(theta), float(phi), float(psi), p))


def chart_embed_many(angles: np.ndarray, p: SphereParams = SphereParams()) -> np.ndarray:
    """Vectorized chart map: ``(N, 3)`` angles to ``(N, 7)`` states."""
    angles = np.asarray(angles, dtype=float)
    return _embed(angles[..., 0], angles[..., 1], angles[..., 2], p)


def chart_jacobian(c: ChartPoint | Sequence[float], p: SphereParams = SphereParams()) -> np.ndarray:
    """7 x 3 Jacobian of the chart by complex-step differentiation."""
    x = np.asarray(c.vector if isinstance(c, ChartPoint) else c, dtype=float)
    h = 1e-30
    J = np.empty((7, 3))
    for j in range(3):
        xc = x.astype(complex)
        xc[j] += 1j * h
        J[:, j] = _embed(xc[0], xc[1], xc[2], p).imag / h
    return J


def _guard(theta: float, guard: float) -> float:
    s = math.sin(theta)
    if abs(s) <= guard:
        raise SinThetaZero(f"sin(theta) = {s:.3e} at theta = {theta}")
    return s


def reduced_rhs(c: ChartPoint | Sequence[float], p: SphereParams = SphereParams(), guard: float = SIN_GUARD) -> np.ndarray:
    theta, phi, psi = c.vector if isinstance(c, ChartPoint) else c
    s = _guard(theta, guard)
    cot = math.cos(theta) / s
    w = phi - psi
    a = float(p.a_of(theta))
    b = p.b
    return np.array([-b * math.sin(w), -a * cot * math.cos(w), (b - a) * cot * math.cos(w)])


def planar_rhs(theta: float, w: float, p: SphereParams = SphereParams(), guard: float = SIN_GUARD) -> np.ndarray:
    s = _guard(theta, guard)
    b = p.b
    return np.array([-b * math.sin(w), -b * math.cos(theta) / s * math.cos(w)])


def first_integral(theta, w):
    return np.sin(theta) * np.cos(w)


def chart_pushforward(c: ChartPoint | Sequence[float], p: SphereParams = SphereParams()) -> np.ndarray:
    """Ambient velocity of the reduced flow: chart Jacobian times ``reduced_rhs``."""
    return chart_jacobian(c, p) @ reduced_rhs(c, p)


def _integrate_chart(
    rhs: Callable[[np.ndarray], np.ndarray],
    x0,
    t_span: tuple[float, float],
    step: float,
    variables: tuple[str, ...],
    system_id: str,
) -> Trajectory:
    t0, t1 = t_span
    direction = 1.0 if t1 > t0 else -1.0
    nsteps = max(1, int(math.ceil(abs(t1 - t0) / step - 1e-9)))
    x = np.asarray(x0, dtype=float)
    times, states = [t0], [x]
    termination, event = "completed", None
    try:
        rhs(x)
    except SinThetaZero as exc:
        raise SinThetaZero(f"initial point: {exc}") from None
    for i in range(nsteps):
        t_next = t1 if i == nsteps - 1 else t0 + direction * step * (i + 1)
        try:
            x = rk4_step(rhs, x, t_next - times[-1])
            rhs(x)
            if math.sin(x[0]) * math.sin(states[-1][0]) <= 0:
                # stepped across sin(theta) = 0 without a stage hitting the guard
                raise SinThetaZero(f"sin(theta) changed sign near t = {t_next}")
        except SinThetaZero:
            termination = "rank_event"
            event = {"t": times[-1], "state": states[-1].tolist(), "method": "sin_theta_guard"}
            break
        times.append(t_next)
        states.append(x)
    # explicit ODE: identity a, residual zero by construction
    n, d = len(times), len(variables)
    seg = TrajectorySegment(
        system_id, variables, times, np.array(states), np.zeros(n), np.zeros(n), np.full(n, d), np.full(n, d),
        termination, event,
    )
    return Trajectory([seg])


def integrate_reduced(
    c0: ChartPoint | Sequence[float],
    t_span: tuple[float, float],
    step: float,
    p: SphereParams = SphereParams(),
    guard: float = SIN_GUARD,
) -> Trajectory:
    """RK4 on ``(theta, phi, psi)``; stops with ``rank_event`` at the sin(theta) guard."""
    x0 = c0.vector if isinstance(c0, ChartPoint) else c0
    return _integrate_chart(lambda x: reduced_rhs(x, p, guard), x0, t_span, step, ("theta", "phi", "psi"), "sphere_reduced")


def integrate_planar(
    x0: Sequence[float],
    t_span: tuple[float, float],
    step: float,
    p: SphereParams = SphereParams(),
    guard: float = SIN_GUARD,
) -> Trajectory:
    """RK4 on ``(theta, w)``; stops with ``rank_event`` at the sin(theta) guard."""
    return _integrate_chart(lambda x: planar_rhs(x[0], x[1], p, guard), x0, t_span, step, ("theta", "w"), "sphere_planar")


def annotate_reduced(traj: Trajectory, p: SphereParams = SphereParams()) -> Trajectory:
    """Fill the diagnostics of a chart trajectory from the embedded states.

    The residual is that of the pushed-forward velocity in the 8-row lifted
    system; ranks are those of the extended system.
    """
    from .stratification import point_ranks

    lifted = build_lifted_system(p).system
    ext = build_extended_lifted_system(p)
    c = m1b_constraints(p)
    for seg in traj.segments:
        X = chart_embed_many(seg.states, p)
        for i, (angles, x) in enumerate(zip(seg.states, X)):
            try:
                v = chart_pushforward(angles, p)
                seg.residual[i] = np.linalg.norm(lifted.residual(x, v))
            except SinThetaZero:
                seg.residual[i] = np.nan
            seg.rank_a[i], seg.rank_af[i] = point_ranks(ext, x)
        seg.constraint_norm = np.linalg.norm(c.evaluate(X), axis=1)
    return traj


def integrate_lifted(
    c0: ChartPoint | Sequence[float],
    t_span: tuple[float, float],
    step: float,
    p: SphereParams = SphereParams(),
    form: str = "extended",
    project: bool = True,
) -> Trajectory:
    """Integrate on M1b from the embedded chart point.

    ``form="extended"`` uses the 11-row system (unique velocity);
    ``form="lifted"`` uses the 8-row system with the tangent selector.
    """
    c = m1b_constraints(p)
    x0 = chart_embed(c0, p).vector
    if form == "extended":
        s, selector = build_extended_lifted_system(p), "min_norm"
    elif form == "lifted":
        s, selector = build_lifted_system(p).system, tangent_selector(c)
    else:
        raise ValueError(f"unknown lifted form {form!r}")
    opts = IntegrationOptions(
        step=step, t_span=t_span, projection_constraints=c if project else None, selector=selector,
    )
    return integrate(s, x0, opts)


# ---------------------------------------------------------------------------
# special solutions and kinematics


def special_solutions(
    kind: str,
    p: SphereParams,
    init: Sequence[float],
    t_span: tuple[float, float] = (0.0, 1.0),
    step: float = 1e-2,
    tol: float = 1e-10,
) -> Trajectory:
    """Closed-form solutions on the two branches outside the chart.

    ``z3_zero_rolling``: ``z`` horizontal and fixed, ``u = 0``,
    ``(alpha + beta) v0^2 = 2 eps``. ``sin_theta_zero_circle``: ``z`` starts
    at a pole, ``v0 = 0`` and ``u`` constant with ``|u|^2 = mu``; ``z``
    turns uniformly along the great circle orthogonal to ``u``.
    """
    x0 = np.asarray(init, dtype=float)
    if x0.shape != (7,):
        raise ValueError("initial state needs 7 components")
    z0, u0, v0 = x0[:3], x0[3:6], x0[6]
    t0, t1 = t_span
    n = max(1, int(math.ceil(abs(t1 - t0) / step - 1e-9)))
    times = np.linspace(t0, t1, n + 1)
    if kind == "z3_zero_rolling":
        checks = [z0[2], np.linalg.norm(u0), abs(z0 @ z0 - 1), float(p.alpha + p.beta) * v0**2 - 2 * float(p.epsilon)]
        if max(abs(v) for v in checks) > tol:
            raise ValueError("initial data not on the z3 = 0 rolling branch")
        states = np.tile(x0, (len(times), 1))
    elif kind == "sin_theta_zero_circle":
        checks = [z0[0], z0[1], abs(z0[2]) - 1, v0, u0[2], u0 @ u0 - float(p.mu)]
        if max(abs(v) for v in checks) > tol:
            raise ValueError("initial data not on the sin(theta) = 0 branch")
        b = p.b
        dt = (times - t0)[:, None]
        z = z0 * np.cos(b * dt) + np.cross(z0, u0) / b * np.sin(b * dt)
        states = np.column_stack([z, np.tile(u0, (len(times), 1)), np.zeros(len(times))])
    else:
        raise ValueError(f"unknown special solution {kind!r}")
    full = build_full_system(p)
    vel = np.column_stack([np.cross(states[:, :3], states[:, 3:6]), np.zeros((len(times), 4))])
    resid = np.array([np.linalg.norm(full.residual(x, v)) for x, v in zip(states, vel)])
    cn = np.linalg.norm(m1b_constraints(p).evaluate(states), axis=1) if kind == "sin_theta_zero_circle" else np.zeros(len(times))
    seg = TrajectorySegment(
        f"sphere_{kind}", VARIABLES, times, states, resid, cn, np.full(len(times), -1), np.full(len(times), -1)
    )
    return Trajectory([seg])


@dataclass
class Kinematics:
    omega: np.ndarray
    contact_velocity: np.ndarray
    max_abs_omega3: float


def reconstruct_kinematics(states, p: SphereParams = SphereParams(), radius: float = 1.0) -> Kinematics:
    """Angular velocity ``v0 z + z x zdot`` and contact velocity ``omega x r e3``."""
    if isinstance(states, Trajectory):
        states = states.states
    X = np.atleast_2d(np.asarray(states, dtype=float))
    z, u, v0 = X[:, :3], X[:, 3:6], X[:, 6:7]
    zdot = np.cross(z, u)
    omega = v0 * z + np.cross(z, zdot)
    e3 = np.array([0.0, 0.0, radius])
    xdot = np.cross(omega, e3)
    return Kinematics(omega, xdot, float(np.max(np.abs(omega[:, 2]))))


# ---------------------------------------------------------------------------
# sampling and verification


def _uniform_angles(n: int, seed: int, margin: float) -> np.ndarray:
    rng = np.random.default_rng(seed)
    theta = rng.uniform(margin, math.pi - margin, n)
    phi = rng.uniform(0.0, 2 * math.pi, n)
    psi = rng.uniform(0.0, 2 * math.pi, n)
    return np.column_stack([theta, phi, psi])


def sample_m1b(p: SphereParams = SphereParams(), n: int = 1, seed: int = 0) -> list[AmbientState]:
    if n < 1:
        raise ValueError("n must be at least 1")
    return [AmbientState.from_vector(x) for x in chart_embed_many(_uniform_angles(n, seed, 0.0), p)]


def constraint_jacobian_m1b(x, p: SphereParams = SphereParams()) -> np.ndarray:
    """Jacobian of the M1b equations (second and third rows halved)."""
    z1, z2, z3, u1, u2, u3, v0 = np.asarray(x, dtype=float)
    lam = float(p.lam)
    return np.array(
        [
            [0, 0, -v0, 0, 0, 1, -z3],
            [0, 0, 0, u1, u2, u3, lam * v0],
            [z1, z2, z3, 0, 0, 0, 0],
            [u1, u2, u3, z1, z2, z3, 0],
        ],
        dtype=float,
    )


def verify_appendix_a(p: SphereParams = SphereParams(), n_samples: int = 1000, seed: int = 0, tol: float = 1e-8) -> dict:
    """Rank 4 of the constraint Jacobian at chart samples of M1b (poles included)."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    angles = _uniform_angles(n_samples, seed, 1e-3)
    angles[0, 0] = 0.0
    if n_samples > 1:
        angles[1, 0] = math.pi
    states = chart_embed_many(angles, p)
    failures = []
    min_ratio = math.inf
    for k, x in enumerate(states):
        sv = np.linalg.svd(constraint_jacobian_m1b(x, p), compute_uv=False)
        ratio = float(sv[3] / sv[0])
        min_ratio = min(min_ratio, ratio)
        if not ratio > tol:
            failures.append({"index": k, "angles": angles[k].tolist(), "ratio": ratio})
    return {"n": n_samples, "seed": seed, "tol": tol, "failures": failures, "min_ratio": min_ratio}


def pole_vectors(psi: float, p: SphereParams = SphereParams(), theta: float = 0.0) -> np.ndarray:
    """Tangent vectors at a pole: theta-curves at phi = 0 and pi/2, and d/dpsi.

    Computed by complex-step derivatives of the chart, rows ``A, B, C``.
    """
    A = chart_jacobian((theta, 0.0, psi), p)[:, 0]
    B = chart_jacobian((theta, math.pi / 2, psi), p)[:, 0]
    C = chart_jacobian((theta, 0.0, psi), p)[:, 2]
    return np.vstack([A, B, C])


def pole_vectors_closed_form(psi: float, p: SphereParams = SphereParams()) -> np.ndarray:
    b = p.b
    c, s = math.cos(psi), math.sin(psi)
    return np.array(
        [
            [1, 0, 0, 0, 0, b * c, b * c],
            [0, 1, 0, 0, 0, b * s, b * s],
            [0, 0, 0, b * s, -b * c, 0, 0],
        ]
    )


def verify_appendix_b(p: SphereParams = SphereParams(), n_samples: int = 1000, seed: int = 0, tol: float = 1e-8) -> dict:
    """Chart immersion check: rank 3 inside, independent pole vectors at theta = 0, pi."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    angles = _uniform_angles(n_samples, seed, math.asin(0.05))
    failures = []
    min_ratio = math.inf
    for k, c in enumerate(angles):
        sv = np.linalg.svd(chart_jacobian(c, p), compute_uv=False)
        ratio = float(sv[2] / sv[0])
        min_ratio = min(min_ratio, ratio)
        if not ratio > tol:
            failures.append({"index": k, "angles": c.tolist(), "ratio": ratio})
    rng = np.random.default_rng(seed + 1)
    poles = []
    for theta in (0.0, math.pi):
        for psi in rng.uniform(0.0, 2 * math.pi, 8):
            V = pole_vectors(psi, p, theta)
            gram = float(np.linalg.det(V @ V.T))
            poles.append({"theta": theta, "psi": float(psi), "gram_det": gram})
            if not gram > tol:
                failures.append({"pole": theta, "psi": float(psi), "gram_det": gram})
    closed = max(
        float(np.max(np.abs(pole_vectors(psi, p) - pole_vectors_closed_form(psi, p)))) for psi in np.linspace(0, 6, 7)
    )
    return {
        "n": n_samples, "seed": seed, "tol": tol, "failures": failures, "min_ratio": min_ratio,
        "poles": poles, "closed_form_gap": closed,
    }
