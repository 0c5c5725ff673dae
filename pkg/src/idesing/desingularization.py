"""Lifting an IDE through a desingularization map and projecting back.

A :class:`DesingMap` is user data: a polynomial map ``pi`` from a chart
``R^p`` onto (a neighbourhood of) the singular set, with optional equations
cutting the desingularizing manifold out of that chart. Lifted systems are
again standard-form IDE, so the solver applies to them unchanged; their
trajectories are pushed back down with :func:`project_solution` and chained
with :func:`glue_pieces`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from .ide import ConstraintSet, IdeSystem, pullback, restrict_by_constraints
from .polynomial import PolynomialMap, PolynomialMatrix, compile_matrix, compile_polynomials
from .solver import NoSolutionAtPoint, Trajectory, TrajectorySegment, select_vector_field, solve_las
from .stratification import point_ranks


class ArityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DesingMap:
    map: PolynomialMap
    source_constraints: Optional[ConstraintSet] = None
    name: str = "map"

    def __post_init__(self):
        c = self.source_constraints
        if c is not None and len(c) and c.variables != self.map.domain_variables:
            raise ValueError("source constraints must be over the map's domain variables")

    @classmethod
    def identity(cls, variables: Sequence[str], constraints: Optional[ConstraintSet] = None, name: str = "identity") -> "DesingMap":
        return cls(PolynomialMap.identity(variables), constraints, name)

    @property
    def domain_variables(self) -> tuple[str, ...]:
        return self.map.domain_variables

    @cached_property
    def jacobian(self) -> PolynomialMatrix:
        return self.map.jacobian()

    @cached_property
    def _eval(self):
        return compile_polynomials(self.map.components)

    @cached_property
    def _eval_jac(self):
        return compile_matrix(self.jacobian)

    def evaluate(self, y) -> np.ndarray:
        return self._eval(np.asarray(y, dtype=float))

    def evaluate_jacobian(self, y) -> np.ndarray:
        return self._eval_jac(np.asarray(y, dtype=float))


@dataclass(frozen=True, eq=False)
class LiftedSystem:
    system: IdeSystem
    level: int
    parent: IdeSystem
    map: DesingMap
    map_file: Optional[str] = None

    @property
    def lineage(self) -> dict:
        return {"level": self.level, "parent_name": self.parent.name, "map_file": self.map_file}


def lift_system(
    parent: IdeSystem,
    m: DesingMap,
    level: int = 1,
    name: Optional[str] = None,
    map_file: Optional[str] = None,
) -> LiftedSystem:
    """``(a∘π · Jπ, f∘π)`` with the source constraints appended as ``0 = phi``."""
    if m.map.arity != parent.n:
        raise ArityError(f"map has {m.map.arity} components but the system has {parent.n} variables")
    lifted = pullback(parent, m.map, name or f"{parent.name}_lift{level}")
    if m.source_constraints is not None and len(m.source_constraints):
        lifted = restrict_by_constraints(lifted, m.source_constraints, "appended")
    return LiftedSystem(lifted, level, parent, m, map_file)


def _velocities(s: IdeSystem, states: np.ndarray, times: np.ndarray, selector) -> np.ndarray:
    """Selected field along the states; central differences where the LAS fails."""
    out = np.empty_like(states)
    grad = np.gradient(states, times, axis=0) if len(times) > 1 else np.zeros_like(states)
    for i, y in enumerate(states):
        try:
            out[i] = select_vector_field(solve_las(s, y), selector)
        except NoSolutionAtPoint:
            out[i] = grad[i]
    return out


def project_solution(l: LiftedSystem, traj: Trajectory, selector="min_norm") -> Trajectory:
    """Push a lifted trajectory down through the map.

    Diagnostics are recomputed against the parent system with
    ``xdot = Jπ(y) ydot``.
    """
    segments = []
    for seg in traj.segments:
        if seg.variables != l.system.variables:
            raise ValueError(f"trajectory is over {seg.variables}, lifted system over {l.system.variables}")
        xs = l.map.evaluate(seg.states)
        xs = xs.reshape(len(seg.times), l.parent.n)
        ydot = _velocities(l.system, seg.states, seg.times, selector)
        resid, ra, raf = [], [], []
        for y, yd, x in zip(seg.states, ydot, xs):
            xd = l.map.evaluate_jacobian(y) @ yd
            resid.append(float(np.linalg.norm(l.parent.residual(x, xd))))
            r_a, r_af = point_ranks(l.parent, x)
            ra.append(r_a)
            raf.append(r_af)
        segments.append(
            TrajectorySegment(
                l.parent.name, l.parent.variables, seg.times, xs, resid, seg.constraint_norm, ra, raf,
                seg.termination, seg.event, max(0, seg.level - 1) if seg.level else l.level - 1,
                seg.parameter,
            )
        )
    return Trajectory(segments)


# ---------------------------------------------------------------------------
# gluing


@dataclass
class Junction:
    left_state: np.ndarray
    right_state: np.ndarray
    gap: float
    continuous: bool
    left_level: int
    right_level: int

    def to_dict(self) -> dict:
        return {
            "left_state": self.left_state.tolist(),
            "right_state": self.right_state.tolist(),
            "gap": self.gap,
            "continuous": self.continuous,
            "levels": [self.left_level, self.right_level],
        }

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Junction)
            and np.array_equal(self.left_state, other.left_state)
            and np.array_equal(self.right_state, other.right_state)
            and self.gap == other.gap
            and self.continuous == other.continuous
            and (self.left_level, self.right_level) == (other.left_level, other.right_level)
        )


@dataclass
class PiecewiseSolution:
    pieces: list[tuple[int, Trajectory]] = field(default_factory=list)
    junctions: list[Junction] = field(default_factory=list)
    variables: tuple[str, ...] = ()

    @property
    def continuous(self) -> bool:
        return all(j.continuous for j in self.junctions)


Piece = Union[tuple[int, Trajectory], PiecewiseSolution]


def _restrict(seg: TrajectorySegment, variables: Sequence[str], row: int) -> np.ndarray:
    idx = [seg.variables.index(v) for v in variables]
    return seg.states[row, idx]


def _interval(seg: TrajectorySegment) -> Optional[tuple[float, float]]:
    if seg.parameter != "time":
        return None
    return float(min(seg.times[0], seg.times[-1])), float(max(seg.times[0], seg.times[-1]))


def glue_pieces(pieces: Sequence[Piece], glue_tol: float = 1e-6, variables: Optional[Sequence[str]] = None) -> PiecewiseSolution:
    """Chain pieces end to start and record the junction gaps.

    Gaps are measured on ``variables`` (default: the first piece's variables
    that every piece carries), so homogeneous pieces with their extra time
    coordinate glue to direct ones. Discontinuities are reported, never
    merged. Time-parametrized neighbours whose intervals overlap by more
    than ``glue_tol`` are rejected.
    """
    flat: list[tuple[int, Trajectory]] = []
    for p in pieces:
        if isinstance(p, PiecewiseSolution):
            flat.extend(p.pieces)
        else:
            level, traj = p
            flat.append((int(level), traj))
    if not flat:
        return PiecewiseSolution([], [], tuple(variables or ()))
    if variables is None:
        common = [v for v in flat[0][1].variables if all(v in t.variables for _, t in flat)]
        variables = tuple(common)
    variables = tuple(variables)
    junctions = []
    for (l1, t1), (l2, t2) in zip(flat, flat[1:]):
        a, b = t1.segments[-1], t2.segments[0]
        ia, ib = _interval(a), _interval(b)
        if ia is not None and ib is not None:
            overlap = min(ia[1], ib[1]) - max(ia[0], ib[0])
            if overlap > glue_tol and not (ia[0] == ib[0] and ia[1] == ib[1] and len(a) == 1):
                raise ValueError(f"time intervals {ia} and {ib} overlap")
        left = _restrict(a, variables, -1)
        right = _restrict(b, variables, 0)
        gap = float(np.linalg.norm(left - right))
        junctions.append(Junction(left, right, gap, gap <= glue_tol, l1, l2))
    return PiecewiseSolution(flat, junctions, variables)


# ---------------------------------------------------------------------------
# residual contract


@dataclass
class ProjectionResidualReport:
    parent_residual: list
    lifted_residual: list
    symbolic_gap: float
    jacobian_gap: float
    exact: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "parent_residual": [float(v) for v in self.parent_residual],
            "lifted_residual": [float(v) for v in self.lifted_residual],
            "symbolic_gap": self.symbolic_gap,
            "jacobian_gap": self.jacobian_gap,
            "exact": self.exact,
            "passed": self.passed,
        }


def _is_exact(values) -> bool:
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values)


def verify_projection_residual(
    parent: IdeSystem,
    m: DesingMap,
    y: Sequence,
    ydot: Sequence,
    lifted: Optional[LiftedSystem] = None,
    fd_step: float = 1e-6,
    tol: float = 1e-12,
    fd_tol: float = 1e-6,
) -> ProjectionResidualReport:
    """Check ``a(π(y)) Jπ(y) ydot - f(π(y))`` against the lifted residual.

    With integer or :class:`~fractions.Fraction` inputs the comparison is
    exact; otherwise it is in floating point to ``tol``. The symbolic
    Jacobian is also compared with central differences of ``π``.
    """
    lifted = lifted or lift_system(parent, m)
    p = parent.m
    exact = _is_exact(list(y)) and _is_exact(list(ydot))
    if exact:
        y = [Fraction(v) for v in y]
        ydot = [Fraction(v) for v in ydot]
        x = [c.evaluate(y) for c in m.map.components]
        J = m.jacobian.evaluate_exact(y)
        xdot = [sum((J[i][j] * ydot[j] for j in range(len(ydot))), Fraction(0)) for i in range(parent.n)]
        parent_res = parent.residual_exact(x, xdot)
        lifted_res = lifted.system.residual_exact(y, ydot)[:p]
        gap = 0.0 if parent_res == lifted_res else float(max(abs(a - b) for a, b in zip(parent_res, lifted_res)))
        symbolic_ok = gap == 0.0
    else:
        yf = np.asarray(y, dtype=float)
        ydf = np.asarray(ydot, dtype=float)
        x = m.evaluate(yf)
        parent_res = parent.residual(x, m.evaluate_jacobian(yf) @ ydf)
        lifted_res = lifted.system.residual(yf, ydf)[:p]
        scale = 1.0 + np.max(np.abs(parent_res), initial=0.0)
        gap = float(np.max(np.abs(parent_res - lifted_res), initial=0.0))
        symbolic_ok = gap <= tol * scale
    yf = np.asarray([float(v) for v in y])
    J_sym = m.evaluate_jacobian(yf)
    J_fd = np.empty_like(J_sym)
    for j in range(len(yf)):
        e = np.zeros_like(yf)
        e[j] = fd_step
        J_fd[:, j] = (m.evaluate(yf + e) - m.evaluate(yf - e)) / (2 * fd_step)
    jac_gap = float(np.max(np.abs(J_fd - J_sym), initial=0.0) / (1.0 + np.max(np.abs(J_sym), initial=0.0)))
    return ProjectionResidualReport(
        list(parent_res), list(lifted_res), gap, jac_gap, exact, bool(symbolic_ok and jac_gap < fd_tol)
    )
