"""Hamiltonian flows of the constructed invariants, with drift monitoring.

The phase tensor turns a scalar function into a vector field; a fixed-step
classical Runge-Kutta integrator follows it; conserved quantities are then
audited along the trajectory.  Nothing here is adaptive: the point is a
reproducible drift bound, not long-time structure preservation.  Integrating
in a square-bracket chart instead is the same machinery applied to the
constant canonical tensor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

from .expr import (
    DEN_GUARD,
    Expression,
    Rat,
    SingularPointError,
    compile_exprs,
    diff,
    product_of,
    sum_of,
)
from .symplectic import PoissonField

__all__ = [
    "Trajectory",
    "DriftReport",
    "hamiltonian_vector_field",
    "canonical_start",
    "integrate",
    "conservation_drift",
    "export_csv",
]


def _is0(e: Expression) -> bool:
    return isinstance(e, Rat) and e.value == 0


def hamiltonian_vector_field(P: PoissonField, H: Expression) -> list[Expression]:
    """xdot^i = P^{ij} d_j H, symbolically."""
    dH = [diff(H, s) for s in P.coords]
    field = []
    for i in range(P.dim):
        terms = [
            product_of([P.entries[i][j], dH[j]])
            for j in range(P.dim)
            if not (_is0(P.entries[i][j]) or _is0(dH[j]))
        ]
        field.append(sum_of(terms) if terms else Rat(0))
    return field


@dataclass(frozen=True)
class Trajectory:
    """Fixed-step states; the step is uniform and every state is finite."""

    times: tuple
    states: tuple
    method: str
    step: float

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states):
            raise ValueError("one state per time stamp is required")
        for t0, t1 in zip(self.times, self.times[1:]):
            if abs((t1 - t0) - self.step) > 1e-9 * max(1.0, abs(self.step)):
                raise ValueError("time grid must advance by the declared step")
        for state in self.states:
            if not all(math.isfinite(v) for v in state):
                raise ValueError("states must stay finite")

    @property
    def final_time(self) -> float:
        return self.times[-1]

    def reached(self, T: float) -> bool:
        return self.final_time >= T - self.step / 2


def canonical_start(
    coords: Sequence, exprs: Sequence[Expression], den_guard: float = DEN_GUARD
) -> list[float]:
    """Reproducible start point: every coordinate at 1/2; while any given
    expression is singular there, the lowest still-unbumped coordinate moves
    to 1 and the point is retried."""
    names = [s.name for s in coords]
    fn = compile_exprs(list(exprs), names, den_guard=den_guard, track_scale=False)
    point = [0.5] * len(names)
    for bump in range(len(names) + 1):
        try:
            values, _ = fn(point)
        except (SingularPointError, OverflowError):
            values = None
        if values is not None and all(math.isfinite(v) for v in values):
            return point
        if bump == len(names):
            break
        point[bump] = 1.0
    raise SingularPointError("no nonsingular start point on the 1/2-and-1 grid")


def integrate(
    coords: Sequence,
    field: Sequence[Expression],
    x0: Sequence[float],
    dt: float,
    T: float,
    den_guard: float = DEN_GUARD,
) -> Trajectory:
    """Classical fourth-order Runge-Kutta with a fixed step.

    The step is snapped so the grid lands exactly on the horizon.  A guard
    trip or overflow stops early and returns the partial trajectory.
    """
    if dt <= 0 or T <= 0:
        raise ValueError("step and horizon must be positive")
    if len(x0) != len(coords) or len(field) != len(coords):
        raise ValueError("field, start point, and coordinates must align")
    steps = max(1, round(T / dt))
    h = T / steps
    fn = compile_exprs(list(field), [s.name for s in coords], den_guard=den_guard, track_scale=False)

    def deriv(state):
        values, _ = fn(state)
        return values

    x = [float(v) for v in x0]
    times = [0.0]
    states = [tuple(x)]
    for k in range(steps):
        try:
            k1 = deriv(x)
            k2 = deriv([xi + h / 2 * di for xi, di in zip(x, k1)])
            k3 = deriv([xi + h / 2 * di for xi, di in zip(x, k2)])
            k4 = deriv([xi + h * di for xi, di in zip(x, k3)])
        except (SingularPointError, OverflowError):
            break
        x = [
            xi + h / 6 * (a + 2 * b + 2 * c + d)
            for xi, a, b, c, d in zip(x, k1, k2, k3, k4)
        ]
        if not all(math.isfinite(v) for v in x):
            break
        times.append((k + 1) * h)
        states.append(tuple(x))
    return Trajectory(tuple(times), tuple(states), "rk4", h)


@dataclass(frozen=True)
class DriftReport:
    """Per-invariant conservation audit along one trajectory."""

    max_abs: tuple
    relative: tuple

    def __post_init__(self) -> None:
        if any(v < 0 for v in self.max_abs + self.relative):
            raise ValueError("drift entries cannot be negative")

    @property
    def max_relative(self) -> float:
        return max(self.relative, default=0.0)


def conservation_drift(
    coords: Sequence,
    traj: Trajectory,
    F: Sequence[Expression],
    den_guard: float = DEN_GUARD,
) -> DriftReport:
    """max_t |F(x(t)) - F(x(0))| per invariant; relative drift divides by
    |F(x(0))| floored at 1 so near-zero reference values stay meaningful."""
    fn = compile_exprs(list(F), [s.name for s in coords], den_guard=den_guard, track_scale=False)
    reference = None
    worst = [0.0] * len(F)
    for state in traj.states:
        values, _ = fn(list(state))
        if reference is None:
            reference = values
            continue
        for i, (v, v0) in enumerate(zip(values, reference)):
            worst[i] = max(worst[i], abs(v - v0))
    if reference is None:
        raise ValueError("a trajectory needs at least one state")
    relative = tuple(w / max(1.0, abs(v0)) for w, v0 in zip(worst, reference))
    return DriftReport(tuple(worst), relative)


def export_csv(
    out,
    coords: Sequence,
    traj: Trajectory,
    invariants: Sequence[tuple[str, Expression]] = (),
    den_guard: float = DEN_GUARD,
) -> None:
    """Write `t, <coordinates>, <invariant names>` rows; `out` is a path or a
    text file object."""
    names = [s.name for s in coords]
    fn = None
    if invariants:
        fn = compile_exprs([e for _, e in invariants], names, den_guard=den_guard, track_scale=False)

    def write(handle) -> None:
        writer = csv.writer(handle)
        writer.writerow(["t"] + names + [name for name, _ in invariants])
        for t, state in zip(traj.times, traj.states):
            row = [repr(t)] + [repr(v) for v in state]
            if fn is not None:
                values, _ = fn(list(state))
                row.extend(repr(v) for v in values)
            writer.writerow(row)

    if isinstance(out, (str, bytes)) or hasattr(out, "__fspath__"):
        with open(out, "w", newline="") as handle:
            write(handle)
    else:
        write(out)
