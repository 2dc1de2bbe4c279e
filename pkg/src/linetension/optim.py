"""Derivative-free minimization machinery.

Provides linear-constraint elimination (optimize unconstrained in nullspace
coordinates, so every iterate is exactly feasible), multistart simplex
descent with pattern-search polish for nonsmooth objectives, and a
brute-force grid oracle used by tests as an independent check.

Objectives are called with a plain list of floats; the problem dimensions
here are tiny, so the hot path deliberately avoids numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SolverOptions",
    "AffineFeasibleSet",
    "SolveReport",
    "eliminate_constraints",
    "nelder_mead",
    "pattern_search",
    "minimize_multistart",
    "grid_oracle",
]

# Simplex-descent coefficients: standard robust defaults for kinked objectives.
REFLECTION = 1.0
EXPANSION = 2.0
CONTRACTION = 0.5
SHRINK = 0.5
COLLAPSE_TOL = 1e-10


@dataclass(frozen=True)
class SolverOptions:
    """Multistart solver configuration.

    restarts counts total starts: the origin, the +-coordinate seeds, then
    seeded uniform draws in [-2, 2]^dim.  Results are deterministic for a
    fixed seed.
    """

    restarts: int = 32
    seed: int = 0
    init_edge: float = 0.25
    ftol: float = 1e-9
    polish_step: float = 1e-8
    nm_max_evals: int = 4000
    polish_max_evals: int = 6000

    def with_seed(self, seed: int) -> "SolverOptions":
        return SolverOptions(
            restarts=self.restarts,
            seed=seed,
            init_edge=self.init_edge,
            ftol=self.ftol,
            polish_step=self.polish_step,
            nm_max_evals=self.nm_max_evals,
            polish_max_evals=self.polish_max_evals,
        )


@dataclass(frozen=True)
class SolveReport:
    best_value: float
    best_point: np.ndarray
    starts: int
    converged: bool
    final_step: float
    best_coords: np.ndarray | None = None
    evaluations: int = 0


@dataclass(frozen=True)
class AffineFeasibleSet:
    """Affine solution set {particular + basis @ c} of a linear system.

    ``basis`` has orthonormal columns spanning the nullspace;
    ``residual_check`` maps a full-space point to its constraint residual.
    """

    particular: np.ndarray
    basis: np.ndarray
    residual_check: Callable[[Sequence[float]], float]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def point(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        if self.dim == 0:
            return self.particular.copy()
        return self.particular + self.basis @ coords

    @staticmethod
    def unconstrained(dim: int) -> "AffineFeasibleSet":
        return AffineFeasibleSet(np.zeros(dim), np.eye(dim), lambda x: 0.0)


def eliminate_constraints(rows, rhs, atol: float = 1e-9) -> AffineFeasibleSet:
    """Particular solution plus orthonormal nullspace basis of rows @ x = rhs.

    The particular solution is the least-norm one; inconsistent systems are
    rejected with the residual magnitude.
    """
    A = np.atleast_2d(np.asarray(rows, dtype=float))
    b = np.asarray(rhs, dtype=float)
    particular, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = float(np.linalg.norm(A @ particular - b))
    if residual > atol * max(1.0, float(np.linalg.norm(b))):
        raise ValueError(f"inconsistent linear system, residual {residual:.3e}")
    _, s, vt = np.linalg.svd(A)
    tol = max(A.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    basis = vt[rank:].T.copy()
    return AffineFeasibleSet(
        particular=particular,
        basis=basis,
        residual_check=lambda x: float(np.linalg.norm(A @ np.asarray(x, float) - b)),
    )


def nelder_mead(
    f: Callable[[list], float],
    x0: Sequence[float],
    edge: float,
    ftol: float = 1e-9,
    max_evals: int = 4000,
) -> tuple[list, float, int]:
    """One simplex-descent run; stops on value spread <= ftol or collapse."""
    x0 = [float(v) for v in x0]
    d = len(x0)
    pts = [list(x0)]
    for k in range(d):
        p = list(x0)
        p[k] += edge
        pts.append(p)
    vals = [f(p) for p in pts]
    evals = d + 1

    while evals < max_evals:
        order = sorted(range(d + 1), key=vals.__getitem__)
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
        if vals[-1] - vals[0] <= ftol:
            break
        best = pts[0]
        diam = max(
            abs(p[i] - best[i]) for p in pts[1:] for i in range(d)
        )
        if diam <= COLLAPSE_TOL:
            break

        worst = pts[-1]
        centroid = [
            sum(pts[j][i] for j in range(d)) / d for i in range(d)
        ]
        xr = [c + REFLECTION * (c - w) for c, w in zip(centroid, worst)]
        fr = f(xr)
        evals += 1
        if fr < vals[0]:
            xe = [c + EXPANSION * (c - w) for c, w in zip(centroid, worst)]
            fe = f(xe)
            evals += 1
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
        elif fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
        else:
            if fr < vals[-1]:
                xc = [c + CONTRACTION * (r - c) for c, r in zip(centroid, xr)]
            else:
                xc = [c - CONTRACTION * (c - w) for c, w in zip(centroid, worst)]
            fc = f(xc)
            evals += 1
            if fc < min(fr, vals[-1]):
                pts[-1], vals[-1] = xc, fc
            else:
                for i in range(1, d + 1):
                    pts[i] = [
                        b + SHRINK * (p - b) for b, p in zip(best, pts[i])
                    ]
                    vals[i] = f(pts[i])
                evals += d

    i = min(range(d + 1), key=vals.__getitem__)
    return pts[i], vals[i], evals


def pattern_search(
    f: Callable[[list], float],
    x: Sequence[float],
    fx: float,
    step: float,
    final_step: float = 1e-8,
    max_evals: int = 6000,
) -> tuple[list, float, int, float]:
    """Compass search along +-coordinates, halving the step on failed sweeps."""
    x = [float(v) for v in x]
    d = len(x)
    evals = 0
    while step > final_step and evals < max_evals:
        improved = False
        for k in range(d):
            for sign in (step, -step):
                y = list(x)
                y[k] += sign
                fy = f(y)
                evals += 1
                if fy < fx:
                    x, fx = y, fy
                    improved = True
        if not improved:
            step *= 0.5
    return x, fx, evals, step


def _descend(f, start: list, opts: SolverOptions) -> tuple[list, float, float, int]:
    """Simplex descent with collapse restarts, then pattern-search polish."""
    x, fx, evals = nelder_mead(f, start, opts.init_edge, opts.ftol, opts.nm_max_evals)
    for _ in range(2):
        x2, f2, ev = nelder_mead(f, x, 1e-4, opts.ftol, opts.nm_max_evals)
        evals += ev
        if fx - f2 <= opts.ftol:
            if f2 < fx:
                x, fx = x2, f2
            break
        x, fx = x2, f2
    x, fx, ev, step = pattern_search(
        f, x, fx, step=1e-2, final_step=opts.polish_step, max_evals=opts.polish_max_evals
    )
    evals += ev
    return x, fx, step, evals


def _start_points(dim: int, opts: SolverOptions) -> list[list]:
    starts = [[0.0] * dim]
    for k in range(dim):
        for sign in (1.0, -1.0):
            p = [0.0] * dim
            p[k] = sign
            starts.append(p)
    starts = starts[: opts.restarts]
    n_random = opts.restarts - len(starts)
    if n_random > 0:
        # Splittable per-start streams so any evaluation order gives the
        # same draws.
        for child in np.random.SeedSequence(opts.seed).spawn(n_random):
            starts.append(np.random.default_rng(child).uniform(-2.0, 2.0, dim).tolist())
    return starts


def minimize_multistart(
    objective: Callable[[list], float],
    feasible: AffineFeasibleSet,
    opts: SolverOptions | None = None,
    extra_starts: Sequence[Sequence[float]] | None = None,
) -> SolveReport:
    """Best of several polished simplex-descent runs in nullspace coordinates.

    ``objective`` receives a full-space point (a list of floats); iterates
    stay exactly on the feasible set.  ``extra_starts`` are problem-aware
    seed coordinates run in addition to the configured starts.  Deterministic
    for fixed options; ties are broken by the lexicographically smallest
    coordinate vector.
    """
    opts = opts or SolverOptions()
    d = feasible.dim
    if d == 0:
        x = feasible.point(())
        return SolveReport(
            best_value=float(objective(x.tolist())),
            best_point=x,
            starts=0,
            converged=True,
            final_step=0.0,
            best_coords=np.zeros(0),
        )

    particular = feasible.particular.tolist()
    basis_rows = feasible.basis.tolist()
    n_full = len(particular)
    identity = n_full == d and all(
        basis_rows[i][k] == (1.0 if i == k else 0.0)
        for i in range(n_full)
        for k in range(d)
    ) and all(v == 0.0 for v in particular)

    if identity:
        g = objective
    else:
        def g(c: list) -> float:
            x = list(particular)
            for i in range(n_full):
                row = basis_rows[i]
                acc = 0.0
                for k in range(d):
                    acc += row[k] * c[k]
                x[i] += acc
            return objective(x)

    best: tuple | None = None
    total_evals = 0
    starts = [[float(v) for v in s] for s in (extra_starts or [])]
    starts += _start_points(d, opts)
    for start in starts:
        c, fc, step, evals = _descend(g, start, opts)
        total_evals += evals
        key = (fc, tuple(c))
        if best is None or key < best[0]:
            best = (key, c, fc, step)
    _, c, fc, step = best
    return SolveReport(
        best_value=float(fc),
        best_point=feasible.point(c),
        starts=len(starts),
        converged=bool(step <= opts.polish_step),
        final_step=float(step),
        best_coords=np.asarray(c, dtype=float),
        evaluations=total_evals,
    )


def grid_oracle(
    objective: Callable[[Sequence[float]], float],
    box: Sequence[tuple[float, float]],
    step: float,
    batch: Callable[[np.ndarray], np.ndarray] | None = None,
) -> SolveReport:
    """Exhaustive evaluation on a uniform grid, refined once at step/10.

    Test-only verification oracle; the dimension is capped at 6.  ``batch``
    (points (N, d) -> values (N,)) makes large grids affordable.
    """
    box = [(float(lo), float(hi)) for lo, hi in box]
    d = len(box)
    if d > 6:
        raise ValueError(f"grid oracle dimension {d} exceeds the guard (6)")

    def scan(bounds, h):
        axes = [np.arange(lo, hi + 0.5 * h, h) for lo, hi in bounds]
        n_points = math.prod(len(a) for a in axes)
        if n_points > 5e7:
            raise ValueError(f"grid of {n_points} points is too large; increase step")
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=-1)
        if batch is not None:
            values = np.asarray(batch(points), dtype=float)
        else:
            if n_points > 250_000:
                raise ValueError("grid too large for scalar evaluation; pass batch=")
            values = np.fromiter(
                (objective(p.tolist()) for p in points), dtype=float, count=len(points)
            )
        i = int(np.argmin(values))
        return points[i], float(values[i]), n_points

    x, fx, n1 = scan(box, step)
    refined = [
        (max(lo, xi - step), min(hi, xi + step)) for (lo, hi), xi in zip(box, x)
    ]
    x2, f2, n2 = scan(refined, step / 10.0)
    if f2 < fx:
        x, fx = x2, f2
    return SolveReport(
        best_value=fx,
        best_point=np.asarray(x, dtype=float),
        starts=1,
        converged=True,
        final_step=step / 10.0,
        best_coords=np.asarray(x, dtype=float),
        evaluations=n1 + n2,
    )
