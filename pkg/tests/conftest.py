"""Shared test helpers: random closed currents and small independent oracles."""

from __future__ import annotations

import heapq
import math

import numpy as np

from linetension.currents import LatticeVector, PolyhedralCurrent, normalize


def random_unit(rng, n: int) -> np.ndarray:
    v = rng.normal(size=n)
    while np.linalg.norm(v) < 1e-6:
        v = rng.normal(size=n)
    return v / np.linalg.norm(v)


def random_lattice_multiplicity(rng, m: int) -> LatticeVector:
    while True:
        entries = rng.integers(-2, 3, size=m)
        if np.any(entries != 0):
            return LatticeVector(entries.tolist())


def random_lattice_loop(rng, n: int, m: int) -> PolyhedralCurrent:
    """Closed lattice walk: random steps plus their negations, shuffled."""
    n_steps = int(rng.integers(1, 5))
    steps = []
    for _ in range(n_steps):
        v = np.zeros(n, dtype=int)
        axis = int(rng.integers(n))
        v[axis] = int(rng.choice((-1, 1)))
        if rng.random() < 0.3:
            other = int(rng.integers(n))
            v[other] += int(rng.choice((-1, 1)))
        steps.append(v)
    steps += [-v for v in steps]
    order = rng.permutation(len(steps))
    base = rng.integers(-3, 4, size=n)
    vertices = [base.astype(float)]
    for idx in order:
        vertices.append(vertices[-1] + steps[idx])
    theta = random_lattice_multiplicity(rng, m)
    pieces = [
        ((tuple(a), tuple(b)), theta)
        for a, b in zip(vertices[:-1], vertices[1:])
        if tuple(a) != tuple(b)
    ]
    if not pieces:
        return PolyhedralCurrent.empty(n, m)
    return PolyhedralCurrent.build(pieces, n, m)


def random_closed_current(rng, n: int, m: int, max_loops: int = 4) -> PolyhedralCurrent:
    P = PolyhedralCurrent.empty(n, m)
    for _ in range(int(rng.integers(1, max_loops + 1))):
        P = P + random_lattice_loop(rng, n, m)
    return P


def currents_equal(P: PolyhedralCurrent, Q: PolyhedralCurrent) -> bool:
    """Measure equality: the normalized difference has no pieces."""
    return normalize(P + (-Q)).is_empty


def psi_star_bruteforce(b: tuple[int, int], weights: dict[tuple[int, int], float]) -> float:
    """Cheapest decomposition of b into moves from {-1,0,1}^2, by shortest path.

    ``weights`` maps each nonzero move to its envelope value at the fixed
    orientation.  Every move costs at least 1, so optimal paths stay inside a
    box of radius |b|_inf plus the cost bound.
    """
    moves = list(weights.items())
    budget = sum(abs(x) for x in b) * max(w for _, w in moves) + 1.0
    radius = max(abs(b[0]), abs(b[1])) + int(budget) + 1
    dist: dict[tuple[int, int], float] = {(0, 0): 0.0}
    heap = [(0.0, (0, 0))]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, math.inf):
            continue
        if u == b:
            return d
        if d > budget:
            break
        for mv, w in moves:
            v = (u[0] + mv[0], u[1] + mv[1])
            if abs(v[0]) > radius or abs(v[1]) > radius:
                continue
            nd = d + w
            if nd < dist.get(v, math.inf) - 1e-15:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist[b]
