"""Lattice-valued polyhedral line currents.

A current here is a finite list of oriented straight segments, each carrying
an integer multiplicity vector.  All operations are exact where exactness
matters: multiplicities are plain Python integers, and vertex identity is
exact float-tuple equality (inputs are snapped once, at parse time).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "LatticeVector",
    "OrientedSegment",
    "PolyhedralCurrent",
    "BoundaryChain",
    "Loop",
    "Box",
    "Ball",
    "AffineMap",
    "PiecewiseAffineMap",
    "NotClosedError",
    "normalize",
    "boundary",
    "is_closed",
    "mass",
    "decompose_loops",
    "restrict",
    "pushforward",
]

Point = tuple[float, ...]

# Split/clip tolerances.  Vertex identity is exact equality; these only decide
# when a foreign endpoint is considered to lie on a segment, and when a clipped
# sliver is dropped.
ON_SEGMENT_TOL = 1e-9
PARAM_TOL = 1e-12


class NotClosedError(ValueError):
    """Raised when an operation requires a closed current.

    Carries the offending boundary atoms in ``atoms``.
    """

    def __init__(self, atoms: dict[Point, "LatticeVector"]):
        self.atoms = dict(atoms)
        listing = ", ".join(
            f"{pt}: {lv.entries}" for pt, lv in sorted(self.atoms.items())
        )
        super().__init__(f"current is not closed; boundary atoms: {listing}")


def _as_int(x) -> int:
    i = int(x)
    if x != i:
        raise ValueError(f"multiplicity entry {x!r} is not an exact integer")
    return i


@dataclass(frozen=True)
class LatticeVector:
    """Integer multiplicity vector. Entries are exact ints, never floats."""

    entries: tuple[int, ...]

    def __init__(self, entries: Iterable):
        object.__setattr__(self, "entries", tuple(_as_int(x) for x in entries))

    @property
    def dim(self) -> int:
        return len(self.entries)

    @property
    def is_zero(self) -> bool:
        return all(x == 0 for x in self.entries)

    def norm(self) -> float:
        return math.sqrt(sum(x * x for x in self.entries))

    def norm1(self) -> int:
        return sum(abs(x) for x in self.entries)

    def __add__(self, other: "LatticeVector") -> "LatticeVector":
        return LatticeVector(a + b for a, b in zip(self.entries, other.entries, strict=True))

    def __sub__(self, other: "LatticeVector") -> "LatticeVector":
        return LatticeVector(a - b for a, b in zip(self.entries, other.entries, strict=True))

    def __neg__(self) -> "LatticeVector":
        return LatticeVector(-a for a in self.entries)

    def __mul__(self, k: int) -> "LatticeVector":
        return LatticeVector(k * a for a in self.entries)

    __rmul__ = __mul__

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @staticmethod
    def unit(m: int, k: int, weight: int = 1) -> "LatticeVector":
        """Weighted unit vector along component ``k`` in ``Z^m``."""
        return LatticeVector(weight if i == k else 0 for i in range(m))


def _as_point(p: Sequence[float]) -> Point:
    return tuple(float(x) for x in p)


@dataclass(frozen=True)
class OrientedSegment:
    """Straight oriented segment; degenerate (start == end) is rejected."""

    start: Point
    end: Point

    def __init__(self, start: Sequence[float], end: Sequence[float]):
        s, e = _as_point(start), _as_point(end)
        if len(s) != len(e):
            raise ValueError("segment endpoints have different dimensions")
        if s == e:
            raise ValueError(f"degenerate segment at {s}")
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "end", e)

    @property
    def dim(self) -> int:
        return len(self.start)

    @property
    def vector(self) -> Point:
        return tuple(b - a for a, b in zip(self.start, self.end))

    @property
    def length(self) -> float:
        return math.sqrt(sum(v * v for v in self.vector))

    @property
    def tangent(self) -> np.ndarray:
        v = np.asarray(self.vector)
        return v / np.linalg.norm(v)

    def point_at(self, s: float) -> Point:
        return tuple(a + s * (b - a) for a, b in zip(self.start, self.end))

    def reversed(self) -> "OrientedSegment":
        return OrientedSegment(self.end, self.start)


Piece = tuple[OrientedSegment, LatticeVector]


class BoundaryChain:
    """Signed lattice-valued point masses: the 0-current boundary.

    Zero atoms are dropped; for a closed current the chain is empty.
    """

    def __init__(self, atoms: dict[Point, LatticeVector]):
        self._atoms = {p: v for p, v in atoms.items() if not v.is_zero}

    @property
    def atoms(self) -> dict[Point, LatticeVector]:
        return dict(self._atoms)

    @property
    def is_empty(self) -> bool:
        return not self._atoms

    def __len__(self) -> int:
        return len(self._atoms)

    def __getitem__(self, point: Sequence[float]) -> LatticeVector:
        return self._atoms[_as_point(point)]

    def __contains__(self, point: Sequence[float]) -> bool:
        return _as_point(point) in self._atoms

    def __eq__(self, other) -> bool:
        return isinstance(other, BoundaryChain) and self._atoms == other._atoms

    def items(self):
        return sorted(self._atoms.items())

    def __repr__(self) -> str:
        return f"BoundaryChain({self._atoms!r})"


@dataclass(frozen=True)
class PolyhedralCurrent:
    """Finite union of oriented segments with integer multiplicity vectors.

    Immutable value type; every operation returns a new current.
    """

    pieces: tuple[Piece, ...]
    ambient_dim: int
    lattice_dim: int

    @staticmethod
    def build(
        pieces: Iterable[tuple],
        ambient_dim: int | None = None,
        lattice_dim: int | None = None,
    ) -> "PolyhedralCurrent":
        """Construct from (segment, multiplicity) pairs, validating dimensions.

        Segments may be given as OrientedSegment or (start, end) pairs;
        multiplicities as LatticeVector or integer sequences.
        """
        out: list[Piece] = []
        for seg, theta in pieces:
            if not isinstance(seg, OrientedSegment):
                seg = OrientedSegment(*seg)
            if not isinstance(theta, LatticeVector):
                theta = LatticeVector(theta)
            if ambient_dim is None:
                ambient_dim = seg.dim
            if lattice_dim is None:
                lattice_dim = theta.dim
            if seg.dim != ambient_dim:
                raise ValueError(
                    f"segment dimension {seg.dim} != ambient dimension {ambient_dim}"
                )
            if theta.dim != lattice_dim:
                raise ValueError(
                    f"multiplicity dimension {theta.dim} != lattice dimension {lattice_dim}"
                )
            out.append((seg, theta))
        if ambient_dim is None or lattice_dim is None:
            raise ValueError("empty current needs explicit ambient_dim and lattice_dim")
        return PolyhedralCurrent(tuple(out), ambient_dim, lattice_dim)

    @staticmethod
    def empty(ambient_dim: int, lattice_dim: int) -> "PolyhedralCurrent":
        return PolyhedralCurrent((), ambient_dim, lattice_dim)

    @staticmethod
    def polyline(
        vertices: Sequence[Sequence[float]],
        theta,
        closed: bool = False,
    ) -> "PolyhedralCurrent":
        """Chain of segments through consecutive vertices, one multiplicity.

        Consecutive duplicate vertices are skipped.  ``closed=True`` appends
        the closing edge back to the first vertex.
        """
        pts = [_as_point(v) for v in vertices]
        if closed and pts[-1] != pts[0]:
            pts.append(pts[0])
        theta = theta if isinstance(theta, LatticeVector) else LatticeVector(theta)
        pieces = [
            (OrientedSegment(a, b), theta)
            for a, b in zip(pts[:-1], pts[1:])
            if a != b
        ]
        return PolyhedralCurrent.build(pieces, len(pts[0]), theta.dim)

    def __add__(self, other: "PolyhedralCurrent") -> "PolyhedralCurrent":
        if (self.ambient_dim, self.lattice_dim) != (other.ambient_dim, other.lattice_dim):
            raise ValueError("dimension mismatch in current sum")
        return PolyhedralCurrent(
            self.pieces + other.pieces, self.ambient_dim, self.lattice_dim
        )

    def __neg__(self) -> "PolyhedralCurrent":
        return PolyhedralCurrent(
            tuple((seg, -theta) for seg, theta in self.pieces),
            self.ambient_dim,
            self.lattice_dim,
        )

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    # Convenience method forms of the module-level operations.
    def normalize(self) -> "PolyhedralCurrent":
        return normalize(self)

    def boundary(self) -> BoundaryChain:
        return boundary(self)

    def is_closed(self) -> bool:
        return is_closed(self)

    def mass(self) -> float:
        return mass(self)

    def decompose_loops(self) -> list["Loop"]:
        return decompose_loops(self)

    def restrict(self, region) -> "PolyhedralCurrent":
        return restrict(self, region)

    def pushforward(self, f) -> "PolyhedralCurrent":
        return pushforward(self, f)


@dataclass(frozen=True)
class Loop:
    """Closed polygonal loop: cyclic vertex list plus one multiplicity.

    The first vertex is implicitly also the last; two-vertex loops cannot
    occur (a back-and-forth pair cancels under normalization) and are
    rejected.
    """

    vertices: tuple[Point, ...]
    multiplicity: LatticeVector

    def __init__(self, vertices: Sequence[Sequence[float]], multiplicity):
        pts = tuple(_as_point(v) for v in vertices)
        if pts and pts[-1] == pts[0]:
            pts = pts[:-1]
        if len(pts) < 3:
            raise ValueError("a loop needs at least 3 distinct vertices")
        mult = multiplicity if isinstance(multiplicity, LatticeVector) else LatticeVector(multiplicity)
        object.__setattr__(self, "vertices", pts)
        object.__setattr__(self, "multiplicity", mult)

    @property
    def length(self) -> float:
        cyc = self.vertices + (self.vertices[0],)
        return sum(
            math.dist(a, b) for a, b in zip(cyc[:-1], cyc[1:])
        )

    def weighted_length(self) -> float:
        return self.multiplicity.norm() * self.length

    def to_current(self) -> PolyhedralCurrent:
        return PolyhedralCurrent.polyline(self.vertices, self.multiplicity, closed=True)


# ---------------------------------------------------------------------------
# regions and maps

@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo_1, hi_1] x ... x [lo_n, hi_n]."""

    lo: Point
    hi: Point

    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        lo, hi = _as_point(lo), _as_point(hi)
        if len(lo) != len(hi) or any(a > b for a, b in zip(lo, hi)):
            raise ValueError("invalid box bounds")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, p: Sequence[float], tol: float = PARAM_TOL) -> bool:
        return all(
            lo - tol <= x <= hi + tol for x, lo, hi in zip(_as_point(p), self.lo, self.hi)
        )

    def clip_interval(self, seg: OrientedSegment) -> tuple[float, float] | None:
        """Parameter range of ``seg`` inside the box, or None."""
        s0, s1 = 0.0, 1.0
        for a, b, lo, hi in zip(seg.start, seg.end, self.lo, self.hi):
            d = b - a
            if abs(d) < 1e-300:
                if a < lo or a > hi:
                    return None
                continue
            u, v = (lo - a) / d, (hi - a) / d
            if u > v:
                u, v = v, u
            s0, s1 = max(s0, u), min(s1, v)
            if s0 > s1:
                return None
        return (s0, s1)


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball."""

    center: Point
    radius: float

    def __init__(self, center: Sequence[float], radius: float):
        if radius <= 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", _as_point(center))
        object.__setattr__(self, "radius", float(radius))

    def contains(self, p: Sequence[float], tol: float = PARAM_TOL) -> bool:
        return math.dist(_as_point(p), self.center) <= self.radius + tol

    def clip_interval(self, seg: OrientedSegment) -> tuple[float, float] | None:
        a = np.asarray(seg.start) - np.asarray(self.center)
        d = np.asarray(seg.vector)
        A = float(d @ d)
        B = 2.0 * float(a @ d)
        C = float(a @ a) - self.radius**2
        disc = B * B - 4.0 * A * C
        if disc <= 0.0:
            return None
        root = math.sqrt(disc)
        u, v = (-B - root) / (2 * A), (-B + root) / (2 * A)
        s0, s1 = max(0.0, u), min(1.0, v)
        if s0 > s1:
            return None
        return (s0, s1)


@dataclass(frozen=True)
class AffineMap:
    """x -> A x + c with square, invertible A."""

    matrix: np.ndarray
    offset: np.ndarray

    def __init__(self, matrix, offset=None):
        A = np.array(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("affine map matrix must be square")
        c = np.zeros(A.shape[0]) if offset is None else np.array(offset, dtype=float)
        if c.shape != (A.shape[0],):
            raise ValueError("affine map offset has wrong shape")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "offset", c)

    @property
    def is_injective(self) -> bool:
        return abs(np.linalg.det(self.matrix)) > 1e-12

    def apply(self, p: Sequence[float]) -> Point:
        return tuple(float(x) for x in self.matrix @ np.asarray(p, dtype=float) + self.offset)

    @staticmethod
    def identity(n: int) -> "AffineMap":
        return AffineMap(np.eye(n))

    @staticmethod
    def scaling(n: int, factor: float) -> "AffineMap":
        return AffineMap(factor * np.eye(n))


@dataclass(frozen=True)
class PiecewiseAffineMap:
    """Cell decomposition supplied by the caller: list of (region, AffineMap).

    Segments are split at cell interfaces before mapping; each sub-segment is
    assigned to the first cell containing its midpoint.
    """

    cells: tuple[tuple[object, AffineMap], ...]

    def __init__(self, cells: Iterable[tuple]):
        object.__setattr__(self, "cells", tuple((r, f) for r, f in cells))

    @property
    def is_injective(self) -> bool:
        return all(f.is_injective for _, f in self.cells)


# ---------------------------------------------------------------------------
# operations

def _split_points(P: PolyhedralCurrent) -> list[Piece]:
    """Split every segment at foreign endpoints lying on its interior.

    The split coordinate is the foreign endpoint itself (verbatim), so
    boundary cancellation stays exact.  This resolves partial collinear
    overlaps into endpoint-identical sub-segments and turns T-junctions into
    shared vertices.
    """
    pieces = [(seg, th) for seg, th in P.pieces if not th.is_zero]
    points: list[Point] = []
    seen = set()
    for seg, _ in pieces:
        for p in (seg.start, seg.end):
            if p not in seen:
                seen.add(p)
                points.append(p)

    out: list[Piece] = []
    for seg, th in pieces:
        a = np.asarray(seg.start)
        d = np.asarray(seg.vector)
        L2 = float(d @ d)
        cuts: list[tuple[float, Point]] = []
        for p in points:
            if p == seg.start or p == seg.end:
                continue
            s = float((np.asarray(p) - a) @ d) / L2
            if not (PARAM_TOL < s < 1.0 - PARAM_TOL):
                continue
            if math.dist(p, seg.point_at(s)) <= ON_SEGMENT_TOL:
                cuts.append((s, p))
        if not cuts:
            out.append((seg, th))
            continue
        cuts.sort(key=lambda c: c[0])
        chain: list[Point] = [seg.start]
        for _, p in cuts:
            if p != chain[-1]:
                chain.append(p)
        if seg.end != chain[-1]:
            chain.append(seg.end)
        for u, v in zip(chain[:-1], chain[1:]):
            out.append((OrientedSegment(u, v), th))
    return out


def normalize(P: PolyhedralCurrent) -> PolyhedralCurrent:
    """Canonical form representing the same measure.

    Drops zero multiplicities, splits segments at each other's endpoints,
    merges coincident segments (summing multiplicities, orientation
    canonicalized by flipping sign), and sorts pieces lexicographically.
    """
    merged: dict[tuple[Point, Point], LatticeVector] = {}
    for seg, th in _split_points(P):
        if seg.end < seg.start:
            seg, th = seg.reversed(), -th
        key = (seg.start, seg.end)
        cur = merged.get(key)
        merged[key] = th if cur is None else cur + th
    pieces = tuple(
        (OrientedSegment(a, b), th)
        for (a, b), th in sorted(merged.items())
        if not th.is_zero
    )
    return PolyhedralCurrent(pieces, P.ambient_dim, P.lattice_dim)


def boundary(P: PolyhedralCurrent) -> BoundaryChain:
    """Net outflow multiplicity at every segment endpoint, exact integers."""
    zero = LatticeVector([0] * P.lattice_dim)
    atoms: dict[Point, LatticeVector] = {}
    for seg, th in P.pieces:
        atoms[seg.end] = atoms.get(seg.end, zero) + th
        atoms[seg.start] = atoms.get(seg.start, zero) - th
    return BoundaryChain(atoms)


def is_closed(P: PolyhedralCurrent) -> bool:
    return boundary(P).is_empty


def mass(P: PolyhedralCurrent) -> float:
    """Weighted length: sum of |multiplicity| * segment length."""
    return sum(th.norm() * seg.length for seg, th in P.pieces)


def decompose_loops(P: PolyhedralCurrent) -> list[Loop]:
    """Decompose a closed current into closed loops, componentwise.

    Per lattice component, the pieces form an integer circulation on a
    directed multigraph; cycles are peeled off by walking from the smallest
    vertex with positive out-weight, always taking the lowest-index usable
    edge, and subtracting the minimal weight along the detected cycle.  The
    result is deterministic and the combined weighted length is at most
    sqrt(lattice_dim) times the mass of the input.
    """
    P = normalize(P)
    bd = boundary(P)
    if not bd.is_empty:
        raise NotClosedError(bd.atoms)

    loops: list[Loop] = []
    for k in range(P.lattice_dim):
        # Directed edges carrying positive integer weight for component k.
        edges: list[list] = []  # [u, v, weight]
        for seg, th in P.pieces:
            w = th.entries[k]
            if w > 0:
                edges.append([seg.start, seg.end, w])
            elif w < 0:
                edges.append([seg.end, seg.start, -w])
        outgoing: dict[Point, list[int]] = {}
        for idx, (u, _, _) in enumerate(edges):
            outgoing.setdefault(u, []).append(idx)
        out_weight = {u: sum(edges[i][2] for i in idxs) for u, idxs in outgoing.items()}

        while True:
            active = [u for u, w in out_weight.items() if w > 0]
            if not active:
                break
            start = min(active)
            path_vertices = [start]
            path_edges: list[int] = []
            position = {start: 0}
            while True:
                u = path_vertices[-1]
                eidx = next(i for i in outgoing[u] if edges[i][2] > 0)
                v = edges[eidx][1]
                path_edges.append(eidx)
                if v in position:
                    cut = position[v]
                    cycle_vertices = path_vertices[cut:]
                    cycle_edges = path_edges[cut:]
                    break
                position[v] = len(path_vertices)
                path_vertices.append(v)
            w_min = min(edges[i][2] for i in cycle_edges)
            for i in cycle_edges:
                edges[i][2] -= w_min
                out_weight[edges[i][0]] -= w_min
            assert len(cycle_vertices) >= 3, "two-vertex loop survived normalization"
            loops.append(
                Loop(cycle_vertices, LatticeVector.unit(P.lattice_dim, k, w_min))
            )
    return loops


def restrict(P: PolyhedralCurrent, region) -> PolyhedralCurrent:
    """Clip every segment to the region, keeping multiplicities.

    The restriction of a closed current need not be closed.  Clips shorter
    than the parametric tolerance are dropped.
    """
    pieces: list[Piece] = []
    for seg, th in P.pieces:
        iv = region.clip_interval(seg)
        if iv is None:
            continue
        s0, s1 = iv
        if s1 - s0 <= PARAM_TOL:
            continue
        a = seg.start if s0 <= PARAM_TOL else seg.point_at(s0)
        b = seg.end if s1 >= 1.0 - PARAM_TOL else seg.point_at(s1)
        if a != b:
            pieces.append((OrientedSegment(a, b), th))
    return PolyhedralCurrent(tuple(pieces), P.ambient_dim, P.lattice_dim)


def pushforward(P: PolyhedralCurrent, f) -> PolyhedralCurrent:
    """Image current under an injective affine or piecewise-affine map.

    Multiplicities are unchanged; for a piecewise-affine map the segments are
    split at the cell interfaces first.
    """
    if isinstance(f, PiecewiseAffineMap):
        if not f.is_injective:
            raise ValueError("piecewise-affine map has a non-injective cell map")
        pieces: list[Piece] = []
        for seg, th in P.pieces:
            params = {0.0, 1.0}
            for region, _ in f.cells:
                iv = region.clip_interval(seg)
                if iv is not None:
                    params.update(iv)
            grid = sorted(s for s in params if -PARAM_TOL <= s <= 1 + PARAM_TOL)
            for s0, s1 in zip(grid[:-1], grid[1:]):
                if s1 - s0 <= PARAM_TOL:
                    continue
                mid = seg.point_at(0.5 * (s0 + s1))
                cell = next(
                    (g for region, g in f.cells if region.contains(mid)), None
                )
                if cell is None:
                    raise ValueError(
                        f"segment point {mid} not covered by the cell decomposition"
                    )
                a = seg.start if s0 <= PARAM_TOL else seg.point_at(s0)
                b = seg.end if s1 >= 1.0 - PARAM_TOL else seg.point_at(s1)
                pieces.append((OrientedSegment(cell.apply(a), cell.apply(b)), th))
        return PolyhedralCurrent(tuple(pieces), P.ambient_dim, P.lattice_dim)

    if not isinstance(f, AffineMap):
        raise TypeError("pushforward needs an AffineMap or PiecewiseAffineMap")
    if not f.is_injective:
        raise ValueError("affine map is not injective")
    pieces = tuple(
        (OrientedSegment(f.apply(seg.start), f.apply(seg.end)), th)
        for seg, th in P.pieces
    )
    return PolyhedralCurrent(pieces, P.ambient_dim, P.lattice_dim)


def pushforward_boundary(chain: BoundaryChain, f: AffineMap) -> BoundaryChain:
    """Image of a boundary chain: atoms mapped pointwise."""
    return BoundaryChain({f.apply(p): v for p, v in chain.atoms.items()})
