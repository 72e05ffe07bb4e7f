"""Finite simplicial metric forests with exact edge lengths.

A :class:`MetricForest` is a finite disjoint union of finite simplicial
metric trees (isolated vertices allowed).  Points are addressed either at
a vertex or at an exact offset along an edge; closed subsets that are
finite unions of subtrees are represented canonically by
:class:`Subforest` (per-edge closed intervals plus isolated points), so
set equality -- the Rips halting test -- is representation equality.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .scalar import Scalar, ScalarLike, rational

ZERO = rational(0)


class ForestError(Exception):
    pass


class DifferentComponents(ForestError):
    """The two points do not lie in the same tree of the forest."""


def _scal(x: ScalarLike) -> Scalar:
    return x if isinstance(x, Scalar) else Scalar._coerce(x)


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    length: Scalar


@dataclass(frozen=True)
class Point:
    """Address on a forest: a vertex, or an exact offset along an edge.

    Offsets equal to 0 or to the full edge length are canonicalized to the
    corresponding vertex by MetricForest.point().
    """

    vertex: str | None = None
    edge: str | None = None
    offset: Scalar | None = None

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def __repr__(self) -> str:
        if self.is_vertex:
            return f"P({self.vertex})"
        return f"P({self.edge}:{self.offset.coeffs})"


@dataclass(frozen=True)
class Direction:
    """A germ at a point: the edge-end leaving `base` along `edge`,
    toward increasing (+1) or decreasing (-1) offsets."""

    base: Point
    edge: str
    toward: int


class MetricForest:
    """Immutable simplicial metric forest."""

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge]):
        self.vertices = tuple(vertices)
        self.edges = tuple(edges)
        if len(set(self.vertices)) != len(self.vertices):
            raise ForestError("duplicate vertex id")
        ids = [e.id for e in self.edges]
        if len(set(ids)) != len(ids):
            raise ForestError("duplicate edge id")
        if set(ids) & set(self.vertices):
            raise ForestError("edge id collides with vertex id")
        self._edge = {e.id: e for e in self.edges}
        vset = set(self.vertices)
        self._adj: dict[str, list[Edge]] = {v: [] for v in self.vertices}
        for e in self.edges:
            if e.u not in vset or e.v not in vset:
                raise ForestError(f"edge {e.id} references unknown vertex")
            if e.u == e.v:
                raise ForestError(f"edge {e.id} is a loop")
            if e.length.sign() <= 0:
                raise ForestError(f"edge {e.id} must have positive length")
            self._adj[e.u].append(e)
            self._adj[e.v].append(e)
        self._index_components()

    def _index_components(self) -> None:
        self._component: dict[str, int] = {}
        self._parent: dict[str, tuple[str, Edge] | None] = {}
        self._depth: dict[str, int] = {}
        self._dist_root: dict[str, Scalar] = {}
        comp = 0
        for root in self.vertices:
            if root in self._component:
                continue
            stack = [root]
            self._component[root] = comp
            self._parent[root] = None
            self._depth[root] = 0
            self._dist_root[root] = ZERO
            while stack:
                cur = stack.pop()
                for e in self._adj[cur]:
                    nxt = e.v if e.u == cur else e.u
                    if nxt in self._component:
                        if self._parent[cur] is None or self._parent[cur][1].id != e.id:
                            raise ForestError("forest contains a cycle")
                        continue
                    self._component[nxt] = comp
                    self._parent[nxt] = (cur, e)
                    self._depth[nxt] = self._depth[cur] + 1
                    self._dist_root[nxt] = self._dist_root[cur] + e.length
                    stack.append(nxt)
            comp += 1
        self.n_components = comp

    # -- points -----------------------------------------------------------

    def edge_of(self, edge_id: str) -> Edge:
        return self._edge[edge_id]

    def has_edge(self, edge_id: str) -> bool:
        return edge_id in self._edge

    def vertex_point(self, v: str) -> Point:
        if v not in self._component:
            raise ForestError(f"unknown vertex {v}")
        return Point(vertex=v)

    def point(self, edge_id: str, offset: ScalarLike) -> Point:
        """Canonical point at `offset` from the origin endpoint of the edge."""
        e = self._edge[edge_id]
        off = _scal(offset)
        s = off.sign()
        if s < 0 or (off - e.length).sign() > 0:
            raise ForestError(f"offset outside edge {edge_id}")
        if s == 0:
            return Point(vertex=e.u)
        if off == e.length:
            return Point(vertex=e.v)
        return Point(edge=edge_id, offset=off)

    def component_of(self, p: Point) -> int:
        if p.is_vertex:
            return self._component[p.vertex]
        return self._component[self._edge[p.edge].u]

    # -- distances and paths ----------------------------------------------

    def _vertex_dist(self, u: str, v: str) -> Scalar:
        lca = self._lca(u, v)
        return (self._dist_root[u] + self._dist_root[v]
                - self._dist_root[lca] - self._dist_root[lca])

    def _lca(self, u: str, v: str) -> str:
        while self._depth[u] > self._depth[v]:
            u = self._parent[u][0]
        while self._depth[v] > self._depth[u]:
            v = self._parent[v][0]
        while u != v:
            u = self._parent[u][0]
            v = self._parent[v][0]
        return u

    def _vertex_path(self, u: str, v: str) -> list[tuple[str, Edge, str]]:
        """Oriented edge steps (from_vertex, edge, to_vertex) from u to v."""
        lca = self._lca(u, v)
        up = []
        cur = u
        while cur != lca:
            parent, e = self._parent[cur]
            up.append((cur, e, parent))
            cur = parent
        down = []
        cur = v
        while cur != lca:
            parent, e = self._parent[cur]
            down.append((parent, e, cur))
            cur = parent
        return up + list(reversed(down))

    def _anchor(self, p: Point) -> str:
        return p.vertex if p.is_vertex else self._edge[p.edge].u

    def distance(self, p: Point, q: Point) -> Scalar:
        if self.component_of(p) != self.component_of(q):
            raise DifferentComponents("points lie in different trees")
        return self._path(p, q)[0]

    def _endpoint_candidates(self, p: Point) -> list[tuple[str, Scalar]]:
        """(vertex, distance from p) for the exits of p's cell."""
        if p.is_vertex:
            return [(p.vertex, ZERO)]
        e = self._edge[p.edge]
        return [(e.u, p.offset), (e.v, e.length - p.offset)]

    def _path(self, p: Point, q: Point) -> tuple[Scalar, list[tuple[str, Scalar, Scalar]]]:
        """Exact distance and traversal pieces (edge_id, from_off, to_off)."""
        if (not p.is_vertex and not q.is_vertex and p.edge == q.edge):
            lo, hi = p.offset, q.offset
            return abs(hi - lo), [(p.edge, p.offset, q.offset)]
        best = None
        for w1, d1 in self._endpoint_candidates(p):
            for w2, d2 in self._endpoint_candidates(q):
                total = d1 + self._vertex_dist(w1, w2) + d2
                if best is None or total < best[0]:
                    best = (total, w1, w2)
        total, w1, w2 = best
        pieces: list[tuple[str, Scalar, Scalar]] = []
        if not p.is_vertex:
            e = self._edge[p.edge]
            target = ZERO if w1 == e.u else e.length
            if p.offset != target:
                pieces.append((p.edge, p.offset, target))
        for fv, e, tv in self._vertex_path(w1, w2):
            if fv == e.u:
                pieces.append((e.id, ZERO, e.length))
            else:
                pieces.append((e.id, e.length, ZERO))
        if not q.is_vertex:
            e = self._edge[q.edge]
            start = ZERO if w2 == e.u else e.length
            if q.offset != start:
                pieces.append((q.edge, start, q.offset))
        return total, pieces

    def point_at(self, p: Point, q: Point, dist: Scalar) -> Point:
        """The point on the arc [p, q] at exact distance `dist` from p."""
        total, pieces = self._path(p, q)
        if dist.sign() < 0 or dist > total:
            raise ForestError("distance outside the arc")
        acc = ZERO
        for eid, f, t in pieces:
            seg = abs(t - f)
            if acc + seg >= dist:
                rem = dist - acc
                off = f + rem if t > f else f - rem
                return self.point(eid, off)
            acc = acc + seg
        return q

    # -- directions -------------------------------------------------------

    def directions_at(self, p: Point) -> list[Direction]:
        if not p.is_vertex:
            return [Direction(p, p.edge, 1), Direction(p, p.edge, -1)]
        out = []
        for e in sorted(self._adj[p.vertex], key=lambda e: e.id):
            out.append(Direction(p, e.id, 1 if e.u == p.vertex else -1))
        return out

    def direction_towards(self, p: Point, q: Point) -> Direction:
        """The germ at p of the arc [p, q]; requires p != q."""
        _, pieces = self._path(p, q)
        if not pieces:
            raise ForestError("no direction from a point to itself")
        eid, f, t = pieces[0]
        return Direction(p, eid, 1 if t > f else -1)

    # -- sets -------------------------------------------------------------

    def segment(self, p: Point, q: Point) -> "Subforest":
        if self.component_of(p) != self.component_of(q):
            raise DifferentComponents("points lie in different trees")
        if p == q:
            return Subforest(self, {}, frozenset([p]))
        _, pieces = self._path(p, q)
        intervals: dict[str, list[tuple[Scalar, Scalar]]] = {}
        for eid, f, t in pieces:
            lo, hi = (f, t) if t > f else (t, f)
            intervals.setdefault(eid, []).append((lo, hi))
        return Subforest(self, intervals, frozenset())

    def hull(self, points: Sequence[Point]) -> "Subforest":
        """Convex hull of finitely many points of one component."""
        pts = list(points)
        if not pts:
            return Subforest.empty(self)
        comp = self.component_of(pts[0])
        for p in pts[1:]:
            if self.component_of(p) != comp:
                raise DifferentComponents("hull generators span components")
        out = Subforest(self, {}, frozenset([pts[0]]))
        for p in pts[1:]:
            out = out.union(self.segment(pts[0], p))
        return out

    def whole(self) -> "Subforest":
        intervals = {e.id: [(ZERO, e.length)] for e in self.edges}
        lone = [Point(vertex=v) for v in self.vertices if not self._adj[v]]
        return Subforest(self, intervals, frozenset(lone))

    # -- refinement -------------------------------------------------------

    def refine(self, marks: Sequence[Point]) -> tuple["MetricForest", "Relabeling"]:
        """Subdivide edges so that every mark is a vertex of the result."""
        by_edge: dict[str, list[Scalar]] = {}
        for m in marks:
            if m.is_vertex:
                continue
            offs = by_edge.setdefault(m.edge, [])
            if all(o != m.offset for o in offs):
                offs.append(m.offset)
        vertices = list(self.vertices)
        edges: list[Edge] = []
        edge_map: dict[str, list[tuple[Scalar, Scalar, str]]] = {}
        for e in self.edges:
            cuts = sorted(by_edge.get(e.id, []), key=functools.cmp_to_key(_cmp))
            if not cuts:
                edges.append(e)
                edge_map[e.id] = [(ZERO, e.length, e.id)]
                continue
            bounds = [ZERO] + cuts + [e.length]
            names = [e.u]
            for k in range(1, len(bounds) - 1):
                names.append(f"{e.id}_m{k}")
                vertices.append(f"{e.id}_m{k}")
            names.append(e.v)
            segs = []
            for k in range(len(bounds) - 1):
                nid = f"{e.id}_s{k}"
                edges.append(Edge(nid, names[k], names[k + 1],
                                  bounds[k + 1] - bounds[k]))
                segs.append((bounds[k], bounds[k + 1], nid))
            edge_map[e.id] = segs
        refined = MetricForest(vertices, edges)
        return refined, Relabeling(self, refined, edge_map)

    # -- value semantics --------------------------------------------------

    def __eq__(self, other) -> bool:
        return (isinstance(other, MetricForest)
                and self.vertices == other.vertices and self.edges == other.edges)

    def __hash__(self) -> int:
        return hash((self.vertices, self.edges))

    def __repr__(self) -> str:
        return f"MetricForest({len(self.vertices)} vertices, {len(self.edges)} edges)"


def _cmp(a: Scalar, b: Scalar) -> int:
    return (a - b).sign()


class Relabeling:
    """Maps addresses on a forest to addresses on its refinement."""

    def __init__(self, old: MetricForest, new: MetricForest,
                 edge_map: dict[str, list[tuple[Scalar, Scalar, str]]]):
        self.old = old
        self.new = new
        self._edge_map = edge_map

    def point(self, p: Point) -> Point:
        if p.is_vertex:
            return p
        for lo, hi, nid in self._edge_map[p.edge]:
            if lo <= p.offset <= hi:
                return self.new.point(nid, p.offset - lo)
        raise ForestError("point outside mapped edge")

    def subforest(self, s: "Subforest") -> "Subforest":
        intervals: dict[str, list[tuple[Scalar, Scalar]]] = {}
        for eid, ivs in s.intervals.items():
            for lo, hi in ivs:
                for slo, shi, nid in self._edge_map[eid]:
                    a, b = _max(lo, slo), _min(hi, shi)
                    if (b - a).sign() > 0:
                        intervals.setdefault(nid, []).append((a - slo, b - slo))
        pts = frozenset(self.point(p) for p in s.points)
        return Subforest(self.new, intervals, pts)


def _min(a: Scalar, b: Scalar) -> Scalar:
    return a if a <= b else b


def _max(a: Scalar, b: Scalar) -> Scalar:
    return a if a >= b else b


class Subforest:
    """A closed finite union of subtrees of a host forest, canonical form.

    Stored as maximal disjoint closed intervals per edge plus isolated
    points not covered by any interval.  Degenerate (single point)
    components are first-class.
    """

    __slots__ = ("host", "intervals", "points", "_hash")

    def __init__(self, host: MetricForest,
                 intervals: dict[str, Iterable[tuple[Scalar, Scalar]]],
                 points: frozenset[Point] = frozenset()):
        self.host = host
        canon: dict[str, tuple[tuple[Scalar, Scalar], ...]] = {}
        for eid in sorted(intervals):
            merged = _merge(list(intervals[eid]))
            if merged:
                canon[eid] = tuple(merged)
        self.intervals = canon
        kept = []
        for p in points:
            if not self._covered(p):
                kept.append(p)
        self.points = frozenset(kept)
        self._hash = None

    @classmethod
    def empty(cls, host: MetricForest) -> "Subforest":
        return cls(host, {}, frozenset())

    # -- membership -------------------------------------------------------

    def _covered(self, p: Point) -> bool:
        """True if p lies in some stored interval."""
        if p.is_vertex:
            for e in self.host._adj[p.vertex]:
                ivs = self.intervals.get(e.id)
                if not ivs:
                    continue
                if e.u == p.vertex and ivs[0][0].sign() == 0:
                    return True
                if e.v == p.vertex and ivs[-1][1] == e.length:
                    return True
            return False
        ivs = self.intervals.get(p.edge, ())
        return any(lo <= p.offset <= hi for lo, hi in ivs)

    def contains(self, p: Point) -> bool:
        return self._covered(p) or p in self.points

    @property
    def is_empty(self) -> bool:
        return not self.intervals and not self.points

    def volume(self) -> Scalar:
        total = ZERO
        for ivs in self.intervals.values():
            for lo, hi in ivs:
                total = total + (hi - lo)
        return total

    # -- set algebra ------------------------------------------------------

    def _boundary_points(self) -> list[Point]:
        out = []
        for eid, ivs in self.intervals.items():
            for lo, hi in ivs:
                out.append(self.host.point(eid, lo))
                out.append(self.host.point(eid, hi))
        return out

    def intersect(self, other: "Subforest") -> "Subforest":
        intervals: dict[str, list[tuple[Scalar, Scalar]]] = {}
        for eid, ivs in self.intervals.items():
            olist = other.intervals.get(eid)
            if not olist:
                continue
            for lo, hi in ivs:
                for olo, ohi in olist:
                    a, b = _max(lo, olo), _min(hi, ohi)
                    if (b - a).sign() > 0:
                        intervals.setdefault(eid, []).append((a, b))
        probe = Subforest(self.host, intervals, frozenset())
        extra = set()
        for p in (list(self.points) + list(other.points)
                  + self._boundary_points() + other._boundary_points()):
            if probe._covered(p):
                continue
            if self.contains(p) and other.contains(p):
                extra.add(p)
        return Subforest(self.host, intervals, frozenset(extra))

    def union(self, other: "Subforest") -> "Subforest":
        intervals: dict[str, list[tuple[Scalar, Scalar]]] = {}
        for src in (self, other):
            for eid, ivs in src.intervals.items():
                intervals.setdefault(eid, []).extend(ivs)
        return Subforest(self.host, intervals, self.points | other.points)

    # -- structure --------------------------------------------------------

    def components(self) -> list["Subforest"]:
        """Connected components, canonically ordered."""
        nodes: list[tuple] = []
        for eid, ivs in self.intervals.items():
            for lo, hi in ivs:
                nodes.append(("i", eid, lo, hi))
        for p in self.points:
            nodes.append(("p", p))
        parent = list(range(len(nodes)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        def union(i, j):
            parent[find(i)] = find(j)

        anchor: dict[Point, int] = {}
        for idx, node in enumerate(nodes):
            if node[0] == "i":
                eid, lo, hi = node[1], node[2], node[3]
                for off in (lo, hi):
                    p = self.host.point(eid, off)
                    if p.is_vertex:
                        if p in anchor:
                            union(idx, anchor[p])
                        else:
                            anchor[p] = idx
        comps: dict[int, list] = {}
        for idx, node in enumerate(nodes):
            comps.setdefault(find(idx), []).append(node)
        out = []
        for members in comps.values():
            intervals: dict[str, list[tuple[Scalar, Scalar]]] = {}
            pts = set()
            for node in members:
                if node[0] == "i":
                    intervals.setdefault(node[1], []).append((node[2], node[3]))
                else:
                    pts.add(node[1])
            out.append(Subforest(self.host, intervals, frozenset(pts)))
        out.sort(key=lambda s: s._sort_key())
        return out

    def _sort_key(self):
        keys = []
        for eid, ivs in sorted(self.intervals.items()):
            for lo, hi in ivs:
                keys.append((1, eid, _approx(lo)))
        for p in self.points:
            if p.is_vertex:
                keys.append((0, p.vertex, 0.0))
            else:
                keys.append((1, p.edge, _approx(p.offset)))
        return min(keys) if keys else (2, "", 0.0)

    @property
    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    @property
    def is_point(self) -> bool:
        return not self.intervals and len(self.points) == 1

    def single_point(self) -> Point:
        if not self.is_point:
            raise ForestError("not a degenerate subtree")
        return next(iter(self.points))

    def extremal_points(self) -> list[Point]:
        """Points with at most one germ into the set (leaves of each
        component, plus isolated points)."""
        germs: dict[Point, int] = {}
        for eid, ivs in self.intervals.items():
            for lo, hi in ivs:
                for off in (lo, hi):
                    p = self.host.point(eid, off)
                    germs[p] = germs.get(p, 0) + 1
        out = [p for p, n in germs.items() if n == 1]
        out.extend(self.points)
        return sorted(out, key=_point_key)

    def germ_directions(self, p: Point) -> list[Direction]:
        """Directions at p pointing into the set with positive overlap."""
        out = []
        for d in self.host.directions_at(p):
            if self.extends_in(d):
                out.append(d)
        return out

    def extends_in(self, d: Direction) -> bool:
        """True if the set contains a nondegenerate segment leaving
        d.base into the germ d."""
        base = d.base
        e = self.host.edge_of(d.edge)
        if base.is_vertex:
            off = ZERO if (d.toward == 1) else e.length
        else:
            if base.edge != d.edge:
                return False
            off = base.offset
        ivs = self.intervals.get(d.edge, ())
        for lo, hi in ivs:
            if d.toward == 1 and lo <= off < hi:
                return True
            if d.toward == -1 and lo < off <= hi:
                return True
        return False

    def diameter(self) -> Scalar:
        """Max distance between extremal points (0 for points/empty)."""
        ext = self.extremal_points()
        best = ZERO
        for i in range(len(ext)):
            for j in range(i + 1, len(ext)):
                try:
                    d = self.host.distance(ext[i], ext[j])
                except DifferentComponents:
                    continue
                if d > best:
                    best = d
        return best

    def issubset(self, other: "Subforest") -> bool:
        return self.intersect(other) == self

    # -- value semantics --------------------------------------------------

    def __eq__(self, other) -> bool:
        return (isinstance(other, Subforest)
                and self.intervals == other.intervals
                and self.points == other.points)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((tuple(sorted(self.intervals.items())), self.points))
        return self._hash

    def __repr__(self) -> str:
        parts = []
        for eid, ivs in sorted(self.intervals.items()):
            for lo, hi in ivs:
                parts.append(f"{eid}[{_approx(lo):.4g},{_approx(hi):.4g}]")
        for p in sorted(self.points, key=_point_key):
            parts.append(repr(p))
        return "Subforest(" + " ".join(parts) + ")" if parts else "Subforest(empty)"


def _approx(s: Scalar) -> float:
    # repr/ordering convenience only; all decisions use exact signs
    return float(s.to_decimal(12))


def _point_key(p: Point):
    if p.is_vertex:
        return (0, p.vertex, 0.0)
    return (1, p.edge, _approx(p.offset))


def _merge(ivs: list[tuple[Scalar, Scalar]]) -> list[tuple[Scalar, Scalar]]:
    ivs = [iv for iv in ivs if (iv[1] - iv[0]).sign() > 0]
    ivs.sort(key=lambda iv: _approx(iv[0]))
    # float sort is a fast preorder; fix rare exact ties with a stable pass
    for i in range(1, len(ivs)):
        j = i
        while j > 0 and ivs[j][0] < ivs[j - 1][0]:
            ivs[j], ivs[j - 1] = ivs[j - 1], ivs[j]
            j -= 1
    out: list[tuple[Scalar, Scalar]] = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


# module-level conveniences matching the operation vocabulary ------------

def distance(f: MetricForest, p: Point, q: Point) -> Scalar:
    return f.distance(p, q)


def segment(f: MetricForest, p: Point, q: Point) -> Subforest:
    return f.segment(p, q)


def directions_at(f: MetricForest, p: Point) -> list[Direction]:
    return f.directions_at(p)


def intersect(a: Subforest, b: Subforest) -> Subforest:
    return a.intersect(b)


def volume(s: Subforest) -> Scalar:
    return s.volume()
