"""Crack-conforming triangulations with duplicated degrees of freedom along cracks.

The triangulation itself comes from Shewchuk's Triangle (``triangle`` package):
crack polylines are inserted as constrained segments and the element size is
graded toward the origin and toward the crack tips.  Nodes lying on a crack are
then split into one copy per connected sector of their star, so that P1 fields
on the copies may jump across the cracks.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import triangle as tr
from scipy.spatial import cKDTree

from .geometry import TWO_PI, Crack, CrackSet, DomainSpec


def _size_field(points, sing, h, grade, h_min, h_max, far=None):
    points = np.atleast_2d(points)
    if len(sing) == 0:
        return np.full(len(points), h_max)
    d = np.min(np.linalg.norm(points[:, None, :] - sing[None, :, :], axis=2), axis=1)
    s = h * d ** ((grade - 1.0) / grade)
    if far is not None:
        # beyond the unit disk the size grows like |x| ** far
        r = np.linalg.norm(points, axis=1)
        s = np.where(r > 1.0, np.maximum(s, h * r**far), s)
    return np.clip(s, h_min, h_max)


def _graded_points(a, b, size_fn, sing):
    """Points strictly between a and b with spacing following ``size_fn``."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    L = float(np.linalg.norm(b - a))
    if L == 0:
        return np.zeros((0, 2))
    s = [np.linspace(0.0, L, 4001)]
    for p in sing:
        # clustered samples toward singular points lying on or near the segment
        proj = np.clip(np.dot(p - a, b - a) / L, 0.0, L)
        g = np.geomspace(1e-9 * L, L, 600)
        s.append(np.clip(proj - g, 0, L))
        s.append(np.clip(proj + g, 0, L))
    s = np.unique(np.concatenate(s))
    x = a[None] + (s / L)[:, None] * (b - a)[None]
    dens = 1.0 / size_fn(x)
    N = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s))])
    n = max(1, int(math.ceil(N[-1] - 1e-9)))
    targets = np.linspace(0.0, N[-1], n + 1)[1:-1]
    si = np.interp(targets, N, s)
    return a[None] + (si / L)[:, None] * (b - a)[None]


@dataclass(eq=False)
class BaseMesh:
    """Plain conforming triangulation, shared by every crack cut of the same geometry."""

    points: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    grading: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points.setflags(write=False)
        self.triangles.setflags(write=False)

    @property
    def n_points(self) -> int:
        return len(self.points)

    def edges(self) -> np.ndarray:
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    def areas(self) -> np.ndarray:
        p = self.points[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def triangulate(
    domain: DomainSpec,
    cracks: CrackSet | None,
    h: float,
    grade: float = 3.0,
    h_max: float | None = None,
    h_min_ratio: float = 1e-9,
    min_angle: float = 28.0,
    max_iter: int = 14,
    far: float | None = None,
) -> BaseMesh:
    """Graded triangulation honoring the crack polylines.

    A singularity ``r^a`` is resolved at the optimal rate when ``grade > 1/a``
    (see :func:`recommended_grade`); the floor ``h * h_min_ratio`` must stay far
    below ``h^grade`` or it caps the accuracy.

    The local element size is ``h * d ** ((grade - 1) / grade)`` where ``d`` is
    the distance to the origin or the nearest crack tip, clipped to
    ``[h * h_min_ratio, h_max]``.  With ``far`` set, the size outside the unit
    disk is at least ``h * |x| ** far`` (for large truncated exterior domains).
    """
    if h <= 0 or grade < 1:
        raise ValueError("need h > 0 and grade >= 1")
    h_max = h if h_max is None else h_max
    h_min = h * h_min_ratio
    sing = cracks.singular_points() if cracks is not None and len(cracks) else np.zeros((0, 2))

    def size_fn(x):
        return _size_field(x, sing, h, grade, h_min, h_max, far)

    if cracks is not None and len(cracks) > 1:
        _check_crack_separation(cracks, 2 * h_min)

    poly = domain.polygon
    n = len(poly)
    # boundary chain with crack start points inserted
    chain = []
    starts = [c.start for c in cracks] if cracks is not None else []
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        e = q - p
        stops = [(0.0, p)]
        for s in starts:
            rel = s - p
            t = float(np.dot(rel, e) / np.dot(e, e))
            if 1e-12 < t < 1 - 1e-12 and abs(rel[0] * e[1] - rel[1] * e[0]) < 1e-10 * np.dot(e, e):
                stops.append((t, s))
        stops.sort(key=lambda z: z[0])
        pts = [z[1] for z in stops] + [q]
        for a, b in zip(pts[:-1], pts[1:]):
            chain.append(a)
            chain.extend(_graded_points(a, b, size_fn, sing))
    verts = [np.asarray(v) for v in chain]
    nb = len(verts)
    segs = [(i, (i + 1) % nb) for i in range(nb)]

    def find_or_add(x):
        for idx, v in enumerate(verts):
            if abs(v[0] - x[0]) < 1e-13 and abs(v[1] - x[1]) < 1e-13:
                return idx
        verts.append(np.asarray(x, float))
        return len(verts) - 1

    if cracks is not None and len(cracks):
        origin = find_or_add(np.zeros(2))
        for c in cracks:
            pieces = [(c.start, np.zeros(2))]
            if c.t_tip > 0:
                pieces.append((np.zeros(2), c.tip))
            for a, b in pieces:
                ia = find_or_add(a)
                inner = _graded_points(a, b, size_fn, sing)
                prev = ia
                for x in inner:
                    verts.append(x)
                    segs.append((prev, len(verts) - 1))
                    prev = len(verts) - 1
                ib = find_or_add(b)
                segs.append((prev, ib))
        del origin

    V = np.array(verts)
    S = np.array(segs, dtype=np.int32)
    amax = math.sqrt(3) / 4 * h_max**2
    out = tr.triangulate({"vertices": V, "segments": S}, f"pq{min_angle}a{amax:.17g}Q")
    for _ in range(max_iter):
        pts, tris = out["vertices"], out["triangles"]
        cen = pts[tris].mean(axis=1)
        target = math.sqrt(3) / 4 * size_fn(cen) ** 2
        p = pts[tris]
        area = 0.5 * np.abs(
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
        )
        if np.all(area <= 1.5 * target):
            break
        out = dict(out)
        out["triangle_max_area"] = target.reshape(-1, 1)
        out = tr.triangulate(out, f"rpq{min_angle}aQ")
    pts = np.array(out["vertices"], dtype=float)
    tris = np.array(out["triangles"], dtype=np.int64)
    tris = _orient_ccw(pts, tris)
    scale = float(np.max(np.abs(poly)))
    bnd = np.flatnonzero(domain.boundary_distance(pts) < 1e-10 * scale)
    grading = {"h": h, "grade": grade, "h_min": h_min, "h_max": h_max, "far": far,
               "singular_points": sing.tolist()}
    return BaseMesh(pts, tris, bnd, grading)


def recommended_grade(config, margin: float = 1.25, minimum: float = 3.0) -> float:
    """Grading exponent ``margin / a`` for the strongest singularity ``r^a``.

    Near the pole ``j`` fields behave like ``r^min(rho_j, 1 - rho_j)``; at the
    collision point the exponent is ``min(rho, 1 - rho)`` for the total ``rho``.
    """
    exps = [min(r % 1.0, 1.0 - r % 1.0) for r in list(config.rhos) + [config.total_rho]]
    return max(minimum, margin / min(exps))


def _orient_ccw(pts, tris):
    p = pts[tris]
    sa = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (
        p[:, 2, 0] - p[:, 0, 0]
    )
    flip = sa < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def annulus_mesh(config, r_in: float, r_out: float, h: float, min_angle: float = 28.0) -> CrackMesh:
    """Quasi-uniform mesh of the annulus ``r_in < |x| < r_out`` cut along the rays ``t a_j, t < 0``.

    Both circles are polygonal with spacing ``h`` relative to the radius; the
    crack cuts run from circle to circle.  Boundary nodes are recorded but the
    fields are not required to vanish there.
    """
    verts, segs = [], []

    def ring(r, n):
        base = len(verts)
        t = TWO_PI * np.arange(n) / n
        # put the crack end points on the rings
        t = np.unique(np.concatenate([t, np.mod(config.alphas + np.pi, TWO_PI)]))
        t = _drop_close(t, 0.3 * TWO_PI / n, np.mod(config.alphas + np.pi, TWO_PI))
        for a in t:
            verts.append(r * np.array([math.cos(a), math.sin(a)]))
        m = len(t)
        segs.extend((base + i, base + (i + 1) % m) for i in range(m))
        return base, t

    n_out = max(16, int(math.ceil(TWO_PI * r_out / (h * r_out))))
    n_in = max(16, int(math.ceil(TWO_PI / h)))
    b_in, t_in = ring(r_in, n_in)
    b_out, t_out = ring(r_out, n_out)
    cracks = []
    for p in config.poles:
        u = -p.direction
        a = np.mod(p.alpha + np.pi, TWO_PI)
        i_in = b_in + int(np.argmin(np.abs(t_in - a)))
        i_out = b_out + int(np.argmin(np.abs(t_out - a)))
        n_seg = max(2, int(math.ceil(math.log(r_out / r_in) / h)))
        radii = r_in * (r_out / r_in) ** (np.arange(1, n_seg) / n_seg)
        prev = i_in
        for r in radii:
            verts.append(r * u)
            segs.append((prev, len(verts) - 1))
            prev = len(verts) - 1
        segs.append((prev, i_out))
        cracks.append(Crack(p.direction, p.normal, -r_out, -r_in, p.rho))
    V = np.array(verts)
    amax = math.sqrt(3) / 4 * (h * r_in) ** 2
    out = tr.triangulate(
        {"vertices": V, "segments": np.array(segs, dtype=np.int32), "holes": np.zeros((1, 2))},
        f"pq{min_angle}a{amax:.17g}Q",
    )
    pts = np.array(out["vertices"], dtype=float)
    tris = _orient_ccw(pts, np.array(out["triangles"], dtype=np.int64))
    r = np.linalg.norm(pts, axis=1)
    bnd = np.flatnonzero((np.abs(r - r_in) < 1e-10 * r_out) | (np.abs(r - r_out) < 1e-10 * r_out))
    grading = {"h": h, "grade": 1.0, "h_min": h * r_in, "h_max": h * r_in, "annulus": [r_in, r_out]}
    return split(BaseMesh(pts, tris, bnd, grading), CrackSet(tuple(cracks), 0.0))


def _drop_close(t, tol, keep):
    """Remove angles within ``tol`` of a kept angle (other than the kept ones)."""
    out = []
    for a in t:
        d = np.abs(((a - keep) + np.pi) % TWO_PI - np.pi)
        if np.any(d < 1e-14) or not np.any(d < tol):
            out.append(a)
    return np.array(out)


def _check_crack_separation(cracks: CrackSet, tol: float):
    # distinct rays through 0 only approach each other near the origin; compare tips
    tips = [c.tip for c in cracks if c.t_tip > 0]
    for i in range(len(cracks)):
        for j in range(len(cracks)):
            if i == j:
                continue
            ci, cj = cracks[i], cracks[j]
            for p in (ci.start, ci.tip):
                if np.linalg.norm(p) < tol:
                    continue
                t = float(np.clip(np.dot(p, cj.direction), cj.t_start, cj.t_tip))
                if np.linalg.norm(p - t * cj.direction) < tol:
                    raise ValueError("two cracks come closer than 2*h_min away from the origin")
    del tips


# ---------------------------------------------------------------------------
# crack meshes


@dataclass(eq=False)
class CrackEdges:
    """Edges of one crack, ordered by the line parameter ``t``."""

    base_edges: np.ndarray  # (ne, 2) base node ids
    t: np.ndarray  # (ne, 2) line parameters of the endpoints
    plus: np.ndarray  # (ne, 2) copy ids on the plus side
    minus: np.ndarray  # (ne, 2) copy ids on the minus side
    plus_tri: np.ndarray  # (ne,) triangle on the plus side
    minus_tri: np.ndarray


@dataclass(eq=False)
class CrackMesh:
    base: BaseMesh
    cracks: CrackSet | None
    nodes: np.ndarray
    triangles: np.ndarray
    parent: np.ndarray
    crack_edges: list
    boundary_dofs: np.ndarray
    tip_dofs: np.ndarray
    origin_dofs: np.ndarray

    @property
    def grading(self) -> dict:
        return self.base.grading

    @property
    def n_dofs(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def duplicated_pairs(self) -> np.ndarray:
        """(copy, base node) for every copy that is not the base node itself."""
        extra = np.arange(self.base.n_points, self.n_dofs)
        return np.column_stack([extra, self.parent[extra]])

    def recut(self, cracks: CrackSet | None) -> "CrackMesh":
        return split(self.base, cracks)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.nodes).tobytes())
        h.update(np.ascontiguousarray(self.triangles, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]

    # --- element geometry -------------------------------------------------
    def element_geometry(self):
        """Areas (nt,) and gradients of barycentric coordinates (nt, 3, 2)."""
        if getattr(self, "_geom", None) is None:
            p = self.nodes[self.triangles]
            d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
            det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
            g = np.empty((len(p), 3, 2))
            g[:, 1, 0], g[:, 1, 1] = d2[:, 1] / det, -d2[:, 0] / det
            g[:, 2, 0], g[:, 2, 1] = -d1[:, 1] / det, d1[:, 0] / det
            g[:, 0] = -g[:, 1] - g[:, 2]
            self._geom = (0.5 * det, g)
        return self._geom

    def side_points(self, tau: float = 1e-9) -> np.ndarray:
        """One sample point per copy, nudged into an incident triangle.

        Used to evaluate side-dependent (multivalued) functions at crack copies.
        """
        first = np.full(self.n_dofs, -1)
        flat = self.triangles.ravel()
        order = np.arange(flat.size)[::-1]
        first[flat[order]] = order // 3
        cen = self.nodes[self.triangles].mean(axis=1)
        return self.nodes + tau * (cen[first] - self.nodes)

    def transfer_from(self, other: "CrackMesh", values: np.ndarray) -> np.ndarray:
        """Move nodal values from another cut of the same base mesh onto this one."""
        if other.base is not self.base:
            raise ValueError("meshes do not share a base triangulation")
        values = np.asarray(values)
        out = np.zeros((self.n_dofs,) + values.shape[1:], dtype=values.dtype)
        out[self.triangles.ravel()] = values[other.triangles.ravel()]
        return out

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes.tolist(),
            "triangles": self.triangles.tolist(),
            "parent": self.parent.tolist(),
            "boundary_dofs": self.boundary_dofs.tolist(),
            "duplicated_pairs": self.duplicated_pairs.tolist(),
            "crack_edges": [
                {
                    "base_edges": ce.base_edges.tolist(),
                    "t": ce.t.tolist(),
                    "plus": ce.plus.tolist(),
                    "minus": ce.minus.tolist(),
                }
                for ce in self.crack_edges
            ],
            "grading": self.grading,
            "hash": self.content_hash(),
        }


def split(base: BaseMesh, cracks: CrackSet | None) -> CrackMesh:
    """Duplicate the nodes of ``base`` along the cracks."""
    pts = base.points
    tris = np.array(base.triangles)
    nt = len(tris)
    scale = float(np.max(np.abs(pts)))
    # strongly graded meshes put nodes very close to the origin and the tips: the
    # collinearity test is relative to the distance from them
    radius = np.linalg.norm(pts, axis=1)
    line_tol = 1e-10 * radius + 1e-15 * scale
    origin_tol = 1e-15 * scale
    t_tol = 1e-13 * scale
    crack_edge_set = set()
    per_crack = []
    tip_nodes = []
    if cracks is not None:
        for c in cracks:
            u = c.direction
            cross = pts[:, 0] * u[1] - pts[:, 1] * u[0]
            t = pts @ u
            tol = line_tol
            if c.t_tip > 0:
                tol = 1e-10 * np.minimum(radius, np.linalg.norm(pts - c.tip, axis=1)) + 1e-15 * scale
            on = np.flatnonzero((np.abs(cross) < tol) & (t > c.t_start - t_tol) & (t < c.t_tip + t_tol))
            on = on[np.argsort(t[on])]
            if len(on) < 2 or abs(t[on[0]] - c.t_start) > t_tol or abs(t[on[-1]] - c.t_tip) > t_tol:
                raise ValueError("mesh does not resolve the crack polyline")
            edges = np.column_stack([on[:-1], on[1:]])
            per_crack.append((edges, np.column_stack([t[on[:-1]], t[on[1:]]])))
            for a, b in edges:
                crack_edge_set.add((min(a, b), max(a, b)))
            if c.t_tip > 0:
                tip_nodes.append(on[-1])
    # node -> triangles
    node_tris = [[] for _ in range(len(pts))]
    for ti, tri in enumerate(tris):
        for v in tri:
            node_tris[v].append(ti)
    crack_nodes = sorted({v for e in crack_edge_set for v in e})
    shared = {}
    for edges, _ in per_crack:
        for v in set(edges.ravel()):
            shared[v] = shared.get(v, 0) + 1
    if cracks is not None:
        origin = [v for v, cnt in shared.items() if cnt > 1]
        for v in origin:
            if radius[v] > origin_tol:
                raise ValueError("two cracks share a node away from the origin")
    tri_dofs = tris.copy()
    parent = list(range(len(pts)))
    next_id = len(pts)
    for v in crack_nodes:
        star = node_tris[v]
        comp = {ti: ti for ti in star}

        def find(a):
            while comp[a] != a:
                comp[a] = comp[comp[a]]
                a = comp[a]
            return a

        # link triangles that share a non-crack edge through v
        by_edge = {}
        for ti in star:
            for w in tris[ti]:
                if w == v:
                    continue
                key = (min(v, w), max(v, w))
                if key in crack_edge_set:
                    continue
                by_edge.setdefault(key, []).append(ti)
        for group in by_edge.values():
            for other in group[1:]:
                ra, rb = find(group[0]), find(other)
                if ra != rb:
                    comp[max(ra, rb)] = min(ra, rb)
        roots = sorted({find(ti) for ti in star})
        for k, r in enumerate(roots):
            cid = v if k == 0 else next_id
            if k > 0:
                parent.append(v)
                next_id += 1
            for ti in star:
                if find(ti) == r:
                    loc = int(np.flatnonzero(tris[ti] == v)[0])
                    tri_dofs[ti, loc] = cid
    parent = np.array(parent, dtype=np.int64)
    nodes = pts[parent]
    # plus/minus tables
    edge_tris = {}
    for ti, tri in enumerate(tris):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            if key in crack_edge_set:
                edge_tris.setdefault(key, []).append(ti)
    crack_edges = []
    for j, (edges, tvals) in enumerate(per_crack):
        nu = cracks[j].normal
        ne = len(edges)
        plus = np.empty((ne, 2), dtype=np.int64)
        minus = np.empty((ne, 2), dtype=np.int64)
        ptri = np.empty(ne, dtype=np.int64)
        mtri = np.empty(ne, dtype=np.int64)
        for i, (a, b) in enumerate(edges):
            ts = edge_tris.get((min(a, b), max(a, b)), [])
            if len(ts) != 2:
                raise ValueError("crack edge without two incident triangles")
            for ti in ts:
                third = [w for w in tris[ti] if w != a and w != b][0]
                la = int(np.flatnonzero(tris[ti] == a)[0])
                lb = int(np.flatnonzero(tris[ti] == b)[0])
                pair = (tri_dofs[ti, la], tri_dofs[ti, lb])
                if np.dot(pts[third], nu) > 0:
                    plus[i], ptri[i] = pair, ti
                else:
                    minus[i], mtri[i] = pair, ti
        crack_edges.append(CrackEdges(edges, tvals, plus, minus, ptri, mtri))
    bset = set(base.boundary.tolist())
    boundary_dofs = np.array([c for c in range(len(parent)) if parent[c] in bset], dtype=np.int64)
    tip_set = set(tip_nodes)
    tip_dofs = np.array([c for c in range(len(parent)) if parent[c] in tip_set], dtype=np.int64)
    if cracks is not None and len(cracks):
        on = np.flatnonzero(radius <= origin_tol)
        origin_dofs = np.array([c for c in range(len(parent)) if parent[c] in set(on.tolist())], dtype=np.int64)
    else:
        origin_dofs = np.zeros(0, dtype=np.int64)
    return CrackMesh(base, cracks, nodes, tri_dofs, parent, crack_edges, boundary_dofs, tip_dofs, origin_dofs)


def generate(
    domain: DomainSpec,
    cracks: CrackSet | None,
    h: float,
    grade: float = 3.0,
    **kwargs,
) -> CrackMesh:
    """Graded crack-conforming mesh with duplicated crack DOFs."""
    return split(triangulate(domain, cracks, h, grade, **kwargs), cracks)


def constraint_links(mesh: CrackMesh) -> np.ndarray:
    """Unique (plus copy, minus copy, crack index) triples across every crack edge."""
    rows = set()
    for j, ce in enumerate(mesh.crack_edges):
        for k in range(2):
            for p, m in zip(ce.plus[:, k], ce.minus[:, k]):
                rows.add((int(p), int(m), j))
    if not rows:
        return np.zeros((0, 3), dtype=np.int64)
    return np.array(sorted(rows), dtype=np.int64)


def euler_characteristic(mesh: CrackMesh) -> int:
    tri = mesh.triangles
    e = np.unique(np.sort(tri[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1), axis=0)
    used = np.unique(tri)
    return len(used) - len(e) + len(tri)


# ---------------------------------------------------------------------------
# traces


@dataclass(eq=False)
class TraceMap:
    """DOFs along a crack portion with trapezoid weights, ordered by ``t``.

    ``dofs[i]`` is the copy seen from the requested side at parameter ``t[i]``.
    At a node where the side copy changes (the origin with several cracks) the
    node appears twice, once per adjacent edge, each carrying half its edge.
    """

    dofs: np.ndarray
    t: np.ndarray
    weights: np.ndarray
    edges: np.ndarray  # (ne, 2) copy ids of the side, edge by edge
    edge_t: np.ndarray  # (ne, 2)

    @property
    def length(self) -> float:
        return float(np.sum(self.weights))


def trace_dofs(mesh: CrackMesh, j: int, side: str = "+", portion: str = "S") -> TraceMap:
    """Trace DOFs of crack ``j`` on side ``'+'`` or ``'-'`` over ``'S'`` (segment) or ``'G'`` (full crack)."""
    if mesh.cracks is None or j >= len(mesh.crack_edges):
        raise ValueError(f"crack {j} not present in the mesh")
    ce = mesh.crack_edges[j]
    sel = np.ones(len(ce.t), dtype=bool)
    if portion in ("S", "segment"):
        sel = ce.t[:, 0] >= -1e-14
    elif portion not in ("G", "full"):
        raise ValueError(f"unknown portion {portion!r}")
    table = ce.plus if side in ("+", "plus") else ce.minus
    ed, et = table[sel], ce.t[sel]
    if len(ed) == 0:
        return TraceMap(np.zeros(0, int), np.zeros(0), np.zeros(0), np.zeros((0, 2), int), np.zeros((0, 2)))
    dofs, ts, ws = [], [], []
    for (a, b), (ta, tb) in zip(ed, et):
        half = 0.5 * (tb - ta)
        if dofs and dofs[-1] == a:
            ws[-1] += half
        else:
            dofs.append(a)
            ts.append(ta)
            ws.append(half)
        dofs.append(b)
        ts.append(tb)
        ws.append(half)
    return TraceMap(np.array(dofs), np.array(ts), np.array(ws), ed, et)


# ---------------------------------------------------------------------------
# point location and evaluation


class Locator:
    """Find the triangle containing each query point (copies resolve crack sides)."""

    def __init__(self, mesh: CrackMesh):
        self.mesh = mesh
        p = mesh.nodes[mesh.triangles]
        self.cen = p.mean(axis=1)
        self.tree = cKDTree(self.cen)
        self.p0 = p[:, 0]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        self.inv = np.stack([np.stack([d2[:, 1], -d2[:, 0]], -1), np.stack([-d1[:, 1], d1[:, 0]], -1)], 1) / det[
            :, None, None
        ]

    def bary(self, tri, x):
        rel = x - self.p0[tri]
        l12 = np.einsum("nij,nj->ni", self.inv[tri], rel)
        return np.column_stack([1.0 - l12.sum(axis=1), l12])

    def locate(self, x: np.ndarray, k: int = 16):
        x = np.atleast_2d(x)
        tri = np.full(len(x), -1)
        lam = np.zeros((len(x), 3))
        _, cand = self.tree.query(x, k=min(k, len(self.cen)))
        cand = np.atleast_2d(cand)
        best = np.full(len(x), -np.inf)
        for c in range(cand.shape[1]):
            t = cand[:, c]
            l = self.bary(t, x)
            m = l.min(axis=1)
            better = m > best
            best[better] = m[better]
            tri[better] = t[better]
            lam[better] = l[better]
        bad = np.flatnonzero(best < -1e-9)
        for i in bad:
            l = self.bary(np.arange(len(self.cen)), np.repeat(x[i : i + 1], len(self.cen), 0))
            t = int(np.argmax(l.min(axis=1)))
            tri[i], lam[i], best[i] = t, l[t], l[t].min()
        if np.any(best < -1e-6):
            raise ValueError("query point outside the mesh")
        return tri, lam

    def evaluate(self, values: np.ndarray, x: np.ndarray) -> np.ndarray:
        tri, lam = self.locate(x)
        dofs = self.mesh.triangles[tri]
        return np.einsum("ni,ni...->n...", lam, values[dofs])


# ---------------------------------------------------------------------------
# persistence


def dump_mesh(mesh: CrackMesh, path) -> Path:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(mesh.to_dict()))
    else:
        np.savez(
            path,
            base_points=mesh.base.points,
            base_triangles=mesh.base.triangles,
            base_boundary=mesh.base.boundary,
            nodes=mesh.nodes,
            triangles=mesh.triangles,
            parent=mesh.parent,
            duplicated_pairs=mesh.duplicated_pairs,
        )
        if path.suffix != ".npz":
            path = path.with_name(path.name + ".npz")
    return path


def load_base(path) -> BaseMesh:
    """Reload the base triangulation from a binary dump; re-split with ``split``."""
    d = np.load(path)
    return BaseMesh(d["base_points"].copy(), d["base_triangles"].copy(), d["base_boundary"].copy())
