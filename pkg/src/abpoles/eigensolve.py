"""Assembly and solution of the magnetic and the crack eigenvalue problems.

Magnetic formulation: complex P1 fields on the plain triangulation with the
form ``int (i grad u + A u) . conj(i grad phi + A phi)``.

Crack formulation: a pair of real P1 fields ``(v, w)`` on the crack-split mesh.
Across crack ``j`` the minus-side copies are rotations of the plus-side copies,
``(v-, w-) = R(2 pi rho_j) (v+, w+)``; they are eliminated in favour of one
master pair per connected group of copies.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .gauge import gauge_copies
from .geometry import TWO_PI, PoleConfig, step_function
from .mesh import CrackMesh, constraint_links
from .quadrature import collapsed_rule, triangle_rule

SIMPLE_GAP = 1e-3
RESIDUAL_TOL = 1e-9


# ---------------------------------------------------------------------------
# assembly helpers


def _scatter(tris, E, n, dtype=float):
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    return sp.coo_matrix((E.reshape(-1).astype(dtype), (rows, cols)), shape=(n, n)).tocsr()


def assemble_p1(mesh: CrackMesh, backend: str | None = None):
    """Laplace stiffness and mass on the DOF copies of a crack mesh."""
    P = mesh.nodes[mesh.triangles]
    Ke, Me = kernels.p1_elements(P, backend=backend)
    n = mesh.n_dofs
    return _scatter(mesh.triangles, Ke, n), _scatter(mesh.triangles, Me, n)


def _wrap(a):
    return (a + math.pi) % TWO_PI - math.pi


@dataclass(eq=False)
class ConstraintMap:
    """Master/slave elimination of the crack jump conditions.

    Every copy ``c`` with ``master[c] >= 0`` equals ``R(angle[c])`` applied to the
    pair of master unknowns ``master[c]``; copies with ``master[c] < 0`` are zero
    (Dirichlet boundary, crack tips and other points where the rotations around
    a closed loop do not compose to the identity).
    """

    master: np.ndarray
    angle: np.ndarray
    n_free: int
    T: sp.csr_matrix = field(repr=False)

    @property
    def n_copies(self) -> int:
        return len(self.master)

    def expand(self, x: np.ndarray):
        """Reduced vector (2 n_free,) or matrix -> full ``(v, w)`` on the copies."""
        full = self.T @ x
        n = self.n_copies
        return full[:n], full[n:]

    def reduce(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Master values read off a constrained full field (inverse of ``expand``)."""
        x = np.zeros(2 * self.n_free)
        ok = self.master >= 0
        c, s = np.cos(self.angle[ok]), np.sin(self.angle[ok])
        vm = c * v[ok] + s * w[ok]
        wm = -s * v[ok] + c * w[ok]
        cnt = np.bincount(self.master[ok], minlength=self.n_free)
        x[: self.n_free] = np.bincount(self.master[ok], vm, self.n_free) / np.maximum(cnt, 1)
        x[self.n_free :] = np.bincount(self.master[ok], wm, self.n_free) / np.maximum(cnt, 1)
        return x


def build_constraints(mesh: CrackMesh, extra_zero=None, tol: float = 1e-9, dirichlet: bool = True) -> ConstraintMap:
    """Group copies linked by crack rotations and pick one master per group.

    With ``dirichlet=False`` the boundary copies stay free.
    """
    n = mesh.n_dofs
    links = constraint_links(mesh)
    rhos = [c.rho for c in mesh.cracks] if mesh.cracks is not None else []
    adj = [[] for _ in range(n)]
    for p, m, j in links:
        a = TWO_PI * rhos[j]
        adj[p].append((m, a))
        adj[m].append((p, -a))
    zero = np.zeros(n, dtype=bool)
    if dirichlet:
        zero[mesh.boundary_dofs] = True
    if extra_zero is not None:
        zero[np.asarray(extra_zero, dtype=int)] = True
    comp = np.full(n, -1)
    angle = np.zeros(n)
    comp_zero = []
    ncomp = 0
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = ncomp
        angle[s] = 0.0
        bad = zero[s]
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v, a in adj[u]:
                target = angle[u] + a
                if comp[v] < 0:
                    comp[v] = ncomp
                    angle[v] = target
                    bad = bad or zero[v]
                    queue.append(v)
                elif abs(_wrap(angle[v] - target)) > tol:
                    bad = True
        comp_zero.append(bad)
        ncomp += 1
    comp_zero = np.array(comp_zero, dtype=bool)
    free_ids = -np.ones(ncomp, dtype=np.int64)
    free_ids[~comp_zero] = np.arange(int(np.sum(~comp_zero)))
    master = free_ids[comp]
    nf = int(np.sum(~comp_zero))
    ok = np.flatnonzero(master >= 0)
    c, s = np.cos(angle[ok]), np.sin(angle[ok])
    m = master[ok]
    rows = np.concatenate([ok, ok, n + ok, n + ok])
    cols = np.concatenate([m, nf + m, m, nf + m])
    vals = np.concatenate([c, -s, s, c])
    T = sp.csr_matrix((vals, (rows, cols)), shape=(2 * n, 2 * nf))
    angle = np.where(master >= 0, angle, 0.0)
    return ConstraintMap(master, angle, nf, T)


def quarter_turn(n: int) -> sp.csr_matrix:
    """Block operator (v, w) -> (-w, v) on full or reduced vectors of size 2n."""
    I = sp.identity(n, format="csr")
    return sp.bmat([[None, -I], [I, None]], format="csr")


@dataclass(eq=False)
class CrackSystem:
    mesh: CrackMesh
    K1: sp.csr_matrix  # scalar stiffness on copies
    M1: sp.csr_matrix  # scalar mass on copies
    cmap: ConstraintMap
    K: sp.csr_matrix  # reduced stiffness
    M: sp.csr_matrix  # reduced mass

    @property
    def formulation(self) -> str:
        return "crack"

    def full_stiffness(self):
        return sp.block_diag([self.K1, self.K1], format="csr")

    def full_mass(self):
        return sp.block_diag([self.M1, self.M1], format="csr")

    def inner(self, a, b):
        """Mass inner product of two full pairs ``(v, w)``."""
        return float(a[0] @ (self.M1 @ b[0]) + a[1] @ (self.M1 @ b[1]))

    def energy(self, a, b=None):
        b = a if b is None else b
        return float(a[0] @ (self.K1 @ b[0]) + a[1] @ (self.K1 @ b[1]))


def assemble_crack(mesh: CrackMesh, config: PoleConfig | None = None, eps: float | None = None, backend=None):
    """Reduced symmetric stiffness and mass of the crack formulation."""
    if config is not None and mesh.cracks is not None:
        if eps is not None and abs(eps - mesh.cracks.eps) > 1e-14:
            raise ValueError("mesh cracks were generated for a different eps")
        for c, p in zip(mesh.cracks, config.poles):
            if abs(c.rho - p.rho) > 1e-14:
                raise ValueError("mesh cracks carry different circulations")
    K1, M1 = assemble_p1(mesh, backend)
    cmap = build_constraints(mesh)
    T = cmap.T
    K = (T.T @ sp.block_diag([K1, K1], format="csr") @ T).tocsr()
    M = (T.T @ sp.block_diag([M1, M1], format="csr") @ T).tocsr()
    return CrackSystem(mesh, K1, M1, cmap, K, M)


@dataclass(eq=False)
class MagneticSystem:
    mesh: CrackMesh
    K_full: sp.csr_matrix
    M_full: sp.csr_matrix
    free: np.ndarray
    K: sp.csr_matrix
    M: sp.csr_matrix

    @property
    def formulation(self) -> str:
        return "magnetic"

    def expand(self, x):
        n = self.mesh.base.n_points
        out = np.zeros((n,) + np.shape(x)[1:], dtype=complex)
        out[self.free] = x
        return out


def pole_vertices(points: np.ndarray, poles: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Index of the mesh vertex at each pole, or -1 when the pole is not a vertex."""
    out = -np.ones(len(poles), dtype=np.int64)
    for i, b in enumerate(poles):
        d = np.linalg.norm(points - b[None], axis=1)
        k = int(np.argmin(d))
        if d[k] < tol * max(1.0, float(np.max(np.abs(points)))):
            out[i] = k
    return out


def assemble_magnetic(
    mesh: CrackMesh,
    config: PoleConfig | None,
    eps: float | None = None,
    order: int = 4,
    pole_points: int = 4,
    backend: str | None = None,
) -> MagneticSystem:
    """Hermitian stiffness and real mass of the magnetic form on the plain triangulation.

    Duplicated crack DOFs are ignored.  Triangles with a pole at a vertex use a
    ``pole_points**2`` collapsed rule with the collapse at the pole; the pole
    vertices carry homogeneous Dirichlet conditions like the outer boundary.
    ``config=None`` gives the plain Laplacian.
    """
    base = mesh.base
    P = base.points[base.triangles]
    qb, qw = triangle_rule(order)
    sb, sw = collapsed_rule(pole_points)
    if config is None:
        poles, rho = np.zeros((0, 2)), np.zeros(0)
    else:
        e = config.eps if eps is None else eps
        if e == 0:
            poles, rho = np.zeros((1, 2)), np.array([config.total_rho])
        else:
            poles, rho = config.positions(e), config.rhos
    pv = pole_vertices(base.points, poles)
    pole_local = -np.ones(len(P), dtype=np.int64)
    for v in pv[pv >= 0]:
        hit = np.nonzero(base.triangles == v)
        pole_local[hit[0]] = hit[1]
    Kr, Ki = kernels.magnetic_elements(P, poles, rho, pole_local, qb, qw, sb, sw, backend=backend)
    _, Me = kernels.p1_elements(P, backend=backend)
    n = base.n_points
    K = _scatter(base.triangles, Kr + 1j * Ki, n, complex)
    M = _scatter(base.triangles, Me, n)
    fixed = np.zeros(n, dtype=bool)
    fixed[base.boundary] = True
    fixed[pv[pv >= 0]] = True
    free = np.flatnonzero(~fixed)
    return MagneticSystem(mesh, K, M, free, K[free][:, free].tocsr(), M[free][:, free].tocsr())


# ---------------------------------------------------------------------------
# eigenvalues


@dataclass(eq=False)
class SpectralResult:
    eigenvalues: np.ndarray
    vectors: np.ndarray  # reduced coefficient vectors as columns
    residuals: np.ndarray
    formulation: str
    system: object = field(repr=False, default=None)
    meta: dict = field(default_factory=dict)

    @property
    def mesh_hash(self) -> str:
        return self.system.mesh.content_hash() if self.system is not None else ""

    def field(self, i: int):
        """Full field of eigenvector ``i``: ``(v, w)`` for crack, ``u`` for magnetic."""
        x = self.vectors[:, i]
        if self.formulation == "crack":
            return self.system.cmap.expand(x)
        return self.system.expand(x)

    def to_dict(self) -> dict:
        return {
            "formulation": self.formulation,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "mesh_hash": self.mesh_hash,
            "meta": self.meta,
        }

    def save(self, prefix) -> tuple[Path, Path]:
        prefix = Path(prefix)
        js = prefix.with_suffix(".json")
        js.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        arr = prefix.with_suffix(".npz")
        np.savez(arr, eigenvalues=self.eigenvalues, vectors=self.vectors, residuals=self.residuals)
        return js, arr


class EigenSolveError(RuntimeError):
    pass


def solve_lowest(system_or_K, M=None, n: int = 6, seed: int = 0, tol: float = 0.0, maxiter: int | None = None):
    """Smallest ``n`` eigenpairs of ``K x = lam M x`` by shift-invert Lanczos at shift 0."""
    if M is None:
        system = system_or_K
        K, M = system.K, system.M
        formulation = system.formulation
    else:
        system, K = None, system_or_K
        formulation = "raw"
    N = K.shape[0]
    if n >= N:
        raise ValueError("requested more eigenpairs than unknowns")
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(N)
    if np.iscomplexobj(K):
        v0 = v0 + 1j * rng.standard_normal(N)
    K = K.tocsc()
    try:
        vals, vecs = spla.eigsh(K, k=n, M=M.tocsc(), sigma=0.0, which="LM", v0=v0, tol=tol, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        raise EigenSolveError(f"shift-invert iteration did not converge: {exc}") from exc
    order = np.argsort(vals)
    vals, vecs = vals[order].real, vecs[:, order]
    # unit mass norm and deterministic sign/phase: largest entry real positive
    res = np.empty(n)
    for i in range(n):
        x = vecs[:, i]
        x = x / math.sqrt(abs(np.vdot(x, M @ x)))
        k = int(np.argmax(np.abs(x)))
        x = x * (abs(x[k]) / x[k])
        if not np.iscomplexobj(K):
            x = x.real
        vecs[:, i] = x
        Kx = K @ x
        res[i] = np.linalg.norm(Kx - vals[i] * (M @ x)) / max(np.linalg.norm(Kx), 1e-300)
    if np.any(res > RESIDUAL_TOL):
        raise EigenSolveError(f"eigen-residual above tolerance: {res.max():.3e}")
    if not np.iscomplexobj(K):
        vecs = vecs.real
    return SpectralResult(vals, vecs, res, formulation, system, {"seed": seed, "n": n})


def cluster(eigenvalues, i: int, gap: float = SIMPLE_GAP) -> np.ndarray:
    """Indices of eigenvalues within relative distance ``gap`` of eigenvalue ``i``."""
    lam = np.asarray(eigenvalues)
    return np.flatnonzero(np.abs(lam - lam[i]) <= gap * abs(lam[i]))


def is_simple(eigenvalues, i: int, multiplicity: int = 1, gap: float = SIMPLE_GAP) -> bool:
    return len(cluster(eigenvalues, i, gap)) == multiplicity


# ---------------------------------------------------------------------------
# normalization


def normalize_pair(result: SpectralResult, i: int, reference):
    """Representative ``(v, w)`` of the crack eigenspace of eigenvalue ``i``.

    Within ``span{(v, w), (-w, v)}`` returns the pair with unit mass norm,
    ``int (w v0 - v w0) = 0`` and ``int (v v0 + w w0) > 0``.
    """
    sys_ = result.system
    members = cluster(result.eigenvalues, i)
    if len(members) != 2:
        raise EigenSolveError(
            f"crack eigenspace of eigenvalue {i} has dimension {len(members)}, expected 2"
        )
    v1, w1 = sys_.cmap.expand(result.vectors[:, i])
    return rotate_to_reference(sys_, (v1, w1), reference)


def rotate_to_reference(system: CrackSystem, pair, reference):
    v1, w1 = pair
    c1 = system.inner((v1, w1), reference)
    c2 = system.inner((-w1, v1), reference)
    nrm = math.hypot(c1, c2)
    if nrm == 0:
        raise EigenSolveError("eigenfunction orthogonal to the reference")
    a, b = c1 / nrm, c2 / nrm
    v = a * v1 - b * w1
    w = a * w1 + b * v1
    s = math.sqrt(system.inner((v, w), (v, w)))
    return v / s, w / s


def copy_step_values(mesh: CrackMesh, config: PoleConfig, tau: float = 1e-9) -> np.ndarray:
    """Angular step function evaluated at every copy, on the copy's own side."""
    x = mesh.side_points(tau)
    t = np.mod(np.arctan2(x[:, 1], x[:, 0]), TWO_PI)
    return step_function(config, t)


def kreal_normalize(system: CrackSystem, pair, config: PoleConfig):
    """K-real representative for total circulation 1/2.

    Chooses the rotation of ``(v, w)`` for which ``exp(-i 2 pi f) (v + i w)`` is
    real in the mass-weighted least-squares sense (equivalently
    ``exp(-i (t/2 + Lambda)) u0`` is real).  Returns ``(v, w, residual)`` where the
    residual is the relative norm of the remaining imaginary part.  The sign is
    fixed by making ``int Re(exp(-i 2 pi f)(v + i w))`` over the copy masses positive.
    """
    if not config.half_integer:
        raise ValueError("K-real normalization needs total circulation 1/2")
    v, w = pair
    f = copy_step_values(system.mesh, config)
    z = np.exp(-1j * TWO_PI * f) * (v + 1j * w)
    re, im = z.real, z.imag
    M = system.M1
    G = np.array([[im @ (M @ im), im @ (M @ re)], [re @ (M @ im), re @ (M @ re)]])
    vals, vecs = np.linalg.eigh(G)
    a, b = vecs[:, 0]
    # (a + i b) z has imaginary part a*Im z + b*Re z, minimized above
    zz = (a + 1j * b) * z
    mass = np.asarray(M.sum(axis=1)).ravel()
    if float(np.sum(mass * zz.real)) < 0:
        zz = -zz
        a, b = -a, -b
    out = (a + 1j * b) * (v + 1j * w)
    resid = math.sqrt(max(vals[0], 0.0) / max(vals[1] + vals[0], 1e-300))
    return out.real, out.imag, resid


# ---------------------------------------------------------------------------
# gauge maps between the formulations


def crack_to_magnetic(mesh: CrackMesh, config: PoleConfig, eps: float, v, w) -> np.ndarray:
    """``u = exp(i Theta_eps)(v + i w)`` on the base nodes."""
    th = gauge_copies(mesh, config, eps)
    z = np.exp(1j * th) * (v + 1j * w)
    u = np.zeros(mesh.base.n_points, dtype=complex)
    u[mesh.parent[::-1]] = z[::-1]  # base copy (id == parent) wins
    return u


def magnetic_to_crack(mesh: CrackMesh, config: PoleConfig, eps: float, u):
    """``v + i w = exp(-i Theta_eps) u`` on every copy."""
    th = gauge_copies(mesh, config, eps)
    z = np.exp(-1j * th) * np.asarray(u)[mesh.parent]
    return z.real, z.imag
