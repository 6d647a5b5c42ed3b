"""Geometry of the probability simplex and of radially represented manifolds.

Directions live on the probability simplex Delta = {u >= 0, sum(u) = 1}.
A manifold of the admissible class is stored as one positive radius per
lattice direction; the surface point over u is R(u) * u, with R interpolated
piecewise-linearly over a simplicial decomposition of Delta.

The decomposition is the standard Kuhn triangulation expressed in cumulative
coordinates s_i = m * (u_1 + ... + u_i): the dilated simplex becomes the
region 0 <= s_1 <= ... <= s_{d-1} <= m, which is a union of complete Kuhn
cells of the integer cube grid, so point location needs only floor/sort.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridError",
    "BarycentricGrid",
    "RadialManifold",
    "make_grid",
    "simplex_lattice",
    "support_of",
    "radial_project",
    "order_function",
    "symmetrized_order",
    "harnack",
    "restricted_harnack",
    "project_e_perp",
    "eval_radial",
    "radius_at",
    "vertex_points",
    "box_boundary_manifold",
    "constant_manifold",
    "sup_gap",
    "hausdorff_points",
    "is_weakly_unordered",
    "grid_spacing",
    "lipschitz_estimate",
]


class GridError(ValueError):
    """Point location failed or two grids are incompatible."""


def simplex_lattice(dim: int, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Lattice points k (nonnegative ints, sum = resolution) and directions k/resolution.

    Enumeration is lexicographic in k, so for dim = 2 the first coordinate of
    the directions is increasing.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    combos = itertools.combinations(range(resolution + dim - 1), dim - 1)
    rows = []
    for cut in combos:
        prev = -1
        k = []
        for c in cut:
            k.append(c - prev - 1)
            prev = c
        k.append(resolution + dim - 2 - prev)
        rows.append(k)
    lattice = np.array(rows, dtype=int)
    return lattice, lattice / float(resolution)


@dataclass(frozen=True, eq=False)
class BarycentricGrid:
    """Simplicial lattice on the probability simplex.

    vertices[i] = lattice[i] / resolution, rows summing to one; cells hold the
    vertex indices of each top-dimensional simplex, cell_orient the sign of
    det([v_0 ... v_{d-1}]) for its canonical vertex order.
    """

    dim: int
    resolution: int
    lattice: np.ndarray
    vertices: np.ndarray
    cells: np.ndarray
    cell_orient: np.ndarray
    _index: dict = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def vertex_index(self, k) -> int:
        return self._index[tuple(int(v) for v in k)]

    def corner_index(self, i: int) -> int:
        k = [0] * self.dim
        k[i] = self.resolution
        return self.vertex_index(k)

    @property
    def corner_indices(self) -> list[int]:
        return [self.corner_index(i) for i in range(self.dim)]

    def compatible(self, other: "BarycentricGrid") -> bool:
        return self.dim == other.dim and self.resolution == other.resolution

    def locate(self, u) -> tuple[np.ndarray, np.ndarray]:
        """Containing cell of a direction u as (vertex indices, barycentric weights)."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise GridError(f"direction must have shape ({self.dim},)")
        if abs(float(u.sum()) - 1.0) > 1e-12 or float(u.min()) < -1e-12:
            raise GridError(f"point {u} is not on the simplex")
        d, m = self.dim, self.resolution
        if d == 1:
            return np.array([0]), np.array([1.0])
        s = m * np.cumsum(np.maximum(u, 0.0))[:-1]
        s = np.maximum.accumulate(np.clip(s, 0.0, m))
        base = np.minimum(np.floor(s).astype(int), m - 1)
        frac = s - base
        D = d - 1
        # descending fractional parts; ties broken toward the larger index so
        # every partial-increment vertex stays inside the ordered region
        order = np.lexsort((-np.arange(D), -frac))
        s_pts = [base.copy()]
        cur = base.copy()
        for axis in order:
            cur = cur.copy()
            cur[axis] += 1
            s_pts.append(cur)
        fs = frac[order]
        weights = np.empty(d)
        weights[0] = 1.0 - fs[0]
        weights[1:D] = fs[:-1] - fs[1:]
        weights[D] = fs[-1]
        weights = np.maximum(weights, 0.0)
        try:
            idx = np.array([self.vertex_index(_s_to_k(p, m)) for p in s_pts])
        except KeyError as exc:  # pragma: no cover - defensive
            raise GridError(f"point location failed for {u}") from exc
        return idx, weights


def _s_to_k(s, m: int) -> list[int]:
    k = [int(s[0])]
    for a, b in zip(s[:-1], s[1:]):
        k.append(int(b) - int(a))
    k.append(m - int(s[-1]))
    return k


def make_grid(dim: int, resolution: int) -> BarycentricGrid:
    """Build the lattice grid with its Kuhn-cell decomposition."""
    lattice, vertices = simplex_lattice(dim, resolution)
    index = {tuple(k): i for i, k in enumerate(lattice.tolist())}
    cells = []
    D = dim - 1
    m = resolution
    if D > 0:
        for base in itertools.product(range(m), repeat=D):
            for perm in itertools.permutations(range(D)):
                pts = [list(base)]
                cur = list(base)
                for axis in perm:
                    cur = cur.copy()
                    cur[axis] += 1
                    pts.append(cur)
                ok = all(
                    all(p[i] <= p[i + 1] for i in range(D - 1)) and p[-1] <= m and p[0] >= 0
                    for p in pts
                )
                if ok:
                    cells.append([index[tuple(_s_to_k(p, m))] for p in pts])
    cells_arr = np.array(cells, dtype=int) if cells else np.empty((0, dim), dtype=int)
    if cells:
        mats = np.swapaxes(vertices[cells_arr], 1, 2)
        orient = np.sign(np.linalg.det(mats)).astype(int)
    else:
        orient = np.empty((0,), dtype=int)
    return BarycentricGrid(dim, resolution, lattice, vertices, cells_arr, orient, index)


@dataclass(frozen=True, eq=False)
class RadialManifold:
    """Positive radii over a grid; the surface {R(u) u : u in Delta}."""

    grid: BarycentricGrid
    radii: np.ndarray
    provenance: str = ""
    iteration: int = 0

    def __post_init__(self):
        radii = np.array(self.radii, dtype=float)  # own copy; manifolds are immutable values
        radii.setflags(write=False)
        object.__setattr__(self, "radii", radii)
        if radii.shape != (self.grid.n_vertices,):
            raise GridError("radii do not match the grid")
        if not np.all(np.isfinite(radii)) or np.any(radii <= 0.0):
            raise ValueError("radii must be strictly positive and finite")


def support_of(x, tol: float = 0.0) -> np.ndarray:
    """Boolean mask of the coordinates where x exceeds tol."""
    return np.asarray(x) > tol


def radial_project(x) -> np.ndarray:
    """Direction x / ||x||_1 on the simplex; undefined at the origin."""
    x = np.asarray(x, dtype=float)
    s = float(x.sum())
    if s <= 0.0 or np.any(x < 0.0):
        raise ValueError("radial projection needs a nonzero nonnegative point")
    return x / s


def order_function(x, y) -> float:
    """sup{t >= 0 : y - t x stays in the nonnegative cone}; inf iff x = 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = x > 0.0
    if not mask.any():
        return np.inf
    return float(np.min(y[mask] / x[mask]))


def symmetrized_order(x, y) -> float:
    return min(order_function(x, y), order_function(y, x))


def harnack(x, y) -> float:
    """Harnack distance 1 - min(order both ways); 0 at equal points, 1 on disjoint supports."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (x > 0).any() or not (y > 0).any():
        raise ValueError("harnack distance needs nonzero points")
    return 1.0 - symmetrized_order(x, y)


def restricted_harnack(x, y, support) -> float:
    """Harnack distance after masking the coordinates outside the given support."""
    x = np.asarray(x, dtype=float).copy()
    y = np.asarray(y, dtype=float).copy()
    mask = np.zeros(x.shape[0], dtype=bool)
    mask[list(support)] = True
    x[~mask] = 0.0
    y[~mask] = 0.0
    return harnack(x, y)


def project_e_perp(x) -> np.ndarray:
    """Orthogonal projection onto the hyperplane orthogonal to (1, ..., 1)."""
    x = np.asarray(x, dtype=float)
    return x - x.mean() * np.ones_like(x)


def radius_at(manifold: RadialManifold, u) -> float:
    idx, w = manifold.grid.locate(u)
    return float(w @ manifold.radii[idx])


def eval_radial(manifold: RadialManifold, u) -> np.ndarray:
    """Surface point R(u) * u with R interpolated over the containing cell."""
    u = np.asarray(u, dtype=float)
    return radius_at(manifold, u) * u


def vertex_points(manifold: RadialManifold) -> np.ndarray:
    """All vertex sample points R(u_i) u_i as an (N, d) array."""
    return manifold.radii[:, None] * manifold.grid.vertices


def constant_manifold(grid: BarycentricGrid, value: float, provenance: str = "") -> RadialManifold:
    return RadialManifold(grid, np.full(grid.n_vertices, float(value)), provenance)


def box_boundary_manifold(grid: BarycentricGrid, a: float, provenance: str = "") -> RadialManifold:
    """Boundary of the box [0, a]^d as a radial manifold: R(u) = a / max_i(u_i)."""
    if a <= 0.0:
        raise ValueError("box size must be positive")
    return RadialManifold(grid, a / grid.vertices.max(axis=1), provenance)


def sup_gap(a: RadialManifold, b: RadialManifold) -> float:
    """Max vertexwise |R - R'| for two manifolds on the same grid."""
    if not a.grid.compatible(b.grid):
        raise GridError("manifolds live on different grids")
    return float(np.max(np.abs(a.radii - b.radii)))


def hausdorff_points(a, b) -> float:
    """Symmetric Hausdorff distance of two finite point sets, Euclidean norm."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("hausdorff distance of an empty set")
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)
    return float(np.sqrt(max(d2.min(axis=1).max(), d2.min(axis=0).max())))


def is_weakly_unordered(manifold: RadialManifold, tol_order: float) -> list[tuple[int, int]]:
    """Vertex pairs with common support where one point strictly dominates the other.

    A pair (i, j) is reported when the points share a support and the point of
    j exceeds the point of i by more than tol_order in every support
    coordinate; an admissible manifold reports no pairs.
    """
    pts = vertex_points(manifold)
    supp = manifold.grid.lattice > 0
    keys = supp @ (1 << np.arange(manifold.grid.dim))
    violations: list[tuple[int, int]] = []
    for key in np.unique(keys):
        members = np.flatnonzero(keys == key)
        if members.size < 2:
            continue
        mask = supp[members[0]]
        p = pts[np.ix_(members, np.flatnonzero(mask))]
        diff = p[None, :, :] - p[:, None, :]
        dom = diff.min(axis=-1) > tol_order
        for i, j in zip(*np.nonzero(dom)):
            violations.append((int(members[i]), int(members[j])))
    return violations


def _cell_pair_diffs(grid: BarycentricGrid):
    for i, j in itertools.combinations(range(grid.dim), 2):
        yield grid.cells[:, i], grid.cells[:, j]


def grid_spacing(grid: BarycentricGrid) -> float:
    """Longest edge of any cell (zero for the one-point simplex)."""
    if grid.cells.shape[0] == 0:
        return 0.0
    h = 0.0
    for ia, ib in _cell_pair_diffs(grid):
        e = np.linalg.norm(grid.vertices[ia] - grid.vertices[ib], axis=1)
        h = max(h, float(e.max()))
    return h


def lipschitz_estimate(manifold: RadialManifold) -> float:
    """Empirical Lipschitz bound of the radius over all cell edges."""
    grid = manifold.grid
    if grid.cells.shape[0] == 0:
        return 0.0
    lip = 0.0
    for ia, ib in _cell_pair_diffs(grid):
        e = np.linalg.norm(grid.vertices[ia] - grid.vertices[ib], axis=1)
        dr = np.abs(manifold.radii[ia] - manifold.radii[ib])
        lip = max(lip, float((dr / e).max()))
    return lip
