"""Convergence driver and verification suite for the carrying simplex.

The surface is bracketed between an increasing sequence started on a small
simplex near the origin and a decreasing sequence started on the boundary of
the trapping box. Both are iterated in lockstep under the graph transform;
the vertexwise gap between them is an a-posteriori error bound, and their
midpoint is reported as the carrying simplex once the gap passes the
tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    BarycentricGrid,
    RadialManifold,
    box_boundary_manifold,
    eval_radial,
    grid_spacing,
    hausdorff_points,
    is_weakly_unordered,
    lipschitz_estimate,
    radius_at,
    sup_gap,
    symmetrized_order,
    vertex_points,
)
from .maps import KolmogorovMap, eval_F
from .transform import ResampleError, graph_step

__all__ = [
    "EscapeError",
    "ConvergenceReport",
    "VerificationReport",
    "ShadowResult",
    "compute_cs",
    "iterate_manifold",
    "surface_distance",
    "induced_map",
    "gamma_membership",
    "attract_trajectory",
    "shadow_point",
    "harnack_battery",
    "retrotone_battery",
    "attraction_battery",
    "verify_cs",
]


class EscapeError(RuntimeError):
    """An orbit left the configured safety box: the run is not dissipative."""


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    iterations: int
    termination: str  # converged | max_iter | fold_error
    final_gap: float
    gap_history: list
    hausdorff_history: list
    lower_min_steps: list
    upper_max_steps: list
    sandwich_mins: list
    sigma: RadialManifold | None
    lower: RadialManifold
    upper: RadialManifold
    interp_error: float
    tol_order: float
    certified_error: float
    kappa: float
    epsilon: float
    tolerance: float
    fold_message: str | None = None

    @property
    def monotone_ok(self) -> bool:
        """Both radial sequences monotone and ordered at every recorded cycle."""
        t = self.tol_order
        return (
            all(v > -t for v in self.lower_min_steps)
            and all(v < t for v in self.upper_max_steps)
            and all(v > -t for v in self.sandwich_mins)
        )

    @property
    def gap_monotone_ok(self) -> bool:
        g = self.gap_history
        return all(b <= a + self.tol_order for a, b in zip(g, g[1:]))

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "termination": self.termination,
            "final_gap": self.final_gap,
            "gap_history": list(self.gap_history),
            "hausdorff_history": list(self.hausdorff_history),
            "lower_min_steps": list(self.lower_min_steps),
            "upper_max_steps": list(self.upper_max_steps),
            "sandwich_mins": list(self.sandwich_mins),
            "interp_error": self.interp_error,
            "tol_order": self.tol_order,
            "certified_error": self.certified_error,
            "kappa": self.kappa,
            "epsilon": self.epsilon,
            "tolerance": self.tolerance,
            "monotone_ok": self.monotone_ok,
            "gap_monotone_ok": self.gap_monotone_ok,
            "fold_message": self.fold_message,
        }


def compute_cs(
    kmap: KolmogorovMap,
    grid: BarycentricGrid,
    kappa: float,
    epsilon: float,
    tolerance: float = 1e-6,
    max_iter: int = 10000,
    on_iteration=None,
) -> ConvergenceReport:
    """Run the two-sided iteration until the radial gap closes.

    on_iteration(n, lower, upper) is invoked after every cycle, e.g. to dump
    iterates. A fold during resampling ends the run with termination
    "fold_error" and the partial manifolds retained.
    """
    if tolerance <= 0.0:
        raise ValueError("tolerance must be positive")
    box_top = 1.0 + kappa
    n_pts = grid.n_vertices
    lower = RadialManifold(grid, np.full(n_pts, float(epsilon)), "lower", 0)
    upper = box_boundary_manifold(grid, box_top, "upper")

    gap_history = [sup_gap(lower, upper)]
    hausdorff_history = [hausdorff_points(vertex_points(lower), vertex_points(upper))]
    lower_min_steps: list[float] = []
    upper_max_steps: list[float] = []
    sandwich_mins: list[float] = []
    termination = "max_iter"
    fold_message = None
    iterations = 0

    for n in range(1, max_iter + 1):
        try:
            new_lower = graph_step(kmap, lower, box_top)
            new_upper = graph_step(kmap, upper, box_top)
        except ResampleError as err:
            termination = "fold_error"
            fold_message = str(err)
            break
        iterations = n
        lower_min_steps.append(float((new_lower.radii - lower.radii).min()))
        upper_max_steps.append(float((new_upper.radii - upper.radii).max()))
        lower, upper = new_lower, new_upper
        sandwich_mins.append(float((upper.radii - lower.radii).min()))
        gap = sup_gap(lower, upper)
        gap_history.append(gap)
        hausdorff_history.append(
            hausdorff_points(vertex_points(lower), vertex_points(upper))
        )
        if on_iteration is not None:
            on_iteration(n, lower, upper)
        if gap < tolerance:
            termination = "converged"
            break

    final_gap = gap_history[-1]
    sigma = None
    if termination != "fold_error":
        sigma = RadialManifold(
            grid, 0.5 * (lower.radii + upper.radii), "sigma", iterations
        )
    ref = sigma if sigma is not None else lower
    interp_error = lipschitz_estimate(ref) * grid_spacing(grid)
    tol_order = 2.0 * interp_error
    return ConvergenceReport(
        iterations=iterations,
        termination=termination,
        final_gap=final_gap,
        gap_history=gap_history,
        hausdorff_history=hausdorff_history,
        lower_min_steps=lower_min_steps,
        upper_max_steps=upper_max_steps,
        sandwich_mins=sandwich_mins,
        sigma=sigma,
        lower=lower,
        upper=upper,
        interp_error=interp_error,
        tol_order=tol_order,
        certified_error=final_gap / 2.0 + interp_error,
        kappa=kappa,
        epsilon=epsilon,
        tolerance=tolerance,
        fold_message=fold_message,
    )


def iterate_manifold(
    kmap: KolmogorovMap,
    seed_manifold: RadialManifold,
    box_top: float,
    step_tol: float = 1e-8,
    max_iter: int = 10000,
) -> tuple[RadialManifold, int, list]:
    """Iterate one manifold until successive iterates differ by less than step_tol."""
    current = seed_manifold
    history: list[float] = []
    for n in range(1, max_iter + 1):
        nxt = graph_step(kmap, current, box_top)
        step = sup_gap(nxt, current)
        history.append(step)
        current = nxt
        if step < step_tol:
            return current, n, history
    return current, max_iter, history


def surface_distance(sigma: RadialManifold, x) -> float:
    """Distance from a point to the piecewise-linear surface.

    Upper bound: the smaller of the distance to the vertex cloud and the gap
    along the ray through x to the interpolated surface point.
    """
    x = np.asarray(x, dtype=float)
    pts = vertex_points(sigma)
    cloud = float(np.sqrt(((pts - x) ** 2).sum(axis=1)).min())
    s = float(x.sum())
    if s <= 0.0 or np.any(x < 0.0):
        return cloud
    u = x / s
    try:
        r = radius_at(sigma, u)
    except Exception:
        return cloud
    ray = abs(s - r) * float(np.linalg.norm(u))
    return min(cloud, ray)


def induced_map(kmap: KolmogorovMap, sigma: RadialManifold, u) -> np.ndarray:
    """Dynamics on directions conjugate to the surface dynamics: T(F(R(u) u))."""
    y = eval_F(kmap, eval_radial(sigma, u))
    return y / y.sum()


def gamma_membership(sigma: RadialManifold, x, tol: float) -> tuple[str, float]:
    """Classify x against the attractor [0,1]*Sigma: below, on, or above the surface.

    Returns the label and the signed radial margin ||x||_1 - R(T(x)).
    """
    x = np.asarray(x, dtype=float)
    s = float(x.sum())
    if s <= 0.0:
        raise ValueError("the origin is classified separately; membership needs x != 0")
    margin = s - radius_at(sigma, x / s)
    if margin < -tol:
        return "below", margin
    if margin > tol:
        return "above", margin
    return "on", margin


def attract_trajectory(
    kmap: KolmogorovMap,
    sigma: RadialManifold,
    x0,
    n_steps: int,
    safety_top: float = 1e6,
) -> tuple[np.ndarray, np.ndarray]:
    """Forward orbit of x0 with its distance to the surface at every step."""
    x = np.asarray(x0, dtype=float)
    traj = np.empty((n_steps + 1, kmap.dim))
    dists = np.empty(n_steps + 1)
    traj[0] = x
    dists[0] = surface_distance(sigma, x)
    for n in range(1, n_steps + 1):
        x = eval_F(kmap, x)
        if not np.all(np.isfinite(x)) or float(x.max(initial=0.0)) > safety_top:
            raise EscapeError(f"orbit escaped the safety box at step {n}: {x}")
        traj[n] = x
        dists[n] = surface_distance(sigma, x)
    return traj, dists


@dataclass(frozen=True, eq=False)
class ShadowResult:
    point: np.ndarray
    direction: np.ndarray
    residual: float


def _orbit_end(kmap: KolmogorovMap, x, n: int) -> np.ndarray:
    y = np.asarray(x, dtype=float)
    for _ in range(n):
        y = eval_F(kmap, y)
    return y


def _golden_minimize(fun, lo: float, hi: float, iters: int = 60) -> float:
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def shadow_point(
    kmap: KolmogorovMap,
    sigma: RadialManifold,
    x0,
    horizon: int,
) -> ShadowResult:
    """Point of the surface whose orbit shadows the orbit of x0.

    Finite-horizon surrogate: minimise ||F^N(x0) - F^N(y)|| over the grid
    vertices of the surface, then refine by golden-section search along the
    chords to the neighbouring vertices.
    """
    grid = sigma.grid
    target = _orbit_end(kmap, x0, horizon)
    pts = vertex_points(sigma)
    residuals = np.array(
        [float(np.linalg.norm(_orbit_end(kmap, p, horizon) - target)) for p in pts]
    )
    best = int(np.argmin(residuals))
    best_dir = grid.vertices[best]
    best_res = float(residuals[best])
    if grid.dim == 1 or grid.cells.shape[0] == 0:
        return ShadowResult(pts[best], best_dir, best_res)

    neighbours = set()
    for cell in grid.cells:
        if best in cell:
            neighbours.update(int(i) for i in cell if i != best)
    u0 = grid.vertices[best]
    for nb in sorted(neighbours):
        u1 = grid.vertices[nb]

        def res_at(s: float) -> float:
            u = (1.0 - s) * u0 + s * u1
            return float(
                np.linalg.norm(_orbit_end(kmap, eval_radial(sigma, u), horizon) - target)
            )

        s_best = _golden_minimize(res_at, 0.0, 1.0)
        val = res_at(s_best)
        if val < best_res:
            best_res = val
            best_dir = (1.0 - s_best) * u0 + s_best * u1
    return ShadowResult(eval_radial(sigma, best_dir), best_dir, best_res)


@dataclass(frozen=True, eq=False)
class VerificationReport:
    invariance_residual: float
    unorder_violations: int | None
    fixed_point_residuals: list
    lipschitz_ratio_max: float | None
    lipschitz_bound: float
    harnack_samples: int | None
    harnack_pair_count: int
    retrotone_samples: int | None
    retrotone_ordered_count: int
    attraction_stats: float | None
    attraction_failures: int
    sample_count: int
    horizon: int
    seed: int
    attraction_tol: float
    tol_order: float
    vacuous: list

    def passed(
        self,
        fixed_point_max: float = 1e-4,
        invariance_max: float = 0.05,
        attraction_min: float = 0.95,
    ) -> bool:
        checks = [self.invariance_residual < invariance_max]
        if self.fixed_point_residuals:
            checks.append(max(self.fixed_point_residuals) < fixed_point_max)
        if self.unorder_violations is not None:
            checks.append(self.unorder_violations == 0)
        if self.lipschitz_ratio_max is not None:
            checks.append(self.lipschitz_ratio_max <= self.lipschitz_bound * (1.0 + 1e-9))
        if self.harnack_samples is not None:
            checks.append(self.harnack_samples == 0)
        if self.retrotone_samples is not None:
            checks.append(self.retrotone_samples == 0)
        if self.attraction_stats is not None:
            checks.append(self.attraction_stats >= attraction_min)
        return all(checks)

    def to_dict(self) -> dict:
        return {
            "invariance_residual": self.invariance_residual,
            "unorder_violations": self.unorder_violations,
            "fixed_point_residuals": list(self.fixed_point_residuals),
            "lipschitz_ratio_max": self.lipschitz_ratio_max,
            "lipschitz_bound": self.lipschitz_bound,
            "harnack_samples": self.harnack_samples,
            "harnack_pair_count": self.harnack_pair_count,
            "retrotone_samples": self.retrotone_samples,
            "retrotone_ordered_count": self.retrotone_ordered_count,
            "attraction_stats": self.attraction_stats,
            "attraction_failures": self.attraction_failures,
            "sample_count": self.sample_count,
            "horizon": self.horizon,
            "seed": self.seed,
            "attraction_tol": self.attraction_tol,
            "tol_order": self.tol_order,
            "vacuous": list(self.vacuous),
            "passed": self.passed(),
        }


def _random_ordered_pair(rng, dim: int, box_top: float) -> tuple[np.ndarray, np.ndarray]:
    """Strictly ordered pair with a common support inside the box."""
    x = rng.uniform(1e-6, box_top, dim)
    if dim > 1 and rng.random() < 0.3:
        mask = rng.random(dim) < 0.5
        if not mask.any():
            mask[int(rng.integers(dim))] = True
        x[~mask] = 0.0
    support = x > 0.0
    y = x.copy()
    room = box_top - x[support]
    y[support] = x[support] + rng.uniform(0.0, 1.0, int(support.sum())) * room * 0.999 + 1e-9
    y = np.minimum(y, box_top)
    return x, y


def harnack_battery(
    kmap: KolmogorovMap,
    kappa: float,
    sample_count: int,
    seed: int = 0,
    margin: float = 1e-12,
) -> tuple[int, int]:
    """Sampled strict growth of the symmetrized order function on ordered pairs.

    Returns (violations, pairs tested); a violation is a pair where the
    symmetrized order fails to grow by more than the margin under the map.
    """
    rng = np.random.default_rng(seed)
    box_top = 1.0 + kappa
    violations = 0
    for _ in range(sample_count):
        x, y = _random_ordered_pair(rng, kmap.dim, box_top)
        mu_before = symmetrized_order(x, y)
        mu_after = symmetrized_order(eval_F(kmap, x), eval_F(kmap, y))
        if mu_after - mu_before <= margin:
            violations += 1
    return violations, sample_count


def retrotone_battery(
    kmap: KolmogorovMap,
    kappa: float,
    sample_count: int,
    seed: int = 0,
) -> tuple[int, int]:
    """Sampled backward order propagation: ordered images must come from ordered points.

    Returns (violations, ordered image pairs found among sample_count draws).
    """
    rng = np.random.default_rng(seed)
    box_top = 1.0 + kappa
    violations = 0
    tested = 0
    for _ in range(sample_count):
        x = rng.uniform(0.0, box_top, kmap.dim)
        y = rng.uniform(0.0, box_top, kmap.dim)
        fx = eval_F(kmap, x)
        fy = eval_F(kmap, y)
        for p, q, fp, fq in ((x, y, fx, fy), (y, x, fy, fx)):
            if np.all(fp <= fq) and np.any(fp < fq):
                tested += 1
                idx = fp < fq
                ok = np.all(p <= q) and np.any(p < q) and np.all(p[idx] < q[idx])
                if not ok:
                    violations += 1
                break
    return violations, tested


def attraction_battery(
    kmap: KolmogorovMap,
    sigma: RadialManifold,
    kappa: float,
    sample_count: int,
    horizon: int,
    tol: float,
    seed: int = 0,
    min_mass: float = 0.1,
) -> tuple[int, int]:
    """Monte Carlo attraction: seeds in the box with mass >= min_mass, distance after horizon steps.

    Returns (failures, seeds tested).
    """
    rng = np.random.default_rng(seed)
    box_top = 1.0 + kappa
    failures = 0
    done = 0
    while done < sample_count:
        x = rng.uniform(0.0, box_top, kmap.dim)
        if x.sum() < min_mass:
            continue
        done += 1
        for _ in range(horizon):
            x = eval_F(kmap, x)
        if surface_distance(sigma, x) >= tol:
            failures += 1
    return failures, done


def verify_cs(
    kmap: KolmogorovMap,
    sigma: RadialManifold,
    kappa: float,
    sample_count: int = 1000,
    horizon: int = 200,
    seed: int = 0,
    attraction_tol: float = 1e-3,
) -> VerificationReport:
    """Property battery for a computed surface.

    Counts violations instead of raising: invariance under one more step,
    weak unorderedness, unit corners, the projection Lipschitz bound, strict
    growth of the symmetrized order function on ordered pairs, backward
    propagation of image order, and Monte Carlo attraction.
    """
    grid = sigma.grid
    d = grid.dim
    box_top = 1.0 + kappa
    vacuous: list[str] = []
    tol_order = 2.0 * lipschitz_estimate(sigma) * grid_spacing(grid)

    stepped = graph_step(kmap, sigma, box_top)
    invariance_residual = hausdorff_points(vertex_points(stepped), vertex_points(sigma))

    if d > 1:
        unorder: int | None = len(is_weakly_unordered(sigma, tol_order))
    else:
        unorder = None
        vacuous.append("unorder_violations")

    fixed_point_residuals = [
        abs(float(sigma.radii[grid.corner_index(i)]) - 1.0) for i in range(d)
    ]

    lipschitz_bound = float(np.sqrt(1.0 + d))
    pts = vertex_points(sigma)
    if pts.shape[0] >= 2:
        ii, jj = np.triu_indices(pts.shape[0], k=1)
        diffs = pts[ii] - pts[jj]
        proj = diffs - diffs.mean(axis=1, keepdims=True)
        num = np.linalg.norm(diffs, axis=1)
        den = np.linalg.norm(proj, axis=1)
        ratios = np.where(den > 1e-300, num / np.maximum(den, 1e-300), np.inf)
        lipschitz_ratio_max: float | None = float(ratios.max())
    else:
        lipschitz_ratio_max = None
        vacuous.append("lipschitz_ratio_max")

    if sample_count > 0:
        harnack_viol, harnack_pairs = harnack_battery(kmap, kappa, sample_count, seed)
        harnack_samples: int | None = harnack_viol
        retro_viol, retro_tested = retrotone_battery(kmap, kappa, sample_count, seed + 1)
        retrotone_samples: int | None = retro_viol
        failures, _ = attraction_battery(
            kmap, sigma, kappa, sample_count, horizon, attraction_tol, seed + 2
        )
        attraction_stats: float | None = 1.0 - failures / sample_count
    else:
        harnack_samples = None
        harnack_pairs = 0
        retrotone_samples = None
        retro_tested = 0
        attraction_stats = None
        failures = 0
        vacuous.extend(["harnack_samples", "retrotone_samples", "attraction_stats"])

    return VerificationReport(
        invariance_residual=float(invariance_residual),
        unorder_violations=unorder,
        fixed_point_residuals=fixed_point_residuals,
        lipschitz_ratio_max=lipschitz_ratio_max,
        lipschitz_bound=lipschitz_bound,
        harnack_samples=harnack_samples,
        harnack_pair_count=harnack_pairs,
        retrotone_samples=retrotone_samples,
        retrotone_ordered_count=retro_tested,
        attraction_stats=attraction_stats,
        attraction_failures=failures,
        sample_count=sample_count,
        horizon=horizon,
        seed=seed,
        attraction_tol=attraction_tol,
        tol_order=tol_order,
        vacuous=vacuous,
    )
