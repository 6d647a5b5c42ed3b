"""Numerical certification of the structural assumptions on a Kolmogorov map.

The checks sample finite grids in place of the continuum quantifiers and keep
a fixed safety margin on the spectral condition, so a passing certificate is
robust to the sampling. The module also selects the margin kappa of the
trapping box [0, 1+kappa]^d and the inner radius epsilon of the starting
manifold epsilon * Delta.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .geometry import simplex_lattice
from .maps import KolmogorovMap, eval_Z, eval_df, eval_f

__all__ = [
    "AssumptionError",
    "PowerIterationError",
    "As2Result",
    "As3Result",
    "As4Result",
    "AssumptionReport",
    "spectral_radius",
    "power_radius",
    "check_as2",
    "check_as3",
    "check_as4",
    "jury_condition_ricker2d",
    "find_kappa",
    "find_epsilon",
    "default_resolution",
    "run_assumption_checks",
]

SAFETY_MARGIN = 0.02


class AssumptionError(RuntimeError):
    """A required assumption cannot be certified for this map."""


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge within the step budget."""


def power_radius(matrix, tol: float = 1e-13, max_iter: int = 10000) -> float:
    """Spectral radius of a nonnegative matrix by shifted power iteration.

    The +I shift keeps the dominant eigenvalue simple-signed and removes
    periodicity, so the Rayleigh quotient converges for every nonnegative
    input with a spectral gap; the caller falls back to a dense eigensolve
    when the budget runs out.
    """
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    shifted = m + np.eye(n)
    v = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        w = shifted @ v
        v = w / np.linalg.norm(w)
        lam = float(v @ (shifted @ v))
        if np.linalg.norm(shifted @ v - lam * v) <= tol * max(1.0, abs(lam)):
            return lam - 1.0
    raise PowerIterationError(f"no convergence after {max_iter} steps")


def spectral_radius(matrix, method: str = "auto") -> float:
    """Largest eigenvalue modulus; dense solve for small matrices, power iteration above."""
    m = np.asarray(matrix, dtype=float)
    if method not in ("auto", "eig", "power"):
        raise ValueError(f"unknown method '{method}'")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix must be finite")
    if method == "eig" or (method == "auto" and m.shape[0] <= 4):
        return float(np.max(np.abs(np.linalg.eigvals(m)))) if m.size else 0.0
    if method == "power":
        return power_radius(m)
    try:
        return power_radius(m)
    except PowerIterationError:
        return float(np.max(np.abs(np.linalg.eigvals(m))))


@dataclass(frozen=True)
class As2Result:
    ok: bool
    max_deviation: float
    deviations: list


@dataclass(frozen=True)
class As3Result:
    mode: str  # strict | weak | fail
    worst_value: float
    worst_entry: tuple
    worst_point: list
    worst_diagonal: float


@dataclass(frozen=True)
class As4Result:
    ok: bool
    max_rho: float
    argmax_point: list
    margin: float


def check_as2(kmap: KolmogorovMap, tol: float = 1e-9) -> As2Result:
    """Each axis must carry its fixed point at the unit: f_i(e_i) = 1."""
    devs = []
    for i in range(kmap.dim):
        e = np.zeros(kmap.dim)
        e[i] = 1.0
        devs.append(abs(float(eval_f(kmap, e)[i]) - 1.0))
    worst = max(devs)
    return As2Result(worst < tol, worst, devs)


def _box_points(top: float, resolution: int, dim: int) -> np.ndarray:
    axes = [np.linspace(0.0, top, resolution)] * dim
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)


def check_as3(kmap: KolmogorovMap, rect_top: float, resolution: int) -> As3Result:
    """Sign pattern of the per-capita Jacobian on the rectangle [0, rect_top]^d.

    strict: all entries negative; weak: all nonpositive with negative
    diagonal; fail otherwise, with the worst entry and its location.
    """
    worst_value = -np.inf
    worst_entry = (0, 0)
    worst_point = None
    worst_diag = -np.inf
    for x in _box_points(rect_top, resolution, kmap.dim):
        jac = eval_df(kmap, x)
        i, j = np.unravel_index(np.argmax(jac), jac.shape)
        if jac[i, j] > worst_value:
            worst_value = float(jac[i, j])
            worst_entry = (int(i), int(j))
            worst_point = x.copy()
        worst_diag = max(worst_diag, float(np.max(np.diag(jac))))
    if worst_value < 0.0:
        mode = "strict"
    elif worst_value <= 1e-12 and worst_diag < 0.0:
        mode = "weak"
    else:
        mode = "fail"
    return As3Result(mode, worst_value, worst_entry, list(worst_point), worst_diag)


def check_as4(
    kmap: KolmogorovMap,
    kappa: float,
    resolution: int,
    margin: float = SAFETY_MARGIN,
) -> As4Result:
    """Spectral radius of the feedback matrix below 1 - margin on the box grid."""
    if kappa < 0.0:
        raise ValueError("kappa must be nonnegative")
    max_rho = -1.0
    argmax = None
    for x in _box_points(1.0 + kappa, resolution, kmap.dim):
        if not x.any():
            continue
        rho = spectral_radius(eval_Z(kmap, x))
        if rho > max_rho:
            max_rho = rho
            argmax = x.copy()
    return As4Result(max_rho < 1.0 - margin, max(max_rho, 0.0), [float(v) for v in argmax], margin)


def jury_condition_ricker2d(r: float, s: float, a: float, b: float) -> bool:
    """Both feedback eigenvalues at the coexistence corner inside the unit circle."""
    mid = 1.0 + r * s * (1.0 - a * b)
    return r + s < mid < 2.0


def find_kappa(
    kmap: KolmogorovMap,
    resolution: int,
    kappa_max: float = 1.0,
    margin: float = SAFETY_MARGIN,
    levels: int = 10,
) -> float:
    """Largest margin in the geometric scan {kappa_max, kappa_max/2, ...} passing the spectral check.

    Passing regions are nested in kappa, so scanning from above is sound.
    """
    for j in range(levels + 1):
        kappa = kappa_max / 2.0**j
        if check_as4(kmap, kappa, resolution, margin).ok:
            return kappa
    raise AssumptionError(
        f"spectral condition fails even at kappa = {kappa_max / 2.0 ** levels:g}"
    )


def find_epsilon(
    kmap: KolmogorovMap,
    tol: float = 0.01,
    sample_resolution: int = 16,
    max_halvings: int = 40,
) -> float:
    """Largest epsilon in {1/2, 1/4, ...} with min_i f_i >= 1 + tol on epsilon * Delta."""
    _, dirs = simplex_lattice(kmap.dim, sample_resolution)
    eps = 1.0
    for _ in range(max_halvings):
        eps *= 0.5
        if all(float(eval_f(kmap, eps * u).min()) >= 1.0 + tol for u in dirs):
            return eps
    raise AssumptionError(
        "per-capita growth never exceeds 1 near the origin; the origin is not a repeller"
    )


def default_resolution(dim: int) -> int:
    """Grid points per edge for the assumption scans; cost grows as resolution^dim."""
    if dim <= 2:
        return 64
    if dim == 3:
        return 24
    return 12


@dataclass(frozen=True)
class AssumptionReport:
    map_name: str
    map_params: dict
    dim: int
    as2_ok: bool
    as2_max_deviation: float
    as3_mode: str
    as3_worst_value: float
    as3_worst_entry: tuple
    as3_worst_point: list
    as4_ok: bool
    as4_max_rho: float
    as4_argmax: list
    kappa: float | None
    epsilon: float | None
    grid_resolution: int
    safety_margin: float

    @property
    def passed(self) -> bool:
        return (
            self.as2_ok
            and self.as3_mode in ("strict", "weak")
            and self.as4_ok
            and self.kappa is not None
            and self.epsilon is not None
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        out["as3_worst_entry"] = list(self.as3_worst_entry)
        return out


def run_assumption_checks(
    kmap: KolmogorovMap,
    resolution: int | None = None,
    kappa_max: float = 1.0,
    margin: float = SAFETY_MARGIN,
    eps_tol: float = 0.01,
    as2_tol: float = 1e-9,
) -> AssumptionReport:
    """Full certification pass: axis fixed points, Jacobian signs, spectral margin, kappa, epsilon."""
    resolution = resolution or default_resolution(kmap.dim)
    as2 = check_as2(kmap, as2_tol)
    base = check_as4(kmap, 0.0, resolution, margin)
    kappa: float | None = None
    epsilon: float | None = None
    as4 = base
    if base.ok:
        try:
            kappa = find_kappa(kmap, resolution, kappa_max, margin)
            as4 = check_as4(kmap, kappa, resolution, margin)
        except AssumptionError:
            kappa = None
    as3 = check_as3(kmap, 1.0 + (kappa or 0.0), resolution)
    if base.ok and as2.ok and as3.mode in ("strict", "weak"):
        try:
            epsilon = find_epsilon(kmap, eps_tol)
        except AssumptionError:
            epsilon = None
    return AssumptionReport(
        map_name=kmap.name,
        map_params=dict(kmap.params),
        dim=kmap.dim,
        as2_ok=as2.ok,
        as2_max_deviation=float(as2.max_deviation),
        as3_mode=as3.mode,
        as3_worst_value=float(as3.worst_value),
        as3_worst_entry=as3.worst_entry,
        as3_worst_point=[float(v) for v in as3.worst_point],
        as4_ok=as4.ok,
        as4_max_rho=float(as4.max_rho),
        as4_argmax=[float(v) for v in as4.argmax_point],
        kappa=kappa,
        epsilon=epsilon,
        grid_resolution=resolution,
        safety_margin=margin,
    )
