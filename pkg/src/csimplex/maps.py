"""Kolmogorov maps F(x) = diag[x] f(x), their derivatives and axis restrictions.

A map is described by its per-capita part f (componentwise positive on the
working box) together with an optional analytic Jacobian of f; a central
finite-difference fallback with one-sided steps at the coordinate faces is
used when the Jacobian is missing. Custom maps enter only through the
registry so derivative correctness stays testable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "MapDomainError",
    "KolmogorovMap",
    "AxisMap",
    "eval_f",
    "eval_F",
    "eval_df",
    "eval_DF",
    "eval_Z",
    "axis_map",
    "fd_jacobian",
    "beverton_holt",
    "atkinson_allen",
    "ricker1d",
    "ricker2d",
    "leslie_gower",
    "REGISTRY",
    "make_map",
]


class MapDomainError(ValueError):
    """The map was evaluated where its defining inequalities fail."""


@dataclass(frozen=True, eq=False)
class KolmogorovMap:
    name: str
    dim: int
    params: dict
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True, eq=False)
class AxisMap:
    """Scalar restriction to the i-th axis: g(s) = f_i(s e_i), G(s) = s g(s)."""

    index: int
    g: Callable[[float], float]
    G: Callable[[float], float]


def _check_input(kmap: KolmogorovMap, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (kmap.dim,):
        raise ValueError(f"{kmap.name} expects points of dimension {kmap.dim}")
    if not np.all(np.isfinite(x)):
        raise MapDomainError(f"non-finite input {x}")
    if np.any(x < 0.0):
        raise MapDomainError(f"input {x} leaves the nonnegative cone")
    return x


def eval_f(kmap: KolmogorovMap, x) -> np.ndarray:
    """Per-capita values f(x); strictly positive on the admissible domain."""
    x = _check_input(kmap, x)
    y = np.asarray(kmap.f(x), dtype=float)
    if not np.all(np.isfinite(y)) or np.any(y <= 0.0):
        raise MapDomainError(f"{kmap.name}: f({x}) = {y} is not strictly positive")
    return y


def eval_F(kmap: KolmogorovMap, x) -> np.ndarray:
    """One step of the dynamics, F_i(x) = x_i f_i(x); coordinate faces are exact."""
    x = _check_input(kmap, x)
    return x * eval_f(kmap, x)


def fd_jacobian(func: Callable[[np.ndarray], np.ndarray], x: np.ndarray, dim: int) -> np.ndarray:
    """Finite-difference Jacobian, central step 1e-5 (1 + |x_j|), one-sided at faces."""
    x = np.asarray(x, dtype=float)
    jac = np.empty((dim, dim))
    for j in range(dim):
        h = 1e-5 * (1.0 + abs(x[j]))
        if x[j] - h < 0.0:
            xp = x.copy()
            xp[j] += h
            jac[:, j] = (np.asarray(func(xp)) - np.asarray(func(x))) / h
        else:
            xp = x.copy()
            xm = x.copy()
            xp[j] += h
            xm[j] -= h
            jac[:, j] = (np.asarray(func(xp)) - np.asarray(func(xm))) / (2.0 * h)
    return jac


def eval_df(kmap: KolmogorovMap, x) -> np.ndarray:
    """Jacobian of the per-capita part, analytic when available."""
    x = _check_input(kmap, x)
    if kmap.df is not None:
        jac = np.asarray(kmap.df(x), dtype=float)
    else:
        jac = fd_jacobian(kmap.f, x, kmap.dim)
    if jac.shape != (kmap.dim, kmap.dim) or not np.all(np.isfinite(jac)):
        raise MapDomainError(f"{kmap.name}: bad Jacobian at {x}")
    return jac


def eval_DF(kmap: KolmogorovMap, x) -> np.ndarray:
    """Jacobian of the full map, DF_ij = delta_ij f_i + x_i df_ij."""
    x = _check_input(kmap, x)
    f = eval_f(kmap, x)
    return np.diag(f) + x[:, None] * eval_df(kmap, x)


def eval_Z(kmap: KolmogorovMap, x, tol: float = 1e-9) -> np.ndarray:
    """Nonnegative feedback matrix Z_ij = -x_i (df_ij) / f_i; row i vanishes with x_i."""
    x = _check_input(kmap, x)
    f = eval_f(kmap, x)
    z = -(x[:, None] * eval_df(kmap, x)) / f[:, None]
    z[x == 0.0, :] = 0.0
    if z.min() < -tol:
        i, j = np.unravel_index(np.argmin(z), z.shape)
        raise MapDomainError(
            f"{kmap.name}: negative feedback entry {z[i, j]:.3e} at ({i},{j}), x={x}"
        )
    return np.maximum(z, 0.0)


def axis_map(kmap: KolmogorovMap, i: int) -> AxisMap:
    if not 0 <= i < kmap.dim:
        raise ValueError(f"axis index {i} out of range")
    unit = np.zeros(kmap.dim)
    unit[i] = 1.0

    def g(s: float) -> float:
        return float(eval_f(kmap, s * unit)[i])

    def G(s: float) -> float:
        return s * g(s)

    return AxisMap(i, g, G)


# ---------------------------------------------------------------------------
# registry of built-in maps


def beverton_holt() -> KolmogorovMap:
    """One-species Beverton-Holt recruitment, f(x) = 2 / (1 + x)."""

    def f(x):
        return np.array([2.0 / (1.0 + x[0])])

    def df(x):
        return np.array([[-2.0 / (1.0 + x[0]) ** 2]])

    return KolmogorovMap("beverton_holt", 1, {}, f, df)


def atkinson_allen(lam: float = 0.5) -> KolmogorovMap:
    """One-species map with survival fraction lam, f(x) = lam + 2(1-lam)/(1+x)."""
    lam = float(lam)
    if not 0.0 <= lam < 1.0:
        raise ValueError("lam must lie in [0, 1)")

    def f(x):
        return np.array([lam + 2.0 * (1.0 - lam) / (1.0 + x[0])])

    def df(x):
        return np.array([[-2.0 * (1.0 - lam) / (1.0 + x[0]) ** 2]])

    return KolmogorovMap("atkinson_allen", 1, {"lam": lam}, f, df)


def ricker1d(lam: float = 0.5) -> KolmogorovMap:
    """One-species Ricker map, f(x) = exp(lam (1 - x))."""
    lam = float(lam)
    if lam <= 0.0:
        raise ValueError("lam must be positive")

    def f(x):
        return np.array([np.exp(lam * (1.0 - x[0]))])

    def df(x):
        return np.array([[-lam * np.exp(lam * (1.0 - x[0]))]])

    return KolmogorovMap("ricker1d", 1, {"lam": lam}, f, df)


def ricker2d(r: float = 0.5, s: float = 0.5, a: float = 0.5, b: float = 0.5) -> KolmogorovMap:
    """Planar Ricker competition, F = (x e^{r(1-x-ay)}, y e^{s(1-y-bx)})."""
    r, s, a, b = float(r), float(s), float(a), float(b)
    if r <= 0.0 or s <= 0.0 or a < 0.0 or b < 0.0:
        raise ValueError("need r, s > 0 and a, b >= 0")

    def f(x):
        return np.array(
            [
                np.exp(r * (1.0 - x[0] - a * x[1])),
                np.exp(s * (1.0 - x[1] - b * x[0])),
            ]
        )

    def df(x):
        f1 = np.exp(r * (1.0 - x[0] - a * x[1]))
        f2 = np.exp(s * (1.0 - x[1] - b * x[0]))
        return np.array([[-r * f1, -a * r * f1], [-s * b * f2, -s * f2]])

    return KolmogorovMap("ricker2d", 2, {"r": r, "s": s, "a": a, "b": b}, f, df)


def leslie_gower(r=(1.0, 1.0), A=((1.0, 0.5), (0.5, 1.0))) -> KolmogorovMap:
    """Leslie-Gower competition, f_i(x) = (1 + r_i) / (1 + (A x)_i).

    The i-th axis carries a unit fixed point exactly when A_ii = r_i.
    """
    r = np.asarray(r, dtype=float)
    A = np.asarray(A, dtype=float)
    d = r.shape[0]
    if r.ndim != 1 or A.shape != (d, d):
        raise ValueError("r must be a vector and A a matching square matrix")
    if np.any(r <= 0.0) or np.any(A < 0.0):
        raise ValueError("need r > 0 and A >= 0 entrywise")

    def f(x):
        return (1.0 + r) / (1.0 + A @ x)

    def df(x):
        return -((1.0 + r) / (1.0 + A @ x) ** 2)[:, None] * A

    params = {"r": r.tolist(), "A": A.tolist()}
    return KolmogorovMap("leslie_gower", d, params, f, df)


REGISTRY: dict[str, Callable[..., KolmogorovMap]] = {
    "beverton_holt": beverton_holt,
    "atkinson_allen": atkinson_allen,
    "ricker1d": ricker1d,
    "ricker2d": ricker2d,
    "leslie_gower": leslie_gower,
}


def make_map(name: str, params: dict | None = None) -> KolmogorovMap:
    """Instantiate a registered map from a name and a parameter mapping."""
    if name not in REGISTRY:
        raise KeyError(f"unknown map '{name}'; known: {sorted(REGISTRY)}")
    return REGISTRY[name](**(params or {}))
