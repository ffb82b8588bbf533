"""Obstacle problems with known exact solutions.

I   square ``(-1, 1)^2``, zero obstacle, nonzero Dirichlet data, prescribed
    contact radius ``R``.
II  unit disk, constant load ``f < 0`` and constant obstacle ``phi < 0``.
III unit disk, constant load and a spherical-cap obstacle of radius ``rho``
    with top value ``phi_max``.

All callables take and return numpy arrays (``x``, ``y`` broadcast).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class ObstacleInactive(ValueError):
    """The parameters put the problem in the contact-free (linear) regime."""


@dataclass(frozen=True)
class BenchmarkSpec:
    id: str
    params: dict = field(default_factory=dict)

    @property
    def domain(self) -> str:
        return "square" if self.id == "I" else "disk"


@dataclass(frozen=True, eq=False)
class ExactSolution:
    spec: BenchmarkSpec
    u: Callable
    grad_u: Callable  # returns (ux, uy)
    lam: Callable
    f: Callable
    phi: Callable
    J_exact: float
    R: float  # contact radius, 0 when the obstacle is inactive
    A: float = 0.0  # log coefficient outside contact (A_c or A_s)
    psi: float = 0.0  # opening angle of the contact cap (benchmark III)

    @property
    def domain(self) -> str:
        return self.spec.domain

    @property
    def active(self) -> bool:
        return self.R > 0


def bisect(g, lo: float, hi: float, xtol: float = 1e-12, max_iter: int = 200) -> float:
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if np.sign(glo) == np.sign(ghi):
        raise ValueError(f"no sign change on [{lo}, {hi}]: g(lo)={glo:.3e}, g(hi)={ghi:.3e}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if np.sign(gm) == np.sign(glo):
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo <= xtol:
            break
    return 0.5 * (lo + hi)


def _r2(x, y):
    return np.asarray(x, dtype=float) ** 2 + np.asarray(y, dtype=float) ** 2


# ---------------------------------------------------------------- benchmark I


def benchmark1(R: float = 0.7) -> ExactSolution:
    if not 0.0 <= R < 1.0:
        raise ValueError(f"contact radius must lie in [0, 1), got {R}")
    R2 = R * R

    def f(x, y):
        r2 = _r2(x, y)
        return np.where(r2 > R2, -16.0 * r2 + 8.0 * R2, -8.0 * (R2 * R2 + R2) + 8.0 * R2 * r2)

    def u(x, y):
        return np.maximum(_r2(x, y) - R2, 0.0) ** 2

    def grad_u(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        c = 4.0 * np.maximum(_r2(x, y) - R2, 0.0)
        return c * x, c * y

    def lam(x, y):
        r2 = _r2(x, y)
        return np.where(r2 > R2, 0.0, 8.0 * (R2 * R2 + R2) - 8.0 * R2 * r2)

    def phi(x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    J = (
        192.0 * (12.0 / 35.0 - 28.0 * R2 / 45.0 + R2 * R2 / 3.0)
        - 32.0 * R2 * (28.0 / 45.0 - 4.0 * R2 / 3.0 + R2 * R2)
        + 2.0 / 3.0 * math.pi * R**8
    )
    return ExactSolution(BenchmarkSpec("I", {"R": R}), u, grad_u, lam, f, phi, J, R)


# ---------------------------------------------------------- ring benchmarks


def _linear_solution(spec: BenchmarkSpec, f: float, phi) -> ExactSolution:
    def u(x, y):
        return f / 4.0 * (1.0 - _r2(x, y))

    def grad_u(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return -f / 2.0 * x, -f / 2.0 * y

    def lam(x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    def load(x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, f)

    return ExactSolution(spec, u, grad_u, lam, load, phi, -math.pi * f * f / 16.0, 0.0)


def outer_energy(f: float, A: float, R: float) -> float:
    """Energy of ``f/4 (1 - r^2) + A ln r`` over the annulus ``R < r < 1``."""
    L = math.log(R)
    return (
        -math.pi * A * A * L
        + math.pi * A * f * R * R * L
        - 3.0 * math.pi * f * f * R**4 / 16.0
        + math.pi * f * f * R * R / 4.0
        - math.pi * f * f / 16.0
    )


def contact_radius_constant(f: float, phi: float) -> float:
    """Root of ``R^2 (1 - 2 ln R) = 1 - 4 phi / f`` in ``(0, 1)``."""
    if f >= 0 or phi >= 0:
        raise ValueError("expected negative load and obstacle")
    rhs = 1.0 - 4.0 * phi / f
    if rhs < 0.0:
        raise ObstacleInactive(f"|f| < 4|phi| (f={f}, phi={phi}); use the linear solution")
    if rhs == 0.0:
        return 0.0
    return bisect(lambda R: R * R * (1.0 - 2.0 * math.log(R)) - rhs, 1e-9, 1.0 - 1e-9)


def benchmark2(f: float = -10.0, phi: float = -1.0) -> ExactSolution:
    if f >= 0 or phi >= 0:
        raise ValueError("benchmark II needs f < 0 and phi < 0")
    spec = BenchmarkSpec("II", {"f": f, "phi": phi})

    def obstacle(x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, phi)

    try:
        R = contact_radius_constant(f, phi)
    except ObstacleInactive:
        R = 0.0
    if R == 0.0:
        return _linear_solution(spec, f, obstacle)

    R2 = R * R
    L = math.log(R)
    A = (4.0 * phi + f * R2 - f) / (4.0 * L)

    def u(x, y):
        r2 = _r2(x, y)
        outer = f / 4.0 * (1.0 - r2) + 0.5 * A * np.log(np.maximum(r2, R2))
        return np.where(r2 > R2, outer, phi)

    def grad_u(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        r2 = _r2(x, y)
        c = np.where(r2 > R2, A / np.maximum(r2, R2) - f / 2.0, 0.0)
        return c * x, c * y

    def lam(x, y):
        return np.where(_r2(x, y) > R2, 0.0, -f)

    def load(x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, f)

    g = phi - f / 4.0
    J = (
        math.pi * f * f * R2 * R2 / 16.0
        - math.pi * g * g / L
        - math.pi * f * R2 * g / (2.0 * L)
        - math.pi * f * f * R2 * R2 / (16.0 * L)
        - math.pi * f * f / 16.0
    )
    return ExactSolution(spec, u, grad_u, lam, load, obstacle, J, R, A)


def _spherical_residual(psi: float, f: float, phi_max: float, rho: float) -> float:
    s = math.sin(psi)
    R = rho * s
    # rho (cos psi - 1) without cancellation
    drop = -2.0 * rho * math.sin(0.5 * psi) ** 2
    return (4.0 * (phi_max + drop) + f * R * R - f) / (4.0 * R * math.log(R)) - f * R / 2.0 + math.tan(psi)


def contact_radius_spherical(f: float, phi_max: float, rho: float) -> tuple[float, float]:
    """Opening angle ``psi`` and contact radius ``R = rho sin psi``."""
    if f >= 0 or phi_max >= 0:
        raise ValueError("expected negative load and obstacle top")
    if rho < 1.0:
        raise ValueError(f"sphere radius must be >= 1, got {rho}")
    if abs(f) < 4.0 * abs(phi_max):
        raise ObstacleInactive(f"|f| < 4|phi_max| (f={f}, phi_max={phi_max}); use the linear solution")
    psi = bisect(
        lambda p: _spherical_residual(p, f, phi_max, rho), 1e-9, math.asin(1.0 / rho) - 1e-9
    )
    return psi, rho * math.sin(psi)


def benchmark3(f: float = -10.0, phi_max: float = -1.0, rho: float = 1.2) -> ExactSolution:
    if f >= 0 or phi_max >= 0:
        raise ValueError("benchmark III needs f < 0 and phi_max < 0")
    spec = BenchmarkSpec("III", {"f": f, "phi_max": phi_max, "rho": rho})
    rho2 = rho * rho

    def obstacle(x, y):
        # outside r = rho the cap is continued by its rim value
        return phi_max - rho + np.sqrt(np.maximum(rho2 - _r2(x, y), 0.0))

    try:
        psi, R = contact_radius_spherical(f, phi_max, rho)
    except ObstacleInactive:
        return _linear_solution(spec, f, obstacle)

    R2 = R * R
    L = math.log(R)
    cap_drop = -2.0 * rho * math.sin(0.5 * psi) ** 2
    A = (4.0 * (phi_max + cap_drop) + f * R2 - f) / (4.0 * L)

    def u(x, y):
        r2 = _r2(x, y)
        outer = f / 4.0 * (1.0 - r2) + 0.5 * A * np.log(np.maximum(r2, R2))
        return np.where(r2 > R2, outer, obstacle(x, y))

    def grad_u(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        r2 = _r2(x, y)
        inner = -1.0 / np.sqrt(np.maximum(rho2 - np.minimum(r2, R2), 1e-300))
        c = np.where(r2 > R2, A / np.maximum(r2, R2) - f / 2.0, inner)
        return c * x, c * y

    def lam(x, y):
        r2 = np.minimum(_r2(x, y), R2)
        inner = (2.0 * rho2 - r2) / (rho2 - r2) ** 1.5 - f
        return np.where(_r2(x, y) > R2, 0.0, inner)

    def load(x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, f)

    s2 = math.sin(psi) ** 2
    J1 = (
        -math.pi * rho2 / 2.0 * (s2 + math.log(math.cos(psi) ** 2))
        - math.pi * f * rho2 * (phi_max - rho) * s2
        - 2.0 * math.pi * f * rho**3 / 3.0 * (1.0 - math.cos(psi) ** 3)
    )
    J2 = outer_energy(f, A, R)
    return ExactSolution(spec, u, grad_u, lam, load, obstacle, J1 + J2, R, A, psi)


def get_benchmark(bid: str, **params) -> ExactSolution:
    """Registry lookup by id (``'I'``, ``'II'``, ``'III'``) with keyword parameters."""
    bid = str(bid).upper()
    builders = {"I": (benchmark1, {"R"}), "II": (benchmark2, {"f", "phi"}),
                "III": (benchmark3, {"f", "phi_max", "rho"})}
    if bid not in builders:
        raise ValueError(f"unknown benchmark {bid!r}")
    build, allowed = builders[bid]
    extra = set(params) - allowed
    if extra:
        raise ValueError(f"benchmark {bid} does not take {sorted(extra)}")
    return build(**params)
