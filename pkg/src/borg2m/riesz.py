"""Cosine reference basis, the eigenfunction-product system, and Riesz-basis checks.

The reference system is ``e_0 = 1/sqrt(pi)``, ``e_k = sqrt(2/pi) cos(k x)``,
orthonormal in L2(0, pi). The perturbed system replaces ``e_{2n}`` by
``sqrt(2 pi) (1/pi - phi_n(q1) phi_n(q2))`` (Dirichlet pair) and ``e_{2n-1}``
by the same expression in the Dirichlet-Neumann eigenfunctions. At ``q = 0``
the double-angle identity makes the two systems coincide. Since the reference
is orthonormal, ``sum_k ||d_k - e_k||^2 < 1`` is enough for ``{d_k}`` to be a
Riesz basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DIRICHLET,
    DIRICHLET_NEUMANN,
    Borg2mError,
    Grid,
    GridFunction,
    InvalidInputError,
    OperatorSpec,
    Potential,
)
from .forward import DEFAULT_N_GAL, compute_spectrum

DEGENERACY_TOL = 1e-12
ROUNDOFF_FLOOR = 1e-24


class DegenerateSystemError(Borg2mError, ValueError):
    pass


@dataclass(frozen=True)
class FunctionSystem:
    members: tuple
    labels: tuple
    gram: np.ndarray | None = None

    def __post_init__(self):
        if len(self.members) != len(self.labels):
            raise InvalidInputError("members and labels differ in length")
        if self.members and any(f.grid != self.members[0].grid for f in self.members):
            raise InvalidInputError("all members must share one grid")

    def __len__(self) -> int:
        return len(self.members)

    @property
    def grid(self) -> Grid:
        return self.members[0].grid

    @property
    def matrix(self) -> np.ndarray:
        """Members stacked as rows of sampled values."""
        return np.array([f.values for f in self.members])

    def with_gram(self) -> "FunctionSystem":
        if self.gram is not None:
            return self
        return FunctionSystem(self.members, self.labels, gram_matrix(self))


def gram_matrix(system: FunctionSystem) -> np.ndarray:
    """Pairwise L2 inner products by trapezoid quadrature, symmetrized."""
    V = system.matrix
    G = (V * system.grid.weights) @ V.conj().T
    return 0.5 * (G + G.conj().T)


@dataclass(frozen=True)
class FrameBounds:
    a_lower: float
    A_upper: float
    truncation: int

    def __post_init__(self):
        if not 0 < self.a_lower <= self.A_upper:
            raise InvalidInputError("frame bounds must satisfy 0 < a <= A")


def _labels(N: int, prefix: str) -> tuple:
    return tuple(f"{prefix}{k}" for k in range(2 * N + 1))


def build_reference_basis(N: int, grid: Grid | None = None) -> FunctionSystem:
    """``e_0 .. e_{2N}``; ``e_0`` is normalized to ``1/sqrt(pi)``."""
    if N < 1:
        raise InvalidInputError("N must be >= 1")
    grid = grid or Grid()
    x = grid.nodes
    members = [GridFunction(grid, np.full_like(x, 1 / np.sqrt(np.pi)))]
    members += [GridFunction(grid, np.sqrt(2 / np.pi) * np.cos(k * x))
                for k in range(1, 2 * N + 1)]
    return FunctionSystem(tuple(members), _labels(N, "e"))


def _pair_values(q1: Potential, q2: Potential, m: int, N: int, grid: Grid, n_gal: int):
    out = {}
    for bc in (DIRICHLET, DIRICHLET_NEUMANN):
        v1 = compute_spectrum(OperatorSpec(m, q1, bc), n_gal, count=N, grid=grid).values
        if q2 is q1:
            v2 = v1
        else:
            v2 = compute_spectrum(OperatorSpec(m, q2, bc), n_gal, count=N, grid=grid).values
        out[bc] = v1 * v2
    return out


def build_perturbed_system(q1: Potential, q2: Potential, m: int, N: int,
                           grid: Grid | None = None,
                           n_gal: int = DEFAULT_N_GAL) -> FunctionSystem:
    """``d_0 .. d_{2N}`` with ``d_0 = e_0``; index ``2n`` is Dirichlet, ``2n-1`` Dirichlet-Neumann."""
    if N < 1:
        raise InvalidInputError("N must be >= 1")
    grid = grid or Grid()
    n_gal = max(n_gal, 2 * N)
    prod = _pair_values(q1, q2, m, N, grid, n_gal)
    c = np.sqrt(2 * np.pi)
    members = [GridFunction(grid, np.full(grid.size, 1 / np.sqrt(np.pi)))]
    for k in range(1, 2 * N + 1):
        n = (k + 1) // 2
        p = prod[DIRICHLET][n - 1] if k % 2 == 0 else prod[DIRICHLET_NEUMANN][n - 1]
        members.append(GridFunction(grid, c * (1 / np.pi - p)))
    return FunctionSystem(tuple(members), _labels(N, "d"))


def distances_squared(d: FunctionSystem, e: FunctionSystem) -> np.ndarray:
    """``||d_k - e_k||^2`` for every k."""
    if len(d) != len(e):
        raise InvalidInputError("systems have different lengths")
    if d.grid != e.grid:
        raise InvalidInputError("systems live on different grids")
    diff = d.matrix - e.matrix
    return np.real(d.grid.integrate(np.abs(diff) ** 2, axis=-1))


def tail_estimate(dist2: np.ndarray) -> float:
    """Integral beyond ``k = 2N`` of a power law fitted to ``||d_k - e_k||^2`` on ``k = N..2N``.

    Entries below ``ROUNDOFF_FLOOR`` count as exact zeros. A fit exponent
    of -1 or more (no summable decay) yields ``inf``; fewer than three
    nonzero entries yield 0.
    """
    K = dist2.size - 1
    k = np.arange(max(1, K // 2), K + 1)
    y = dist2[k]
    ok = y > ROUNDOFF_FLOOR
    if ok.sum() < 3:
        return 0.0
    slope, intercept = np.polyfit(np.log(k[ok]), np.log(y[ok]), 1)
    if slope >= -1:
        return float("inf")
    # int_K^inf C t^s dt = C K^(s+1) / -(s+1)
    return float(np.exp(intercept) * K ** (slope + 1) / -(slope + 1))


@dataclass(frozen=True)
class PerturbationSum:
    partial: float
    tail: float
    per_k: np.ndarray = field(repr=False)

    @property
    def total(self) -> float:
        return self.partial + self.tail

    def csv_rows(self):
        cum = np.cumsum(self.per_k)
        for k, (v, c) in enumerate(zip(self.per_k, cum)):
            yield [k, float(v), float(c)]


def perturbation_sum(d: FunctionSystem, e: FunctionSystem) -> PerturbationSum:
    """Truncated ``sum_k ||d_k - e_k||^2`` with a separately reported decay-fit tail."""
    dist2 = distances_squared(d, e)
    return PerturbationSum(float(dist2.sum()), tail_estimate(dist2), dist2)


def frame_bounds(system: FunctionSystem) -> FrameBounds:
    """Extreme eigenvalues of the Gram matrix (Rayleigh bounds on the span)."""
    G = system.with_gram().gram
    ev = np.linalg.eigvalsh(G)
    if ev[0] < DEGENERACY_TOL:
        raise DegenerateSystemError(f"Gram matrix numerically singular (min eigenvalue {ev[0]:.3e})")
    N = (len(system) - 1) // 2
    return FrameBounds(float(ev[0]), float(ev[-1]), N)


@dataclass(frozen=True)
class RieszVerdict:
    sum: float
    tail: float
    verdict: bool
    bounds: FrameBounds | None
    per_k: np.ndarray = field(repr=False, default=None)

    def __iter__(self):
        # unpacks as (sum, verdict, bounds)
        return iter((self.sum, self.verdict, self.bounds))

    def to_json(self) -> dict:
        return {
            "sum": self.sum,
            "tail": self.tail,
            "verdict": self.verdict,
            "a": None if self.bounds is None else self.bounds.a_lower,
            "A": None if self.bounds is None else self.bounds.A_upper,
            "N": None if self.bounds is None else self.bounds.truncation,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RieszVerdict":
        bounds = None
        if obj.get("a") is not None:
            bounds = FrameBounds(float(obj["a"]), float(obj["A"]), int(obj["N"]))
        return cls(float(obj["sum"]), float(obj["tail"]), bool(obj["verdict"]), bounds)

    def csv_rows(self):
        cum = np.cumsum(self.per_k)
        for k, (v, c) in enumerate(zip(self.per_k, cum)):
            yield [k, float(v), float(c)]


def riesz_criterion(q1: Potential, q2: Potential, m: int, N: int,
                    grid: Grid | None = None, n_gal: int = DEFAULT_N_GAL) -> RieszVerdict:
    """Perturbation sum against the orthonormal reference; verdict is ``sum + tail < 1``.

    Frame bounds are ``None`` when the Gram matrix is degenerate.
    """
    grid = grid or Grid()
    e = build_reference_basis(N, grid)
    d = build_perturbed_system(q1, q2, m, N, grid, n_gal)
    s = perturbation_sum(d, e)
    try:
        bounds = frame_bounds(d)
    except DegenerateSystemError:
        bounds = None
    return RieszVerdict(s.partial, s.tail, bool(s.total < 1.0), bounds, s.per_k)


def epsilon_sweep(q1: Potential, q2: Potential, m: int, N: int, t_max: float = 64.0,
                  rtol: float = 1e-3, grid: Grid | None = None,
                  n_gal: int = DEFAULT_N_GAL) -> tuple[float, float]:
    """Bisect the scale ``t`` at which the verdict for ``(t q1/|q1|, t q2/|q2|)`` flips.

    Returns ``(t_true, t_false)``: the largest norm found with a true verdict
    and the smallest with a false one. ``t_false`` is ``inf`` if the verdict
    holds up to ``t_max``.
    """
    grid = grid or Grid(1024)
    u1, u2 = q1.scaled(1 / q1.norm), q2.scaled(1 / q2.norm)

    def ok(t):
        return riesz_criterion(u1.scaled(t), u2.scaled(t), m, N, grid, n_gal).verdict

    lo, hi = 0.0, 0.125
    while ok(hi):
        lo, hi = hi, 2 * hi
        if hi > t_max:
            return lo, float("inf")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo, hi
