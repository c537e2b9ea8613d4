"""Shared domain types: grids, potentials, boundary conditions, operator specs."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_GRID_SIZE = 2048


class Borg2mError(Exception):
    """Base class for package errors."""


class InvalidInputError(Borg2mError, ValueError):
    pass


class ResolutionError(Borg2mError, ValueError):
    pass


class NumericalError(Borg2mError, ArithmeticError):
    pass


class ResolutionWarning(UserWarning):
    pass


class MultiplicityWarning(UserWarning):
    pass


class BoundaryCondition(enum.Enum):
    """Boundary-condition family for the order-2m operator on (0, pi).

    ``DIRICHLET``: all even derivatives vanish at both ends.
    ``DIRICHLET_NEUMANN``: even derivatives vanish at 0, odd derivatives at pi.
    """

    DIRICHLET = "dirichlet"
    DIRICHLET_NEUMANN = "dirichlet_neumann"

    @classmethod
    def parse(cls, value: "BoundaryCondition | str") -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"d": "dirichlet", "dn": "dirichlet_neumann", "neumann": "dirichlet_neumann"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise InvalidInputError(f"unknown boundary condition {value!r}") from None

    @property
    def offset(self) -> float:
        """Free frequencies are ``n - offset``."""
        return 0.0 if self is BoundaryCondition.DIRICHLET else 0.5

    def frequencies(self, n) -> np.ndarray:
        return np.asarray(n, dtype=float) - self.offset

    def free_eigenvalues(self, n, m: int) -> np.ndarray:
        return self.frequencies(n) ** (2 * m)


DIRICHLET = BoundaryCondition.DIRICHLET
DIRICHLET_NEUMANN = BoundaryCondition.DIRICHLET_NEUMANN


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, pi] with ``size`` nodes, endpoints included."""

    size: int = DEFAULT_GRID_SIZE

    def __post_init__(self):
        if int(self.size) < 2:
            raise InvalidInputError("grid needs at least two nodes")
        object.__setattr__(self, "size", int(self.size))

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.size)

    @property
    def spacing(self) -> float:
        return np.pi / (self.size - 1)

    @property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights."""
        w = np.full(self.size, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def integrate(self, values, axis: int = -1):
        return np.tensordot(np.asarray(values), self.weights, axes=([axis], [0]))


@dataclass(frozen=True)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != (self.grid.size,):
            raise InvalidInputError(
                f"expected {self.grid.size} values, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.integrate(np.abs(self.values) ** 2)))

    def inner(self, other: "GridFunction") -> complex | float:
        if other.grid != self.grid:
            raise InvalidInputError("grid functions live on different grids")
        return self.grid.integrate(self.values * np.conj(other.values))

    def sup_distance(self, other) -> float:
        v = other.values if isinstance(other, GridFunction) else np.asarray(other)
        return float(np.max(np.abs(self.values - v)))


@dataclass(frozen=True)
class Potential:
    """A potential on (0, pi).

    The cosine series ``c_0 + sum_k c_k cos(kx)`` is the primary representation;
    grid samples (node ``g`` at ``pi*g/(G-1)``) are secondary. At least one of
    the two must be present.
    """

    coeffs: np.ndarray | None = None
    samples: np.ndarray | None = None
    l2_norm_cache: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.coeffs is None and self.samples is None:
            raise InvalidInputError("potential needs coefficients or grid samples")
        for name in ("coeffs", "samples"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.array(arr)
            if arr.ndim != 1 or arr.size == 0:
                raise InvalidInputError(f"{name} must be a non-empty 1-d sequence")
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} contains non-finite values")
            if not np.iscomplexobj(arr):
                arr = arr.astype(float)
            elif np.all(arr.imag == 0):
                arr = arr.real.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.samples is not None and self.samples.size < 2:
            raise InvalidInputError("grid samples need at least two nodes")
        object.__setattr__(self, "l2_norm_cache", self._norm())

    def _norm(self) -> float:
        # scale by the largest entry so squaring neither under- nor overflows
        arr = self.coeffs if self.coeffs is not None else self.samples
        s = float(np.max(np.abs(arr)))
        if s == 0:
            return 0.0
        a = (np.abs(arr) / s) ** 2
        if self.coeffs is not None:
            return s * float(np.sqrt(np.pi * a[0] + 0.5 * np.pi * a[1:].sum()))
        return s * float(np.sqrt(Grid(a.size).integrate(a)))

    @property
    def is_complex(self) -> bool:
        arr = self.coeffs if self.coeffs is not None else self.samples
        return np.iscomplexobj(arr)

    @property
    def norm(self) -> float:
        return self.l2_norm_cache

    @property
    def mean(self):
        """(1/pi) * integral of q."""
        if self.coeffs is not None:
            return self.coeffs[0]
        return potential_to_cosine(self, 0)[0]

    def __call__(self, x):
        """Evaluate the cosine series at arbitrary points."""
        c = self.cosine()
        x = np.asarray(x, dtype=float)
        k = np.arange(c.size)
        return np.cos(np.multiply.outer(x, k)) @ c

    def cosine(self, K: int | None = None) -> np.ndarray:
        """Cosine coefficients, projecting from grid samples when needed."""
        if self.coeffs is not None:
            if K is None or K + 1 == self.coeffs.size:
                return self.coeffs
            out = np.zeros(K + 1, dtype=self.coeffs.dtype)
            n = min(K + 1, self.coeffs.size)
            out[:n] = self.coeffs[:n]
            return out
        if K is None:
            K = (self.samples.size - 1) // 4
        return potential_to_cosine(self, K)

    def scaled(self, alpha) -> "Potential":
        return Potential(
            None if self.coeffs is None else alpha * self.coeffs,
            None if self.samples is None else alpha * self.samples,
        )

    def __add__(self, other: "Potential") -> "Potential":
        a, b = self.cosine(), other.cosine()
        n = max(a.size, b.size)
        out = np.zeros(n, dtype=np.result_type(a, b))
        out[: a.size] += a
        out[: b.size] += b
        return Potential(out)

    def __sub__(self, other: "Potential") -> "Potential":
        return self + other.scaled(-1.0)

    def to_json(self) -> dict:
        from .io import encode_array

        if self.coeffs is not None:
            return {"kind": "cosine", "coeffs": encode_array(self.coeffs)}
        return {
            "kind": "grid",
            "size": int(self.samples.size),
            "values": encode_array(self.samples),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Potential":
        from .io import decode_array

        kind = obj.get("kind")
        if kind == "cosine":
            return cls(decode_array(obj["coeffs"]))
        if kind == "grid":
            values = decode_array(obj["values"])
            if "size" in obj and int(obj["size"]) != values.size:
                raise InvalidInputError("grid size does not match number of values")
            return cls(samples=values)
        raise InvalidInputError(f"unknown potential kind {kind!r}")

    def save(self, path) -> None:
        from .io import dumps

        Path(path).write_text(dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "Potential":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class OperatorSpec:
    """``(-1)^m y^(2m) + q y = lambda y`` on (0, pi) with boundary conditions ``bc``."""

    m: int
    q: Potential
    bc: BoundaryCondition = DIRICHLET

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise InvalidInputError("m must be a positive integer")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        if not isinstance(self.q, Potential):
            object.__setattr__(self, "q", potential_from_cosine(self.q))


def potential_from_cosine(coeffs) -> Potential:
    """Potential ``c_0 + c_1 cos x + c_2 cos 2x + ...``."""
    coeffs = np.atleast_1d(np.asarray(coeffs))
    if coeffs.size == 0:
        raise InvalidInputError("empty coefficient sequence")
    return Potential(coeffs)


def zero_potential() -> Potential:
    return Potential(np.zeros(1))


def constant_potential(c) -> Potential:
    return Potential(np.array([c]))


def potential_from_grid(values) -> Potential:
    return Potential(samples=values)


def potential_from_function(f, grid: Grid | None = None) -> Potential:
    grid = grid or Grid()
    return Potential(samples=f(grid.nodes))


def sample_on_grid(p: Potential, grid: Grid | None = None) -> GridFunction:
    """Pointwise values of ``p`` at the grid nodes."""
    grid = grid or Grid()
    if p.coeffs is None:
        if p.samples.size == grid.size:
            return GridFunction(grid, p.samples)
        raise InvalidInputError("potential has no cosine representation to sample")
    return GridFunction(grid, p(grid.nodes))


def potential_to_cosine(p: Potential, K: int, grid: Grid | None = None) -> np.ndarray:
    """Cosine coefficients ``c_0 .. c_K`` by trapezoid quadrature.

    Uses the potential's own samples if it has them, otherwise samples the
    cosine series on ``grid`` (default 2048 nodes or ``4K``, whichever is larger).
    """
    K = int(K)
    if K < 0:
        raise InvalidInputError("K must be nonnegative")
    if p.samples is not None:
        values = p.samples
        grid = Grid(values.size)
    else:
        grid = grid or Grid(max(DEFAULT_GRID_SIZE, 4 * max(K, 1)))
        values = p(grid.nodes)
    if grid.size < 4 * K:
        raise ResolutionError(f"grid of {grid.size} nodes too coarse for K={K}")
    x = grid.nodes
    basis = np.cos(np.outer(np.arange(K + 1), x))
    c = (2.0 / np.pi) * (basis * values) @ grid.weights
    c[0] *= 0.5
    return c


def l2_norm(p: Potential) -> float:
    return p.norm


def random_potential(rng: np.random.Generator, modes: int = 8, norm: float = 0.2,
                     include_mean: bool = True) -> Potential:
    """Random real cosine potential with ``modes`` frequencies and the given L2 norm."""
    c = rng.standard_normal(modes + 1)
    if not include_mean:
        c[0] = 0.0
    p = Potential(c)
    return p.scaled(norm / p.norm)
