"""Forward spectra by Galerkin projection onto the free sine eigenbasis.

In the basis ``b_j = sqrt(2/pi) sin(w_j x)`` (``w_j = j`` for Dirichlet,
``j - 1/2`` for Dirichlet-Neumann) the leading term is the diagonal
``w_j^(2m)`` and a cosine potential couples modes through a banded,
closed-form matrix. The diagonal spans many orders of magnitude, so each
eigenpair is refined by Newton iteration on a scaled Schur complement;
that keeps eigenvalue deviations from ``w_n^(2m)`` accurate to roundoff
even when ``w_n^(2m)`` itself is ~1e9.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .core import (
    DIRICHLET,
    BoundaryCondition,
    Grid,
    GridFunction,
    InvalidInputError,
    MultiplicityWarning,
    NumericalError,
    OperatorSpec,
    Potential,
    ResolutionWarning,
)

DEFAULT_N_GAL = 128
SIGN_FLOOR = 1e-8
MULTIPLICITY_TOL = 1e-8


def free_basis(bc: BoundaryCondition, n_modes: int, x) -> np.ndarray:
    """Matrix ``B[i, j-1] = sqrt(2/pi) sin(w_j x_i)``."""
    bc = BoundaryCondition.parse(bc)
    w = bc.frequencies(np.arange(1, n_modes + 1))
    return np.sqrt(2.0 / np.pi) * np.sin(np.multiply.outer(np.asarray(x, dtype=float), w))


def galerkin_coupling(coeffs, n_gal: int, bc: BoundaryCondition) -> np.ndarray:
    """``Q[j, n] = int q b_j b_n dx`` for ``q = sum_k c_k cos(kx)`` (closed form).

    Dirichlet: ``c_0 delta_jn + (c_{|j-n|} - c_{j+n}) / 2``; Dirichlet-Neumann
    replaces ``j+n`` by ``j+n-1``. The ``|j-n|`` term only fires off-diagonal.
    """
    bc = BoundaryCondition.parse(bc)
    c = np.asarray(coeffs)
    size = 2 * n_gal + 1
    padded = np.zeros(size, dtype=c.dtype if np.iscomplexobj(c) else float)
    padded[: min(c.size, size)] = c[:size]
    j = np.arange(1, n_gal + 1)
    diff = np.abs(j[:, None] - j[None, :])
    total = j[:, None] + j[None, :] - (1 if bc is not DIRICHLET else 0)
    Q = 0.5 * np.where(diff > 0, padded[diff], 0.0) - 0.5 * padded[total]
    Q[np.diag_indices(n_gal)] += padded[0]
    return Q


def assemble_galerkin(spec: OperatorSpec, n_gal: int) -> np.ndarray:
    """Galerkin matrix ``diag(w_j^(2m)) + Q`` of size ``n_gal``."""
    if n_gal < 8:
        raise InvalidInputError("n_gal must be at least 8")
    c = spec.q.cosine()
    if c.size - 1 >= 2 * n_gal:
        warnings.warn(
            f"potential has {c.size} cosine modes; frequencies >= {2 * n_gal} "
            "cannot couple and are dropped",
            ResolutionWarning,
            stacklevel=2,
        )
    A = galerkin_coupling(c, n_gal, spec.bc)
    A[np.diag_indices(n_gal)] += spec.bc.free_eigenvalues(np.arange(1, n_gal + 1), spec.m)
    return A


@dataclass(frozen=True)
class SpectralData:
    """First ``count`` eigenpairs of one operator.

    ``deviations[n-1] = eigenvalues[n-1] - w_n^(2m)``, computed without the
    cancellation that subtracting two large numbers would cause.
    ``coefficients[:, n-1]`` holds the free-basis expansion of the n-th
    eigenfunction, normalized so that ``sum v_j^2 = 1`` (bilinear).
    """

    bc: BoundaryCondition
    m: int
    eigenvalues: np.ndarray
    deviations: np.ndarray
    coefficients: np.ndarray
    values: np.ndarray
    truncation: int
    grid: Grid
    modes: np.ndarray
    diagnostics: tuple = field(default=())

    @property
    def count(self) -> int:
        return self.eigenvalues.size

    @property
    def free_eigenvalues(self) -> np.ndarray:
        return self.bc.free_eigenvalues(np.arange(1, self.count + 1), self.m)

    @property
    def eigenfunctions(self) -> list[GridFunction]:
        return [GridFunction(self.grid, v) for v in self.values]

    def evaluate(self, n: int, x) -> np.ndarray:
        """n-th eigenfunction at arbitrary points, straight from the series."""
        B = free_basis(self.bc, self.truncation, x)
        return B @ self.coefficients[:, n - 1]

    def to_json(self) -> dict:
        from .io import encode_array

        return {
            "bc": self.bc.value,
            "m": self.m,
            "eigenvalues": encode_array(self.eigenvalues),
            "deviations": encode_array(self.deviations),
            "truncation": self.truncation,
            "grid_size": self.grid.size,
            "eigenfunctions": [encode_array(v) for v in self.values],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SpectralData":
        """Rebuild from JSON; Galerkin coefficients are recovered by projection."""
        from .io import decode_array

        bc = BoundaryCondition.parse(obj["bc"])
        m = int(obj["m"])
        grid = Grid(int(obj["grid_size"]))
        lam = decode_array(obj["eigenvalues"])
        count = lam.size
        values = np.array([decode_array(v) for v in obj["eigenfunctions"]])
        if "deviations" in obj:
            dev = decode_array(obj["deviations"])
        else:
            dev = lam - bc.free_eigenvalues(np.arange(1, count + 1), m)
        n_gal = int(obj.get("truncation", max(8, 2 * count)))
        B = free_basis(bc, n_gal, grid.nodes)
        coeffs = (B * grid.weights[:, None]).T @ values.T
        return cls(bc, m, lam, dev, coeffs, values, n_gal, grid,
                   np.arange(1, count + 1), ())

    def csv_rows(self):
        free = self.free_eigenvalues
        for n in range(1, self.count + 1):
            lam = self.eigenvalues[n - 1]
            dev = self.deviations[n - 1]
            yield [n, _real_if_close(lam), free[n - 1], _real_if_close(dev)]


def _real_if_close(z):
    z = complex(z)
    return z.real if z.imag == 0 else z


def _refine(lam_free, Q, p, delta, max_iter=50):
    """Newton on the Schur complement for the eigenpair pivoted at mode ``p``.

    The eigenvalue is ``lam_free[p] + delta``. Returns ``(delta, v)`` with
    ``v[p] = 1``.
    """
    n = lam_free.size
    J = np.delete(np.arange(n), p)
    gaps = lam_free[J] - lam_free[p]
    b = Q[J, p]
    QJJ = Q[np.ix_(J, J)]
    qpp = Q[p, p]
    qpJ = Q[p, J]
    def solve(delta):
        # scale by sqrt|d| so the huge diagonal becomes +-1; an exactly zero
        # d (delta landing on another free eigenvalue) just keeps unit scale
        d = gaps - delta
        ad = np.abs(d)
        s = np.where(ad > 0, np.sqrt(ad), 1.0)
        M = QJJ / np.outer(s, s)
        M[np.diag_indices(J.size)] += d / s**2
        try:
            return la.solve(M, -b / s, check_finite=False) / s
        except la.LinAlgError as exc:
            raise NumericalError(str(exc)) from exc

    small = 0
    for _ in range(max_iter):
        vJ = solve(delta)
        f = qpp + qpJ @ vJ - delta
        step = f / (1.0 + vJ @ vJ)
        delta = delta + step
        if abs(step) <= 4 * np.finfo(float).eps * max(1.0, abs(delta)):
            small += 1
            if small == 2:
                break
    else:
        raise NumericalError(f"eigenvalue refinement for mode {p + 1} did not converge")
    v = np.zeros(n, dtype=np.result_type(Q, delta))
    v[p] = 1.0
    v[J] = solve(delta)
    return delta, v


def _sign_points(bc: BoundaryCondition, count: int) -> np.ndarray:
    n = np.arange(1, count + 1)
    return np.pi / (2 * n) if bc is DIRICHLET else np.pi / (2 * n - 1)


def compute_spectrum(spec: OperatorSpec, n_gal: int = DEFAULT_N_GAL,
                     count: int | None = None, grid: Grid | None = None) -> SpectralData:
    """Lowest ``count`` eigenpairs of ``spec`` from an ``n_gal``-mode Galerkin matrix.

    Only the lower half of the Galerkin spectrum is trusted, so ``count`` may
    not exceed ``n_gal // 2``. Eigenfunctions are sampled on ``grid``,
    normalized (bilinear, no conjugation) and signed so that ``phi_n`` is
    positive at ``pi/(2n)`` (Dirichlet) or ``pi/(2n-1)`` (Dirichlet-Neumann).
    """
    grid = grid or Grid()
    count = n_gal // 2 if count is None else int(count)
    if count < 1 or count > n_gal // 2:
        raise InvalidInputError(f"count must be in [1, {n_gal // 2}] for n_gal={n_gal}")
    A = assemble_galerkin(spec, n_gal)
    lam_free = spec.bc.free_eigenvalues(np.arange(1, n_gal + 1), spec.m)
    # coupling built directly; A - diag(lam_free) would lose the small diagonal
    # part to rounding once lam_free is large
    Q = galerkin_coupling(spec.q.cosine(), n_gal, spec.bc)
    diagnostics = []

    complex_case = np.iscomplexobj(A)
    try:
        if complex_case:
            w, V = la.eig(A)
        else:
            w, V = la.eigh(A)
    except la.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.lexsort((w.imag, w.real)) if complex_case else np.argsort(w)
    w, V = w[order][:count], V[:, order][:, :count]

    deltas, vecs, pivots = [], [], []
    used = set()
    for i in range(count):
        p = int(np.argmax(np.abs(V[:, i])))
        if p in used:
            p = i
        used.add(p)
        delta, v = _refine(lam_free, Q, p, w[i] - lam_free[p])
        deltas.append(delta)
        vecs.append(v)
        pivots.append(p + 1)
    deltas = np.array(deltas)
    pivots = np.array(pivots)
    lam = lam_free[pivots - 1] + deltas
    order = np.lexsort((lam.imag, lam.real)) if np.iscomplexobj(lam) else np.argsort(lam)
    lam, deltas, pivots = lam[order], deltas[order], pivots[order]
    V = np.array(vecs).T[:, order]

    norms = np.sqrt(np.sum(V * V, axis=0))
    V = V / norms
    free_n = spec.bc.free_eigenvalues(np.arange(1, count + 1), spec.m)
    dev = (lam_free[pivots - 1] - free_n) + deltas

    gaps = np.abs(np.diff(lam))
    scale = np.maximum(1.0, np.abs(lam[1:]))
    for i in np.flatnonzero(gaps < MULTIPLICITY_TOL * scale):
        msg = f"eigenvalues {i + 1} and {i + 2} are numerically multiple: {lam[i]}, {lam[i + 1]}"
        diagnostics.append(msg)
        warnings.warn(msg, MultiplicityWarning, stacklevel=2)

    xs = _sign_points(spec.bc, count)
    at_xs = np.einsum("ij,ji->i", free_basis(spec.bc, n_gal, xs), V)
    for i in range(count):
        val = at_xs[i].real
        if abs(at_xs[i]) < SIGN_FLOOR:
            val = V[pivots[i] - 1, i].real
            diagnostics.append(f"sign of eigenfunction {i + 1} fixed by dominant coefficient")
        if val < 0:
            V[:, i] = -V[:, i]

    values = (free_basis(spec.bc, n_gal, grid.nodes) @ V).T
    if not complex_case:
        lam, dev, V, values = lam.real, dev.real, V.real, values.real
    return SpectralData(spec.bc, spec.m, lam, dev, V, values, n_gal, grid, pivots,
                        tuple(diagnostics))


def eigenfunction_at(sd: SpectralData, n: int) -> GridFunction:
    if not 1 <= n <= sd.count:
        raise InvalidInputError(f"n={n} outside 1..{sd.count}")
    return GridFunction(sd.grid, sd.values[n - 1])


def galerkin_residuals(spec: OperatorSpec, sd: SpectralData) -> np.ndarray:
    """``||A v - lambda v||`` per eigenpair, with the diagonal shift formed exactly."""
    n_gal = sd.truncation
    lam_free = spec.bc.free_eigenvalues(np.arange(1, n_gal + 1), spec.m)
    Q = galerkin_coupling(spec.q.cosine(), n_gal, spec.bc)
    out = []
    for i in range(sd.count):
        p = sd.modes[i] - 1
        delta = sd.deviations[i] - (lam_free[p] - sd.free_eigenvalues[i])
        v = sd.coefficients[:, i]
        r = (lam_free - lam_free[p] - delta) * v + Q @ v
        out.append(np.linalg.norm(r) / np.linalg.norm(v))
    return np.array(out)


def spectrum(q: Potential, m: int, bc=DIRICHLET, count: int = 8,
             n_gal: int = DEFAULT_N_GAL, grid: Grid | None = None) -> SpectralData:
    """Shorthand for ``compute_spectrum(OperatorSpec(m, q, bc), ...)``."""
    return compute_spectrum(OperatorSpec(m, q, bc), n_gal=n_gal, count=count, grid=grid)
