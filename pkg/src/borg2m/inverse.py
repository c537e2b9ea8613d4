"""Recover a potential from its Dirichlet and Dirichlet-Neumann spectra by Newton iteration.

Unknowns are the cosine coefficients ``c_0 .. c_{2N-1}`` and data are the first
``N`` eigenvalues of each spectrum, so the Jacobian is square. Its entries are
the first-order sensitivities ``d lambda_n / d c_k = int cos(k x) phi_n(x)^2 dx``.
At ``q = 0`` the matrix is a column of ones plus ``-1/2`` couplings of
``lambda_n`` to ``c_{2n}`` and ``mu_n`` to ``c_{2n-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DIRICHLET,
    DIRICHLET_NEUMANN,
    Borg2mError,
    Grid,
    InvalidInputError,
    OperatorSpec,
    Potential,
)
from .forward import DEFAULT_N_GAL, compute_spectrum
from .riesz import RieszVerdict, riesz_criterion

MAX_CONDITION = 1e10
SIMPLE_GAP = 1e-8


class JacobianValidityError(Borg2mError, ArithmeticError):
    pass


class IllConditionedError(Borg2mError, ArithmeticError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SpectraTarget:
    m: int
    dirichlet: np.ndarray
    dirichlet_neumann: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dirichlet, dtype=float)
        n = np.asarray(self.dirichlet_neumann, dtype=float)
        object.__setattr__(self, "dirichlet", d)
        object.__setattr__(self, "dirichlet_neumann", n)
        if d.ndim != 1 or d.shape != n.shape:
            raise InvalidInputError("both spectra must be 1-D and of equal length")
        if d.size < 1:
            raise InvalidInputError("spectra are empty")
        if np.any(np.diff(d) <= 0) or np.any(np.diff(n) <= 0):
            raise InvalidInputError("spectra must be strictly increasing")
        if int(self.m) < 1:
            raise InvalidInputError("m must be >= 1")

    @property
    def N(self) -> int:
        return self.dirichlet.size

    @property
    def stacked(self) -> np.ndarray:
        return np.stack([self.dirichlet, self.dirichlet_neumann])

    def deviations(self) -> np.ndarray:
        """Targets minus free eigenvalues, shape (2, N)."""
        n = np.arange(1, self.N + 1)
        return np.stack([self.dirichlet - DIRICHLET.free_eigenvalues(n, self.m),
                         self.dirichlet_neumann - DIRICHLET_NEUMANN.free_eigenvalues(n, self.m)])

    def to_json(self) -> dict:
        return {"m": int(self.m), "dirichlet": self.dirichlet.tolist(),
                "dirichlet_neumann": self.dirichlet_neumann.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "SpectraTarget":
        try:
            return cls(int(obj["m"]), obj["dirichlet"], obj["dirichlet_neumann"])
        except KeyError as exc:
            raise InvalidInputError(f"target file lacks field {exc}") from None


def target_from_potential(q: Potential, m: int, N: int,
                          n_gal: int = DEFAULT_N_GAL) -> SpectraTarget:
    n_gal = max(n_gal, 2 * N)
    d = compute_spectrum(OperatorSpec(m, q, DIRICHLET), n_gal, count=N, grid=Grid(8))
    n = compute_spectrum(OperatorSpec(m, q, DIRICHLET_NEUMANN), n_gal, count=N, grid=Grid(8))
    return SpectraTarget(m, np.real(d.eigenvalues), np.real(n.eigenvalues))


def spectra_weights(N: int, m: int) -> np.ndarray:
    n = np.arange(1, N + 1, dtype=float)
    return np.maximum(1.0, n ** (2 * m - 2))


def spectra_distance(s1, s2, m: int) -> float:
    """Weighted RMS of ``s1 - s2`` with ``w_n = max(1, n^(2m-2))``.

    Rows of 2-D input (for example Dirichlet and Dirichlet-Neumann) are each
    indexed ``n = 1..N`` and the mean runs over all entries.
    """
    if isinstance(s1, SpectraTarget):
        s1 = s1.stacked
    if isinstance(s2, SpectraTarget):
        s2 = s2.stacked
    a, b = np.asarray(s1, dtype=float), np.asarray(s2, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"length mismatch: {a.shape} vs {b.shape}")
    w = spectra_weights(a.shape[-1], m)
    return float(np.sqrt(np.mean(((a - b) / w) ** 2)))


def leading_order_guess(t: SpectraTarget) -> Potential:
    """Invert the first-order eigenvalue expansion for ``c_0 .. c_{2N-1}``."""
    N = t.N
    if N < 2:
        raise InvalidInputError("need N >= 2")
    dev = t.deviations()
    c0 = float(np.mean(dev[0, N // 2:]))
    c = np.zeros(2 * N)
    c[0] = c0
    n = np.arange(1, N + 1)
    even = 2 * n[:-1]
    c[even] = 2 * (c0 - dev[0, :-1])
    c[2 * n - 1] = 2 * (c0 - dev[1])
    return Potential(c)


def _basis_rows(K: int, x: np.ndarray) -> np.ndarray:
    return np.cos(np.outer(np.arange(K), x))


def _forward(q: Potential, m: int, N: int, n_gal: int, grid: Grid):
    """Deviations (2, N) and Jacobian (2N, 2N) at ``q``."""
    B = _basis_rows(2 * N, grid.nodes) * grid.weights
    devs, rows = [], []
    for bc in (DIRICHLET, DIRICHLET_NEUMANN):
        sd = compute_spectrum(OperatorSpec(m, q, bc), n_gal, count=N, grid=grid)
        lam = sd.eigenvalues
        gaps = np.abs(np.diff(lam)) / np.maximum(1.0, np.abs(lam[1:]))
        if gaps.size and gaps.min() < SIMPLE_GAP:
            raise JacobianValidityError(f"non-simple {bc.value} eigenvalue encountered")
        devs.append(np.real(sd.deviations))
        rows.append(np.real(sd.values ** 2) @ B.T)
    return np.stack(devs), np.vstack(rows)


def jacobian(q: Potential, m: int, N: int, grid: Grid | None = None,
             n_gal: int = DEFAULT_N_GAL) -> np.ndarray:
    """Rows ``lambda_1..lambda_N, mu_1..mu_N``; columns ``c_0 .. c_{2N-1}`` (``b_0 = 1``, ``b_k = cos kx``)."""
    return _forward(q, m, N, max(n_gal, 2 * N), grid or Grid())[1]


@dataclass(frozen=True)
class ReconstructionReport:
    q_rec: Potential
    residual_history: tuple
    jacobian_condition: tuple
    iterations: int
    converged: bool
    status: str = "converged"
    riesz: RieszVerdict | None = None
    notes: tuple = field(default=())

    def to_json(self) -> dict:
        return {
            "coefficients": np.asarray(self.q_rec.coeffs).tolist(),
            "residual_history": list(self.residual_history),
            "jacobian_condition": list(self.jacobian_condition),
            "iterations": self.iterations,
            "converged": self.converged,
            "status": self.status,
            "riesz": None if self.riesz is None else self.riesz.to_json(),
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ReconstructionReport":
        riesz = None if obj.get("riesz") is None else RieszVerdict.from_json(obj["riesz"])
        return cls(Potential(np.asarray(obj["coefficients"], dtype=float)),
                   tuple(obj["residual_history"]), tuple(obj["jacobian_condition"]),
                   int(obj["iterations"]), bool(obj["converged"]), obj.get("status", ""),
                   riesz, tuple(obj.get("notes", ())))

    def csv_rows(self):
        for i, r in enumerate(self.residual_history):
            yield [i, float(r)]


def reconstruct(t: SpectraTarget, n_gal: int = DEFAULT_N_GAL, grid: Grid | None = None,
                tol: float = 1e-10, max_iter: int = 50, damping: float = 1.0,
                initial: Potential | None = None, max_halvings: int = 12,
                certify: bool = True) -> ReconstructionReport:
    """Damped Newton from the leading-order guess with step-halving backtracking.

    The history records the weighted residual of every accepted iterate,
    starting with the initial guess. Raises :class:`IllConditionedError`
    (carrying the partial report) if the Jacobian condition exceeds 1e10.
    """
    if not 0 < damping <= 1:
        raise InvalidInputError("damping must lie in (0, 1]")
    grid = grid or Grid()
    N, m = t.N, int(t.m)
    n_gal = max(n_gal, 2 * N)
    if grid.size < 4 * N:
        raise InvalidInputError("grid too coarse for the requested N")
    target = t.deviations()
    w = np.concatenate([spectra_weights(N, m)] * 2)
    c = np.asarray((initial or leading_order_guess(t)).cosine(2 * N - 1), dtype=float)
    c = np.concatenate([c, np.zeros(2 * N - c.size)])[:2 * N]

    def residual(coeffs):
        dev, J = _forward(Potential(coeffs), m, N, n_gal, grid)
        r = (target - dev).ravel()
        return r, float(np.sqrt(np.mean((r / w) ** 2))), J

    r, res, J = residual(c)
    history, conds, notes = [res], [], []
    status, it = "max_iter", 0

    def report(st):
        return ReconstructionReport(Potential(c.copy()), tuple(history), tuple(conds), it,
                                    st == "converged", st, None, tuple(notes))

    while it < max_iter:
        if res < tol:
            status = "converged"
            break
        cond = float(np.linalg.cond(J))
        conds.append(cond)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise IllConditionedError(f"Jacobian condition {cond:.3e} exceeds {MAX_CONDITION:.0e}",
                                      report("ill_conditioned"))
        step = np.linalg.solve(J, r)
        alpha = damping
        for _ in range(max_halvings + 1):
            c_new = c + alpha * step
            r_new, res_new, J_new = residual(c_new)
            if res_new < res:
                break
            alpha /= 2
        else:
            status = "diverged"
            notes.append(f"no decrease after {max_halvings} halvings at iteration {it + 1}")
            break
        c, r, res, J = c_new, r_new, res_new, J_new
        history.append(res)
        it += 1
    else:
        if res < tol:
            status = "converged"

    riesz = None
    if certify:
        q_rec = Potential(c.copy())
        riesz = riesz_criterion(q_rec, q_rec, m, N, grid, n_gal)
    return ReconstructionReport(Potential(c.copy()), tuple(history), tuple(conds), it,
                                status == "converged", status, riesz, tuple(notes))


def orthogonality_residuals(q_true: Potential, q_rec: Potential, m: int, N: int,
                            grid: Grid | None = None,
                            n_gal: int = DEFAULT_N_GAL) -> np.ndarray:
    """``|int (q_true - q_rec) phi_n(q_true) phi_n(q_rec) dx|``, shape (2, N) (Dirichlet, Dirichlet-Neumann)."""
    grid = grid or Grid()
    n_gal = max(n_gal, 2 * N)
    diff = (q_true - q_rec)(grid.nodes)
    out = []
    for bc in (DIRICHLET, DIRICHLET_NEUMANN):
        a = compute_spectrum(OperatorSpec(m, q_true, bc), n_gal, count=N, grid=grid).values
        b = compute_spectrum(OperatorSpec(m, q_rec, bc), n_gal, count=N, grid=grid).values
        out.append(np.abs(grid.integrate(diff * a * b, axis=-1)))
    return np.array(out)


def noise_study(q: Potential, m: int, N: int, sigma: float, trials: int = 5, seed: int = 0,
                n_gal: int = DEFAULT_N_GAL, grid: Grid | None = None,
                max_iter: int = 30) -> np.ndarray:
    """Relative L2 reconstruction errors when N(0, sigma) noise is added to the eigenvalues.

    Diagnostic only; failed reconstructions contribute ``nan``.
    """
    rng = np.random.default_rng(seed)
    clean = target_from_potential(q, m, N, n_gal)
    errs = np.full(trials, np.nan)
    for i in range(trials):
        noisy = clean.stacked + sigma * rng.standard_normal(clean.stacked.shape)
        try:
            t = SpectraTarget(m, noisy[0], noisy[1])
            rep = reconstruct(t, n_gal, grid, tol=0.0, max_iter=max_iter, certify=False)
        except Borg2mError:
            continue
        errs[i] = (rep.q_rec - q).norm / q.norm
    return errs
