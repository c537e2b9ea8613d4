"""Residuals of the eigenvalue/eigenfunction asymptotics and decay-rate regression."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DIRICHLET,
    BoundaryCondition,
    Grid,
    InvalidInputError,
    OperatorSpec,
    Potential,
)
from .forward import DEFAULT_N_GAL, SpectralData, compute_spectrum

DEFAULT_SLACK = 0.25
MIN_POINTS = 6


class InsufficientDataError(InvalidInputError):
    pass


@dataclass(frozen=True)
class DecayReport:
    indices: np.ndarray
    residuals: np.ndarray
    fitted_slope: float
    fitted_intercept: float
    claimed_slope: float
    passes: bool
    slack: float = DEFAULT_SLACK
    log_correction: bool = False
    notes: tuple = field(default=())

    def fitted(self, n=None) -> np.ndarray:
        n = self.indices if n is None else np.asarray(n, dtype=float)
        y = np.exp(self.fitted_intercept) * n ** self.fitted_slope
        return y * np.log(n) if self.log_correction else y

    def to_json(self) -> dict:
        return {
            "indices": self.indices.tolist(),
            "residuals": self.residuals.tolist(),
            "fitted_slope": self.fitted_slope,
            "fitted_intercept": self.fitted_intercept,
            "claimed_slope": self.claimed_slope,
            "slack": self.slack,
            "log_correction": self.log_correction,
            "passes": self.passes,
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DecayReport":
        return cls(np.asarray(obj["indices"], dtype=float),
                   np.asarray(obj["residuals"], dtype=float),
                   float(obj["fitted_slope"]), float(obj["fitted_intercept"]),
                   float(obj["claimed_slope"]), bool(obj["passes"]),
                   float(obj.get("slack", DEFAULT_SLACK)),
                   bool(obj.get("log_correction", False)), tuple(obj.get("notes", ())))

    def csv_rows(self):
        for n, r, f in zip(self.indices, self.residuals, self.fitted()):
            yield [int(n), float(r), float(f)]


def fit_decay(indices, residuals, log_correction: bool = False,
              claimed_slope: float = np.nan, slack: float = DEFAULT_SLACK) -> DecayReport:
    """Least-squares slope of ``log r`` (minus ``log ln n`` if ``log_correction``) vs ``log n``.

    Zero residuals are dropped (and noted); fewer than six usable points is an error.
    """
    n = np.asarray(indices, dtype=float)
    r = np.abs(np.asarray(residuals))
    keep = r > 0
    notes = []
    if not keep.all():
        notes.append(f"dropped {int((~keep).sum())} zero residual(s)")
    if log_correction:
        ok = n > 1
        if not ok[keep].all():
            notes.append("dropped n <= 1 (ln n <= 0)")
        keep &= ok
    n, r = n[keep], r[keep]
    if n.size < MIN_POINTS:
        raise InsufficientDataError(f"need {MIN_POINTS} usable points, got {n.size}")
    y = np.log(r) - (np.log(np.log(n)) if log_correction else 0.0)
    slope, intercept = np.polyfit(np.log(n), y, 1)
    passes = bool(slope <= claimed_slope + slack) if np.isfinite(claimed_slope) else False
    return DecayReport(n, r, float(slope), float(intercept), float(claimed_slope), passes,
                       slack, log_correction, tuple(notes))


def _leading_terms(q: Potential, n, bc: BoundaryCondition):
    """``(1/pi) int q`` and ``(1/pi) int q cos(2 w_n x)`` from the cosine coefficients."""
    n = np.atleast_1d(n)
    k = (2 * n if bc is DIRICHLET else 2 * n - 1).astype(int)
    c = q.cosine(int(max(k.max(), 0)))
    c = np.concatenate([c, np.zeros(max(0, k.max() + 1 - c.size))])
    return c[0], 0.5 * c[k]


def eigenvalue_residual(q: Potential, m: int, n: int, bc=DIRICHLET,
                        sd: SpectralData | None = None, n_gal: int = DEFAULT_N_GAL) -> float:
    """``lambda_n - w_n^(2m) - (1/pi) int q + (1/pi) int q cos(2 w_n x)``.

    For Dirichlet-Neumann ``2 w_n = 2n - 1``; that analogue is an extrapolation
    of the Dirichlet expansion, not an established result.
    """
    bc = BoundaryCondition.parse(bc)
    if sd is None:
        sd = compute_spectrum(OperatorSpec(m, q, bc), n_gal=max(n_gal, 2 * n), count=n,
                              grid=Grid(8))
    mean, osc = _leading_terms(q, n, bc)
    return sd.deviations[n - 1] - mean + osc[0]


def _sweep_spectra(q, m, bc, n_max, n_gal, grid):
    spec = OperatorSpec(m, q, bc)
    n_gal = max(n_gal, 2 * n_max)
    sd = compute_spectrum(spec, n_gal=n_gal, count=n_max, grid=grid)
    sd2 = compute_spectrum(spec, n_gal=2 * n_gal, count=n_max, grid=grid)
    return sd, sd2


def _drop_unresolved(ns, res, res2):
    """Keep points whose change under Galerkin doubling is < 10% of the residual."""
    err = np.abs(res - res2)
    keep = err < 0.1 * np.abs(res2)
    notes = []
    if not keep.all():
        notes.append("dropped unresolved n: " + ", ".join(str(int(v)) for v in ns[~keep]))
    return ns[keep], res2[keep], notes


def eigenvalue_residuals(q: Potential, m: int, ns, bc=DIRICHLET,
                         n_gal: int = DEFAULT_N_GAL):
    """Residuals for every ``n`` in ``ns`` plus notes on points dropped as unresolved."""
    bc = BoundaryCondition.parse(bc)
    ns = np.asarray(ns, dtype=int)
    sd, sd2 = _sweep_spectra(q, m, bc, int(ns.max()), n_gal, Grid(8))
    mean, osc = _leading_terms(q, ns, bc)
    res = sd.deviations[ns - 1] - mean + osc
    res2 = sd2.deviations[ns - 1] - mean + osc
    return _drop_unresolved(ns, res, res2)


def eigenfunction_sup_error(q: Potential, m: int, n: int, bc=DIRICHLET,
                            sd: SpectralData | None = None, grid: Grid | None = None) -> float:
    """``sup_x |phi_n(x; q) - sqrt(2/pi) sin(w_n x)|`` over the grid nodes."""
    bc = BoundaryCondition.parse(bc)
    if sd is None:
        sd = compute_spectrum(OperatorSpec(m, q, bc), n_gal=max(DEFAULT_N_GAL, 4 * n),
                              count=n, grid=grid or Grid())
    x = sd.grid.nodes
    free = np.sqrt(2 / np.pi) * np.sin(bc.frequencies(n) * x)
    return float(np.max(np.abs(sd.values[n - 1] - free)))


def eigenfunction_sup_errors(q: Potential, m: int, ns, bc=DIRICHLET,
                             n_gal: int = DEFAULT_N_GAL, grid: Grid | None = None):
    bc = BoundaryCondition.parse(bc)
    ns = np.asarray(ns, dtype=int)
    sd, sd2 = _sweep_spectra(q, m, bc, int(ns.max()), n_gal, grid or Grid())
    e1 = np.array([eigenfunction_sup_error(q, m, n, bc, sd) for n in ns])
    e2 = np.array([eigenfunction_sup_error(q, m, n, bc, sd2) for n in ns])
    return _drop_unresolved(ns, e1, e2)


def product_sup_error(q1: Potential, q2: Potential, m: int, n: int, bc=DIRICHLET,
                      sd1: SpectralData | None = None, sd2: SpectralData | None = None,
                      grid: Grid | None = None) -> float:
    """``sup_x |phi_n(x; q1) phi_n(x; q2) - (2/pi) sin^2(w_n x)|``."""
    bc = BoundaryCondition.parse(bc)
    grid = grid or (sd1.grid if sd1 is not None else Grid())
    n_gal = max(DEFAULT_N_GAL, 4 * n)
    if sd1 is None:
        sd1 = compute_spectrum(OperatorSpec(m, q1, bc), n_gal=n_gal, count=n, grid=grid)
    if sd2 is None:
        sd2 = compute_spectrum(OperatorSpec(m, q2, bc), n_gal=n_gal, count=n, grid=grid)
    x = sd1.grid.nodes
    ref = (2 / np.pi) * np.sin(bc.frequencies(n) * x) ** 2
    return float(np.max(np.abs(sd1.values[n - 1] * sd2.values[n - 1] - ref)))


def product_sup_errors(q1: Potential, q2: Potential, m: int, ns, bc=DIRICHLET,
                       n_gal: int = DEFAULT_N_GAL, grid: Grid | None = None):
    bc = BoundaryCondition.parse(bc)
    ns = np.asarray(ns, dtype=int)
    grid = grid or Grid()
    a, a2 = _sweep_spectra(q1, m, bc, int(ns.max()), n_gal, grid)
    b, b2 = _sweep_spectra(q2, m, bc, int(ns.max()), n_gal, grid)
    e1 = np.array([product_sup_error(q1, q2, m, n, bc, a, b) for n in ns])
    e2 = np.array([product_sup_error(q1, q2, m, n, bc, a2, b2) for n in ns])
    return _drop_unresolved(ns, e1, e2)


def random_direction(rng: np.random.Generator, modes: int = 8) -> Potential:
    """Unit-norm real cosine potential."""
    c = rng.standard_normal(modes + 1)
    p = Potential(c)
    return p.scaled(1.0 / p.norm)


def continuity_probe(n: int, bc, m: int, norms, directions=None, seed: int = 0,
                     n_directions: int = 3, grid: Grid | None = None,
                     n_gal: int = DEFAULT_N_GAL) -> np.ndarray:
    """Table ``errors[d, i] = sup_x |phi_n(x; t_i u_d) - phi_n(x; 0)|`` for ``t_i`` in ``norms``."""
    bc = BoundaryCondition.parse(bc)
    norms = np.asarray(norms, dtype=float)
    if np.any(norms < 0):
        raise InvalidInputError("norms must be nonnegative")
    grid = grid or Grid(512)
    if directions is None:
        rng = np.random.default_rng(seed)
        directions = [random_direction(rng) for _ in range(n_directions)]
    n_gal = max(n_gal, 4 * n)
    free = np.sqrt(2 / np.pi) * np.sin(bc.frequencies(n) * grid.nodes)
    table = np.zeros((len(directions), norms.size))
    for d, u in enumerate(directions):
        for i, t in enumerate(norms):
            sd = compute_spectrum(OperatorSpec(m, u.scaled(t), bc), n_gal=n_gal, count=n,
                                  grid=grid)
            table[d, i] = np.max(np.abs(sd.values[n - 1] - free))
    return table
