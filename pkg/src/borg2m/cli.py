"""Command-line entry point: ``borg2m <command> [options]``.

Exit status is 0 on success, 2 for unusable input and 3 for numerical
failures (a diagnostic JSON file is written next to the output). Every
output file starts with the full run configuration.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import io as bio
from .asymptotics import (
    DecayReport,
    eigenfunction_sup_errors,
    eigenvalue_residuals,
    fit_decay,
    product_sup_errors,
)
from .core import (
    DIRICHLET,
    DIRICHLET_NEUMANN,
    Borg2mError,
    BoundaryCondition,
    Grid,
    InvalidInputError,
    OperatorSpec,
    Potential,
    constant_potential,
    zero_potential,
)
from .forward import SpectralData, compute_spectrum
from .green import (
    kernel_bound_sweep,
    spectral_projection,
    verify_lemma_31,
    verify_lemma_32,
)
from .inverse import (
    IllConditionedError,
    ReconstructionReport,
    SpectraTarget,
    reconstruct,
)
from .riesz import RieszVerdict, riesz_criterion

COMMANDS = ("spectrum", "green", "asymptotics", "riesz", "invert", "lemmas")
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


@dataclass
class RunConfig:
    command: str
    m: int | None = None
    bc: str = "dirichlet"
    q: str = "zero"
    q1: str | None = None
    q2: str | None = None
    count: int = 5
    n: int = 8
    n_gal: int = 128
    grid: int = 2048
    tol: float = 1e-10
    max_iter: int = 50
    seed: int = 0
    targets: str | None = None
    targets_out: str | None = None
    kind: str = "eigenvalue"
    n_min: int = 4
    n_max: int = 32
    lemma: str = "all"
    output: str | None = None
    plot_data: str | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InvalidInputError(f"unknown command {self.command!r}")
        if self.m is not None and self.m < 1:
            raise InvalidInputError("--m must be >= 1")
        BoundaryCondition.parse(self.bc)
        if self.n_gal < 8:
            raise InvalidInputError("--n-gal must be >= 8")
        if self.command in ("spectrum",) and self.count > self.n_gal // 2:
            raise InvalidInputError("--count must not exceed n_gal/2")
        if self.command in ("riesz", "invert") and self.n > self.n_gal // 2:
            raise InvalidInputError("--n must not exceed n_gal/2")
        if self.command in ("spectrum", "riesz", "invert") and self.grid < 4 * self.n_gal:
            raise InvalidInputError("--grid must be at least 4 * n_gal")
        if self.grid < 3:
            raise InvalidInputError("--grid must be >= 3")
        if self.tol < 0 or self.max_iter < 0:
            raise InvalidInputError("--tol and --max-iter must be nonnegative")

    def echo(self) -> dict:
        return asdict(self)

    @property
    def order(self) -> int:
        return 1 if self.m is None else self.m


def parse_potential(text: str) -> Potential:
    """``zero``, ``const:<c>``, ``cos:<c0>,<c1>,...`` or a path to a potential JSON file."""
    if text == "zero":
        return zero_potential()
    if text.startswith("const:"):
        return constant_potential(_number(text[6:]))
    if text.startswith("cos:"):
        return Potential([_number(v) for v in text[4:].split(",")])
    path = Path(text)
    if not path.exists():
        raise InvalidInputError(f"potential file {text!r} not found")
    return Potential.from_json(_load_json(path))


def _number(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise InvalidInputError(f"not a number: {s!r}") from None


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file mirroring the flags")
    common.add_argument("--m", type=int)
    common.add_argument("--bc", choices=["dirichlet", "dirichlet_neumann", "d", "dn"])
    common.add_argument("--q", help="zero | const:<c> | cos:<c0>,<c1>,... | path")
    common.add_argument("--count", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--n-gal", dest="n_gal", type=int)
    common.add_argument("--grid", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--output", "-o")
    common.add_argument("--plot-data", dest="plot_data", help="CSV path for plot-ready columns")

    p = argparse.ArgumentParser(prog="borg2m", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("spectrum", parents=[common], help="eigenvalues and eigenfunctions")
    s.add_argument("--targets-out", dest="targets_out",
                   help="also write both spectra as an inversion target file")
    sub.add_parser("green", parents=[common], help="contour spectral projection kernel")
    a = sub.add_parser("asymptotics", parents=[common], help="decay-rate sweeps")
    a.add_argument("--kind", choices=["eigenvalue", "eigenfunction", "product"])
    a.add_argument("--q2", help="second potential for --kind product")
    a.add_argument("--n-min", dest="n_min", type=int)
    a.add_argument("--n-max", dest="n_max", type=int)
    r = sub.add_parser("riesz", parents=[common], help="Riesz criterion and frame bounds")
    r.add_argument("--q1")
    r.add_argument("--q2")
    i = sub.add_parser("invert", parents=[common], help="reconstruct q from two spectra")
    i.add_argument("--targets")
    lm = sub.add_parser("lemmas", parents=[common], help="integral inequality and kernel bound sweeps")
    lm.add_argument("--lemma", choices=["all", "31", "32", "kernel"])
    return p


def make_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    values = {}
    if ns.config:
        cfg = _load_json(ns.config)
        if not isinstance(cfg, dict):
            raise InvalidInputError("config file must hold a JSON object")
        values.update({k.replace("-", "_"): v for k, v in cfg.items()})
    values.update({k: v for k, v in vars(ns).items() if v is not None and k != "config"})
    if ns.command == "green":
        values.setdefault("grid", 129)
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(values) - known)
    if unknown:
        raise InvalidInputError(f"unknown config keys: {', '.join(unknown)}")
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# output


def _write(cfg: RunConfig, payload: dict) -> str:
    text = bio.dumps({"config": cfg.echo(), **payload})
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def emit_plot_data(report, path, cfg: RunConfig | None = None) -> Path:
    """Plot-ready CSV for any report type the commands produce."""
    pre = cfg.echo() if cfg is not None else None
    if isinstance(report, DecayReport):
        return bio.write_csv(path, ["n", "residual", "fitted"], report.csv_rows(), pre)
    if isinstance(report, ReconstructionReport):
        return bio.write_csv(path, ["iteration", "residual"], report.csv_rows(), pre)
    if isinstance(report, RieszVerdict):
        return bio.write_csv(path, ["k", "distance_squared", "cumulative"], report.csv_rows(), pre)
    if isinstance(report, SpectralData):
        return bio.write_csv(path, ["n", "eigenvalue", "free_eigenvalue", "deviation"],
                             report.csv_rows(), pre)
    arr = np.asarray(report)
    if arr.ndim == 2:
        # grid x grid kernel matrix; no header row
        return bio.write_csv(path, None, (list(map(float, row)) for row in arr), pre)
    raise InvalidInputError(f"no plot format for {type(report).__name__}")


# ---------------------------------------------------------------------------
# commands


def _spectrum(cfg: RunConfig) -> int:
    q = parse_potential(cfg.q)
    bc = BoundaryCondition.parse(cfg.bc)
    sd = compute_spectrum(OperatorSpec(cfg.order, q, bc), cfg.n_gal, cfg.count, Grid(cfg.grid))
    _write(cfg, {"spectrum": sd.to_json()})
    if cfg.targets_out:
        other = DIRICHLET_NEUMANN if bc is DIRICHLET else DIRICHLET
        sd2 = compute_spectrum(OperatorSpec(cfg.order, q, other), cfg.n_gal, cfg.count, Grid(8))
        pair = {bc: sd.eigenvalues, other: sd2.eigenvalues}
        t = SpectraTarget(cfg.order, np.real(pair[DIRICHLET]), np.real(pair[DIRICHLET_NEUMANN]))
        Path(cfg.targets_out).write_text(bio.dumps(t.to_json()))
    if cfg.plot_data:
        emit_plot_data(sd, cfg.plot_data, cfg)
    return EXIT_OK


def _green(cfg: RunConfig) -> int:
    q = parse_potential(cfg.q)
    grid = Grid(cfg.grid)
    P = spectral_projection(cfg.bc, cfg.order, q, cfg.n, grid=grid)
    P = np.real_if_close(P, tol=1e6)
    trace = complex(grid.integrate(np.diag(P)))
    _write(cfg, {"n": cfg.n, "grid_size": grid.size,
                 "trace": [trace.real, trace.imag], "projection": bio.encode_array(P)})
    if cfg.plot_data:
        emit_plot_data(np.real(P), cfg.plot_data, cfg)
    return EXIT_OK


def _asymptotics(cfg: RunConfig) -> int:
    q = parse_potential(cfg.q)
    ns = np.arange(cfg.n_min, cfg.n_max + 1)
    if cfg.kind == "eigenvalue":
        ns, res, notes = eigenvalue_residuals(q, cfg.order, ns, cfg.bc, cfg.n_gal)
        rep = fit_decay(ns, res, False, -2.0)
    elif cfg.kind == "eigenfunction":
        ns, res, notes = eigenfunction_sup_errors(q, cfg.order, ns, cfg.bc, cfg.n_gal, Grid(cfg.grid))
        rep = fit_decay(ns, res, True, -(2.0 * cfg.order - 1))
    else:
        q2 = parse_potential(cfg.q2 or "zero")
        ns, res, notes = product_sup_errors(q, q2, cfg.order, ns, cfg.bc, cfg.n_gal, Grid(cfg.grid))
        rep = fit_decay(ns, res, True, -(2.0 * cfg.order - 1))
    payload = rep.to_json()
    payload["notes"] = list(rep.notes) + notes
    _write(cfg, {"decay": payload})
    if cfg.plot_data:
        emit_plot_data(rep, cfg.plot_data, cfg)
    return EXIT_OK


def _riesz(cfg: RunConfig) -> int:
    q1 = parse_potential(cfg.q1 or cfg.q)
    q2 = parse_potential(cfg.q2 or cfg.q1 or cfg.q)
    v = riesz_criterion(q1, q2, cfg.order, cfg.n, Grid(cfg.grid), cfg.n_gal)
    _write(cfg, {"verdict": v.to_json()})
    if cfg.plot_data:
        emit_plot_data(v, cfg.plot_data, cfg)
    return EXIT_OK


def _invert(cfg: RunConfig) -> int:
    if not cfg.targets:
        raise InvalidInputError("invert needs --targets")
    t = SpectraTarget.from_json(_load_json(cfg.targets))
    if t.N > cfg.n_gal // 2:
        raise InvalidInputError("target length exceeds n_gal/2")
    try:
        rep = reconstruct(t, cfg.n_gal, Grid(cfg.grid), cfg.tol, cfg.max_iter)
    except IllConditionedError as exc:
        _write(cfg, {"report": exc.report.to_json()})
        raise
    _write(cfg, {"report": rep.to_json()})
    if cfg.plot_data:
        emit_plot_data(rep, cfg.plot_data, cfg)
    return EXIT_OK if rep.converged else EXIT_NUMERIC


def _lemmas(cfg: RunConfig) -> int:
    ms = [1, 2, 3] if cfg.m is None else [cfg.m]
    rows = []
    if cfg.lemma in ("all", "31"):
        for m in ms:
            for x in (1.5, 2, 3, 5, 10, 100):
                c = verify_lemma_31(x, m)
                rows.append(["31", float(x), m, c.lhs, c.rhs, c.lhs / c.rhs, c.holds])
    if cfg.lemma in ("all", "32"):
        for m in ms:
            for x in 2.0 ** np.arange(1, 11):
                c = verify_lemma_32(float(x), m)
                rows.append(["32", float(x), m, c.lhs, c.rhs, c.lhs / c.rhs, c.holds])
    if cfg.lemma in ("all", "kernel"):
        js = np.arange(cfg.n_min, cfg.n_max + 1)
        for m in [mm for mm in ms if mm <= 2]:
            ratios, slope = kernel_bound_sweep(js, m)
            rows += [["kernel", float(j), m, r, 1.0, r, bool(abs(slope) <= 0.1)]
                     for j, r in zip(js, ratios)]
    header = ["check", "x_or_j", "m", "lhs", "rhs", "ratio", "holds"]
    text = bio.csv_text(header, ([r[0], r[1], r[2], r[3], r[4], r[5], str(r[6]).lower()]
                                 for r in rows), cfg.echo())
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


HANDLERS = {"spectrum": _spectrum, "green": _green, "asymptotics": _asymptotics,
            "riesz": _riesz, "invert": _invert, "lemmas": _lemmas}


@contextlib.contextmanager
def _thread_limit():
    n = os.environ.get("BORG2M_THREADS")
    if not n:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=max(1, int(n))):
        yield


def _diagnostic(cfg: RunConfig | None, exc: Exception) -> None:
    target = Path(cfg.output + ".diagnostic.json") if cfg and cfg.output else Path(
        "borg2m-diagnostic.json")
    bio.write_json({"config": cfg.echo() if cfg else None, "error": type(exc).__name__,
                    "message": str(exc)}, target)


def run(cfg: RunConfig) -> int:
    with _thread_limit():
        return HANDLERS[cfg.command](cfg)


def main(argv=None) -> int:
    cfg = None
    try:
        argv = sys.argv[1:] if argv is None else list(argv)
        cfg = make_config(argv)
        return run(cfg)
    except BrokenPipeError:
        return EXIT_OK
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INPUT
    except (InvalidInputError, ValueError, OSError, KeyError) as exc:
        # InvalidInputError covers parse and validation; bare ValueError
        # comes from malformed file contents
        if isinstance(exc, Borg2mError) and not isinstance(exc, InvalidInputError):
            _diagnostic(cfg, exc)
            print(f"borg2m: numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"borg2m: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (Borg2mError, ArithmeticError, np.linalg.LinAlgError) as exc:
        _diagnostic(cfg, exc)
        print(f"borg2m: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
