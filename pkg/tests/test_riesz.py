import json

import numpy as np
import pytest

from borg2m import io
from borg2m.core import Grid, GridFunction, InvalidInputError, random_potential, zero_potential
from borg2m.riesz import (
    DegenerateSystemError,
    FrameBounds,
    FunctionSystem,
    RieszVerdict,
    build_perturbed_system,
    build_reference_basis,
    distances_squared,
    epsilon_sweep,
    frame_bounds,
    gram_matrix,
    perturbation_sum,
    riesz_criterion,
    tail_estimate,
)

G = Grid(1024)


def test_reference_basis_orthonormal():
    e = build_reference_basis(16, G)
    assert len(e) == 33
    assert np.allclose(gram_matrix(e), np.eye(33), atol=1e-10)
    assert e.members[2].values[0] == pytest.approx(np.sqrt(2 / np.pi))
    b = frame_bounds(e)
    assert b.a_lower == pytest.approx(1, abs=1e-10) and b.A_upper == pytest.approx(1, abs=1e-10)
    with pytest.raises(InvalidInputError):
        build_reference_basis(0, G)


def test_double_angle_identity():
    z = zero_potential()
    d = build_perturbed_system(z, z, 2, 32, G)
    e = build_reference_basis(32, G)
    assert np.max(np.abs(d.matrix - e.matrix)) < 1e-12
    s = perturbation_sum(d, e)
    assert s.partial < 1e-20 and s.tail == 0
    v = riesz_criterion(z, z, 1, 8, G)
    assert v.verdict and v.sum < 1e-20
    assert v.bounds.a_lower == pytest.approx(1, abs=1e-10)
    assert v.bounds.A_upper == pytest.approx(1, abs=1e-10)


def test_system_real_and_decaying():
    rng = np.random.default_rng(11)
    q1, q2 = random_potential(rng, norm=0.2), random_potential(rng, norm=0.2)
    d = build_perturbed_system(q1, q2, 2, 16, G)
    assert not np.iscomplexobj(d.matrix)
    dist = np.sqrt(distances_squared(d, build_reference_basis(16, G)))
    n = np.arange(4, 17)
    even = dist[2 * n]
    # ln n / n^3 decay for m = 2: slope of log(dist / ln n) well below -2
    slope = np.polyfit(np.log(n), np.log(even / np.log(n)), 1)[0]
    assert slope < -2.5


def test_sum_shrinks_when_halved():
    rng = np.random.default_rng(3)
    q1, q2 = random_potential(rng, norm=0.4), random_potential(rng, norm=0.4)
    sums = [riesz_criterion(q1.scaled(t), q2.scaled(t), 2, 8, G).sum for t in (1, 0.5, 0.25)]
    assert sums[0] > sums[1] > sums[2] > 0


def test_frame_bound_cross_check():
    rng = np.random.default_rng(4)
    q1, q2 = random_potential(rng, norm=0.2), random_potential(rng, norm=0.2)
    v = riesz_criterion(q1, q2, 2, 16, G)
    assert v.verdict
    assert v.bounds.a_lower >= (1 - np.sqrt(v.sum)) ** 2 - 1e-6
    assert v.bounds.a_lower > 0


def test_gram_symmetric_psd_and_nested_bounds():
    rng = np.random.default_rng(8)
    q1, q2 = random_potential(rng, norm=0.5), random_potential(rng, norm=0.5)
    d = build_perturbed_system(q1, q2, 1, 12, G)
    Gm = gram_matrix(d)
    assert np.max(np.abs(Gm - Gm.T)) <= 1e-12
    assert np.linalg.eigvalsh(Gm).min() >= -1e-12
    prev = None
    for N in (2, 4, 8, 12):
        sub = FunctionSystem(d.members[: 2 * N + 1], d.labels[: 2 * N + 1])
        b = frame_bounds(sub)
        if prev is not None:
            assert b.a_lower <= prev.a_lower + 1e-14
            assert b.A_upper >= prev.A_upper - 1e-14
        prev = b


def test_degenerate_system():
    f = GridFunction(G, np.sin(G.nodes))
    with pytest.raises(DegenerateSystemError):
        frame_bounds(FunctionSystem((f, f), ("a", "b")))


def test_system_validation():
    with pytest.raises(InvalidInputError):
        FunctionSystem((GridFunction(Grid(8), np.zeros(8)), GridFunction(Grid(9), np.zeros(9))),
                       ("a", "b"))
    with pytest.raises(InvalidInputError):
        distances_squared(build_reference_basis(2, G), build_reference_basis(3, G))
    with pytest.raises(InvalidInputError):
        FrameBounds(0.0, 1.0, 1)


def test_tail_estimate_power_law():
    k = np.arange(0, 65, dtype=float)
    dist2 = np.zeros(65)
    dist2[1:] = k[1:] ** -4.0
    # integral of t^-4 beyond 64
    assert tail_estimate(dist2) == pytest.approx(64.0 ** -3 / 3, rel=1e-10)
    flat = np.ones(65)
    assert tail_estimate(flat) == np.inf


def test_verdict_serialization():
    rng = np.random.default_rng(2)
    q = random_potential(rng, norm=0.1)
    v = riesz_criterion(q, q, 1, 6, G)
    obj = json.loads(io.dumps(v.to_json()))
    assert set(obj) >= {"sum", "tail", "verdict", "a", "A"}
    back = RieszVerdict.from_json(obj)
    assert back.sum == v.sum and back.bounds == v.bounds
    s, verdict, bounds = v
    assert verdict is True and bounds is v.bounds
    rows = list(v.csv_rows())
    assert len(rows) == 13 and rows[-1][2] == pytest.approx(v.sum)


def test_epsilon_sweep():
    rng = np.random.default_rng(6)
    q1, q2 = random_potential(rng, norm=1.0), random_potential(rng, norm=1.0)
    lo, hi = epsilon_sweep(q1, q2, 1, 4, rtol=0.05, grid=Grid(256))
    assert 0 < lo < hi < np.inf
    assert riesz_criterion(q1.scaled(lo), q2.scaled(lo), 1, 4, Grid(256)).verdict
    assert not riesz_criterion(q1.scaled(hi), q2.scaled(hi), 1, 4, Grid(256)).verdict
