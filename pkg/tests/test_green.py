import math

import mpmath
import numpy as np
import pytest

from borg2m.core import (
    DIRICHLET,
    DIRICHLET_NEUMANN,
    Grid,
    InvalidInputError,
    Potential,
    constant_potential,
    random_potential,
    zero_potential,
)
from borg2m.forward import compute_spectrum, galerkin_coupling, spectrum
from borg2m.core import OperatorSpec
from borg2m.green import (
    Contour,
    ContourLocalizationError,
    PoleProximityError,
    contour_localization,
    contours_disjoint,
    cosine_zeta,
    free_kernel,
    free_kernel_grid,
    free_kernel_matrix,
    kernel_bound_sweep,
    kernel_profile,
    neumann_term,
    neumann_terms_grid,
    perturbed_kernel,
    perturbed_kernel_grid,
    spectral_projection,
    static_profile,
    tail_bound,
    verify_kernel_bound,
    verify_lemma_31,
    verify_lemma_32,
)


def direct_kernel(bc, m, x, y, lam, terms=20000):
    w = bc.frequencies(np.arange(1, terms + 1))
    return (2 / np.pi) * np.sum(np.sin(w * x) * np.sin(w * y) / (lam - w ** (2 * m)))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_cosine_zeta_polylog_oracle(m):
    for phi in (0.0, 0.3, 1.7, np.pi, 5.9):
        ref = float(mpmath.re(mpmath.polylog(2 * m, mpmath.exp(1j * phi))))
        assert cosine_zeta(phi, m) == pytest.approx(ref, abs=1e-13)


def test_static_profile_half_integer():
    for theta in (0.2, 2.0, 4.5):
        w = np.arange(1, 200001) - 0.5
        ref = np.sum(np.cos(w * theta) / w ** 4)
        assert static_profile(DIRICHLET_NEUMANN, 2, theta) == pytest.approx(ref, abs=1e-12)


def test_m1_closed_form_with_sign():
    # the resolvent (lam - L)^(-1) is minus the classical Green function of L - lam
    lam = 2.3
    s = math.sqrt(lam)
    for x, y in [(0.3, 1.2), (1.0, 2.9), (2.0, 2.0)]:
        closed = math.sin(s * x) * math.sin(s * (math.pi - y)) / (s * math.sin(s * math.pi))
        assert free_kernel(DIRICHLET, 1, x, y, lam).value.real == pytest.approx(-closed, abs=1e-10)


def test_m1_dn_closed_form():
    # Dirichlet at 0, Neumann at pi: -sin(s x) cos(s (pi - y)) / (s cos(s pi)), x <= y
    lam = 1.7 + 0.4j
    s = np.sqrt(lam)
    x, y = 0.8, 2.2
    closed = np.sin(s * x) * np.cos(s * (np.pi - y)) / (s * np.cos(s * np.pi))
    assert abs(free_kernel(DIRICHLET_NEUMANN, 1, x, y, lam).value + closed) < 1e-10


@pytest.mark.parametrize("bc", [DIRICHLET, DIRICHLET_NEUMANN])
@pytest.mark.parametrize("m", [2, 3])
def test_kernel_direct_sum(bc, m):
    lam = 37.5 + 12j
    for x, y in [(0.4, 1.9), (2.5, 2.5), (3.0, 0.1)]:
        ref = direct_kernel(bc, m, x, y, lam)
        assert abs(free_kernel(bc, m, x, y, lam).value - ref) < 1e-12


def test_kernel_zero_rows_and_symmetry():
    assert free_kernel(DIRICHLET, 2, 0.0, 1.0, 3.0).value == 0
    assert free_kernel(DIRICHLET_NEUMANN, 1, 1.0, 0.0, 3.0).value == 0
    g = Grid(65)
    K = free_kernel_grid(DIRICHLET_NEUMANN, 2, g, 50 + 3j)
    assert np.array_equal(K, K.T)
    assert np.all(K[0] == 0)
    xs = np.array([0.5, 1.5])
    M = free_kernel_matrix(DIRICHLET, 2, xs, xs, 7.0)
    assert M[0, 1] == M[1, 0]
    assert M[0, 1] == pytest.approx(free_kernel(DIRICHLET, 2, 0.5, 1.5, 7.0).value.real, abs=1e-14)


def test_pole_proximity():
    with pytest.raises(PoleProximityError):
        free_kernel(DIRICHLET, 2, 1.0, 1.0, 16.0)
    with pytest.raises(PoleProximityError):
        free_kernel_grid(DIRICHLET_NEUMANN, 1, Grid(9), 2.25 + 1e-12)


def test_out_of_range_point():
    with pytest.raises(InvalidInputError):
        free_kernel(DIRICHLET, 1, -0.1, 1.0, 2.0)


@pytest.mark.parametrize("m", [1, 2])
def test_tail_bound_certifies(m):
    lam = 30.0 + 5j
    theta = np.array([0.0, 0.7, 2.2, 2 * np.pi])
    ref = kernel_profile(DIRICHLET, m, theta, lam, 100000)
    for n in (8, 16, 32):
        approx = kernel_profile(DIRICHLET, m, theta, lam, n)
        # K = F(|x-y|) - F(x+y): two profile values, so twice the profile error
        err = 2 * np.max(np.abs(approx - ref))
        assert err <= tail_bound(DIRICHLET, m, lam, n) * 1.0000001
    ev = free_kernel(DIRICHLET, m, 1.0, 2.0, lam, tol=1e-10)
    assert ev.tail_bound < 1e-10


def test_contour_geometry():
    c = Contour(4, 2)
    assert c.center == 256 and c.radius == 32
    assert not c.encloses(0.0)
    assert np.allclose(np.abs(c.nodes - c.center), c.radius)
    assert all(contours_disjoint(n, m) for n in range(1, 300) for m in (1, 2, 3, 4))
    d = Contour(3, 1, bc="dn")
    assert d.center == 6.25 and d.radius == 1.25


def test_residue_identity():
    g = Grid(33)
    for bc in (DIRICHLET, DIRICHLET_NEUMANN):
        c = Contour(3, 2, 64, bc)
        total = sum(w * free_kernel_grid(bc, 2, g, lam) for lam, w in zip(c.nodes, c.weights))
        w3 = bc.frequencies(3)
        ref = (2 / np.pi) * np.outer(np.sin(w3 * g.nodes), np.sin(w3 * g.nodes))
        assert np.max(np.abs(total - ref)) < 1e-12


def test_neumann_term_basics():
    lam = Contour(5, 2).nodes[3]
    q = Potential([0, 0, 1.0])
    assert neumann_term(DIRICHLET, 2, 0, 1.1, 2.0, lam, q) == free_kernel(DIRICHLET, 2, 1.1, 2.0, lam).value
    assert neumann_term(DIRICHLET, 2, 2, 1.1, 2.0, lam, zero_potential()) == 0
    with pytest.raises(InvalidInputError):
        neumann_term(DIRICHLET, 2, -1, 1.0, 1.0, lam, q)


def test_neumann_term_spectral_oracle():
    # G_1 = sum_{a,b} b_a(x) b_b(y) Q[a,b] / ((lam - a^4)(lam - b^4)) on a point of Gamma_5
    m = 2
    lam = Contour(5, m).nodes[3]
    q = Potential([0, 0, 1.0])
    x, y = 1.1, 2.0
    N = 400
    Q = galerkin_coupling(q.cosine(), N, DIRICHLET)
    a = np.arange(1, N + 1)
    bx = np.sqrt(2 / np.pi) * np.sin(a * x) / (lam - a ** 4.0)
    by = np.sqrt(2 / np.pi) * np.sin(a * y) / (lam - a ** 4.0)
    assert abs(neumann_term(DIRICHLET, m, 1, x, y, lam, q, Grid(257)) - bx @ Q @ by) < 1e-7


def test_neumann_terms_grid_consistent():
    g = Grid(65)
    q = Potential([0.1, 0.2])
    lam = Contour(2, 2).nodes[5]
    terms = neumann_terms_grid(DIRICHLET, 2, lam, q, g, 3)
    i, j = 20, 45
    assert abs(terms[2][i, j] - neumann_term(DIRICHLET, 2, 2, g.nodes[i], g.nodes[j], lam, q, g)) < 1e-12


def test_perturbed_kernel_zero_potential():
    lam = 20.0 + 3j
    v, rep = perturbed_kernel(DIRICHLET, 2, 0.9, 2.1, lam, zero_potential())
    assert v == free_kernel(DIRICHLET, 2, 0.9, 2.1, lam).value
    assert rep.converged


@pytest.mark.parametrize("bc", [DIRICHLET, DIRICHLET_NEUMANN])
def test_perturbed_kernel_eigen_expansion(bc):
    m = 2
    q = Potential([0.05, -0.08, 0.06, 0.03])
    g = Grid(257)
    sd = compute_spectrum(OperatorSpec(m, q, bc), n_gal=256, count=128, grid=g)
    for n in (3, 6):
        lam = Contour(n, m, bc=bc).nodes[2]
        G, rep = perturbed_kernel_grid(bc, m, lam, q, g)
        assert rep.converged and not rep.diverging
        ref = (sd.values.T / (lam - sd.eigenvalues)) @ sd.values
        assert np.max(np.abs(G - ref)) < 1e-6
        i, j = 70, 190
        v, _ = perturbed_kernel(bc, m, g.nodes[i], g.nodes[j], lam, q, grid=g)
        assert abs(v - G[i, j]) < 1e-12


def test_series_ratio_shrinks_with_n():
    m = 2
    q = Potential([0, 0.3, 0.2])
    g = Grid(129)
    ratios = []
    for n in (2, 4, 8):
        _, rep = perturbed_kernel_grid(DIRICHLET, m, Contour(n, m).nodes[0], q, g)
        ratios.append(rep.ratio)
    assert all(r < 1 for r in ratios)
    assert ratios[0] > ratios[1] > ratios[2]


def test_divergence_flag():
    g = Grid(65)
    _, rep = perturbed_kernel_grid(DIRICHLET, 1, Contour(1, 1).nodes[0], constant_potential(3.0), g)
    assert rep.diverging and not rep.converged


def test_projection_free_case():
    g = Grid(65)
    for bc in (DIRICHLET, DIRICHLET_NEUMANN):
        P = spectral_projection(bc, 2, zero_potential(), 3, grid=g)
        w = bc.frequencies(3)
        ref = (2 / np.pi) * np.outer(np.sin(w * g.nodes), np.sin(w * g.nodes))
        assert np.max(np.abs(P - ref)) < 1e-8


def test_projection_matches_eigenfunctions():
    m, n = 2, 4
    q = random_potential(np.random.default_rng(7), modes=4, norm=0.2)
    g = Grid(129)
    P = spectral_projection(DIRICHLET, m, q, n, grid=g)
    phi = spectrum(q, m, count=n, grid=g).values[n - 1]
    assert np.max(np.abs(P - np.outer(phi, phi))) < 1e-5
    assert abs(g.integrate(np.diag(P)) - 1) < 1e-5


def test_projection_localization_error():
    with pytest.raises(ContourLocalizationError):
        spectral_projection(DIRICHLET, 1, constant_potential(50.0), 3, grid=Grid(17))
    with pytest.raises(InvalidInputError):
        spectral_projection(DIRICHLET, 2, zero_potential(), 3, contour=Contour(4, 2), grid=Grid(17))


def test_contour_localization_threshold():
    sd = spectrum(constant_potential(0.0), 2, count=10)
    assert contour_localization(sd) == 1
    sd = spectrum(constant_potential(3.0), 1, count=10)
    # lambda_n = n^2 + 3 sits inside |lam - n^2| < n/2 only once n > 6
    assert contour_localization(sd) == 7


def test_first_inequality_examples():
    c = verify_lemma_31(2.0, 1)
    assert c.lhs == pytest.approx(0.25 * math.log(3), rel=1e-12)
    assert c.rhs == pytest.approx(0.5 * math.log(2), rel=1e-15)
    assert c.holds
    assert verify_lemma_31(3.0, 2).holds
    near = verify_lemma_31(1.01, 1)
    assert near.holds and near.lhs < 0.01
    assert all(verify_lemma_31(x, m).holds for x in (1.5, 2, 3, 5, 10, 100) for m in (1, 2, 3))
    with pytest.raises(InvalidInputError):
        verify_lemma_31(1.0, 1)


def test_second_inequality_m1_closed_form():
    for x in (2.0, 4.0, 50.0):
        a = x + 1
        J = a ** 2 - a / 2
        ref = math.log((a + math.sqrt(J)) / (a - math.sqrt(J))) / (2 * math.sqrt(J))
        assert verify_lemma_32(x, 1).lhs == pytest.approx(ref, rel=1e-10)


def test_second_inequality_outcomes():
    # the inequality fails for m = 1 at small x; recorded, not hidden
    assert not verify_lemma_32(4.0, 1).holds
    assert verify_lemma_32(16.0, 1).holds
    assert verify_lemma_32(4.0, 3).holds
    assert all(verify_lemma_32(2.0 ** k, m).holds for k in range(1, 11) for m in (2, 3))


def test_kernel_bound_examples():
    r = verify_kernel_bound(8, 2)
    assert np.isfinite(r) and r > 0
    ratios, slope = kernel_bound_sweep(np.arange(4, 25, 4), 1)
    # bounded: no upward trend
    assert slope <= 0.1
    assert np.all(np.isfinite(ratios))
    with pytest.raises(InvalidInputError):
        verify_kernel_bound(1, 1)
