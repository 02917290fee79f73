import math

import numpy as np
from scipy.stats import norm

from pmf.dynamics import CtModel, DiscreteModel, GaussianMixture, coordinated_turn, gm_pdf
from pmf.grid import (
    PMD,
    MovingGrid,
    advance_grid,
    build_grid,
    design_covariance,
    eval_pmd,
    interpolate_weights,
    moments,
    normalize,
    pmd_from_pdf,
    regrid,
)
from pmf.solvers.spectral import spectral_predict


def line(N, spacing=1.0, center=0.0):
    return MovingGrid(N_pa=N, B=[[spacing]], center=[center])


def gaussian_pmd(N, k_sigma, var=1.0):
    g = build_grid([0.0], [[var]], N, k_sigma)
    return pmd_from_pdf(lambda pts: norm.pdf(pts[:, 0], scale=math.sqrt(var)), g)


def test_build_grid_points():
    g = build_grid([0.0], [[1.0]], 4, 2.0)
    assert np.allclose(g.points()[:, 0], [-1.5, -0.5, 0.5, 1.5])
    assert np.allclose(g.spacing, [1.0])
    assert np.allclose(g.extent, [4.0])


def test_points_on_sheared_grid():
    B = np.array([[1.0, 0.5], [0.0, 2.0]])
    g = MovingGrid(N_pa=4, B=B, center=[1.0, -1.0])
    pts = g.points().reshape(4, 4, 2)
    offsets = np.array([-1.5, -0.5, 0.5, 1.5])
    assert np.allclose(pts[2, 3], [1.0, -1.0] + B @ [offsets[2], offsets[3]])
    # moving along the second index follows the second column of B, not a coordinate axis
    assert np.allclose(pts[0, 1] - pts[0, 0], B[:, 1])


def test_build_grid_rejects_odd():
    try:
        build_grid([0.0], [[1.0]], 5, 2.0)
    except ValueError:
        return
    raise AssertionError("odd N_pa accepted")


def test_build_grid_rejects_non_spd():
    try:
        build_grid([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], 8, 2.0)
    except ValueError:
        return
    raise AssertionError("indefinite covariance accepted")


def test_build_grid_sigma_scaling():
    g = build_grid([0.0, 0.0], np.diag([1.0, 4.0]), 8, 2.0)
    assert abs(g.spacing[1] - 2 * g.spacing[0]) < 1e-15
    assert abs(g.cell_volume - g.spacing[0] * g.spacing[1]) < 1e-15


def test_advance_grid_zero_drift():
    g = build_grid([1.0, 2.0], np.diag([1.0, 4.0]), 8, 3.0)
    h = advance_grid(g, np.zeros((2, 2)), 0.7)
    assert np.array_equal(h.B, g.B) and np.array_equal(h.center, g.center)


def test_advance_grid_scalar_drift():
    g = line(8, spacing=0.5, center=1.0)
    h = advance_grid(g, [[0.3]], 2.0)
    assert abs(h.spacing[0] - 0.5 * math.exp(0.6)) < 1e-14
    assert abs(h.center[0] - math.exp(0.6)) < 1e-14


def test_advance_grid_semigroup():
    A = np.array([[0.1, -0.7], [0.7, -0.2]])
    g = build_grid([3.0, -1.0], np.diag([2.0, 0.5]), 8, 4.0)
    two_steps = advance_grid(advance_grid(g, A, 0.3), A, 0.45)
    one_step = advance_grid(g, A, 0.75)
    assert np.abs(two_steps.points() - one_step.points()).max() < 1e-12


def test_advance_grid_rotates_velocity_plane():
    alpha, dt = math.radians(30.0), 0.5
    g = build_grid(np.zeros(4), np.eye(4), 4, 2.0)
    h = advance_grid(g, coordinated_turn(alpha).A, dt)
    c, s = math.cos(alpha * dt), math.sin(alpha * dt)
    velocity = h.B[np.ix_([1, 3], [1, 3])]
    assert np.allclose(velocity, np.array([[c, -s], [s, c]]) * g.B[1, 1], atol=1e-14)


def test_pmd_from_pdf_gaussian():
    p = gaussian_pmd(64, 4.0)
    assert p.normalized and abs(p.mass - 1.0) < 1e-12
    assert int(np.argmax(p.weights)) in (31, 32)
    assert np.allclose(p.weights, p.weights[::-1], atol=1e-15)


def test_pmd_from_pdf_uniform():
    g = line(10, spacing=0.5)
    p = pmd_from_pdf(lambda pts: np.ones(len(pts)), g)
    assert np.allclose(p.weights, 1 / (10 * 0.5))


def test_pmd_from_pdf_mixture_maxima():
    gm = GaussianMixture(weights=[0.3, 0.5, 0.2], means=[-3.0, 0.0, 3.0], variances=[0.3, 0.3, 0.3])
    g = build_grid([0.0], [[9.0]], 128, 2.5)
    w = pmd_from_pdf(lambda pts: gm_pdf(gm, pts[:, 0]), g).weights
    interior = w[1:-1]
    maxima = np.sum((interior > w[:-2]) & (interior > w[2:]))
    assert maxima == 3


def test_pmd_from_pdf_unsupported():
    try:
        pmd_from_pdf(lambda pts: np.zeros(len(pts)), line(8))
    except ValueError as e:
        assert "density not supported on grid" in str(e)
        return
    raise AssertionError("all-zero density accepted")


def test_normalize():
    p = PMD(weights=np.ones(10), grid=line(10, spacing=0.5))
    q = normalize(p)
    assert np.allclose(q.weights, 0.2)
    assert np.allclose(normalize(q).weights, q.weights, rtol=1e-15)
    doubled = PMD(weights=2 * p.weights, grid=p.grid)
    assert np.allclose(normalize(doubled).weights, q.weights, rtol=1e-15)


def test_normalize_rejects_zero():
    try:
        normalize(PMD(weights=np.zeros(8), grid=line(8)))
    except ValueError:
        return
    raise AssertionError("zero weights normalized")


def test_moments_symmetric():
    g = build_grid([2.0, -1.0], np.diag([1.0, 2.0]), 16, 3.0)
    w = np.outer(np.hanning(16), np.hanning(16))
    mean, cov = moments(normalize(PMD(weights=w, grid=g)))
    assert np.allclose(mean, [2.0, -1.0], atol=1e-12)
    assert np.allclose(cov, cov.T)


def test_moments_gaussian_variance():
    for N in (16, 32, 64, 128):
        mean, cov = moments(gaussian_pmd(N, 5.0))
        assert abs(mean[0]) < 1e-12
        assert abs(cov[0, 0] - 1.0) < 1e-2


def test_moments_point_mass():
    g = line(8, spacing=0.5, center=1.0)
    w = np.zeros(8)
    w[5] = 1.0
    mean, cov = moments(normalize(PMD(weights=w, grid=g)))
    assert abs(mean[0] - g.points()[5, 0]) < 1e-15
    assert abs(cov[0, 0]) < 1e-15


def test_eval_pmd_selection():
    g = line(4, spacing=1.0)
    p = normalize(PMD(weights=[1.0, 2.0, 3.0, 4.0], grid=g))
    assert eval_pmd(p, [0.5]) == p.weights[2]
    assert eval_pmd(p, [2.01]) == 0.0
    assert eval_pmd(p, [-2.01]) == 0.0
    # boundary between cells 1 and 2 takes the lower index
    assert eval_pmd(p, [0.0]) == p.weights[1]
    assert eval_pmd(p, [-2.0]) == p.weights[0]
    assert eval_pmd(p, [2.0]) == p.weights[3]


def test_eval_pmd_integrates_to_one():
    g = advance_grid(build_grid([1.0, 1.0], np.diag([1.0, 2.0]), 8, 2.0), [[0.0, -1.0], [1.0, 0.0]], 0.4)
    rng = np.random.default_rng(0)
    p = normalize(PMD(weights=rng.random(g.shape), grid=g))
    total = eval_pmd(p, g.points()).sum() * g.cell_volume
    assert abs(total - 1.0) < 1e-12


def test_regrid_identity():
    p = gaussian_pmd(32, 4.0)
    q = regrid(p, p.grid)
    assert np.abs(q.weights - p.weights).max() < 1e-12


def test_regrid_half_cell_ramp():
    g = line(8, spacing=1.0)
    ramp = g.points()[:, 0] + 10.0
    p = PMD(weights=ramp, grid=g)
    shifted = line(8, spacing=1.0, center=0.5)
    values = interpolate_weights(p, shifted)
    expected = shifted.points()[:, 0] + 10.0
    assert np.abs(values[:-1] - expected[:-1]).max() < 1e-12
    assert values[-1] == 0.0


def test_regrid_wider_grid():
    g = line(8, spacing=1.0)
    p = normalize(PMD(weights=np.ones(8), grid=g))
    q = regrid(p, line(8, spacing=2.0))
    assert np.all(q.weights[:2] == 0) and np.all(q.weights[-2:] == 0)
    assert abs(q.mass - 1.0) < 1e-12


def test_regrid_outside_support():
    p = gaussian_pmd(16, 4.0)
    try:
        regrid(p, line(16, spacing=1.0, center=1000.0))
    except ValueError as e:
        assert "outside old support" in str(e)
        return
    raise AssertionError("disjoint regrid accepted")


def test_mass_after_solver_step():
    p = gaussian_pmd(32, 5.0)
    q = spectral_predict(p, CtModel(A=[[0.2]], Q=[[0.7]]), 0.3, 5)
    assert abs(q.mass - 1.0) < 1e-12


def test_design_covariance_adds_back_propagated_noise():
    dm = DiscreteModel(F=np.eye(2), Qd=np.diag([1.0, 2.0]), Ts=1.0)
    assert np.allclose(design_covariance(np.diag([3.0, 4.0]), dm), np.diag([4.0, 6.0]), atol=1e-14)
    c, s = math.cos(0.5), math.sin(0.5)
    rotation = DiscreteModel(F=[[c, -s], [s, c]], Qd=2.0 * np.eye(2), Ts=1.0)
    assert np.allclose(design_covariance(np.eye(2), rotation), 3.0 * np.eye(2), atol=1e-14)


def test_design_covariance_spacing_floor():
    previous = MovingGrid(N_pa=4, B=np.diag([10.0, 0.1]), center=[0.0, 0.0])
    dm = DiscreteModel(F=np.eye(2), Qd=np.zeros((2, 2)), Ts=1.0)
    design = design_covariance([[1.0, 0.5], [0.5, 1.0]], dm, previous)
    assert np.allclose(np.diagonal(design), [100.0, 1.0])
    assert abs(design[0, 1] / math.sqrt(design[0, 0] * design[1, 1]) - 0.5) < 1e-12


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"✓ {name}", flush=True)
