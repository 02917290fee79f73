import math

import numpy as np
from scipy.stats import norm

from pmf.bench import time_update_error
from pmf.dynamics import CtModel
from pmf.grid import PMD, MovingGrid, advance_grid, build_grid, pmd_from_pdf
from pmf.models import ConvergenceConfig
from pmf.solvers.spectral import (
    FreqPMD,
    WaveNumbers,
    dft_forward,
    dft_inverse,
    first_deriv_coeffs,
    psi_step,
    second_deriv_coeffs,
    spectral_derivative1,
    spectral_derivative2,
    spectral_predict,
    spectral_transition,
    wave_numbers,
)

CFG = ConvergenceConfig()


def periodic_line(N, L=2 * math.pi):
    """Grid whose first point sits at x = 0 and whose period is L."""
    spacing = L / N
    return MovingGrid(N_pa=N, B=[[spacing]], center=[(N - 1) / 2 * spacing])


def max_error(density, N, solver, cfg=CFG):
    return float(np.abs(time_update_error(cfg, density, N, solver)[1]).max())


def test_dft_constant():
    g = periodic_line(8)
    f = dft_forward(PMD(weights=np.full(8, 2.5), grid=g))
    assert abs(f.coeffs[0] - 2.5) < 1e-15
    assert np.abs(f.coeffs[1:]).max() < 1e-15


def test_dft_round_trip():
    rng = np.random.default_rng(0)
    g = build_grid([0.0, 0.0], np.eye(2), 16, 3.0)
    p = PMD(weights=rng.random(g.shape), grid=g)
    back = dft_inverse(dft_forward(p))
    assert np.abs(back.weights - p.weights).max() < 1e-14
    assert back.weights.dtype == np.float64


def test_dft_cosine_mode():
    g = periodic_line(8)
    x = g.points()[:, 0]
    assert abs(x[0]) < 1e-15
    f = dft_forward(PMD(weights=np.cos(2 * x), grid=g))
    expected = np.zeros(8)
    expected[[2, 6]] = 0.5
    assert np.abs(f.coeffs - expected).max() < 1e-15


def test_dft_zero_tensor():
    g = build_grid([0.0, 0.0], np.eye(2), 8, 3.0)
    f = dft_forward(PMD(weights=np.zeros(g.shape), grid=g))
    assert not np.any(f.coeffs)
    assert not np.any(dft_inverse(f).weights)


def test_dft_inverse_rejects_imaginary_residue():
    g = periodic_line(8)
    coeffs = np.zeros(8, dtype=complex)
    coeffs[1] = 1.0
    try:
        dft_inverse(FreqPMD(coeffs=coeffs, grid=g))
    except ValueError as e:
        assert "imaginary residue" in str(e)
        return
    raise AssertionError("non-Hermitian spectrum accepted")


def test_second_deriv_coeffs():
    assert np.allclose(second_deriv_coeffs(4, 2 * math.pi), -np.array([0.0, 1.0, 4.0, 1.0]), atol=1e-15)
    assert np.allclose(second_deriv_coeffs(4, math.pi), -4 * np.array([0.0, 1.0, 4.0, 1.0]), atol=1e-14)
    try:
        second_deriv_coeffs(5, 1.0)
    except ValueError:
        return
    raise AssertionError("odd N accepted")


def test_first_deriv_coeffs_zero_nyquist():
    c1 = first_deriv_coeffs(8, 2 * math.pi)
    assert c1[4] == 0
    assert np.allclose(c1.imag, [0, 1, 2, 3, 0, -3, -2, -1])


def test_wave_numbers_use_grid_extent():
    g = build_grid([0.0, 0.0], np.diag([1.0, 4.0]), 8, 2.0)
    w = wave_numbers(g)
    assert np.allclose(w.L, g.extent)
    assert np.allclose(w.c2[1], 0.25 * w.c2[0])


def test_derivative2_constant():
    g = periodic_line(16)
    d2 = spectral_derivative2(PMD(weights=np.full(16, 3.0), grid=g), axis=0)
    assert np.abs(d2.weights).max() < 1e-13


def test_derivative2_cosine_modes():
    N = 64
    g = periodic_line(N)
    x = g.points()[:, 0]
    for s in range(N // 2):
        d2 = spectral_derivative2(PMD(weights=np.cos(s * x), grid=g), axis=0)
        assert np.abs(d2.weights + s ** 2 * np.cos(s * x)).max() < 1e-9, f"mode {s}"


def test_derivative2_periodized_gaussian():
    g = build_grid([0.0], [[1.0]], 64, 6.0)
    L = float(g.extent[0])
    x = g.points()[:, 0]
    images = [x + n * L for n in (-1, 0, 1)]
    p = sum(norm.pdf(y) for y in images)
    exact = sum((y ** 2 - 1) * norm.pdf(y) for y in images)
    d2 = spectral_derivative2(PMD(weights=p, grid=g), axis=0)
    assert np.abs(d2.weights - exact).max() <= 1e-8


def test_derivative1():
    N = 32
    g = periodic_line(N)
    x = g.points()[:, 0]
    flat = spectral_derivative1(PMD(weights=np.ones(N), grid=g), axis=0)
    assert np.abs(flat.weights).max() < 1e-14
    for s in (1, 5, 15):
        d1 = spectral_derivative1(PMD(weights=np.sin(s * x), grid=g), axis=0)
        assert np.isrealobj(d1.weights)
        assert np.abs(d1.weights - s * np.cos(s * x)).max() < 1e-10


def test_derivative_along_second_axis():
    g = MovingGrid(N_pa=16, B=np.diag([1.0, 2 * math.pi / 16]), center=[0.0, 7.5 * 2 * math.pi / 16])
    y = g.points()[:, 1].reshape(g.shape)
    d2 = spectral_derivative2(PMD(weights=np.cos(3 * y), grid=g), axis=1)
    assert np.abs(d2.weights + 9 * np.cos(3 * y)).max() < 1e-11


def test_psi_step_values():
    w = WaveNumbers(c2=(second_deriv_coeffs(8, 2 * math.pi),), L=np.array([2 * math.pi]))
    psi = psi_step(w, [0.4], 1.0)
    assert psi[0] == 1.0
    assert abs(psi[1] - 1 / 1.2) < 1e-15
    assert np.array_equal(psi_step(w, [0.0], 1.0), np.ones(8))


def test_spectral_step_conserves_and_contracts():
    rng = np.random.default_rng(12)
    for _ in range(10_000):
        a, b, c = rng.uniform(-1.0, 1.0, 3)
        m = CtModel(A=[[a, b], [c, -a]], Q=np.diag(rng.uniform(0.0, 5.0, 2)))
        g = MovingGrid(N_pa=16, B=np.diag(rng.uniform(0.05, 2.0, 2)), center=rng.uniform(-5, 5, 2))
        psi, growth, _ = spectral_transition(g, m, rng.uniform(1e-4, 2.0), 1)
        # the zero-frequency coefficient carries the mass
        assert psi[0, 0] == 1.0 and growth == 1.0
        assert np.all(np.abs(psi) <= 1.0)


def test_spectral_predict_identity_without_dynamics():
    g = build_grid([0.0], [[1.0]], 32, 5.0)
    p = pmd_from_pdf(lambda pts: norm.pdf(pts[:, 0]), g)
    q = spectral_predict(p, CtModel(A=[[0.0]], Q=[[0.0]]), 0.7, 3)
    assert np.abs(q.weights - p.weights).max() < 1e-12


def test_spectral_transition_accumulates_steps():
    g = build_grid([0.5, -0.5], np.diag([1.0, 2.0]), 8, 3.0)
    m = CtModel(A=[[0.1, -0.3], [0.3, 0.0]], Q=np.diag([0.5, 1.2]))
    psi, growth, g_end = spectral_transition(g, m, 0.4, 2)
    g1 = advance_grid(g, m.A, 0.2)
    g2 = advance_grid(g1, m.A, 0.2)
    q = np.diagonal(m.Q)
    expected = psi_step(wave_numbers(g1), q, 0.2) * psi_step(wave_numbers(g2), q, 0.2)
    assert np.abs(psi - expected).max() < 1e-14
    assert abs(growth - (1 + 0.2 * 0.1) ** 2) < 1e-15
    assert np.abs(g_end.B - g2.B).max() < 1e-14


def test_spectral_rejects_sign_flipping_step():
    g = build_grid([0.0], [[1.0]], 32, 4.0)
    p = pmd_from_pdf(lambda pts: norm.pdf(pts[:, 0]), g)
    damped = CtModel(A=[[-3.0]], Q=[[1.0]])
    for l in (1, 2):
        try:
            spectral_predict(p, damped, 1.0, l)
        except ValueError as e:
            assert "max admissible dt is 0.333333" in str(e)
            continue
        raise AssertionError(f"step 1/{l} with trace(A) = -3 accepted")
    q = spectral_predict(p, damped, 1.0, 4)
    assert abs(q.mass - 1.0) < 1e-12
    assert np.all(q.weights >= 0)


def test_spectral_requires_diagonal_q():
    g = build_grid([0.0, 0.0], np.eye(2), 8, 3.0)
    p = PMD(weights=np.ones(g.shape), grid=g)
    try:
        spectral_predict(p, CtModel(A=np.zeros((2, 2)), Q=[[1.0, 0.5], [0.5, 1.0]]), 0.5, 2)
    except ValueError as e:
        assert "diagonal" in str(e)
        return
    raise AssertionError("correlated diffusion accepted")


def test_spectral_heat_kernel_accuracy():
    assert max_error("gauss", 64, "spectral") <= 1e-4


def test_spectral_beats_fdm_on_gaussian():
    assert max_error("gauss", 64, "fdm") >= 10 * max_error("gauss", 64, "spectral")


def test_spectral_beats_fdm_on_mixture():
    assert max_error("gm", 80, "spectral") < max_error("gm", 80, "fdm")
    assert max_error("gm", 64, "spectral") * 10 <= max_error("gm", 64, "fdm")


def test_spectral_mixture_convergence():
    errors = [max_error("gm", N, "spectral") for N in (16, 32, 64)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[0] / errors[2] > 16


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"✓ {name}", flush=True)
