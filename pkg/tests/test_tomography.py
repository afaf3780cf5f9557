import math

import numpy as np
import pytest

from rabi_lab.hamiltonians import ModelParams
from rabi_lab.hilbert import MODE_A, MODE_B, SPIN, Truncation
from rabi_lab.tomography import (
    DensityMatrix,
    analytic_cat,
    cat_state,
    displacement_operator,
    gaussian_state,
    lab_to_squeezed,
    measurement_spinor,
    project_qubit,
    reduce,
    squeeze_operator,
    subspace_overlap,
    wigner,
)

GRID = np.linspace(-3, 3, 25)
SP_POINT = ModelParams(g=3.4, J=3.0)


def fock(n, k):
    v = np.zeros(n + 1, dtype=complex)
    v[k] = 1
    return v


def test_vacuum_wigner_closed_form():
    grid = wigner(DensityMatrix.pure(fock(10, 0)), GRID)
    xx, yy = np.meshgrid(GRID, GRID, indexing="ij")
    assert np.allclose(grid.values, np.exp(-xx**2 - yy**2) / math.pi, atol=1e-12)
    assert grid.imag_residue < 1e-12
    assert not grid.tail_warning


def test_fock_one_wigner_is_negative_at_origin():
    grid = wigner(DensityMatrix.pure(fock(10, 1)), GRID)
    xx, yy = np.meshgrid(GRID, GRID, indexing="ij")
    r2 = xx**2 + yy**2
    assert np.allclose(grid.values, (2 * r2 - 1) * np.exp(-r2) / math.pi, atol=1e-12)
    assert grid.min == pytest.approx(-1 / math.pi, abs=1e-12)


def test_coherent_state_wigner():
    alpha = 1.1 - 0.6j
    psi, lost = gaussian_state(40, alpha)
    assert lost < 1e-12
    grid = wigner(DensityMatrix.pure(psi), GRID)
    xx, yy = np.meshgrid(GRID, GRID, indexing="ij")
    x0, y0 = math.sqrt(2) * alpha.real, math.sqrt(2) * alpha.imag
    assert np.allclose(grid.values, np.exp(-(xx - x0) ** 2 - (yy - y0) ** 2) / math.pi, atol=1e-10)


def test_squeezed_vacuum_wigner_and_integral():
    r = 0.4
    psi, _ = gaussian_state(60, r_outer=r)
    x = np.linspace(-6, 6, 121)
    grid = wigner(DensityMatrix.pure(psi), x)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    # S^dag b S = b cosh r + b^dag sinh r stretches x by exp(r)
    expected = np.exp(-xx**2 * math.exp(-2 * r) - yy**2 * math.exp(2 * r)) / math.pi
    assert np.allclose(grid.values, expected, atol=1e-10)
    assert grid.integral() == pytest.approx(1.0, abs=1e-6)
    assert grid.min > -1e-10


def test_gaussian_moments():
    r, alpha = 0.3, 1.5
    psi, _ = gaussian_state(80, r_outer=r)
    n = np.arange(81)
    assert np.sum(n * np.abs(psi) ** 2) == pytest.approx(math.sinh(r) ** 2, abs=1e-10)
    psi, _ = gaussian_state(80, alpha)
    assert np.sum(n * np.abs(psi) ** 2) == pytest.approx(alpha**2, abs=1e-10)


def test_operator_forms_match_state_generation():
    r, alpha = 0.25, 0.8
    vac = fock(40, 0)
    direct = squeeze_operator(r, 40) @ displacement_operator(alpha, 40) @ vac
    psi, _ = gaussian_state(40, alpha, r_outer=r)
    assert np.allclose(direct, psi, atol=1e-10)
    assert np.allclose(lab_to_squeezed(gaussian_state(40, r_outer=r)[0], r), vac, atol=1e-10)


def test_reduce_product_and_entangled_states():
    trunc = Truncation.effective(3)
    boson = np.array([0.6, 0.8, 0, 0])
    spin = np.array([1, 1]) / math.sqrt(2)
    rho = reduce(np.kron(boson, spin), trunc, MODE_B)
    assert rho.purity() == pytest.approx(1.0)
    assert np.allclose(rho.matrix, np.outer(boson, boson))
    bell = np.zeros(trunc.dim)
    bell[trunc.basis.encode(mode_b=0, spin=0)] = bell[trunc.basis.encode(mode_b=1, spin=1)] = 1
    bell /= math.sqrt(2)
    for keep in (MODE_B, SPIN):
        assert reduce(bell, trunc, keep).purity() == pytest.approx(0.5)
    # density-matrix input gives the same reduction
    full = np.outer(bell, bell)
    assert np.allclose(reduce(full, trunc, MODE_B).matrix, reduce(bell, trunc, MODE_B).matrix)
    with pytest.raises(KeyError):
        reduce(bell, trunc, MODE_A)
    with pytest.raises(ValueError, match="norm"):
        reduce(2 * bell, trunc, MODE_B)


def test_reduce_three_factors():
    trunc = Truncation(1, 2)
    rng = np.random.default_rng(3)
    psi = rng.normal(size=trunc.dim) + 1j * rng.normal(size=trunc.dim)
    psi /= np.linalg.norm(psi)
    t = psi.reshape(2, 3, 2)
    expected = np.einsum("ais,aks->ik", t, t.conj())
    rho = reduce(psi, trunc, MODE_B)
    assert np.allclose(rho.matrix, expected)
    assert rho.trace() == pytest.approx(1.0)
    assert rho.hermiticity_defect() < 1e-14
    assert rho.min_eigenvalue() > -1e-14


def test_project_qubit():
    trunc = Truncation.effective(3)
    up, down = np.array([1, 0]), np.array([0, 1])
    b0, b1 = fock(3, 0), fock(3, 1)
    psi = (np.kron(b0, up) + np.kron(b1, down)) / math.sqrt(2)
    rest, prob = project_qubit(psi, trunc, down)
    assert prob == pytest.approx(0.5)
    assert np.allclose(rest, b1)
    with pytest.raises(ValueError, match="vanishing probability"):
        project_qubit(np.kron(b0, up), trunc, down)
    with pytest.raises(ValueError, match="normalized"):
        project_qubit(psi, trunc, np.array([1, 1]))


def test_density_matrix_checks():
    with pytest.raises(ValueError):
        DensityMatrix(np.ones((2, 3)))
    rho = DensityMatrix.pure(fock(20, 20))
    assert rho.tail_population() == pytest.approx(1.0)
    assert np.allclose(rho.populations()[-1], 1.0)


def test_cat_state_structure():
    cat = analytic_cat(SP_POINT, 140)
    assert np.linalg.norm(cat.state) == pytest.approx(1.0)
    assert cat.renormalization_defect < 1e-3
    assert cat.lobe_center == pytest.approx(math.sqrt(2) * math.exp(cat.r) * abs(cat.alpha))
    squeezed = analytic_cat(SP_POINT, 140, frame="squeezed")
    assert squeezed.lobe_center == pytest.approx(math.sqrt(2) * abs(cat.alpha))
    with pytest.raises(ValueError, match="cutoff too small"):
        cat_state(5.0, 0.5, 0.0, [0, 1], [0, 1], cutoff=10)
    with pytest.raises(ValueError, match="frame"):
        cat_state(1.0, 0.0, 0.0, [0, 1], [0, 1], cutoff=10, frame="rotating")


def test_measurement_spinor():
    plus = measurement_spinor(SP_POINT, 1)
    minus = measurement_spinor(SP_POINT, -1)
    assert np.linalg.norm(plus) == pytest.approx(1.0)
    # the branch spinors differ only in the sign of the up amplitude
    assert abs(plus[1]) == pytest.approx(1.0)
    assert abs(minus[0]) == pytest.approx(1.0)


def test_subspace_overlap():
    basis = np.eye(6)
    assert subspace_overlap(basis[:, :2], basis[:, :2]) == pytest.approx(1.0)
    assert subspace_overlap(basis[:, :2], basis[:, 2:4]) == pytest.approx(0.0)
    mixed = np.column_stack([basis[:, 0], basis[:, 2]])
    assert subspace_overlap(basis[:, :2], mixed) == pytest.approx(0.5)
    with pytest.raises(ValueError, match="dimension mismatch"):
        subspace_overlap(basis[:, :2], np.eye(5)[:, :2])
