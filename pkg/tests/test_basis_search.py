import math

import numpy as np
import pytest
from scipy.optimize import brentq

from basis_search import (
    basis_at,
    build_path,
    diagonal_probabilities_formula,
    entropy_along_path,
    find_target_basis,
    fourier_basis,
    path_unitary,
    transition_unitary,
)
from classical_types import entropy_bits, shannon_entropy
from errors import ConvergenceError, DomainError, InvalidInputError
from quantum_state import (
    OrthonormalBasis,
    dephase,
    diagonal_state,
    haar_unitary,
    maximally_mixed,
    measurement_diagonal,
    pure_state,
    random_density_matrix,
    spectral_decomposition,
    standard_basis,
    von_neumann_entropy,
)


def binary_entropy(p):
    return entropy_bits(np.array([p, 1.0 - p]))


# --- Construction ---

def test_fourier_basis_of_a_single_state_is_unchanged():
    np.testing.assert_allclose(fourier_basis(standard_basis(1)).vectors, [[1.0]], atol=1e-15)


def test_fourier_basis_for_two_levels():
    vectors = fourier_basis(standard_basis(2)).vectors
    np.testing.assert_allclose(vectors[:, 0], np.array([-1.0, 1.0]) / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(vectors[:, 1], np.array([1.0, 1.0]) / np.sqrt(2), atol=1e-15)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_fourier_overlaps_are_uniform(d, rng):
    b0 = OrthonormalBasis(vectors=haar_unitary(d, rng))
    overlaps = np.abs(b0.vectors.conj().T @ fourier_basis(b0).vectors) ** 2
    np.testing.assert_allclose(overlaps, np.full((d, d), 1.0 / d), atol=1e-12)
    rho = diagonal_state(rng.dirichlet(np.ones(d)))
    np.testing.assert_allclose(
        measurement_diagonal(rho, fourier_basis(standard_basis(d))).as_array(), np.full(d, 1.0 / d), atol=1e-12
    )


def test_transition_unitary(rng):
    b0 = OrthonormalBasis(vectors=haar_unitary(3, rng))
    np.testing.assert_allclose(transition_unitary(b0, b0), np.eye(3), atol=1e-12)
    b1 = fourier_basis(standard_basis(2))
    w = transition_unitary(standard_basis(2), b1)
    np.testing.assert_allclose(w, b1.vectors, atol=1e-15)
    with pytest.raises(InvalidInputError):
        transition_unitary(standard_basis(2), standard_basis(3))


# --- Path ---

@pytest.mark.parametrize("rho", [maximally_mixed(3), diagonal_state([0.9, 0.1])])
def test_path_endpoints(rho):
    path = build_path(rho)
    np.testing.assert_allclose(path_unitary(path, 0.0), np.eye(rho.d), atol=1e-12)
    np.testing.assert_allclose(path_unitary(path, 1.0), path.transition, atol=1e-10)
    assert np.all((path.phases >= 0.0) & (path.phases < 2 * np.pi))


def test_path_unitaries_are_unitary_and_compose(rng):
    path = build_path(random_density_matrix(3, rng))
    for t in rng.uniform(0.0, 1.0, size=20):
        u = path_unitary(path, t)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(3), atol=1e-12)
    s, t = 0.3, 0.45
    np.testing.assert_allclose(path_unitary(path, s) @ path_unitary(path, t), path_unitary(path, s + t), atol=1e-10)


def test_path_parameter_range_is_checked():
    path = build_path(pure_state(2))
    with pytest.raises(InvalidInputError, match="outside"):
        path_unitary(path, 1.5)


def test_entropy_along_path_endpoints():
    skewed = diagonal_state([0.9, 0.1])
    path = build_path(skewed)
    assert entropy_along_path(skewed, path, 0.0) == pytest.approx(0.468995593589281, abs=1e-9)
    assert entropy_along_path(skewed, path, 1.0) == pytest.approx(1.0, abs=1e-9)
    pure = pure_state(2)
    assert entropy_along_path(pure, build_path(pure), 0.0) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_entropy_grid_stays_in_range_and_matches_formula(d, rng):
    rho = random_density_matrix(d, rng)
    path = build_path(rho)
    assert entropy_along_path(rho, path, 0.0) == pytest.approx(von_neumann_entropy(rho), abs=1e-9)
    assert entropy_along_path(rho, path, 1.0) == pytest.approx(math.log2(d), abs=1e-9)
    for t in np.linspace(0.0, 1.0, 101):
        entropy = entropy_along_path(rho, path, t)
        assert -1e-12 <= entropy <= math.log2(d) + 1e-12
        assert entropy == pytest.approx(shannon_entropy(diagonal_probabilities_formula(rho, path, t)), abs=1e-12)


def test_diagonal_formula_examples():
    skewed = diagonal_state([0.9, 0.1])
    path = build_path(skewed)
    np.testing.assert_allclose(diagonal_probabilities_formula(skewed, path, 0.0).as_array(), [0.9, 0.1], atol=1e-12)
    np.testing.assert_allclose(diagonal_probabilities_formula(skewed, path, 1.0).as_array(), [0.5, 0.5], atol=1e-12)


def test_diagonal_formula_matches_measurement(rng):
    for k in range(50):
        d = 2 + k % 2
        rho = random_density_matrix(d, rng)
        path = build_path(rho)
        t = float(rng.uniform())
        np.testing.assert_allclose(
            diagonal_probabilities_formula(rho, path, t).as_array(),
            measurement_diagonal(rho, basis_at(path, t)).as_array(),
            atol=1e-12,
        )


# --- Root finding ---

def test_target_equal_to_source_entropy_returns_eigenbasis(rng):
    rho = random_density_matrix(3, rng)
    result = find_target_basis(rho, von_neumann_entropy(rho))
    assert result.parameter == 0.0
    np.testing.assert_allclose(result.basis.vectors, spectral_decomposition(rho).eigenbasis.vectors, atol=1e-12)


def test_target_at_log_d_returns_fourier_basis(rng):
    rho = random_density_matrix(3, rng)
    result = find_target_basis(rho, math.log2(3))
    assert result.parameter == 1.0
    np.testing.assert_allclose(measurement_diagonal(rho, result.basis).as_array(), np.full(3, 1 / 3), atol=1e-9)


def test_pure_state_search_matches_binary_entropy_inversion():
    result = find_target_basis(pure_state(2), 0.5, tol=1e-9)
    p = brentq(lambda x: binary_entropy(x) - 0.5, 1e-9, 0.5, xtol=1e-15)
    assert p == pytest.approx(0.110028, abs=1e-6)
    q = measurement_diagonal(pure_state(2), result.basis).as_array()
    assert min(q) == pytest.approx(p, abs=1e-8)
    assert abs(result.achieved_entropy - 0.5) <= 1e-9


@pytest.mark.parametrize("d", [2, 3, 4])
def test_search_reaches_random_targets(d, rng):
    for _ in range(20):
        rho = random_density_matrix(d, rng)
        h = float(rng.uniform(von_neumann_entropy(rho), math.log2(d)))
        result = find_target_basis(rho, h, tol=1e-9)
        assert abs(von_neumann_entropy(dephase(rho, result.basis)) - h) <= 1e-9 + 1e-12
        assert result.iterations <= 200
        vectors = result.basis.vectors
        assert np.max(np.abs(vectors.conj().T @ vectors - np.eye(d))) <= 1e-12


def test_search_rejects_targets_outside_the_reachable_range():
    with pytest.raises(DomainError, match="outside"):
        find_target_basis(diagonal_state([0.9, 0.1]), 0.2)
    with pytest.raises(DomainError):
        find_target_basis(pure_state(2), 1.2)


def test_search_reports_bracket_on_iteration_cap():
    with pytest.raises(ConvergenceError, match="bracket") as info:
        find_target_basis(pure_state(3), 0.77, tol=1e-12, max_iter=3)
    lo, hi = info.value.bracket
    assert 0.0 <= lo < hi <= 1.0
