import math

import numpy as np
import pytest
from pydantic import ValidationError

from basis_search import find_target_basis
from classical_types import TypicalSetSpec, cardinality_bound, set_probability, shannon_entropy
from conftest import all_sequences, sequence_entropies
from errors import DomainError, ResourceLimitError
from quantum_state import (
    DensityMatrix,
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
from typical_projector import (
    TraceOverlapReport,
    TypicalSubspace,
    dense_projector,
    dense_trace_overlap,
    estimate_upsilon_dimension,
    log2_upsilon_dimension_bound,
    preserved_weight,
    subspace_dimension,
    trace_overlap_product,
    typical_members,
    upsilon_dimension_bound,
)

BALANCED = TypicalSetSpec(n=4, d=2, h=1.0, epsilon=0.1)


def symbols(spec):
    return ["".join(map(str, s.symbols)) for s in typical_members(spec)]


# --- Members and dimensions ---

def test_typical_members_are_lexicographic():
    assert symbols(BALANCED) == ["1122", "1212", "1221", "2112", "2121", "2211"]
    assert symbols(TypicalSetSpec(n=1, d=2, h=0.0, epsilon=0.1)) == ["1", "2"]
    assert symbols(TypicalSetSpec(n=4, d=2, h=0.0, epsilon=0.1)) == ["1111", "2222"]


def test_typical_members_merge_several_type_classes():
    spec = TypicalSetSpec(n=5, d=3, h=1.2, epsilon=0.2)
    members = [s.symbols for s in typical_members(spec)]
    assert members == sorted(members)
    assert len(members) == len(set(members)) == subspace_dimension(spec).dimension


def test_typical_members_cap():
    with pytest.raises(ResourceLimitError, match="typical members"):
        typical_members(TypicalSetSpec(n=12, d=2, h=1.0, epsilon=0.1), cap=100)


def test_subspace_dimension():
    report = subspace_dimension(BALANCED)
    assert report.dimension == 6
    assert report.bound == pytest.approx(cardinality_bound(BALANCED))
    assert subspace_dimension(TypicalSetSpec(n=1, d=2, h=1.0, epsilon=0.1)).dimension == 0
    assert TypicalSubspace(spec=BALANCED, basis=standard_basis(2)).dimension == 6


def test_typical_subspace_checks_dimension():
    with pytest.raises(ValidationError):
        TypicalSubspace(spec=BALANCED, basis=standard_basis(3))


@pytest.mark.parametrize("n", [4, 6, 9])
def test_upper_rule_members_and_projector_match_brute_force(n):
    spec = TypicalSetSpec(n=n, d=2, h=0.6, epsilon=0.1, rule="upper")
    sequences = all_sequences(n, 2)
    entropies = sequence_entropies(sequences, 2)
    admitted = entropies <= 0.7 + 1e-12
    members = [s.symbols for s in typical_members(spec)]
    assert members == [tuple(row) for row in sequences[admitted].tolist()]
    two_sided = {s.symbols for s in typical_members(spec.model_copy(update={"rule": "two-sided"}))}
    assert two_sided <= set(members)
    projector = dense_projector(standard_basis(2), spec)
    np.testing.assert_allclose(np.diag(projector).real, admitted.astype(float), atol=1e-15)
    assert np.trace(projector).real == pytest.approx(admitted.sum())


# --- Dense projector ---

def test_dense_projector_examples():
    assert np.count_nonzero(dense_projector(standard_basis(2), TypicalSetSpec(n=1, d=2, h=1.0, epsilon=0.1))) == 0
    np.testing.assert_allclose(dense_projector(standard_basis(2), TypicalSetSpec(n=1, d=2, h=0.0, epsilon=0.1)), np.eye(2))
    p = dense_projector(standard_basis(2), BALANCED)
    assert np.allclose(p, np.diag(np.diag(p)))
    expected = np.zeros(16)
    expected[[int(s, 2) for s in ("0011", "0101", "0110", "1001", "1010", "1100")]] = 1.0
    np.testing.assert_allclose(np.diag(p).real, expected)


def test_dense_projector_is_an_orthogonal_projector(rng):
    basis = OrthonormalBasis(vectors=haar_unitary(2, rng))
    spec = TypicalSetSpec(n=5, d=2, h=0.8, epsilon=0.2)
    p = dense_projector(basis, spec)
    assert np.max(np.abs(p @ p - p)) <= 1e-10
    assert np.max(np.abs(p - p.conj().T)) <= 1e-12
    assert np.trace(p).real == pytest.approx(subspace_dimension(spec).dimension, abs=1e-10)


def test_dense_projector_cap():
    with pytest.raises(ResourceLimitError):
        dense_projector(standard_basis(2), TypicalSetSpec(n=13, d=2, h=1.0, epsilon=0.1))


# --- Trace overlaps ---

def test_trace_overlap_examples(rng):
    basis = OrthonormalBasis(vectors=haar_unitary(2, rng))
    assert trace_overlap_product(maximally_mixed(2), basis, BALANCED).overlap == pytest.approx(0.375, abs=1e-12)
    assert trace_overlap_product(pure_state(2), standard_basis(2), BALANCED).overlap == 0.0
    spec = TypicalSetSpec(n=10, d=2, h=0.468996, epsilon=0.2)
    skewed = diagonal_state([0.9, 0.1])
    assert trace_overlap_product(skewed, standard_basis(2), spec).overlap == pytest.approx(
        set_probability(measurement_diagonal(skewed, standard_basis(2)), spec), abs=1e-15
    )


def test_overlap_report_fields():
    report = TraceOverlapReport.from_overlap(0.375)
    assert report.delta == 0.625
    assert report.fidelity_lower_bound == 0.0
    assert TraceOverlapReport.from_overlap(0.9).fidelity_lower_bound == pytest.approx(0.8)
    with pytest.raises(ValidationError):
        TraceOverlapReport(overlap=0.5, delta=0.4, fidelity_lower_bound=0.0)


def test_product_formula_matches_dense_oracle(rng):
    for n in (4, 5, 6):
        for _ in range(10):
            rho = random_density_matrix(2, rng)
            basis = OrthonormalBasis(vectors=haar_unitary(2, rng))
            spec = TypicalSetSpec(n=n, d=2, h=float(rng.uniform(0.0, 1.0)), epsilon=0.2)
            fast = trace_overlap_product(rho, basis, spec).overlap
            assert fast == pytest.approx(dense_trace_overlap(rho, basis, spec), abs=1e-10)


def test_eigenbasis_overlap_equals_classical_probability():
    rho = diagonal_state([0.9, 0.1])
    decomposition = spectral_decomposition(rho)
    p = measurement_diagonal(rho, decomposition.eigenbasis)
    previous = 0.0
    for n in (16, 64, 256):
        spec = TypicalSetSpec(n=n, d=2, h=von_neumann_entropy(rho), epsilon=0.2)
        overlap = trace_overlap_product(rho, decomposition.eigenbasis, spec).overlap
        assert overlap == pytest.approx(set_probability(p, spec), abs=1e-12)
        assert overlap > previous
        previous = overlap
    assert previous >= 0.95


def test_overlap_is_unchanged_by_dephasing_in_the_same_basis(rng):
    rho = random_density_matrix(2, rng)
    basis = OrthonormalBasis(vectors=haar_unitary(2, rng))
    spec = TypicalSetSpec(n=6, d=2, h=0.7, epsilon=0.15)
    dephased = dephase(rho, basis)
    assert dense_trace_overlap(rho, basis, spec) == pytest.approx(dense_trace_overlap(dephased, basis, spec), abs=1e-12)
    assert trace_overlap_product(rho, basis, spec).overlap == pytest.approx(
        trace_overlap_product(dephased, basis, spec).overlap, abs=1e-12
    )


def test_overlap_scales_to_long_blocks():
    rho = DensityMatrix(matrix=np.diag([0.4, 0.3, 0.2, 0.1]))
    spec = TypicalSetSpec(n=200, d=4, h=von_neumann_entropy(rho), epsilon=0.2)
    report = trace_overlap_product(rho, standard_basis(4), spec)
    assert 0.9 < report.overlap <= 1.0


def test_overlap_runs_at_n_1024_with_default_settings():
    rho = DensityMatrix(matrix=np.diag([0.4, 0.3, 0.2, 0.1]))
    spec = TypicalSetSpec(n=1024, d=4, h=von_neumann_entropy(rho), epsilon=0.2)
    report = trace_overlap_product(rho, standard_basis(4), spec)
    assert 0.999 < report.overlap <= 1.0
    narrow = trace_overlap_product(rho, standard_basis(4), spec.model_copy(update={"epsilon": 0.01}))
    assert 0.0 < narrow.overlap < report.overlap


# --- Preserved weight ---

def test_preserved_weight_for_a_pure_state():
    rho = pure_state(2)
    report = preserved_weight(rho, 0.6, 0.1, 256)
    assert report.overlap >= 0.9
    eigenbasis = TypicalSetSpec(n=256, d=2, h=0.6, epsilon=0.1)
    assert trace_overlap_product(rho, standard_basis(2), eigenbasis).overlap == 0.0
    assert trace_overlap_product(rho, standard_basis(2), eigenbasis.model_copy(update={"h": 1.0})).overlap == 0.0


def test_preserved_weight_at_source_entropy_uses_the_eigenbasis(rng):
    rho = random_density_matrix(2, rng)
    h = von_neumann_entropy(rho)
    spec = TypicalSetSpec(n=32, d=2, h=h, epsilon=0.1)
    eigenbasis = spectral_decomposition(rho).eigenbasis
    assert preserved_weight(rho, h, 0.1, 32).overlap == pytest.approx(
        trace_overlap_product(rho, eigenbasis, spec).overlap, abs=1e-12
    )


def test_preserved_weight_is_unitarily_invariant(rng):
    rho = random_density_matrix(2, rng)
    v = haar_unitary(2, rng)
    rotated = DensityMatrix(matrix=(lambda m: (m + m.conj().T) / 2)(v @ rho.matrix @ v.conj().T))
    h = 0.5 * (von_neumann_entropy(rho) + 1.0)
    first = preserved_weight(rho, h, 0.1, 64, tol=1e-12).overlap
    second = preserved_weight(rotated, h, 0.1, 64, tol=1e-12).overlap
    assert first == pytest.approx(second, abs=1e-8)


def test_preserved_weight_grows_with_block_length(rng):
    for _ in range(5):
        rho = random_density_matrix(2, rng)
        h = float(rng.uniform(von_neumann_entropy(rho), 1.0))
        short = preserved_weight(rho, h, 0.2, 16)
        long = preserved_weight(rho, h, 0.2, 256)
        assert long.overlap > short.overlap
        assert long.overlap > 0.95


def test_preserved_weight_domain():
    with pytest.raises(DomainError):
        preserved_weight(diagonal_state([0.5, 0.5]), 0.4, 0.1, 16)
    with pytest.raises(DomainError):
        preserved_weight(pure_state(2), 1.5, 0.1, 16)


# --- Universal subspace ---

def test_upsilon_bound():
    assert upsilon_dimension_bound(4, 2, 1.0, 0.1) == pytest.approx(5 ** 6 * 2 ** 4.4)
    ratio = upsilon_dimension_bound(7, 3, 1.0, 0.1) / cardinality_bound(TypicalSetSpec(n=7, d=3, h=1.0, epsilon=0.1))
    assert ratio == pytest.approx(8 ** 9)
    assert upsilon_dimension_bound(5000, 2, 1.0, 0.1) == math.inf
    assert log2_upsilon_dimension_bound(5000, 2, 1.0, 0.1) == pytest.approx(6 * math.log2(5001) + 5500)
    with pytest.raises(ValueError):
        upsilon_dimension_bound(0, 2, 1.0, 0.1)


def test_upsilon_identity_sample_gives_the_subspace_rank():
    estimate = estimate_upsilon_dimension(BALANCED, samples=1, seed=0, identity_first=True)
    assert estimate.estimated_dimension == 6
    assert estimate.rank_history == (6,)


def test_upsilon_estimate_is_bounded_monotone_and_reproducible():
    estimate = estimate_upsilon_dimension(BALANCED, samples=64, seed=7)
    assert 6 <= estimate.estimated_dimension <= 16
    assert estimate.estimated_dimension <= estimate.bound
    history = estimate.rank_history
    assert all(a <= b for a, b in zip(history, history[1:]))
    assert estimate_upsilon_dimension(BALANCED, samples=64, seed=7) == estimate
    prefix = estimate_upsilon_dimension(BALANCED, samples=2, seed=7)
    assert prefix.rank_history == history[:2]


def test_upsilon_estimate_in_a_rotated_base_basis(rng):
    basis = OrthonormalBasis(vectors=haar_unitary(2, rng))
    estimate = estimate_upsilon_dimension(BALANCED, samples=1, seed=3, basis=basis, identity_first=True)
    assert estimate.estimated_dimension == 6


def test_upsilon_estimate_validation():
    with pytest.raises(ValueError):
        estimate_upsilon_dimension(BALANCED, samples=0, seed=0)
    with pytest.raises(ValueError):
        estimate_upsilon_dimension(BALANCED, samples=1, seed=-1)
    with pytest.raises(ResourceLimitError):
        estimate_upsilon_dimension(TypicalSetSpec(n=13, d=2, h=1.0, epsilon=0.1), samples=1, seed=0)
