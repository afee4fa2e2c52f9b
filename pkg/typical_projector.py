# typical_projector.py

import heapq
import math
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import linalg
from tqdm import tqdm

from basis_search import BasisSearchResult, find_target_basis
from classical_types import (
    SymbolSequence,
    TypicalityRule,
    TypicalSetSpec,
    admitted_counts,
    cardinality_bound,
    entropy_typical_cardinality,
    typical_mass,
)
from errors import DomainError, InvalidInputError, ResourceLimitError
from quantum_state import (
    ComplexMatrix,
    DensityMatrix,
    OrthonormalBasis,
    haar_unitary,
    hermitian_part,
    kron_power,
    measurement_diagonal,
    standard_basis,
)
from settings import get_settings

DELTA_TOLERANCE = 1e-14
MAX_SEED = 2 ** 64


# --- Value types ---

class TraceOverlapReport(BaseModel):
    """Weight tr(Pi rho^n) kept by a typical projector, with delta = 1 - overlap."""
    model_config = ConfigDict(frozen=True)

    overlap: float = Field(ge=0.0, le=1.0)
    delta: float
    fidelity_lower_bound: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_delta(self) -> "TraceOverlapReport":
        if abs(self.delta - (1.0 - self.overlap)) > DELTA_TOLERANCE:
            raise ValueError(f"delta={self.delta!r} does not equal 1 - overlap for overlap={self.overlap!r}")
        return self

    @classmethod
    def from_overlap(cls, overlap: float) -> "TraceOverlapReport":
        overlap = min(max(float(overlap), 0.0), 1.0)
        delta = 1.0 - overlap
        return cls(overlap=overlap, delta=delta, fidelity_lower_bound=max(0.0, 1.0 - 2.0 * delta))


class TypicalSubspace(BaseModel):
    """Span of the product states |e_x1 ... e_xn> of a basis, over the typical sequences x^n."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: TypicalSetSpec
    basis: OrthonormalBasis

    @model_validator(mode="after")
    def _check_dims(self) -> "TypicalSubspace":
        if self.basis.d != self.spec.d:
            raise ValueError(f"basis has d={self.basis.d} but the spec has d={self.spec.d}")
        return self

    @property
    def dimension(self) -> int:
        return entropy_typical_cardinality(self.spec)


class DimensionReport(NamedTuple):
    dimension: int
    bound: float


class UpsilonEstimate(BaseModel):
    """Numerical rank of the span of U^n applied to a typical subspace over sampled unitaries U."""
    model_config = ConfigDict(frozen=True)

    estimated_dimension: int = Field(ge=0)
    samples_used: int = Field(ge=1)
    seed: int = Field(ge=0, lt=MAX_SEED)
    bound: float
    ambient_dimension: int = Field(gt=0)
    rank_history: Tuple[int, ...] = Field(description="Rank after each sample.")

    @model_validator(mode="after")
    def _check_rank(self) -> "UpsilonEstimate":
        if self.estimated_dimension > min(self.ambient_dimension, self.bound):
            raise ValueError(f"rank {self.estimated_dimension} exceeds min(d^n, bound)")
        return self


# --- Members and dimensions ---

def _arrangements(counts: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """Distinct orderings of the multiset with counts[a] copies of symbol a+1, in lexicographic order."""
    items = [symbol for symbol, c in enumerate(counts, start=1) for _ in range(c)]
    while True:
        yield tuple(items)
        i = len(items) - 2
        while i >= 0 and items[i] >= items[i + 1]:
            i -= 1
        if i < 0:
            return
        j = len(items) - 1
        while items[j] <= items[i]:
            j -= 1
        items[i], items[j] = items[j], items[i]
        items[i + 1:] = reversed(items[i + 1:])


def typical_members(spec: TypicalSetSpec, cap: Optional[int] = None) -> Iterator[SymbolSequence]:
    """Every member of the typical set, lexicographically, merged from per-type-class streams."""
    cap = get_settings().member_cap if cap is None else cap
    total = entropy_typical_cardinality(spec)
    if total > cap:
        raise ResourceLimitError(f"typical members for n={spec.n}, d={spec.d}", total, cap)
    streams = [_arrangements(row) for block in admitted_counts(spec) for row in block.tolist()]
    return (SymbolSequence(symbols=symbols) for symbols in heapq.merge(*streams))


def subspace_dimension(spec: TypicalSetSpec) -> DimensionReport:
    return DimensionReport(dimension=entropy_typical_cardinality(spec), bound=cardinality_bound(spec))


def member_indices(spec: TypicalSetSpec) -> np.ndarray:
    """Row-major positions of the typical product states inside the d^n-dimensional product basis."""
    place = spec.d ** np.arange(spec.n - 1, -1, -1, dtype=np.int64)
    return np.array(
        [int(np.dot(np.asarray(seq.symbols, dtype=np.int64) - 1, place)) for seq in typical_members(spec)],
        dtype=np.int64,
    )


def _check_basis(basis: OrthonormalBasis, spec: TypicalSetSpec) -> None:
    if basis.d != spec.d:
        raise InvalidInputError(f"basis has d={basis.d} but the spec has d={spec.d}")


def typical_product_states(basis: OrthonormalBasis, spec: TypicalSetSpec, cap: Optional[int] = None) -> ComplexMatrix:
    """Columns |e_x1 ... e_xn> for the typical x^n; an orthonormal generating set of the subspace."""
    _check_basis(basis, spec)
    return kron_power(basis.vectors, spec.n, cap)[:, member_indices(spec)]


def dense_projector(basis: OrthonormalBasis, spec: TypicalSetSpec, cap: Optional[int] = None) -> ComplexMatrix:
    columns = typical_product_states(basis, spec, cap)
    return hermitian_part(columns @ columns.conj().T)


# --- Trace overlaps ---

def trace_overlap_product(
    rho: DensityMatrix,
    basis: OrthonormalBasis,
    spec: TypicalSetSpec,
    cap: Optional[int] = None,
) -> TraceOverlapReport:
    """tr(Pi rho^n) through the product identity: a type-class sum over the measured diagonal of rho."""
    _check_basis(basis, spec)
    q = measurement_diagonal(rho, basis).as_array()
    return TraceOverlapReport.from_overlap(typical_mass(q, spec, cap))


def dense_trace_overlap(
    rho: DensityMatrix,
    basis: OrthonormalBasis,
    spec: TypicalSetSpec,
    cap: Optional[int] = None,
) -> float:
    """Reference value of tr(Pi rho^n) from explicit d^n x d^n matrices."""
    projector = dense_projector(basis, spec, cap)
    power = kron_power(rho.matrix, spec.n, cap)
    return float(np.real(np.einsum("ij,ji->", projector, power)))


def _check_target(rho: DensityMatrix, h: float) -> float:
    ceiling = math.log2(rho.d)
    if h > ceiling + get_settings().membership_slack:
        raise DomainError(f"target h={h:.12g} exceeds log2(d)={ceiling:.12g}")
    return min(h, ceiling)


def preserved_weight_curve(
    rho: DensityMatrix,
    h: float,
    epsilon: float,
    ns: Sequence[int],
    tol: Optional[float] = None,
    rule: TypicalityRule = "two-sided",
) -> Tuple[BasisSearchResult, List[TraceOverlapReport]]:
    """One basis search at entropy h, then the rotated-basis overlap for every block length in ns."""
    h = _check_target(rho, h)
    search = find_target_basis(rho, h, tol)
    reports = [
        trace_overlap_product(rho, search.basis, TypicalSetSpec(n=n, d=rho.d, h=h, epsilon=epsilon, rule=rule))
        for n in ns
    ]
    return search, reports


def preserved_weight(
    rho: DensityMatrix,
    h: float,
    epsilon: float,
    n: int,
    tol: Optional[float] = None,
) -> TraceOverlapReport:
    """Weight of rho^n kept by the typical subspace of the basis where the dephased entropy is h >= S(rho)."""
    _, reports = preserved_weight_curve(rho, h, epsilon, [n], tol)
    return reports[0]


# --- Universal subspace dimension ---

def log2_upsilon_dimension_bound(n: int, d: int, h: float, epsilon: float) -> float:
    if n < 1 or d < 1:
        raise InvalidInputError(f"n and d must be positive, got n={n}, d={d}")
    if h < 0 or epsilon <= 0:
        raise InvalidInputError(f"need h >= 0 and epsilon > 0, got h={h}, epsilon={epsilon}")
    return (d * d + d) * math.log2(n + 1) + n * (h + epsilon)


def upsilon_dimension_bound(n: int, d: int, h: float, epsilon: float) -> float:
    exponent = log2_upsilon_dimension_bound(n, d, h, epsilon)
    return math.inf if exponent >= 1024 else 2.0 ** exponent


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _extend_span(span: ComplexMatrix, images: ComplexMatrix, rtol: float) -> ComplexMatrix:
    """Append to the orthonormal columns of `span` the directions of `images` it does not yet cover."""
    if images.shape[1] == 0:
        return span
    scale = max(float(linalg.norm(images, 2)), 1.0)
    residual = images - span @ (span.conj().T @ images)
    residual -= span @ (span.conj().T @ residual)
    left, singular, _ = linalg.svd(residual, full_matrices=False)
    return np.hstack([span, left[:, singular > rtol * scale]])


def estimate_upsilon_dimension(
    spec: TypicalSetSpec,
    samples: int,
    seed: int,
    basis: Optional[OrthonormalBasis] = None,
    identity_first: bool = False,
    cap: Optional[int] = None,
    progress: bool = False,
) -> UpsilonEstimate:
    if samples < 1:
        raise InvalidInputError(f"samples must be at least 1, got {samples}")
    if not 0 <= seed < MAX_SEED:
        raise InvalidInputError(f"seed must be an unsigned 64-bit integer, got {seed}")
    basis = standard_basis(spec.d) if basis is None else basis
    generators = typical_product_states(basis, spec, cap)
    ambient = generators.shape[0]
    rtol = get_settings().rank_rtol

    span = np.zeros((ambient, 0), dtype=np.complex128)
    history: List[int] = []
    for index in tqdm(range(samples), desc="Haar samples", disable=not progress):
        if identity_first and index == 0:
            unitary = np.eye(spec.d, dtype=np.complex128)
        else:
            unitary = haar_unitary(spec.d, _sample_rng(seed, index))
        span = _extend_span(span, kron_power(unitary, spec.n, cap) @ generators, rtol)
        history.append(span.shape[1])
        if span.shape[1] == ambient:
            break

    return UpsilonEstimate(
        estimated_dimension=history[-1],
        samples_used=len(history),
        seed=seed,
        bound=upsilon_dimension_bound(spec.n, spec.d, spec.h, spec.epsilon),
        ambient_dimension=ambient,
        rank_history=tuple(history),
    )
