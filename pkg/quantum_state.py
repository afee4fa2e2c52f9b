# quantum_state.py

from functools import reduce
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import linalg

from classical_types import Distribution, entropy_bits
from errors import InvalidInputError, NumericError, ResourceLimitError
from settings import get_settings

ComplexMatrix = npt.NDArray[np.complex128]

HERMITIAN_TOLERANCE = 1e-12
TRACE_TOLERANCE = 1e-12
UNITARY_TOLERANCE = 1e-12
RECONSTRUCTION_TOLERANCE = 1e-10
DIAGONAL_CLAMP = 1e-12


def _read_only(values: Any) -> np.ndarray:
    matrix = np.array(values, dtype=np.complex128)
    matrix.setflags(write=False)
    return matrix


def _square(values: Any, what: str) -> np.ndarray:
    matrix = np.array(values, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise ValueError(f"{what} must be a non-empty square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{what} has non-finite entries")
    return matrix


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


# --- Value types ---

class DensityMatrix(BaseModel):
    """A d x d Hermitian, positive semidefinite, unit-trace operator."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _check_state(cls, value: Any) -> np.ndarray:
        matrix = _square(value, "density matrix")
        asymmetry = float(np.max(np.abs(matrix - matrix.conj().T)))
        if asymmetry > HERMITIAN_TOLERANCE:
            raise ValueError(f"Hermitian condition violated: max|M - M^dagger|={asymmetry:.3g}")
        trace_gap = abs(complex(np.trace(matrix)) - 1.0)
        if trace_gap > TRACE_TOLERANCE:
            raise ValueError(f"trace condition violated: |tr-1|={trace_gap:.3g}")
        lowest = float(linalg.eigvalsh(hermitian_part(matrix))[0])
        if lowest < -get_settings().psd_tolerance:
            raise ValueError(f"positivity condition violated: smallest eigenvalue {lowest:.3g}")
        return _read_only(matrix)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


class OrthonormalBasis(BaseModel):
    """Basis states stored as the columns of a d x d unitary."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vectors: np.ndarray

    @field_validator("vectors", mode="before")
    @classmethod
    def _check_unitary(cls, value: Any) -> np.ndarray:
        matrix = _square(value, "basis")
        residual = float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0]))))
        if residual > UNITARY_TOLERANCE:
            raise ValueError(f"basis is not orthonormal: max|U^dagger U - I|={residual:.3g}")
        return _read_only(matrix)

    @property
    def d(self) -> int:
        return self.vectors.shape[0]

    def vector(self, index: int) -> np.ndarray:
        return self.vectors[:, index]


class SpectralDecomposition(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eigenvalues: np.ndarray = Field(description="Real eigenvalues in descending order.")
    eigenbasis: OrthonormalBasis

    def reconstruct(self) -> np.ndarray:
        vectors = self.eigenbasis.vectors
        return (vectors * self.eigenvalues) @ vectors.conj().T


# --- Constructors ---

def standard_basis(d: int) -> OrthonormalBasis:
    return OrthonormalBasis(vectors=np.eye(d))


def pure_state(d: int, index: int = 0) -> DensityMatrix:
    if not 0 <= index < d:
        raise InvalidInputError(f"basis index {index} is outside 0..{d - 1}")
    matrix = np.zeros((d, d), dtype=np.complex128)
    matrix[index, index] = 1.0
    return DensityMatrix(matrix=matrix)


def maximally_mixed(d: int) -> DensityMatrix:
    return DensityMatrix(matrix=np.eye(d) / d)


def diagonal_state(probs: Union[Distribution, Sequence[float]]) -> DensityMatrix:
    dist = probs if isinstance(probs, Distribution) else Distribution.from_array(probs)
    return DensityMatrix(matrix=np.diag(dist.as_array()))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a complex Ginibre matrix with the phases of diag(R) moved into Q."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = linalg.qr(z)
    diagonal = np.diag(r)
    return q * (diagonal / np.abs(diagonal))


def random_density_matrix(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityMatrix:
    """Ginibre-distributed mixed state of the given rank (full rank by default)."""
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    matrix = hermitian_part(g @ g.conj().T)
    return DensityMatrix(matrix=matrix / np.trace(matrix).real)


def kron_power(matrix: np.ndarray, n: int, cap: Optional[int] = None) -> np.ndarray:
    """Dense n-fold Kronecker power, refused beyond the dense cap."""
    if n < 1:
        raise InvalidInputError(f"tensor power must be positive, got n={n}")
    cap = get_settings().dense_cap if cap is None else cap
    size = matrix.shape[0] ** n
    if size > cap:
        raise ResourceLimitError(f"dense dimension d^n for n={n}", size, cap)
    return reduce(np.kron, [np.asarray(matrix)] * n)


# --- Spectral analysis ---

def _fix_phase(vector: np.ndarray) -> np.ndarray:
    magnitudes = np.abs(vector)
    pivot = int(np.flatnonzero(magnitudes >= magnitudes.max() - HERMITIAN_TOLERANCE)[0])
    fixed = vector * (np.conj(vector[pivot]) / magnitudes[pivot])
    fixed[pivot] = magnitudes[pivot]
    return fixed


def _cluster_basis(block: np.ndarray) -> np.ndarray:
    # The projector onto a degenerate eigenspace does not depend on the solver's
    # choice of vectors inside it; pivoted QR of the projector gives a canonical basis.
    projector = block @ block.conj().T
    q, _, _ = linalg.qr(projector, pivoting=True)
    return q[:, : block.shape[1]]


def _canonical_eigenvectors(values: np.ndarray, vectors: np.ndarray, gap: float) -> np.ndarray:
    vectors = vectors.copy()
    start = 0
    for stop in range(1, len(values) + 1):
        if stop < len(values) and values[stop - 1] - values[stop] < gap:
            continue
        if stop - start > 1:
            vectors[:, start:stop] = _cluster_basis(vectors[:, start:stop])
        start = stop
    return np.column_stack([_fix_phase(vectors[:, k]) for k in range(vectors.shape[1])])


def spectral_decomposition(rho: DensityMatrix) -> SpectralDecomposition:
    try:
        values, vectors = linalg.eigh(rho.matrix)
    except linalg.LinAlgError as e:
        raise NumericError(f"Hermitian eigensolver failed: {e}") from e
    values, vectors = values[::-1], vectors[:, ::-1]
    vectors = _canonical_eigenvectors(values, vectors, get_settings().eigen_cluster_gap)
    decomposition = SpectralDecomposition(eigenvalues=values.copy(), eigenbasis=OrthonormalBasis(vectors=vectors))
    residual = float(np.max(np.abs(decomposition.reconstruct() - rho.matrix)))
    if residual > RECONSTRUCTION_TOLERANCE:
        raise NumericError(f"spectral reconstruction residual {residual:.3g} exceeds {RECONSTRUCTION_TOLERANCE:g}")
    return decomposition


def _clamped_spectrum(values: np.ndarray) -> np.ndarray:
    tolerance = get_settings().psd_tolerance
    if values.min() < -tolerance:
        raise NumericError(f"eigenvalue {values.min():.3g} is below -{tolerance:g}")
    values = np.clip(values, 0.0, None)
    return values / values.sum()


def von_neumann_entropy(rho: DensityMatrix) -> float:
    try:
        values = linalg.eigvalsh(rho.matrix)
    except linalg.LinAlgError as e:
        raise NumericError(f"Hermitian eigensolver failed: {e}") from e
    return entropy_bits(_clamped_spectrum(values))


def _check_dims(rho: DensityMatrix, basis: OrthonormalBasis) -> None:
    if rho.d != basis.d:
        raise InvalidInputError(f"state has d={rho.d} but basis has d={basis.d}")


def diagonal_in_basis(matrix: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Real parts of <e_i|M|e_i> for the columns e_i of `vectors`."""
    return np.einsum("ki,kl,li->i", vectors.conj(), matrix, vectors).real


def measurement_diagonal(rho: DensityMatrix, basis: OrthonormalBasis) -> Distribution:
    _check_dims(rho, basis)
    q = diagonal_in_basis(rho.matrix, basis.vectors)
    if q.min() < -DIAGONAL_CLAMP:
        raise NumericError(f"diagonal entry {q.min():.3g} is negative")
    q = np.clip(q, 0.0, None)
    return Distribution.from_array(q / q.sum())


def dephase(rho: DensityMatrix, basis: OrthonormalBasis) -> DensityMatrix:
    q = measurement_diagonal(rho, basis).as_array()
    vectors = basis.vectors
    return DensityMatrix(matrix=hermitian_part((vectors * q) @ vectors.conj().T))


# --- JSON interchange ---

class DensityMatrixPayload(BaseModel):
    """On-disk form: {"d": int, "re": [[...]], "im": [[...]]}, row-major."""
    d: int = Field(gt=0)
    re: List[List[float]]
    im: List[List[float]]

    @model_validator(mode="after")
    def _check_shape(self) -> "DensityMatrixPayload":
        for name, rows in (("re", self.re), ("im", self.im)):
            if len(rows) != self.d or any(len(row) != self.d for row in rows):
                raise ValueError(f"'{name}' must be a {self.d}x{self.d} array")
        return self


def density_matrix_from_json(payload: Dict[str, Any]) -> DensityMatrix:
    data = DensityMatrixPayload.model_validate(payload)
    return DensityMatrix(matrix=np.array(data.re) + 1j * np.array(data.im))


def density_matrix_to_json(rho: DensityMatrix) -> Dict[str, Any]:
    return {"d": rho.d, "re": rho.matrix.real.tolist(), "im": rho.matrix.imag.tolist()}
