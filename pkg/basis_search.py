# basis_search.py
#
# Rotates the eigenbasis of a state towards its discrete-Fourier partner along the
# eigenphases of the transition unitary, and bisects on the path parameter until the
# dephased state reaches a requested entropy.

import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import linalg

from classical_types import Distribution, shannon_entropy
from errors import ConvergenceError, DomainError, InvalidInputError, NumericError
from quantum_state import (
    ComplexMatrix,
    DensityMatrix,
    OrthonormalBasis,
    diagonal_in_basis,
    measurement_diagonal,
    spectral_decomposition,
)
from settings import get_settings

TWO_PI = 2.0 * math.pi
IDENTITY_TOLERANCE = 1e-12
ENDPOINT_TOLERANCE = 1e-10
PHASE_SNAP = 1e-12


class UnitaryPath(BaseModel):
    """U(t) = sum_s exp(j t theta_s) |e_s><e_s|, running from I at t=0 to the transition unitary at t=1."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    phase_axes: OrthonormalBasis = Field(description="Eigenvectors of the transition unitary.")
    phases: np.ndarray = Field(description="Eigenphases theta_s in [0, 2*pi).")
    base_basis: OrthonormalBasis = Field(description="Eigenbasis of the state, eigenvalues descending.")
    transition: np.ndarray = Field(description="The transition unitary W.")

    @model_validator(mode="after")
    def _check_endpoints(self) -> "UnitaryPath":
        d = self.base_basis.d
        if self.phases.shape != (d,) or self.phase_axes.d != d or self.transition.shape != (d, d):
            raise ValueError("path components disagree on the dimension")
        if np.any(self.phases < 0.0) or np.any(self.phases >= TWO_PI):
            raise ValueError("eigenphases must lie in [0, 2*pi)")
        start = float(np.max(np.abs(self.unitary_at(0.0) - np.eye(d))))
        if start > IDENTITY_TOLERANCE:
            raise ValueError(f"U(0) differs from I by {start:.3g}")
        end = float(np.max(np.abs(self.unitary_at(1.0) - self.transition)))
        if end > ENDPOINT_TOLERANCE:
            raise ValueError(f"U(1) differs from W by {end:.3g}")
        return self

    @property
    def d(self) -> int:
        return self.base_basis.d

    def unitary_at(self, t: float) -> ComplexMatrix:
        axes = self.phase_axes.vectors
        return (axes * np.exp(1j * t * self.phases)) @ axes.conj().T


class BasisSearchResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    basis: OrthonormalBasis
    parameter: float = Field(ge=0.0, le=1.0, description="Path parameter t* of the returned basis.")
    achieved_entropy: float
    target_entropy: float
    tolerance: float = Field(gt=0.0)
    iterations: int = Field(ge=0)
    source_entropy: float = Field(description="Entropy at t=0, i.e. S(rho).")

    @model_validator(mode="after")
    def _check_accuracy(self) -> "BasisSearchResult":
        miss = abs(self.achieved_entropy - self.target_entropy)
        if miss > self.tolerance:
            raise ValueError(f"achieved entropy misses the target by {miss:.3g} > {self.tolerance:g}")
        return self


def _check_parameter(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise InvalidInputError(f"path parameter t={t} is outside [0, 1]")


# --- Construction ---

def fourier_basis(b0: OrthonormalBasis) -> OrthonormalBasis:
    """|e_l^1> = d^{-1/2} sum_k exp(j 2 pi k l / d) |e_k^0>, with k and l running over 1..d."""
    d = b0.d
    index = np.arange(1, d + 1)
    fourier = np.exp(2j * np.pi * np.outer(index, index) / d) / np.sqrt(d)
    return OrthonormalBasis(vectors=b0.vectors @ fourier)


def transition_unitary(b0: OrthonormalBasis, b1: OrthonormalBasis) -> ComplexMatrix:
    """W = sum_i |e_i^1><e_i^0|, so that W|e_i^0> = |e_i^1>."""
    if b0.d != b1.d:
        raise InvalidInputError(f"bases have different dimensions {b0.d} and {b1.d}")
    w = b1.vectors @ b0.vectors.conj().T
    residual = float(np.max(np.abs(w.conj().T @ w - np.eye(b0.d))))
    if residual > IDENTITY_TOLERANCE:
        raise NumericError(f"transition operator is not unitary: residual {residual:.3g}")
    return w


def _eigenphases(w: ComplexMatrix) -> Tuple[np.ndarray, np.ndarray]:
    # W is normal, so its complex Schur form is diagonal and the Schur vectors are
    # an orthonormal eigenbasis even when eigenphases coincide.
    try:
        triangular, axes = linalg.schur(w, output="complex")
    except linalg.LinAlgError as e:
        raise NumericError(f"Schur decomposition of the transition unitary failed: {e}") from e
    phases = np.mod(np.angle(np.diag(triangular)), TWO_PI)
    phases[phases >= TWO_PI - PHASE_SNAP] = 0.0
    return phases, axes


def build_path(rho: DensityMatrix) -> UnitaryPath:
    b0 = spectral_decomposition(rho).eigenbasis
    b1 = fourier_basis(b0)
    w = transition_unitary(b0, b1)
    phases, axes = _eigenphases(w)
    try:
        return UnitaryPath(
            phase_axes=OrthonormalBasis(vectors=axes),
            phases=phases,
            base_basis=b0,
            transition=w,
        )
    except ValueError as e:
        raise NumericError(f"eigenphase path failed its endpoint checks: {e}") from e


def path_unitary(path: UnitaryPath, t: float) -> ComplexMatrix:
    _check_parameter(t)
    return path.unitary_at(t)


def basis_at(path: UnitaryPath, t: float) -> OrthonormalBasis:
    """B^t = U(t) applied to every state of the base basis."""
    return OrthonormalBasis(vectors=path_unitary(path, t) @ path.base_basis.vectors)


# --- Entropy along the path ---

def entropy_along_path(rho: DensityMatrix, path: UnitaryPath, t: float) -> float:
    # The dephased state is diagonal in B^t, so its spectrum is the measured diagonal.
    return shannon_entropy(measurement_diagonal(rho, basis_at(path, t)))


def diagonal_probabilities_formula(rho: DensityMatrix, path: UnitaryPath, t: float) -> Distribution:
    """p_i(t) = sum_k p_k |sum_s exp(j t theta_s) <e_k^0|e_s^W><e_s^W|e_i^0>|^2, evaluated term by term."""
    _check_parameter(t)
    if rho.d != path.d:
        raise InvalidInputError(f"state has d={rho.d} but the path has d={path.d}")
    b0 = path.base_basis.vectors
    axes = path.phase_axes.vectors
    weights = np.clip(diagonal_in_basis(rho.matrix, b0), 0.0, None)
    left = b0.conj().T @ axes
    right = axes.conj().T @ b0
    amplitude = (left * np.exp(1j * t * path.phases)) @ right
    return Distribution.from_array(weights @ np.abs(amplitude) ** 2)


# --- Root finding ---

def find_target_basis(
    rho: DensityMatrix,
    h: float,
    tol: Optional[float] = None,
    path: Optional[UnitaryPath] = None,
    max_iter: Optional[int] = None,
) -> BasisSearchResult:
    """Bisect S(t) - h on [0, 1]; S(0) = S(rho) and S(1) = log2(d) bracket every admissible h."""
    settings = get_settings()
    tol = settings.bisection_tol if tol is None else tol
    max_iter = settings.bisection_max_iter if max_iter is None else max_iter
    if tol <= 0:
        raise InvalidInputError(f"tolerance must be positive, got {tol}")
    path = build_path(rho) if path is None else path

    source = entropy_along_path(rho, path, 0.0)
    ceiling = math.log2(rho.d)
    if h < source - tol or h > ceiling + tol:
        raise DomainError(
            f"target h={h:.12g} is outside [S(rho), log2(d)] = [{source:.12g}, {ceiling:.12g}]"
        )

    def found(t: float, entropy: float, iterations: int) -> BasisSearchResult:
        return BasisSearchResult(
            basis=basis_at(path, t),
            parameter=t,
            achieved_entropy=entropy,
            target_entropy=h,
            tolerance=tol,
            iterations=iterations,
            source_entropy=source,
        )

    if abs(source - h) <= tol:
        return found(0.0, source, 0)
    top = entropy_along_path(rho, path, 1.0)
    if abs(top - h) <= tol:
        return found(1.0, top, 0)
    if source > h or top < h:
        raise DomainError(f"no sign change on [0, 1]: S(0)={source:.12g}, S(1)={top:.12g}, h={h:.12g}")

    lo, hi = 0.0, 1.0
    for iteration in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        entropy = entropy_along_path(rho, path, mid)
        if abs(entropy - h) <= tol:
            return found(mid, entropy, iteration)
        if entropy < h:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"bisection did not reach |S-h|<={tol:g} within {max_iter} iterations", (lo, hi))
