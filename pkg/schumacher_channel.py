# schumacher_channel.py
#
# Projective compression channel on dense tensor-power states: keep the typical
# part, collapse everything outside it onto one standard typical product state.

import math
from typing import Any, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from classical_types import SymbolSequence, TypicalSetSpec
from errors import DomainError, InvalidInputError, NumericError
from quantum_state import ComplexMatrix, DensityMatrix, OrthonormalBasis, hermitian_part, kron_power
from settings import get_settings
from typical_projector import member_indices, typical_members

CHANNEL_TOLERANCE = 1e-10
DECOMPOSITION_TOLERANCE = 1e-12


def _frozen(values: Any) -> np.ndarray:
    array = np.array(values, dtype=np.complex128)
    array.setflags(write=False)
    return array


class CompressionChannel(BaseModel):
    """C(sigma) = Pi sigma Pi + sum_u <u|sigma|u> |0><0|; decoding is the identity."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    projector: np.ndarray = Field(description="Pi onto the typical subspace, D x D.")
    standard_sequence: SymbolSequence = Field(description="Typical sequence whose product state is |0>.")
    standard_state: np.ndarray = Field(description="|0>, a unit vector in the range of Pi.")
    complement: np.ndarray = Field(description="Columns |u> spanning the orthocomplement of Pi.")

    @field_validator("projector", "standard_state", "complement", mode="before")
    @classmethod
    def _as_complex(cls, value: Any) -> np.ndarray:
        return _frozen(value)

    @model_validator(mode="after")
    def _check_channel(self) -> "CompressionChannel":
        p = self.projector
        dim = p.shape[0]
        if p.shape != (dim, dim) or self.standard_state.shape != (dim,) or self.complement.shape[0] != dim:
            raise ValueError("channel components disagree on the dimension")
        if float(np.max(np.abs(p - p.conj().T))) > CHANNEL_TOLERANCE:
            raise ValueError("projector is not Hermitian")
        if float(np.max(np.abs(p @ p - p))) > CHANNEL_TOLERANCE:
            raise ValueError("projector is not idempotent")
        if float(np.linalg.norm(p @ self.standard_state - self.standard_state)) > CHANNEL_TOLERANCE:
            raise ValueError("standard state is outside the range of the projector")
        u = self.complement
        completeness = float(np.max(np.abs(p + u @ u.conj().T - np.eye(dim))))
        if completeness > CHANNEL_TOLERANCE:
            raise ValueError(f"Pi + sum |u><u| differs from I by {completeness:.3g}")
        return self

    @property
    def dimension(self) -> int:
        return self.projector.shape[0]

    @property
    def rank(self) -> int:
        return self.dimension - self.complement.shape[1]


class FidelityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    fidelity: float = Field(ge=0.0)
    projected_term: float = Field(ge=0.0, description="|tr(Pi rho^n)|^2")
    residual_term: float = Field(ge=0.0, description="sum_u |<u|rho^n|0>|^2")
    delta: float = Field(description="1 - tr(Pi rho^n)")
    lower_bound: float = Field(description="1 - 2 delta")

    @model_validator(mode="after")
    def _check_terms(self) -> "FidelityReport":
        if abs(self.fidelity - self.projected_term - self.residual_term) > DECOMPOSITION_TOLERANCE:
            raise ValueError("fidelity is not the sum of its projected and residual terms")
        if self.fidelity > 1.0 + DECOMPOSITION_TOLERANCE:
            raise ValueError(f"fidelity {self.fidelity!r} exceeds 1")
        return self


class RateReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    rate: float = Field(description="Finite-n qubits per signal.")
    limit: float = Field(description="h + eps, the large-n limit.")


def build_channel(basis: OrthonormalBasis, spec: TypicalSetSpec, cap: Optional[int] = None) -> CompressionChannel:
    if basis.d != spec.d:
        raise InvalidInputError(f"basis has d={basis.d} but the spec has d={spec.d}")
    product = kron_power(basis.vectors, spec.n, cap)
    members = member_indices(spec)
    if members.size == 0:
        raise DomainError(f"typical set for n={spec.n}, h={spec.h:g}, eps={spec.epsilon:g} is empty; no standard state")
    typical = product[:, members]
    outside = np.setdiff1d(np.arange(product.shape[1]), members)
    return CompressionChannel(
        projector=hermitian_part(typical @ typical.conj().T),
        standard_sequence=next(typical_members(spec)),
        standard_state=typical[:, 0],
        complement=product[:, outside],
    )


def _operator(sigma: Union[DensityMatrix, np.ndarray], dim: int) -> np.ndarray:
    matrix = sigma.matrix if isinstance(sigma, DensityMatrix) else np.asarray(sigma, dtype=np.complex128)
    if matrix.shape != (dim, dim):
        raise InvalidInputError(f"operator has shape {matrix.shape}, channel acts on {dim}x{dim}")
    return matrix


def apply_channel(channel: CompressionChannel, sigma: Union[DensityMatrix, np.ndarray]) -> ComplexMatrix:
    sigma = _operator(sigma, channel.dimension)
    p, u, zero = channel.projector, channel.complement, channel.standard_state
    collapsed = np.einsum("ki,kl,li->", u.conj(), sigma, u)
    return p @ sigma @ p + collapsed * np.outer(zero, zero.conj())


def channel_fidelity(
    channel: CompressionChannel,
    rho: DensityMatrix,
    n: int,
    cap: Optional[int] = None,
) -> FidelityReport:
    """F = |tr(Pi rho^n)|^2 + sum_u |<u|rho^n|0>|^2 on the dense n-fold power of rho."""
    if rho.d ** n != channel.dimension:
        raise InvalidInputError(f"d^n = {rho.d ** n} does not match the channel dimension {channel.dimension}")
    power = kron_power(rho.matrix, n, cap)
    overlap = float(np.real(np.einsum("ij,ji->", channel.projector, power)))
    amplitudes = channel.complement.conj().T @ (power @ channel.standard_state)
    projected = overlap ** 2
    residual = float(np.sum(np.abs(amplitudes) ** 2))
    delta = 1.0 - overlap
    fidelity = projected + residual
    if fidelity < max(0.0, 1.0 - 2.0 * delta) - get_settings().membership_slack:
        raise NumericError(f"fidelity {fidelity:.12g} fell below 1 - 2 delta = {1.0 - 2.0 * delta:.12g}")
    return FidelityReport(
        fidelity=fidelity,
        projected_term=projected,
        residual_term=residual,
        delta=delta,
        lower_bound=1.0 - 2.0 * delta,
    )


def compression_rate(n: int, d: int, h: float, epsilon: float) -> RateReport:
    """(d^2 + d) log2(n + 1) / n + h + eps qubits per signal."""
    if n < 1 or d < 1:
        raise InvalidInputError(f"n and d must be positive, got n={n}, d={d}")
    if h < 0 or epsilon <= 0:
        raise InvalidInputError(f"need h >= 0 and epsilon > 0, got h={h}, epsilon={epsilon}")
    return RateReport(rate=(d * d + d) * math.log2(n + 1) / n + h + epsilon, limit=h + epsilon)
