# experiment_tools.py

import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Type

import click
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator, model_validator

from basis_search import find_target_basis
from classical_types import (
    Distribution,
    TypicalityRule,
    TypicalSetSpec,
    entropy_typical_cardinality,
    log2_cardinality_bound,
    set_probability,
    strong_set_probability,
    type_class_count,
)
from errors import InvalidInputError
from quantum_state import (
    DensityMatrix,
    DensityMatrixPayload,
    density_matrix_from_json,
    diagonal_state,
    maximally_mixed,
    measurement_diagonal,
    pure_state,
    spectral_decomposition,
)
from schumacher_channel import build_channel, channel_fidelity, compression_rate
from settings import get_settings
from typical_projector import (
    estimate_upsilon_dimension,
    log2_upsilon_dimension_bound,
    preserved_weight_curve,
    subspace_dimension,
    trace_overlap_product,
)

Command = Literal["typical-stats", "find-basis", "overlap-curve", "fidelity-curve", "rate-table", "upsilon-dim"]
OutputFormat = Literal["csv", "json"]
MAX_SEED = 2 ** 64


# --- Density matrix sources ---

def load_density_matrix(source: str, d: Optional[int] = None) -> DensityMatrix:
    """Resolve a preset ('pure', 'maximally-mixed', 'diag:p1,p2,...') or read a JSON file."""
    if source in ("pure", "maximally-mixed"):
        if d is None:
            raise InvalidInputError(f"preset '{source}' needs the dimension --d")
        return pure_state(d) if source == "pure" else maximally_mixed(d)
    if source.startswith("diag:"):
        try:
            probs = [float(p) for p in source[len("diag:"):].split(",")]
        except ValueError as e:
            raise InvalidInputError(f"cannot parse diagonal preset '{source}': {e}") from e
        rho = diagonal_state(probs)
    else:
        payload = DensityMatrixPayload.model_validate_json(Path(source).read_text(encoding="utf-8"))
        rho = density_matrix_from_json(payload.model_dump())
    if d is not None and rho.d != d:
        raise InvalidInputError(f"density matrix from '{source}' has d={rho.d}, expected d={d}")
    return rho


# --- Configuration and tool inputs ---

class ExperimentConfig(BaseModel):
    """One CLI invocation: the command, its parameters, and where the result goes."""
    command: Command
    d: Optional[PositiveInt] = Field(default=None, description="Alphabet size / Hilbert-space dimension.")
    ns: List[PositiveInt] = Field(default_factory=list, description="Block lengths, from a comma-separated list.")
    h: Optional[float] = Field(default=None, ge=0.0, description="Target entropy in bits.")
    epsilon: Optional[float] = Field(default=None, gt=0.0, description="Entropy window half-width in bits.")
    rho_source: Optional[str] = Field(default=None, description="Preset name or path of a density-matrix JSON file.")
    seed: int = Field(default=0, ge=0, lt=MAX_SEED)
    tol: Optional[float] = Field(default=None, gt=0.0, description="Entropy tolerance of the basis search.")
    samples: PositiveInt = Field(default=64, description="Haar samples for upsilon-dim.")
    identity_first: bool = Field(default=False, description="Use U = I as the first upsilon-dim sample.")
    rule: TypicalityRule = Field(default="two-sided", description="Membership rule of the typical set (overlap-curve, fidelity-curve).")
    output: Optional[Path] = Field(default=None, description="Output file; stdout when omitted.")
    format: OutputFormat = "csv"
    quiet: bool = False
    progress: bool = False

    @field_validator("ns", mode="before")
    @classmethod
    def _split_ns(cls, value: Any) -> Any:
        if value is None:
            return []
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value


class _EntropyWindow(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    d: PositiveInt
    h: float = Field(ge=0.0)
    epsilon: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _check_ceiling(self) -> "_EntropyWindow":
        ceiling = math.log2(self.d)
        if self.h > ceiling + get_settings().membership_slack:
            raise ValueError(f"h={self.h:.12g} exceeds log2(d)={ceiling:.12g}")
        return self


class TypicalStatsInput(_EntropyWindow):
    ns: List[PositiveInt] = Field(min_length=1, description="Sequence lengths to tabulate.")
    rho: Optional[DensityMatrix] = Field(default=None, description="Optional state whose spectrum is the source law.")


class FindBasisInput(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rho: DensityMatrix
    h: float = Field(ge=0.0, description="Entropy the dephased state must reach.")
    tol: Optional[float] = Field(default=None, gt=0.0)


class OverlapCurveInput(_EntropyWindow):
    rho: DensityMatrix
    ns: List[PositiveInt] = Field(min_length=1)
    tol: Optional[float] = Field(default=None, gt=0.0)
    rule: TypicalityRule = "two-sided"


class FidelityCurveInput(OverlapCurveInput):
    pass


class RateTableInput(_EntropyWindow):
    ns: List[PositiveInt] = Field(min_length=1)


class UpsilonDimInput(_EntropyWindow):
    ns: List[PositiveInt] = Field(min_length=1)
    samples: PositiveInt
    seed: int = Field(ge=0, lt=MAX_SEED)
    identity_first: bool = False


# --- Results ---

class ExperimentOutput(BaseModel):
    """Tabular rows plus run-level values that only the JSON form carries."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rows: pd.DataFrame
    summary: Dict[str, Any] = Field(default_factory=dict)


class ExperimentReport(BaseModel):
    command: str
    summary: Dict[str, Any]
    rows: List[Dict[str, Any]]


def _rounded(value: Any, digits: int) -> Any:
    if isinstance(value, dict):
        return {key: _rounded(item, digits) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(item, digits) for item in value]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return float(f"{value:.{digits}g}") if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def render(command: str, output: ExperimentOutput, fmt: OutputFormat) -> str:
    """CSV or JSON text with a fixed column order, fixed significant digits and LF newlines."""
    digits = get_settings().significant_digits
    if fmt == "csv":
        return output.rows.to_csv(index=False, float_format=f"%.{digits}g", lineterminator="\n")
    report = ExperimentReport(
        command=command,
        summary=_rounded(output.summary, digits),
        rows=_rounded(output.rows.to_dict(orient="records"), digits),
    )
    return report.model_dump_json(indent=2) + "\n"


# --- Tools ---

class ExperimentTool(BaseModel):
    """Base for the CLI experiments; subclasses set name/description/args_schema and implement _run."""
    name: str
    description: str
    args_schema: Type[BaseModel]
    quiet: bool = False
    progress: bool = False

    def log(self, message: str) -> None:
        if not self.quiet:
            click.echo(message, err=True)

    def invoke(self, config: ExperimentConfig) -> ExperimentOutput:
        values = config.model_dump(exclude_none=True)
        if config.rho_source is not None:
            self.log(f"  - Loading density matrix from '{config.rho_source}'...")
            rho = load_density_matrix(config.rho_source, config.d)
            values["rho"] = rho
            values.setdefault("d", rho.d)
        fields = self.args_schema.model_fields
        args = self.args_schema.model_validate({key: value for key, value in values.items() if key in fields})
        self.log(f"\n[TOOL] Running '{self.name}'...")
        return self._run(**dict(args))

    def _run(self, **kwargs: Any) -> ExperimentOutput:
        raise NotImplementedError


def _spectrum(rho: DensityMatrix) -> Distribution:
    return measurement_diagonal(rho, spectral_decomposition(rho).eigenbasis)


class TypicalStatsTool(ExperimentTool):
    name: str = "typical-stats"
    description: str = (
        "Tabulates the entropy-typical set per n: type classes, exact cardinality for the two-sided "
        "and upper rules, the log2 cardinality bound and, with a state, the set probabilities of its spectrum."
    )
    args_schema: Type[BaseModel] = TypicalStatsInput

    def _run(self, d: int, h: float, epsilon: float, ns: List[int], rho: Optional[DensityMatrix] = None) -> ExperimentOutput:
        p = _spectrum(rho) if rho is not None else None
        rows = []
        for n in ns:
            spec = TypicalSetSpec(n=n, d=d, h=h, epsilon=epsilon)
            upper = spec.model_copy(update={"rule": "upper"})
            row: Dict[str, Any] = {
                "n": n,
                "type_classes": type_class_count(n, d),
                "cardinality": entropy_typical_cardinality(spec),
                "upper_cardinality": entropy_typical_cardinality(upper),
                "log2_bound": log2_cardinality_bound(spec),
            }
            if p is not None:
                row["set_probability"] = set_probability(p, spec)
                row["upper_set_probability"] = set_probability(p, upper)
                row["strong_set_probability"] = strong_set_probability(p, n, epsilon)
            self.log(f"  - n={n}: |T|={row['cardinality']}")
            rows.append(row)
        summary = {"d": d, "h": h, "epsilon": epsilon}
        if p is not None:
            summary["spectrum"] = list(p.probs)
        return ExperimentOutput(rows=pd.DataFrame(rows), summary=summary)


class FindBasisTool(ExperimentTool):
    name: str = "find-basis"
    description: str = "Finds a basis in which the dephased state has the requested entropy, by bisection along the eigenphase path."
    args_schema: Type[BaseModel] = FindBasisInput

    def _run(self, rho: DensityMatrix, h: float, tol: Optional[float] = None) -> ExperimentOutput:
        result = find_target_basis(rho, h, tol)
        self.log(f"  - t*={result.parameter:.12g} after {result.iterations} bisection steps, S={result.achieved_entropy:.12g}")
        vectors = result.basis.vectors
        rows = [
            {
                "vector": l + 1,
                "component": k + 1,
                "re": float(vectors[k, l].real),
                "im": float(vectors[k, l].imag),
                "parameter": result.parameter,
                "achieved_entropy": result.achieved_entropy,
            }
            for l in range(rho.d)
            for k in range(rho.d)
        ]
        summary = {
            "parameter": result.parameter,
            "achieved_entropy": result.achieved_entropy,
            "target_entropy": result.target_entropy,
            "source_entropy": result.source_entropy,
            "tolerance": result.tolerance,
            "iterations": result.iterations,
            "dephased_probabilities": list(measurement_diagonal(rho, result.basis).probs),
            "basis_re": vectors.real.tolist(),
            "basis_im": vectors.imag.tolist(),
        }
        return ExperimentOutput(rows=pd.DataFrame(rows), summary=summary)


class OverlapCurveTool(ExperimentTool):
    name: str = "overlap-curve"
    description: str = (
        "Weight of rho^n kept by the typical subspace of the rotated basis, per n, next to the "
        "weight kept when measuring in the eigenbasis."
    )
    args_schema: Type[BaseModel] = OverlapCurveInput

    def _run(
        self,
        d: int,
        h: float,
        epsilon: float,
        rho: DensityMatrix,
        ns: List[int],
        tol: Optional[float] = None,
        rule: TypicalityRule = "two-sided",
    ) -> ExperimentOutput:
        search, reports = preserved_weight_curve(rho, h, epsilon, ns, tol, rule)
        eigenbasis = spectral_decomposition(rho).eigenbasis
        rows = []
        for n, report in zip(ns, reports):
            spec = TypicalSetSpec(n=n, d=d, h=search.target_entropy, epsilon=epsilon, rule=rule)
            rows.append({
                "n": n,
                "overlap": report.overlap,
                "delta": report.delta,
                "fidelity_lower_bound": report.fidelity_lower_bound,
                "eigenbasis_overlap": trace_overlap_product(rho, eigenbasis, spec).overlap,
            })
            self.log(f"  - n={n}: overlap={report.overlap:.12g}")
        summary = {
            "parameter": search.parameter,
            "achieved_entropy": search.achieved_entropy,
            "source_entropy": search.source_entropy,
            "rule": rule,
        }
        return ExperimentOutput(rows=pd.DataFrame(rows), summary=summary)


class FidelityCurveTool(ExperimentTool):
    name: str = "fidelity-curve"
    description: str = "Builds the dense compression channel over the rotated-basis typical subspace and reports its fidelity per n."
    args_schema: Type[BaseModel] = FidelityCurveInput

    def _run(
        self,
        d: int,
        h: float,
        epsilon: float,
        rho: DensityMatrix,
        ns: List[int],
        tol: Optional[float] = None,
        rule: TypicalityRule = "two-sided",
    ) -> ExperimentOutput:
        search = find_target_basis(rho, h, tol)
        rows = []
        for n in ns:
            spec = TypicalSetSpec(n=n, d=d, h=search.target_entropy, epsilon=epsilon, rule=rule)
            channel = build_channel(search.basis, spec)
            report = channel_fidelity(channel, rho, n)
            rows.append({
                "n": n,
                "fidelity": report.fidelity,
                "projected_term": report.projected_term,
                "residual_term": report.residual_term,
                "delta": report.delta,
                "lower_bound": report.lower_bound,
                "subspace_dimension": channel.rank,
            })
            self.log(f"  - n={n}: F={report.fidelity:.12g}")
        return ExperimentOutput(rows=pd.DataFrame(rows), summary={"parameter": search.parameter, "rule": rule})


class RateTableTool(ExperimentTool):
    name: str = "rate-table"
    description: str = "Finite-n compression rate (qubits per signal) and its large-n limit."
    args_schema: Type[BaseModel] = RateTableInput

    def _run(self, d: int, h: float, epsilon: float, ns: List[int]) -> ExperimentOutput:
        rows = []
        for n in ns:
            report = compression_rate(n, d, h, epsilon)
            rows.append({
                "n": n,
                "rate": report.rate,
                "limit": report.limit,
                "log2_upsilon_bound": log2_upsilon_dimension_bound(n, d, h, epsilon),
            })
        return ExperimentOutput(rows=pd.DataFrame(rows), summary={"d": d, "h": h, "epsilon": epsilon})


class UpsilonDimTool(ExperimentTool):
    name: str = "upsilon-dim"
    description: str = "Estimates the dimension of the universal subspace from Haar-sampled tensor-power unitaries."
    args_schema: Type[BaseModel] = UpsilonDimInput

    def _run(
        self,
        d: int,
        h: float,
        epsilon: float,
        ns: List[int],
        samples: int,
        seed: int,
        identity_first: bool = False,
    ) -> ExperimentOutput:
        rows = []
        for n in ns:
            spec = TypicalSetSpec(n=n, d=d, h=h, epsilon=epsilon)
            estimate = estimate_upsilon_dimension(spec, samples, seed, identity_first=identity_first, progress=self.progress)
            rows.append({
                "n": n,
                "estimated_dimension": estimate.estimated_dimension,
                "subspace_dimension": subspace_dimension(spec).dimension,
                "ambient_dimension": estimate.ambient_dimension,
                "samples_used": estimate.samples_used,
                "log2_bound": log2_upsilon_dimension_bound(n, d, h, epsilon),
            })
            self.log(f"  - n={n}: rank={estimate.estimated_dimension} after {estimate.samples_used} samples")
        return ExperimentOutput(rows=pd.DataFrame(rows), summary={"seed": seed, "samples": samples})


TOOLS: Dict[str, Type[ExperimentTool]] = {
    tool.model_fields["name"].default: tool
    for tool in (TypicalStatsTool, FindBasisTool, OverlapCurveTool, FidelityCurveTool, RateTableTool, UpsilonDimTool)
}
