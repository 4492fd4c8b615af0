"""Report schemas written by the command line."""

import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from lnamor.lib.balance import BlockLayout, Projections, ReductionResult
from lnamor.lib.matclass import MatrixClassReport
from lnamor.lib.realization import Realization
from lnamor.lib.timescale import SweepResult


def _rows(matrix: np.ndarray) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.atleast_2d(matrix)]


def _finite_or_none(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


class Meta(BaseModel):
    """Provenance block embedded in every report.

    Attributes:
        version: lnamor version that wrote the file
        config_hash: SHA-256 of the run configuration and model file
    """

    version: str = Field(..., examples=["0.1.0"])
    config_hash: str = Field(..., min_length=64, max_length=64)


class MatrixClassSchema(BaseModel):
    """Serialized MatrixClassReport."""

    is_metzler: bool
    is_sign_metzler: bool
    signature: Optional[list[int]] = None
    is_h: bool
    is_h_plus: bool
    is_dd_row: bool
    is_scaled_dd: bool
    is_scaled_dd_col: bool
    is_diagonally_stable: bool
    companion_spectrum_real: list[float]
    companion_spectrum_imag: list[float]
    certificate: Optional[list[float]] = Field(
        None, description="Diagonal of X with A X + X A^T < 0"
    )
    notes: list[str] = Field(default_factory=list)

    @classmethod
    def from_report(cls, report: MatrixClassReport) -> "MatrixClassSchema":
        spectrum = np.sort_complex(np.asarray(report.companion_spectrum, dtype=complex))
        return cls(
            is_metzler=report.is_metzler,
            is_sign_metzler=report.is_sign_metzler,
            signature=None if report.signature is None else list(report.signature),
            is_h=report.is_h,
            is_h_plus=report.is_h_plus,
            is_dd_row=report.is_dd_row,
            is_scaled_dd=report.is_scaled_dd,
            is_scaled_dd_col=report.is_scaled_dd_col,
            is_diagonally_stable=report.is_diagonally_stable,
            companion_spectrum_real=[float(v) for v in spectrum.real],
            companion_spectrum_imag=[float(v) for v in spectrum.imag],
            certificate=(
                None
                if report.certificate is None
                else [float(v) for v in np.diag(report.certificate)]
            ),
            notes=list(report.notes),
        )


class AnalysisReport(BaseModel):
    """Contents of analysis.json."""

    meta: Meta
    species: list[str]
    steady_state: list[float]
    drift: list[list[float]]
    classes: MatrixClassSchema
    certificate_available: bool


class RealizationSchema(BaseModel):
    """State-space matrices (A, B, C, D) as nested lists."""

    A: list[list[float]]
    B: list[list[float]]
    C: list[list[float]]
    D: list[list[float]]

    @classmethod
    def from_realization(cls, r: Realization) -> "RealizationSchema":
        return cls(A=_rows(r.A), B=_rows(r.B), C=_rows(r.C), D=_rows(r.D))

    def to_realization(self) -> Realization:
        return Realization(
            A=np.array(self.A, dtype=float).reshape(len(self.A), -1),
            B=np.array(self.B, dtype=float).reshape(len(self.B), -1),
            C=np.array(self.C, dtype=float).reshape(len(self.C), -1),
            D=np.array(self.D, dtype=float).reshape(len(self.D), -1),
        )


class ProjectionSchema(BaseModel):
    """Projection quadruple in the permuted species coordinates."""

    V: list[list[float]]
    W: list[list[float]]
    V_r: list[list[float]]
    W_r: list[list[float]]


def _matrix(rows: list[list[float]], n_cols: int) -> np.ndarray:
    return np.array(rows, dtype=float).reshape(len(rows), n_cols)


class ReductionReport(BaseModel):
    """Contents of reduction_<method>.json.

    Attributes:
        method: Reduction method tag
        gramian_provenance: equation, sdp or hmatrix_seeded_sdp
        species: Species in the order used for reduction
        preserved: Number of preserved species
        groups: Sizes of the lumped groups
        sigma: Hankel values (or variances), preserved block first
        kept: Kept balanced states
        bound: Twice the discarded Hankel values (absent for h2)
        measured_hinf_error: H-infinity norm of G - G_r
        operating_point: Steady state in the model's species order
        permutation: Model index of each reduction coordinate
        reduced: Reduced realisation
        projections: Projections in reduction coordinates
    """

    meta: Meta
    method: str
    gramian_provenance: str
    species: list[str]
    preserved: int = Field(..., ge=0)
    groups: list[int]
    sigma: list[float]
    kept: list[int]
    bound: Optional[float] = None
    measured_hinf_error: Optional[float] = None
    operating_point: list[float]
    permutation: list[int]
    reduced: RealizationSchema
    projections: ProjectionSchema

    @classmethod
    def from_result(
        cls, meta: Meta, result: ReductionResult, measured_hinf_error: float | None
    ) -> "ReductionReport":
        V, W, V_r, W_r = result.projections
        return cls(
            meta=meta,
            method=result.method,
            gramian_provenance=result.gramian_provenance,
            species=list(result.species),
            preserved=result.layout.preserved,
            groups=list(result.layout.groups),
            sigma=[float(v) for v in result.sigma],
            kept=list(result.kept),
            bound=result.hankel_tail,
            measured_hinf_error=measured_hinf_error,
            operating_point=[float(v) for v in result.operating_point],
            permutation=list(result.permutation),
            reduced=RealizationSchema.from_realization(result.reduced),
            projections=ProjectionSchema(V=_rows(V), W=_rows(W), V_r=_rows(V_r), W_r=_rows(W_r)),
        )

    def to_result(self) -> ReductionResult:
        n = len(self.permutation)
        k = len(self.kept)
        return ReductionResult(
            reduced=self.reduced.to_realization(),
            projections=Projections(
                V=_matrix(self.projections.V, n),
                W=_matrix(self.projections.W, k),
                V_r=_matrix(self.projections.V_r, n),
                W_r=_matrix(self.projections.W_r, n - k),
            ),
            hankel_tail=self.bound,
            method=self.method,
            gramian_provenance=self.gramian_provenance,
            sigma=np.array(self.sigma, dtype=float),
            kept=tuple(self.kept),
            layout=BlockLayout(self.preserved, tuple(self.groups)),
            operating_point=np.array(self.operating_point, dtype=float),
            permutation=tuple(self.permutation),
            species=tuple(self.species),
        )


class SweepRowSchema(BaseModel):
    epsilon: float = Field(..., gt=0)
    mean_err: float
    ms_err: float


class SweepSummary(BaseModel):
    """Contents of epsilon_sweep.json; slopes are null when not computable."""

    meta: Meta
    slow_species: list[str]
    rows: list[SweepRowSchema]
    mean_slope: Optional[float] = None
    ms_slope: Optional[float] = None

    @classmethod
    def from_result(
        cls, meta: Meta, slow_species: list[str], result: SweepResult
    ) -> "SweepSummary":
        return cls(
            meta=meta,
            slow_species=slow_species,
            rows=[
                SweepRowSchema(epsilon=r.epsilon, mean_err=r.mean_err, ms_err=r.ms_err)
                for r in result.rows
            ],
            mean_slope=_finite_or_none(result.mean_slope),
            ms_slope=_finite_or_none(result.ms_slope),
        )
