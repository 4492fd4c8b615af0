"""Small dense semidefinite programmes by a logarithmic-barrier method.

Problems have the form

    minimize    c^T p
    subject to  F_j(p) = F_j0 + sum_i p_i F_ji > 0   for every j

and are solved by minimizing t c^T p - sum_j log det F_j(p) with Newton's
method for an increasing sequence of t.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from lnamor.lib import constants as c
from lnamor.lib.errors import DimensionMismatch, NoConvergence
from lnamor.lib.types import Matrix, Vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearMatrixInequality:
    """Affine symmetric matrix function F(p) = constant + sum_i p_i coefficients[i].

    Attributes:
        constant: Symmetric matrix (m x m)
        coefficients: Symmetric matrices stacked as (d, m, m)
        name: Label used in log records
    """

    constant: Matrix
    coefficients: np.ndarray
    name: str = ""

    def __post_init__(self):
        m = self.constant.shape[0]
        if self.constant.shape != (m, m) or self.coefficients.shape[1:] != (m, m):
            raise DimensionMismatch(
                f"LMI {self.name!r}: constant {self.constant.shape} and "
                f"coefficients {self.coefficients.shape} do not conform"
            )

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    @property
    def dimension(self) -> int:
        return self.coefficients.shape[0]

    def __call__(self, p: Vector) -> Matrix:
        return self.constant + np.tensordot(p, self.coefficients, axes=1)


@dataclass
class BarrierDiagnostics:
    """Per-call solver record, logged as structured diagnostics."""

    phase: str
    outer_iterations: int = 0
    newton_iterations: int = 0
    barrier_value: float = float("nan")
    gap: float = float("nan")
    objective: float = float("nan")
    stopped_early: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


class BarrierSolver:
    """Interior-point solver for a linear objective under LMI constraints.

    Example:
        solver = BarrierSolver(objective, [lmi_1, lmi_2], phase="trace")
        p, diagnostics = solver.solve(start)
    """

    def __init__(
        self,
        objective: Vector,
        constraints: Sequence[LinearMatrixInequality],
        phase: str = "",
        tolerance: float = c.SDP_TOLERANCE,
        max_outer: int = c.SDP_MAX_OUTER,
        max_newton: int = c.SDP_MAX_NEWTON,
        decrease: float = c.SDP_BARRIER_DECREASE,
        slope_ratio: float = 0.01,
        shorten_ratio: float = 0.5,
    ):
        self.objective = np.asarray(objective, dtype=float)
        self.constraints = list(constraints)
        self.phase = phase
        self.tolerance = tolerance
        self.max_outer = max_outer
        self.max_newton = max_newton
        self.decrease = decrease
        self.slope_ratio = slope_ratio
        self.shorten_ratio = shorten_ratio
        for lmi in self.constraints:
            if lmi.dimension != self.objective.shape[0]:
                raise DimensionMismatch(
                    f"LMI {lmi.name!r} has {lmi.dimension} variables, "
                    f"objective has {self.objective.shape[0]}"
                )
        self._barrier_degree = sum(lmi.size for lmi in self.constraints)

    def _factors(self, p: Vector) -> list[Matrix] | None:
        """Cholesky factors of every F_j(p), or None outside the domain."""
        factors = []
        for lmi in self.constraints:
            try:
                factors.append(np.linalg.cholesky(lmi(p)))
            except np.linalg.LinAlgError:
                return None
        return factors

    def is_feasible(self, p: Vector) -> bool:
        return self._factors(p) is not None

    def barrier(self, p: Vector) -> float:
        """-sum log det F_j(p); +inf outside the domain."""
        factors = self._factors(p)
        if factors is None:
            return np.inf
        return -sum(2 * np.sum(np.log(np.diag(L))) for L in factors)

    def _derivatives(self, p: Vector) -> tuple[float, Vector, Matrix]:
        factors = self._factors(p)
        if factors is None:
            raise NoConvergence(f"{self.phase}: iterate left the feasible region")
        d = self.objective.shape[0]
        value = 0.0
        grad = np.zeros(d)
        hess = np.zeros((d, d))
        for L, lmi in zip(factors, self.constraints):
            value -= 2 * np.sum(np.log(np.diag(L)))
            L_inv = scipy.linalg.solve_triangular(L, np.eye(lmi.size), lower=True)
            # G_i = L^-1 F_i L^-T so tr(F^-1 F_i) = tr(G_i)
            G = np.einsum("ab,ibc,dc->iad", L_inv, lmi.coefficients, L_inv)
            grad -= np.einsum("iaa->i", G)
            hess += np.einsum("iab,kab->ik", G, G)
        return value, grad, hess

    def _newton_step(self, grad: Vector, hess: Matrix) -> Vector:
        try:
            return scipy.linalg.solve(hess, -grad, assume_a="pos")
        except (np.linalg.LinAlgError, ValueError):
            return scipy.linalg.lstsq(hess, -grad)[0]

    def _center(
        self,
        p: Vector,
        t: float,
        diagnostics: BarrierDiagnostics,
        stop_when: Callable[[Vector], bool] | None,
    ) -> tuple[Vector, bool]:
        """Minimize t c^T p + barrier(p) from a strictly feasible p."""
        for _ in range(self.max_newton):
            value, grad, hess = self._derivatives(p)
            total_grad = t * self.objective + grad
            step = self._newton_step(total_grad, hess)
            decrement = -float(total_grad @ step)
            if decrement / 2 <= 1e-10:
                return p, False

            current = t * float(self.objective @ p) + value
            slope = float(total_grad @ step)
            size = 1.0
            while True:
                trial = p + size * step
                trial_value = t * float(self.objective @ trial) + self.barrier(trial)
                if trial_value <= current + self.slope_ratio * size * slope:
                    break
                size *= self.shorten_ratio
                if size < 1e-16:
                    logger.debug(f"{self.phase}: line search stalled")
                    return p, False
            p = trial
            diagnostics.newton_iterations += 1
            if stop_when is not None and stop_when(p):
                return p, True
        logger.debug(f"{self.phase}: centering hit {self.max_newton} Newton steps")
        return p, False

    def solve(
        self,
        start: Vector,
        t0: float = 1.0,
        stop_when: Callable[[Vector], bool] | None = None,
    ) -> tuple[Vector, BarrierDiagnostics]:
        """Run the barrier method from a strictly feasible start.

        Args:
            start: Point where every F_j is positive definite
            t0: Initial barrier weight
            stop_when: Optional predicate checked at the start and after every
                Newton step; the solve returns as soon as it holds

        Returns:
            Tuple of (solution, diagnostics)

        Raises:
            NoConvergence: If the start is infeasible or the duality gap does
                not close within max_outer barrier updates
        """
        p = np.array(start, dtype=float)
        diagnostics = BarrierDiagnostics(phase=self.phase)
        if not self.is_feasible(p):
            raise NoConvergence(f"{self.phase}: starting point is not strictly feasible")

        if stop_when is not None and stop_when(p):
            diagnostics.stopped_early = True
            return p, self._finish(p, diagnostics, np.inf)

        t = t0
        for outer in range(1, self.max_outer + 1):
            p, stopped = self._center(p, t, diagnostics, stop_when)
            diagnostics.outer_iterations = outer
            gap = self._barrier_degree / t
            if stopped:
                diagnostics.stopped_early = True
                return p, self._finish(p, diagnostics, gap)
            if gap <= self.tolerance * max(1.0, abs(float(self.objective @ p))):
                return p, self._finish(p, diagnostics, gap)
            t *= self.decrease

        self._finish(p, diagnostics, self._barrier_degree / t)
        raise NoConvergence(
            f"{self.phase}: duality gap did not close in {self.max_outer} barrier updates"
        )

    def _finish(
        self, p: Vector, diagnostics: BarrierDiagnostics, gap: float
    ) -> BarrierDiagnostics:
        diagnostics.gap = gap
        diagnostics.objective = float(self.objective @ p)
        diagnostics.barrier_value = self.barrier(p)
        logger.debug(
            f"Barrier solve finished ({self.phase})",
            extra={"diagnostics": diagnostics.as_dict()},
        )
        return diagnostics
