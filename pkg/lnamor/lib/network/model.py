"""Linear noise approximation of a reaction network.

The LNA splits the state into macroscopic concentrations x, which follow
x' = g(x) = S f(x), and Gaussian fluctuations eta with
d eta = A(x) eta dt + B(x) dW where A is the Jacobian of g and
B(x) = S diag(sqrt(f(x))) / sqrt(Omega).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg

from lnamor.lib import constants as c
from lnamor.lib.errors import EvalError, NoConvergence, SingularJacobian
from lnamor.lib.linalg import singular_values
from lnamor.lib.logging import log_calls
from lnamor.lib.network.api import ReactionNetwork
from lnamor.lib.network.ast import Expression, evaluate, forward
from lnamor.lib.realization import Realization
from lnamor.lib.types import Matrix, Vector

logger = logging.getLogger(__name__)


def jacobian(
    expressions: Sequence[Expression], at: Vector, parameters: Mapping[str, float]
) -> Matrix:
    """Exact derivative of each expression with respect to each species.

    Returns:
        Matrix with one row per expression and one column per species

    Raises:
        EvalError: On division by zero or sqrt of a negative number
    """
    x = np.asarray(at, dtype=float)
    rows = [forward(expr, x, parameters)[1] for expr in expressions]
    if not rows:
        return np.zeros((0, x.shape[0]))
    return np.vstack(rows)


@dataclass(frozen=True)
class LnaModel:
    """Macroscopic field, drift and diffusion maps of a network.

    Attributes:
        network: The underlying reaction network
        output_matrix: Selector C mapping species to observed outputs
    """

    network: ReactionNetwork
    output_matrix: Matrix

    @classmethod
    def from_network(cls, network: ReactionNetwork) -> "LnaModel":
        selector = np.zeros((len(network.output_species), network.n_species))
        for row, name in enumerate(network.output_species):
            selector[row, network.index(name)] = 1.0
        return cls(network=network, output_matrix=selector)

    @property
    def n_species(self) -> int:
        return self.network.n_species

    @property
    def n_outputs(self) -> int:
        return self.output_matrix.shape[0]

    @property
    def species(self) -> tuple[str, ...]:
        return self.network.species

    def rates(self, x: Vector) -> Vector:
        """Flux vector f(x)."""
        x = np.asarray(x, dtype=float)
        params = self.network.parameters
        return np.array([evaluate(expr, x, params) for expr in self.network.rates])

    def rate_jacobian(self, x: Vector) -> Matrix:
        return jacobian(self.network.rates, x, self.network.parameters)

    def field(self, x: Vector) -> Vector:
        """g(x) = S f(x)."""
        return self.network.stoichiometry @ self.rates(x)

    def drift(self, x: Vector) -> Matrix:
        """A(x), the Jacobian of g."""
        return self.network.stoichiometry @ self.rate_jacobian(x)

    def diffusion(self, x: Vector, clamp: bool = False) -> Matrix:
        """B(x) = S diag(sqrt(f(x))) / sqrt(Omega).

        With ``clamp`` negative rates count as zero, so states that a
        projection moves off the nonnegative orthant get no noise from the
        reactions whose rates changed sign there.

        Raises:
            EvalError: If a rate is negative at x and ``clamp`` is False
        """
        f = self.rates(x)
        if clamp:
            f = np.maximum(f, 0.0)
        elif np.any(f < 0):
            raise EvalError(f"negative reaction rate {f.min():.3e} at x={x}")
        return self.network.stoichiometry * np.sqrt(f) / np.sqrt(self.network.volume)


def damped_newton(
    residual: Callable[[Vector], Vector],
    jacobian: Callable[[Vector], Matrix],
    x0: Vector,
    tolerance: float = c.NEWTON_TOLERANCE,
    max_iterations: int = c.NEWTON_MAX_ITERATIONS,
    max_halvings: int = c.NEWTON_MAX_HALVINGS,
) -> Vector:
    """Solve residual(x) = 0 by Newton's method with a halving line search.

    A step is accepted once the residual norm decreases (or is already within
    tolerance); it is halved at most ``max_halvings`` times.

    Raises:
        SingularJacobian: If the Jacobian is numerically singular at an iterate
        NoConvergence: If the line search or the iteration budget is exhausted
    """
    x = np.array(x0, dtype=float)
    r = np.atleast_1d(residual(x))
    for iteration in range(max_iterations):
        r_norm = float(np.linalg.norm(r))
        if r_norm <= tolerance * (1 + np.linalg.norm(x)):
            logger.debug(f"Newton converged after {iteration} iterations")
            return x

        J = np.atleast_2d(jacobian(x))
        sv = singular_values(J)
        if sv[-1] <= c.ABSOLUTE_FLOOR * max(1.0, sv[0]):
            raise SingularJacobian(
                f"Jacobian is singular at x={x} (smallest singular value {sv[-1]:.3e})"
            )
        step = scipy.linalg.solve(J, -r)

        t = 1.0
        for _ in range(max_halvings + 1):
            trial = x + t * step
            try:
                r_trial = np.atleast_1d(residual(trial))
            except EvalError:
                t /= 2
                continue
            trial_norm = float(np.linalg.norm(r_trial))
            if trial_norm < r_norm or trial_norm <= tolerance * (
                1 + np.linalg.norm(trial)
            ):
                x, r = trial, r_trial
                break
            t /= 2
        else:
            raise NoConvergence(
                f"line search failed after {max_halvings} halvings "
                f"(residual {r_norm:.3e})"
            )

    if np.linalg.norm(r) <= tolerance * (1 + np.linalg.norm(x)):
        return x
    raise NoConvergence(
        f"Newton did not converge in {max_iterations} iterations "
        f"(residual {np.linalg.norm(r):.3e})"
    )


@log_calls
def steady_state(model: LnaModel, x0: Vector) -> Vector:
    """Steady state of the macroscopic dynamics near x0.

    Returns:
        x_ss with ||g(x_ss)|| <= 1e-12 (1 + ||x_ss||)

    Raises:
        NoConvergence: If damped Newton does not converge
        SingularJacobian: If the Jacobian of g is singular at an iterate
    """
    x_ss = damped_newton(model.field, model.drift, np.asarray(x0, dtype=float))
    logger.info(f"Steady state {np.array2string(x_ss, precision=4)}")
    return x_ss


def linearize(model: LnaModel, x_ss: Vector) -> Realization:
    """LTI realisation (A(x_ss), B(x_ss), C, 0) of the fluctuations."""
    B = model.diffusion(x_ss)
    return Realization(
        A=model.drift(x_ss),
        B=B,
        C=model.output_matrix,
        D=np.zeros((model.n_outputs, B.shape[1])),
    )
