import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lnamor.lib import constants as c
from lnamor.lib.balance import ReductionResult, h2_reduce_structured, reduce_structured
from lnamor.lib.errors import ConfigError, Infeasible, NoConvergence, ParseError
from lnamor.lib.gramian import (
    GramianPair,
    SparsityPattern,
    seeded_structured_gramians,
    structured_gramians,
)
from lnamor.lib.logging import log_calls
from lnamor.lib.matclass import MatrixClassReport, classify
from lnamor.lib.network import (
    LnaModel,
    ReactionNetwork,
    builtin_model,
    linearize,
    load_network,
    steady_state,
)
from lnamor.lib.realization import Realization
from lnamor.lib.simulate import SampleStatistics, euler_maruyama, integrate
from lnamor.lib.simulate.compare import ErrorReport, compare_models, full_model_moments
from lnamor.lib.simulate.moments import TrajectoryBundle
from lnamor.lib.timescale import (
    AveragedModel,
    PartitionedLna,
    SweepResult,
    average,
    epsilon_sweep,
)
from lnamor.lib.types import Matrix, Vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Analysis:
    """Steady state and drift classification of a model.

    Attributes:
        steady_state: x_ss
        drift: A(x_ss)
        report: Matrix class flags of A(x_ss)
    """

    steady_state: Vector
    drift: Matrix
    report: MatrixClassReport

    @property
    def certificate_available(self) -> bool:
        return self.report.certificate is not None


class Lnamor:
    """Main API for reducing the linear noise approximation of a reaction network.

    The class ties the pipeline together:
    1. Solving for the steady state and linearising the LNA there
    2. Classifying the drift and computing structured Gramians
    3. Reducing with structured balancing or time-scale averaging
    4. Comparing reduced and full models in the time domain

    Attributes:
        network: The reaction network
        model: Its macroscopic field, drift and diffusion maps

    Example:
        >>> lna = Lnamor.from_builtin("toy")
        >>> result = lna.reduce(preserve=["S1", "S3"], groups=[["S2", "S4"]], keep=[1])
        >>> result.reduced.n
        3
    """

    def __init__(self, network: ReactionNetwork, x0: Vector | None = None):
        """Initialize the pipeline for a network.

        Args:
            network: The reaction network
            x0: Initial state overriding the model file; it also seeds the
                steady-state Newton iteration

        Raises:
            ConfigError: If x0 does not have one entry per species
        """
        self.network = network
        self.model = LnaModel.from_network(network)
        self._x0 = None if x0 is None else self.initial_state(x0)
        self._steady_state: Vector | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "Lnamor":
        return cls(load_network(path))

    @classmethod
    def from_builtin(cls, name: str) -> "Lnamor":
        return cls(builtin_model(name))

    @property
    def species(self) -> tuple[str, ...]:
        return self.network.species

    def initial_state(self, x0: Vector | None = None) -> Vector:
        """The first of: x0, the configured x0, the model's initial state, ones."""
        if x0 is not None:
            x0 = np.asarray(x0, dtype=float)
            if x0.shape != (self.network.n_species,):
                raise ConfigError(
                    f"x0 needs {self.network.n_species} entries, got {x0.size}"
                )
            return x0
        if self._x0 is not None:
            return self._x0
        if self.network.initial_state is not None:
            return np.array(self.network.initial_state, dtype=float)
        return np.ones(self.network.n_species)

    def steady_state(self) -> Vector:
        """Steady state reached by Newton from the initial state (cached)."""
        if self._steady_state is None:
            self._steady_state = steady_state(self.model, self.initial_state())
        return self._steady_state

    def realization(self) -> Realization:
        return linearize(self.model, self.steady_state())

    @log_calls
    def analyze(self) -> Analysis:
        """Steady state, drift and drift classification."""
        x_ss = self.steady_state()
        A = self.model.drift(x_ss)
        return Analysis(steady_state=x_ss, drift=A, report=classify(A))

    def _indices(self, names: list[str]) -> list[int]:
        try:
            return [self.network.index(name) for name in names]
        except ParseError as e:
            raise ConfigError(str(e)) from e

    def species_order(self, preserve: list[str], groups: list[list[str]]) -> list[int]:
        """Preserved species first, then each lumped group.

        Raises:
            ConfigError: If the sets do not partition the species
        """
        order = self._indices(list(preserve) + [s for group in groups for s in group])
        if sorted(order) != list(range(self.network.n_species)):
            raise ConfigError(
                "preserved and lumped species must partition "
                f"{', '.join(self.species)}"
            )
        if any(len(group) == 0 for group in groups):
            raise ConfigError("lumped groups must be non-empty")
        return order

    @log_calls
    def gramians(self, r: Realization, pattern: SparsityPattern) -> GramianPair:
        """Structured Gramians, falling back to the seeded programme.

        The plain programme is tried first; if it is infeasible or does not
        converge and the drift admits a diagonal certificate, the seeded
        programme is used instead.
        """
        try:
            return structured_gramians(r, pattern)
        except (Infeasible, NoConvergence) as e:
            if classify(r.A).certificate is None:
                raise
            logger.warning(f"Structured programme failed ({e}); using the seeded programme")
            return seeded_structured_gramians(r, pattern)

    @log_calls
    def reduce(
        self,
        preserve: list[str],
        groups: list[list[str]],
        keep: list[int],
        method: str = c.STRUCTURED_BSP,
    ) -> ReductionResult:
        """Structure-preserving reduction of the linearised LNA.

        Args:
            preserve: Species kept in physical coordinates
            groups: Lumped groups, each reduced separately
            keep: Balanced states kept per group
            method: structured_bt, structured_bsp or structured_h2

        Returns:
            The reduction, carrying x_ss and the species permutation

        Raises:
            ConfigError: If the species partition or keep counts are invalid
            Infeasible: If no structured Gramians exist
            HankelTie: If a cut falls on a tie of Hankel values
        """
        if method not in (c.STRUCTURED_BT, c.STRUCTURED_BSP, c.STRUCTURED_H2):
            raise ConfigError(f"unknown reduction method {method!r}")
        order = self.species_order(preserve, groups)
        k = len(preserve)
        r = self.realization().permuted(order)
        pattern = SparsityPattern.structured(k, [len(group) for group in groups])
        g = self.gramians(r, pattern)
        if method == c.STRUCTURED_H2:
            result = h2_reduce_structured(r, g, k, keep)
        else:
            result = reduce_structured(r, g, k, keep, method)
        return result.with_context(
            operating_point=self.steady_state(),
            permutation=tuple(order),
            species=tuple(self.species[i] for i in order),
        )

    def partition(self, slow: list[str], epsilon: float = 1.0) -> PartitionedLna:
        slow_idx = self._indices(slow)
        fast_idx = [i for i in range(self.network.n_species) if i not in slow_idx]
        return PartitionedLna(self.model, tuple(slow_idx), tuple(fast_idx), epsilon)

    def average(self, slow: list[str], epsilon: float = 1.0) -> AveragedModel:
        """Time-scale reduction keeping ``slow`` and eliminating the rest."""
        p = self.partition(slow, epsilon)
        return average(p, fast_guess=self.steady_state()[list(p.fast)])

    def validate(
        self,
        reduced: ReductionResult | AveragedModel,
        horizon: float,
        x0: Vector | None = None,
        n_points: int = 501,
    ) -> ErrorReport:
        """Compare outputs of the full and a reduced model started at x0.

        The initial covariance is the stationary covariance of the
        linearisation at x0.
        """
        return compare_models(self.model, self.initial_state(x0), reduced, horizon, n_points)

    def sweep(
        self,
        slow: list[str],
        epsilons: list[float],
        horizon: float,
        x0: Vector | None = None,
        workers: int = 1,
    ) -> SweepResult:
        """Averaging errors of the partitioned model over decreasing epsilon."""
        return epsilon_sweep(
            self.partition(slow, epsilons[0] if epsilons else 1.0),
            epsilons,
            horizon,
            self.initial_state(x0),
            workers=workers,
        )

    def simulate(
        self, horizon: float, x0: Vector | None = None, n_points: int = 501
    ) -> TrajectoryBundle:
        """Output moments of the full model from a deterministic initial state."""
        if not horizon > 0:
            raise ConfigError(f"horizon must be positive, got {horizon}")
        grid = np.linspace(0.0, horizon, n_points)
        return full_model_moments(self.model, self.initial_state(x0), grid)

    @log_calls
    def simulate_paths(
        self,
        horizon: float,
        step: float,
        n_paths: int,
        seed: int,
        x0: Vector | None = None,
        workers: int = 1,
    ) -> SampleStatistics:
        """Euler-Maruyama output statistics around the macroscopic trajectory.

        Fluctuations start at zero and follow the drift and diffusion
        evaluated along x(t); the returned mean is C (x(t) + E eta(t)).
        """
        if step <= 0 or horizon <= 0:
            raise ConfigError(f"step and horizon must be positive, got {step}, {horizon}")
        n_steps = max(int(round(horizon / step)), 1)
        times = step * np.arange(n_steps + 1)
        x0 = self.initial_state(x0)
        path = integrate(lambda t, x: self.model.field(x), x0, times)

        def at(t: float) -> Vector:
            return path[min(int(round(t / step)), n_steps)]

        stats = euler_maruyama(
            lambda t: self.model.drift(at(t)),
            lambda t: self.model.diffusion(at(t)),
            np.zeros(self.network.n_species),
            horizon,
            step,
            n_paths,
            seed,
            workers,
        )
        C = self.model.output_matrix
        return SampleStatistics(
            time_grid=stats.time_grid,
            mean=(path + stats.mean) @ C.T,
            covariance=np.einsum("ia,tab,jb->tij", C, stats.covariance, C),
            n_paths=stats.n_paths,
        )
