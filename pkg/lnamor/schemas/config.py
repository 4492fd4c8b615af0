"""Run configuration for the command line."""

import hashlib
import json
from pathlib import Path

from pydantic import BaseModel, Field, field_validator, model_validator

from lnamor.lib import constants as c
from lnamor.lib.errors import ConfigError, ParseError
from lnamor.lib.network import ReactionNetwork, builtin_model_path

# Fields that do not change any result and are left out of the config hash
UNHASHED_FIELDS = {"output_dir", "workers", "verbose"}


def split_list(text: str) -> list[str]:
    """'a, b,c' -> ['a', 'b', 'c']; empty items are dropped."""
    return [item.strip() for item in text.split(",") if item.strip()]


def split_groups(text: str) -> list[list[str]]:
    """'c,d;e,f,g' -> [['c', 'd'], ['e', 'f', 'g']]."""
    return [split_list(group) for group in text.split(";") if group.strip()]


def _parse_numbers(value, kind):
    if isinstance(value, str):
        try:
            return [kind(item) for item in split_list(value)]
        except ValueError as e:
            raise ValueError(f"not a list of {kind.__name__} values: {value!r}") from e
    return value


class RunConfig(BaseModel):
    """Validated settings of one command invocation.

    List-valued fields also accept their command-line spelling
    (comma-separated values, groups separated by semicolons).

    Attributes:
        model_path: Model file (or the name of a shipped model)
        command: analyze, reduce, validate or simulate
        preserve: Species kept in physical coordinates
        slow: Slow species of the time-scale reduction (defaults to preserve)
        lump: Lumped groups reduced separately
        keep: Kept balanced states per lumped group
        methods: Reduction methods, command-line spelling
        epsilon: Time-scale ratio for the averaged model
        horizon: Simulation horizon
        seed: Seed for sample paths
        output_dir: Directory receiving output files
        workers: Worker threads for sweeps and sample paths
        verbose: Log at DEBUG level
        sweep: Epsilon values for the averaging sweep
        x0: Initial macroscopic state
        points: Time grid points for moment trajectories
        paths: Number of Euler-Maruyama paths (0 disables sampling)
        step: Euler-Maruyama step size
    """

    model_path: str = Field(..., min_length=1, examples=["toy", "models/glycolysis.json"])
    command: str = Field(c.ANALYZE, description="Command name", examples=[c.REDUCE])
    preserve: list[str] = Field(default_factory=list, examples=[["S1", "S3"]])
    slow: list[str] = Field(default_factory=list, examples=[["S1", "S3"]])
    lump: list[list[str]] = Field(default_factory=list, examples=[[["S2", "S4"]]])
    keep: list[int] = Field(default_factory=list, examples=[[1]])
    methods: list[str] = Field(
        default_factory=lambda: [c.CLI_STRUCTURED_BSP],
        examples=[[c.CLI_STRUCTURED_BT, c.CLI_TIMESCALE]],
    )
    epsilon: float = Field(0.01, gt=0)
    horizon: float = Field(50.0, gt=0)
    seed: int = 42
    output_dir: str = "."
    workers: int = Field(1, ge=1)
    verbose: bool = False
    sweep: list[float] = Field(default_factory=list, examples=[[0.1, 0.03, 0.01]])
    x0: list[float] | None = Field(None, examples=[[1.0, 10.0, 1.0, 1.0]])
    points: int = Field(501, ge=2)
    paths: int = Field(0, ge=0)
    step: float = Field(0.01, gt=0)

    @field_validator("command")
    @classmethod
    def _known_command(cls, value: str) -> str:
        if value not in c.COMMANDS:
            raise ValueError(f"unknown command {value!r}")
        return value

    @field_validator("preserve", "slow", "methods", mode="before")
    @classmethod
    def _split_names(cls, value):
        return split_list(value) if isinstance(value, str) else value

    @field_validator("lump", mode="before")
    @classmethod
    def _split_groups(cls, value):
        return split_groups(value) if isinstance(value, str) else value

    @field_validator("keep", mode="before")
    @classmethod
    def _split_keep(cls, value):
        return _parse_numbers(value, int)

    @field_validator("sweep", "x0", mode="before")
    @classmethod
    def _split_floats(cls, value):
        return _parse_numbers(value, float)

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, value: list[str]) -> list[str]:
        if not value:
            raise ValueError("at least one method is required")
        for method in value:
            if method not in c.CLI_METHODS:
                raise ValueError(
                    f"unknown method {method!r}; expected one of {sorted(c.CLI_METHODS)}"
                )
        return value

    @field_validator("sweep")
    @classmethod
    def _descending(cls, value: list[float]) -> list[float]:
        if any(e <= 0 for e in value) or any(a <= b for a, b in zip(value, value[1:])):
            raise ValueError("sweep values must be positive and strictly descending")
        return value

    @model_validator(mode="after")
    def _keep_fits_groups(self) -> "RunConfig":
        if any(not group for group in self.lump):
            raise ValueError("lumped groups must be non-empty")
        if not self.keep:
            return self
        if len(self.keep) != len(self.lump):
            raise ValueError(f"{len(self.keep)} keep counts given for {len(self.lump)} groups")
        for count, group in zip(self.keep, self.lump):
            if not 0 <= count <= len(group):
                raise ValueError(f"keep count {count} outside [0, {len(group)}] for {group}")
        return self

    @property
    def reduction_methods(self) -> list[str]:
        """Internal method tags, in command-line order."""
        return [c.CLI_METHODS[method] for method in self.methods]

    @property
    def slow_species(self) -> list[str]:
        return self.slow or self.preserve

    def check_partition(self, network: ReactionNetwork) -> None:
        """Check the species sets against a loaded network.

        Raises:
            ConfigError: If a name is unknown or the sets do not partition the species
        """
        names = self.preserve + [name for group in self.lump for name in group]
        unknown = [name for name in names + self.slow if name not in network.species]
        if unknown:
            raise ConfigError(f"unknown species {', '.join(unknown)}")
        if sorted(names) != sorted(network.species):
            raise ConfigError(
                "preserved and lumped species must partition "
                f"{', '.join(network.species)}"
            )
        if self.x0 is not None and len(self.x0) != network.n_species:
            raise ConfigError(f"x0 needs {network.n_species} entries, got {len(self.x0)}")

    def config_hash(self, model_source: bytes) -> str:
        """SHA-256 of the result-relevant fields and the model file contents."""
        fields = self.model_dump(mode="json", exclude=UNHASHED_FIELDS | {"model_path"})
        fields["model_sha256"] = hashlib.sha256(model_source).hexdigest()
        canonical = json.dumps(fields, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def read_model_source(model_path: str) -> tuple[Path, bytes]:
    """Resolve a model path (or shipped model name) and read its bytes.

    Raises:
        ParseError: If the file cannot be read
    """
    path = Path(model_path)
    if not path.exists() and builtin_model_path(model_path).is_file():
        path = builtin_model_path(model_path)
    try:
        return path, path.read_bytes()
    except OSError as e:
        raise ParseError(f"cannot read model file {model_path}: {e.strerror}") from e
