"""Reaction-network model files: validation and conversion to ReactionNetwork."""

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, StrictInt, ValidationError

from lnamor.lib.errors import BadStoichiometry, ParseError
from lnamor.lib.logging import log_calls
from lnamor.lib.network.ast import Expression, parameters_in
from lnamor.lib.network.parser import ExpressionParser
from lnamor.lib.types import Matrix

logger = logging.getLogger(__name__)

FiniteFloat = Annotated[float, Field(allow_inf_nan=False)]


class ReactionDocument(BaseModel):
    """One reaction entry of a model file.

    Attributes:
        stoich: Net change of every species when the reaction fires
        rate: Macroscopic rate law f_j(x) as an infix expression
    """

    model_config = ConfigDict(extra="forbid")

    stoich: list[StrictInt] = Field(
        ..., min_length=1, description="Stoichiometry column", examples=[[1, 0, -1]]
    )
    rate: str = Field(
        ..., min_length=1, description="Rate expression", examples=["c1/(1+S2^2)"]
    )


class NetworkDocument(BaseModel):
    """Schema of a model file.

    Attributes:
        species: Ordered species names
        parameters: Parameter bindings used by rate expressions
        volume: System size Omega (defaults to 1)
        reactions: Stoichiometry and rate of each reaction
        output_species: Species observed as outputs (all when omitted)
        initial_state: Optional initial macroscopic state
    """

    model_config = ConfigDict(extra="forbid")

    species: list[str] = Field(..., min_length=1, examples=[["S1", "S2"]])
    parameters: dict[str, FiniteFloat] = Field(default_factory=dict)
    volume: FiniteFloat = Field(1.0, gt=0, description="System size Omega")
    reactions: list[ReactionDocument] = Field(..., min_length=1)
    output_species: list[str] | None = None
    initial_state: list[FiniteFloat] | None = None


@dataclass(frozen=True)
class Reaction:
    """A reaction channel: stoichiometry column and macroscopic rate."""

    stoich: tuple[int, ...]
    rate: Expression
    rate_text: str


@dataclass(frozen=True)
class ReactionNetwork:
    """A validated reaction network.

    Attributes:
        species: Ordered species names (length N)
        reactions: Reaction channels (length R)
        volume: System size Omega > 0
        parameters: Parameter bindings
        output_species: Observed species, in output order
        initial_state: Initial macroscopic state from the model file, if any
    """

    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]
    volume: float
    parameters: dict[str, float] = field(default_factory=dict)
    output_species: tuple[str, ...] = ()
    initial_state: tuple[float, ...] | None = None

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    @property
    def stoichiometry(self) -> Matrix:
        """Stoichiometry matrix S (N x R)."""
        return np.array([r.stoich for r in self.reactions], dtype=float).T

    @property
    def rates(self) -> tuple[Expression, ...]:
        return tuple(r.rate for r in self.reactions)

    def index(self, name: str) -> int:
        try:
            return self.species.index(name)
        except ValueError:
            raise ParseError(f"unknown species {name!r}", field="species") from None


@log_calls
def parse_network(document: str) -> ReactionNetwork:
    """Parse a JSON model document into a ReactionNetwork

    Args:
        document: JSON text with species, parameters, volume, reactions and
            optionally output_species and initial_state

    Returns:
        Validated ReactionNetwork; species order is preserved from the file

    Raises:
        ParseError: If the JSON or a field is malformed
        UnboundParameter: If a rate references an unknown identifier
        BadStoichiometry: If a stoichiometry column is malformed
    """
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno) from e

    try:
        doc = NetworkDocument.model_validate(raw)
    except ValidationError as e:
        raise _convert_validation_error(e) from e

    species = tuple(doc.species)
    if len(set(species)) != len(species):
        raise ParseError("species names must be unique", field="species")

    reactions = []
    for i, entry in enumerate(doc.reactions):
        if len(entry.stoich) != len(species):
            raise BadStoichiometry(
                f"reactions[{i}].stoich has {len(entry.stoich)} entries, "
                f"expected {len(species)}"
            )
        try:
            rate = ExpressionParser.parse(entry.rate, species, list(doc.parameters))
        except ParseError as e:
            raise ParseError(str(e), field=f"reactions[{i}].rate") from e
        reactions.append(Reaction(tuple(entry.stoich), rate, entry.rate))

    output_species = tuple(doc.output_species) if doc.output_species else species
    unknown = [name for name in output_species if name not in species]
    if unknown:
        raise ParseError(f"unknown output species {unknown}", field="output_species")

    initial_state = None
    if doc.initial_state is not None:
        if len(doc.initial_state) != len(species):
            raise ParseError(
                f"initial_state has {len(doc.initial_state)} entries, "
                f"expected {len(species)}",
                field="initial_state",
            )
        initial_state = tuple(doc.initial_state)

    unused = set(doc.parameters) - set().union(*(parameters_in(r.rate) for r in reactions))
    if unused:
        logger.debug(f"Parameters not referenced by any rate: {sorted(unused)}")

    network = ReactionNetwork(
        species=species,
        reactions=tuple(reactions),
        volume=doc.volume,
        parameters=dict(doc.parameters),
        output_species=output_species,
        initial_state=initial_state,
    )
    logger.info(
        f"Parsed network with {network.n_species} species and "
        f"{network.n_reactions} reactions"
    )
    return network


def _convert_validation_error(error: ValidationError) -> ParseError:
    first = error.errors()[0]
    loc = first.get("loc", ())
    field_name = ".".join(str(part) for part in loc)
    if "stoich" in loc:
        return BadStoichiometry(f"{field_name}: {first['msg']}")
    return ParseError(first["msg"], field=field_name or None)


def load_network(path: str | Path) -> ReactionNetwork:
    """Read and parse a model file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read model file {str(path)!r}: {e.strerror}") from e
    return parse_network(text)


def builtin_model(name: str) -> ReactionNetwork:
    """Load a model shipped with the package (``toy`` or ``birth_death``)."""
    resource = resources.files("lnamor.lib.network").joinpath("data", f"{name}.json")
    if not resource.is_file():
        raise ParseError(f"no built-in model named {name!r}")
    return parse_network(resource.read_text(encoding="utf-8"))


def builtin_model_path(name: str) -> Path:
    """Filesystem path of a shipped model file."""
    return Path(str(resources.files("lnamor.lib.network").joinpath("data", f"{name}.json")))
