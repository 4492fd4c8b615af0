"""Shared fixtures: shipped models, small test networks and random systems."""

import json

import numpy as np
import pytest

from lnamor.lib.network import LnaModel, builtin_model, parse_network
from lnamor.lib.realization import Realization

TOY_STEADY_STATE = np.array([0.2889, 3.4611, 0.0578, 0.6922])

# X1 is produced, degraded and converted to X2; X2 converts back and degrades.
# The drift is [[-2, 1], [1, -2]] everywhere with steady state (2/3, 1/3).
LINEAR_TWO_STATE = {
    "species": ["X1", "X2"],
    "parameters": {"k": 1.0},
    "volume": 1.0,
    "reactions": [
        {"stoich": [1, 0], "rate": "k"},
        {"stoich": [-1, 0], "rate": "k*X1"},
        {"stoich": [-1, 1], "rate": "k*X1"},
        {"stoich": [1, -1], "rate": "k*X2"},
        {"stoich": [0, -1], "rate": "k*X2"},
    ],
    "initial_state": [2.0, 2.0],
}

GLYCOLYSIS_SPECIES = [
    "GLCi", "G6P", "F6P", "F16P", "TRIO", "BPG",
    "P3G", "P2G", "PEP", "PYR", "ACE", "ETOH",
]  # fmt: skip


def glycolysis_chain() -> dict:
    """A stable 12-species first-order chain named after the glycolytic pathway."""
    rates = [0.9, 1.4, 2.1, 0.7, 1.8, 2.6, 1.1, 3.2, 0.8, 1.6, 2.3, 0.6]
    n = len(GLYCOLYSIS_SPECIES)
    parameters = {"vin": 2.0}
    reactions = [{"stoich": [1] + [0] * (n - 1), "rate": "vin"}]
    for i, name in enumerate(GLYCOLYSIS_SPECIES):
        parameters[f"k{i + 1}"] = rates[i]
        stoich = [0] * n
        stoich[i] = -1
        if i + 1 < n:
            stoich[i + 1] = 1
        reactions.append({"stoich": stoich, "rate": f"k{i + 1}*{name}"})
    return {
        "species": GLYCOLYSIS_SPECIES,
        "parameters": parameters,
        "volume": 50.0,
        "reactions": reactions,
    }


@pytest.fixture
def rng():
    """Deterministic random generator for property suites."""
    return np.random.default_rng(20240917)


@pytest.fixture
def toy_network():
    return builtin_model("toy")


@pytest.fixture
def toy_model(toy_network):
    return LnaModel.from_network(toy_network)


@pytest.fixture
def linear_network():
    return parse_network(json.dumps(LINEAR_TWO_STATE))


@pytest.fixture
def linear_model(linear_network):
    return LnaModel.from_network(linear_network)


@pytest.fixture
def glycolysis_json():
    return json.dumps(glycolysis_chain())


@pytest.fixture
def dominant_drift():
    """Factory for drifts with negative diagonal and strict row dominance (-A in H+)."""

    def make(rng: np.random.Generator, n: int, margin: float = 0.5) -> np.ndarray:
        A = rng.normal(size=(n, n))
        np.fill_diagonal(A, 0.0)
        dominance = np.abs(A).sum(axis=1)
        np.fill_diagonal(A, -(dominance + margin + rng.uniform(0.0, 1.0, size=n)))
        return A

    return make


@pytest.fixture
def structured_system(dominant_drift):
    """Factory for diagonally stable realisations with random B and C."""

    def make(rng: np.random.Generator, n: int, m: int = 2, p: int = 2) -> Realization:
        A = dominant_drift(rng, n)
        B = rng.normal(size=(n, m))
        C = rng.normal(size=(p, n))
        return Realization(A, B, C, np.zeros((p, m)))

    return make


@pytest.fixture
def stable_system():
    """Factory for generic Hurwitz realisations."""

    def make(rng: np.random.Generator, n: int, m: int = 1, p: int = 1) -> Realization:
        A = rng.normal(size=(n, n))
        shift = np.max(np.linalg.eigvals(A).real) + rng.uniform(0.2, 2.0)
        A = A - shift * np.eye(n)
        return Realization(A, rng.normal(size=(n, m)), rng.normal(size=(p, n)), np.zeros((p, m)))

    return make


@pytest.fixture
def toy_steady_state():
    return TOY_STEADY_STATE.copy()
