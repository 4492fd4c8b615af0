import json

import numpy as np
import pytest

from lnamor.lib.errors import BadStoichiometry, ParseError, UnboundParameter
from lnamor.lib.network import builtin_model, builtin_model_path, load_network, parse_network


def document(**overrides):
    doc = {
        "species": ["A", "B"],
        "parameters": {"k": 1.0},
        "volume": 10.0,
        "reactions": [
            {"stoich": [1, 0], "rate": "k"},
            {"stoich": [-1, 1], "rate": "k*A"},
            {"stoich": [0, -1], "rate": "B"},
        ],
    }
    doc.update(overrides)
    return json.dumps(doc)


class TestParseNetwork:
    def test_valid_document(self):
        """A valid document should keep species order and stoichiometry"""
        network = parse_network(document())
        assert network.species == ("A", "B")
        assert network.n_reactions == 3
        np.testing.assert_array_equal(
            network.stoichiometry, [[1, -1, 0], [0, 1, -1]]
        )
        assert network.output_species == ("A", "B")

    def test_output_species_subset(self):
        """output_species should select observed species"""
        network = parse_network(document(output_species=["B"]))
        assert network.output_species == ("B",)

    def test_invalid_json_reports_line(self):
        """Malformed JSON should raise ParseError with a line number"""
        with pytest.raises(ParseError) as exc_info:
            parse_network('{\n"species": [\n')
        assert exc_info.value.line is not None

    def test_missing_field(self):
        """A document without reactions should raise ParseError"""
        doc = json.loads(document())
        del doc["reactions"]
        with pytest.raises(ParseError):
            parse_network(json.dumps(doc))

    def test_duplicate_species(self):
        with pytest.raises(ParseError):
            parse_network(document(species=["A", "A"]))

    def test_short_stoichiometry(self):
        """A stoichiometry column of the wrong length should raise BadStoichiometry"""
        reactions = [{"stoich": [1], "rate": "k"}]
        with pytest.raises(BadStoichiometry):
            parse_network(document(reactions=reactions))

    def test_fractional_stoichiometry(self):
        """Non-integer stoichiometry should raise BadStoichiometry"""
        reactions = [{"stoich": [0.5, 0], "rate": "k"}]
        with pytest.raises(BadStoichiometry):
            parse_network(document(reactions=reactions))

    def test_unbound_parameter(self):
        reactions = [{"stoich": [1, 0], "rate": "kk*A"}]
        with pytest.raises(UnboundParameter):
            parse_network(document(reactions=reactions))

    def test_nonpositive_volume(self):
        with pytest.raises(ParseError):
            parse_network(document(volume=0.0))

    def test_unknown_output_species(self):
        with pytest.raises(ParseError):
            parse_network(document(output_species=["C"]))

    def test_initial_state_length(self):
        with pytest.raises(ParseError):
            parse_network(document(initial_state=[1.0]))

    def test_unknown_species_index(self):
        """index() should raise ParseError for unknown names"""
        with pytest.raises(ParseError):
            parse_network(document()).index("Z")


class TestModelFiles:
    def test_missing_file(self, tmp_path):
        """A missing model file should raise ParseError"""
        with pytest.raises(ParseError):
            load_network(tmp_path / "missing.json")

    def test_builtin_models(self):
        """Both shipped models should parse"""
        assert builtin_model("toy").n_species == 4
        assert builtin_model("birth_death").n_species == 1

    def test_unknown_builtin(self):
        with pytest.raises(ParseError):
            builtin_model("nope")

    def test_builtin_path_loads(self):
        """builtin_model_path should point at a readable file"""
        assert load_network(builtin_model_path("toy")).species == (
            "S1",
            "S2",
            "S3",
            "S4",
        )
