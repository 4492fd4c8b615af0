"""Tests for lnamor constants."""

from lnamor.lib import constants as c


def test_cli_methods_map_to_result_tags():
    """Every command-line method resolves to a tag a result can carry."""
    tags = c.TRUNCATION_METHODS | c.PERTURBATION_METHODS | {c.TIMESCALE}
    assert set(c.CLI_METHODS.values()) <= tags


def test_method_families_are_disjoint():
    assert not c.TRUNCATION_METHODS & c.PERTURBATION_METHODS


def test_exit_codes_are_distinct():
    codes = [c.EXIT_CONFIG, c.EXIT_MODEL, c.EXIT_INFEASIBLE, c.EXIT_HANKEL_TIE]
    assert codes == [1, 2, 3, 4]


def test_file_name_templates():
    assert c.REDUCTION_FILE.format(method=c.STRUCTURED_BT) == "reduction_structured_bt.json"
    assert c.COV_ERROR_FILE.format(i=1, j=2) == "cov_error_1_2.csv"
