"""Giant atoms in structured photonic lattices."""

import json

from ._core import (
    Atom,
    Bath,
    GlaError,
    Resolvent,
    braided_rates_closed_form,
    chain,
    chain_atom,
    chain_pair_atom,
    dfh_check,
    graphene,
    graphene_four_point,
    graphene_three_point,
    ingap_bound_states,
    lieb,
    lieb_string_atom,
    rates,
    regression_row,
    scenarios,
    square,
    square_diamond,
    vds_search,
    weak_coupling_bs,
)
from . import _core


def default_config(name):
    """Default configuration of a named scenario as a dict."""
    return json.loads(_core.default_config_json(name))


def run_scenario(config, out_dir):
    """Run a scenario config (dict) and return the parsed report."""
    return json.loads(_core.run_scenario_json(json.dumps(config), str(out_dir)))


__all__ = [
    "Atom", "Bath", "GlaError", "Resolvent", "braided_rates_closed_form", "chain", "chain_atom",
    "chain_pair_atom", "default_config", "dfh_check", "graphene", "graphene_four_point",
    "graphene_three_point", "ingap_bound_states", "lieb", "lieb_string_atom", "rates", "regression_row",
    "run_scenario", "scenarios", "square", "square_diamond", "vds_search", "weak_coupling_bs",
]
