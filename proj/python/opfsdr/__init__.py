"""Semidefinite relaxations of AC optimal power flow via chordal conversion.

The heavy lifting lives in the compiled extension `_opfsdr`; this package
re-exports it and adds small file-based conveniences.
"""

from ._opfsdr import (  # noqa: F401
    Branch,
    Bus,
    GenKind,
    Generator,
    Network,
    OpfSdrError,
    admittance_matrix,
    apply_min_resistance,
    build_and_count,
    clique_report,
    count_rows,
    count_variables,
    export_case,
    fix_tight_generators,
    parse_matpower,
    parse_network_json,
    solve_case,
)

__version__ = "0.1.0"


def load(path):
    """Loads a network from a MATPOWER .m file or the native JSON format."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    if str(path).endswith(".json"):
        return parse_network_json(text)
    return parse_matpower(text)


def solve(path, strategy="full", **kwargs):
    """Loads, preprocesses and solves one relaxation; returns a result dict."""
    net = apply_min_resistance(fix_tight_generators(load(path)))
    return solve_case(net, strategy=strategy, **kwargs)
