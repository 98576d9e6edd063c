"""Atom chains in a driven ring cavity: fields, polaritons, routing, disorder."""

from .model import (
    AtomChain,
    ParameterError,
    StructureFactor,
    SystemParams,
    chain_with_structure,
    params_for_cooperativity,
    structure_factor,
    translate_chain,
)

__version__ = "0.1.0"
