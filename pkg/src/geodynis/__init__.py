"""Fully dynamic approximate maximum-weight independent sets of boxes."""

from .geometry import Box, ContractError, QueryBox, contained_in, intersects_open, make_box, vertices

__all__ = ["Box", "ContractError", "QueryBox", "contained_in", "intersects_open", "make_box", "vertices"]
