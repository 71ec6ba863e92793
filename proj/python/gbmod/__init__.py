"""Groebner bases over Q by multi-modular F4 with learning."""

from fractions import Fraction

from ._core import (
    CheckpointError,
    ParseError,
    crt_pair,
    cyclic,
    groebner_basis,
    groebner_basis_mod_p,
    nth_prime,
    parse_schedule,
)
from ._core import rational_reconstruct as _rational_reconstruct


def rational_reconstruct(r, m):
    """Smallest fraction congruent to r modulo m, or None."""
    out = _rational_reconstruct(r, m)
    return None if out is None else Fraction(*out)


__all__ = [
    "CheckpointError",
    "ParseError",
    "crt_pair",
    "cyclic",
    "groebner_basis",
    "groebner_basis_mod_p",
    "nth_prime",
    "parse_schedule",
    "rational_reconstruct",
]
