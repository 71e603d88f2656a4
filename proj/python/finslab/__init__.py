"""Python bindings for the finslab library."""

from ._finslab import (
    ConfigError,
    DegenerateError,
    Error,
    InputError,
    NumericError,
    PolyhedralNorm,
    ShieldingReport,
    builtin_norm,
    derived_norm,
    evolve,
    m_alpha,
    median,
    mollified_value,
    shielding_verify,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateError",
    "Error",
    "InputError",
    "NumericError",
    "PolyhedralNorm",
    "ShieldingReport",
    "builtin_norm",
    "derived_norm",
    "evolve",
    "m_alpha",
    "median",
    "mollified_value",
    "shielding_verify",
]
