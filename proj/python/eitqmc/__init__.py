"""Impedance-tomography toolkit: forward solves, lattice rules, posterior estimation."""

from ._core import (
    basis_weights,
    cbc_vector,
    default_generating_vector,
    eval_field,
    field_bounds,
    forward_voltages,
    lattice_points,
    mesh_stats,
    posterior_mean,
    random_shifts,
    simulate,
)

__all__ = [
    "basis_weights",
    "cbc_vector",
    "default_generating_vector",
    "eval_field",
    "field_bounds",
    "forward_voltages",
    "lattice_points",
    "mesh_stats",
    "posterior_mean",
    "random_shifts",
    "simulate",
]
