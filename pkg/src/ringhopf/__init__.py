"""Equivariant Hopf bifurcation toolkit for a ring of mode-locked lasers.

Modules
-------
model        rate equations, parameters and the coupled ring
symmetry     dihedral group, twisted orbit types, isotypic components
spectral     characteristic matrices and argument-principle root counts
bifurcation  centers, rotating-wave branches, secondary Hopf events, tables
simulator    fixed-step RK4 delay integrator and rotating-wave fitting
cli          command-line front end
"""
from .bifurcation import (
    CALIBRATED_PSI,
    Center,
    RelativeEquilibrium,
    branch_from_center,
    continue_releq,
    find_centers,
    hopf_scan_releq,
    reproduce_table,
)
from .model import LaserParams, NodeState, load_params, network_rhs, case_study_params, trivial_equilibrium
from .simulator import Trajectory, WaveFitResult, fit_rotating_wave, integrate
from .spectral import CharMatrix, count_rhp_roots, linearization_releq
from .symmetry import IsotypicalIndex, TwistedOrbitType, catalog, component_basis, coupling_block

__version__ = "0.1.0"

__all__ = [
    "CALIBRATED_PSI",
    "Center",
    "CharMatrix",
    "IsotypicalIndex",
    "LaserParams",
    "NodeState",
    "RelativeEquilibrium",
    "Trajectory",
    "TwistedOrbitType",
    "WaveFitResult",
    "branch_from_center",
    "catalog",
    "component_basis",
    "continue_releq",
    "count_rhp_roots",
    "coupling_block",
    "find_centers",
    "fit_rotating_wave",
    "hopf_scan_releq",
    "integrate",
    "linearization_releq",
    "load_params",
    "network_rhs",
    "case_study_params",
    "reproduce_table",
    "trivial_equilibrium",
]
