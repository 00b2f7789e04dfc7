"""Numerical laboratory for pathwise viscosity solutions of
du = F(D^2u, Du) dt + sum_i H^i(Du) d zeta^i with homogeneous Neumann
conditions on convex domains."""

from . import convexcore, geometry, hjstep, mcf, parabstep, signal, solver, \
    testfn
from .convexcore import HamiltonianSpec, g_of, legendre, make_spec
from .geometry import Domain, Lattice, make_psi, outward_normal, psi_star
from .hjstep import Field, dilate, erode, field_from_function, hj_increment, \
    lax_oleinik
from .parabstep import FSpec, cfl_dt, f_evolve, f_step, heat_f, mcf_f, zero_f
from .signal import DrivingPath, brownian_sample, oscillation, running_extrema
from .solver import RunControls, Trajectory, solve
from .testfn import TestFnParams, big_phi, boundary_margin, phi_delta

__version__ = "0.1.0"
