"""Band structure, perturbation series and transport of periodic lattice Schroedinger operators
at large coupling."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .lattice import LatticeModel, build_model, epsilon0, separation, split_coordinate
from .laurent import GaussRational, LaurentMatrix, LaurentPoly
from .floquet import (
    assemble,
    decompose,
    diagonalizer,
    floquet_laplacian,
    general_spectrum,
    hermitian_bands,
    label_by_potential,
)
from .perturb import (
    eta2_oracle,
    eta3_oracle,
    enumerate_loops,
    loop_expansion,
    observed_order,
    rs_eval,
    rs_expand,
    straight_loop_constant,
    verify_low_order,
)
from .velocity import (
    ThetaGrid,
    fiber_group_velocity,
    gi_norm,
    predicted_leading_constant,
    sweep_and_fit,
    v_asy,
    v_asy_delta0,
    velocity_report,
)
from .evolve import (
    BoxSpec,
    amplitude,
    amplitude_field,
    box_evolve,
    light_cone_scan,
    lr_bound_check,
    propagator_block,
    propagator_block_deformed,
    propagator_blocks,
    vlr_exponent_fit,
    wavepacket_spread,
)
