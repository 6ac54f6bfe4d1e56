"""Learning reduced models of polynomial dynamical systems that exactly match
intrusive Galerkin projection, via operator inference on re-projected data."""

from .diagnostics import (
    MZDecomposition,
    avg_rel_state_error,
    closure_error,
    closure_error_per_step,
    condition_number,
    mori_zwanzig_decompose,
    rel_trajectory_difference,
)
from .fom import (
    FullOrderModel,
    InputTrajectory,
    Trajectory,
    make_burgers,
    make_chafee_infante,
    make_diffusion_reaction_2d,
    make_random_polynomial,
    make_toy_linear,
    random_input_trajectory,
    simulate,
)
from .opinf import (
    DataMatrix,
    RecoveryCertificate,
    assemble_data_matrix,
    certify,
    concat_trajectories,
    infer_operators,
    learn_with_reprojection,
    reproject_sample,
)
from .polytensor import (
    CompressedPower,
    MultisetIndex,
    compressed_dim,
    compressed_power,
    duplication_matrix,
    enumerate_multisets,
    multiplicity,
    selection_matrix,
)
from .rom import (
    PolynomialModel,
    galerkin_project,
    interpolate,
    reduced_simulate,
    truncate,
)
from .subspace import Basis, lift, pod_basis, project

__version__ = "0.1.0"
