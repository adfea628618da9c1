"""Simulator and closed-form solver for a damped atom-cavity model on a
truncated Fock space, with a brute-force integrator as ground truth."""

from .fock import (
    CoherentState,
    ModelParams,
    annihilation,
    coherent_state,
    creation,
    displacement,
    identity,
    matrix_exponential,
    number_operator,
    tail_weight,
)
from .model import (
    ComponentSet,
    combine_components,
    component_rhs,
    derived_components,
    hamiltonian_full,
    lindblad_rhs,
    split_components,
    to_rotational_picture,
    from_rotational_picture,
)
from .oracle import (
    StepTooLarge,
    TailOverflow,
    TimeGrid,
    Trajectory,
    integrate_component,
    integrate_joint,
)
from .doubled import (
    DoubledSpace,
    anticommutator_generator,
    commutator_generator,
    devectorize,
    evolve_vectorized,
    pairing_vector,
    vectorize,
)
from .solution import (
    NonConvergedKrausSum,
    coherent_center,
    damping_weight,
    displacement_amplitude,
    drive_commutator_kernel,
    drive_integrals,
    evolve_cross,
    evolve_plus_minus,
    kernel_double_integral,
)
from .factorize import (
    FactorizationProblem,
    PreconditionViolated,
    factorized_propagator,
    time_ordered_propagator,
)
from .wigner import (
    PhaseGrid,
    wigner_at,
    wigner_gaussian,
    wigner_grid,
    wigner_operator,
)

__version__ = "0.1.0"
