"""Damped atom-cavity model: Hamiltonian, equation of motion, frame
changes, and the four-component decomposition of the joint state.

Basis conventions
-----------------
The joint space is atom (x) field with the atomic basis ordered
(up, down).  A joint operator is a 2N x 2N matrix laid out as a 2 x 2
grid of N x N field blocks::

    [[ <up|R|up>,   <up|R|down>  ],
     [ <down|R|up>, <down|R|down>]]

built with ``np.kron(atom_op, field_op)``.

The damping term is normalized once and for all as

    D[r] = (gamma/2) (2 a r a+  -  a+ a r  -  r a+ a)

and is used with this normalization everywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import ModelParams, annihilation, number_operator

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ATOM_UP = np.array([1.0, 0.0], dtype=complex)
ATOM_DOWN = np.array([0.0, 1.0], dtype=complex)


def joint_operator(atom_op: np.ndarray, field_op: np.ndarray) -> np.ndarray:
    """Embed atom_op (x) field_op in the joint space (atom-major blocks)."""
    return np.kron(atom_op, field_op)


def joint_annihilation(n_trunc: int) -> np.ndarray:
    return np.kron(np.eye(2, dtype=complex), annihilation(n_trunc))


def hamiltonian_full(params: ModelParams) -> np.ndarray:
    """H = omega a+a (x) 1 + coupling (a+ + a) (x) sigma_x.

    The coupling keeps both co- and counter-rotating terms.
    """
    n = params.n_trunc
    a = annihilation(n)
    h = np.kron(np.eye(2, dtype=complex), params.omega * number_operator(n))
    h += params.coupling * np.kron(SIGMA_X, a + a.conj().T)
    return h


def dissipator(mat: np.ndarray, gamma: float, a: np.ndarray) -> np.ndarray:
    """(gamma/2)(2 a mat a+ - a+a mat - mat a+a) for the given jump op."""
    ad = a.conj().T
    n_op = ad @ a
    return 0.5 * gamma * (2.0 * a @ mat @ ad - n_op @ mat - mat @ n_op)


def lindblad_rhs(rho: np.ndarray, params: ModelParams) -> np.ndarray:
    """Full equation of motion -i[H, rho] + D[rho] in the lab frame."""
    n = params.n_trunc
    if rho.shape != (2 * n, 2 * n):
        raise ValueError(
            f"joint state has shape {rho.shape}, expected {(2 * n, 2 * n)}"
        )
    h = hamiltonian_full(params)
    a_joint = joint_annihilation(n)
    return -1j * (h @ rho - rho @ h) + dissipator(rho, params.gamma, a_joint)


def drive_operator(t: float, params: ModelParams) -> np.ndarray:
    """Rotating-frame field coupling a+ e^{i w t} + a e^{-i w t}."""
    a = annihilation(params.n_trunc)
    return a.conj().T * np.exp(1j * params.omega * t) + a * np.exp(-1j * params.omega * t)


def rotational_rhs(rho: np.ndarray, t: float, params: ModelParams) -> np.ndarray:
    """Equation of motion in the rotating (free-field) frame.

    -i coupling [X(t) (x) sigma_x, rho] + D[rho], with X(t) the
    rotating-frame coupling from ``drive_operator``.
    """
    n = params.n_trunc
    if rho.shape != (2 * n, 2 * n):
        raise ValueError(
            f"joint state has shape {rho.shape}, expected {(2 * n, 2 * n)}"
        )
    h = params.coupling * np.kron(SIGMA_X, drive_operator(t, params))
    a_joint = joint_annihilation(n)
    return -1j * (h @ rho - rho @ h) + dissipator(rho, params.gamma, a_joint)


def _joint_phases(t: float, params: ModelParams) -> np.ndarray:
    # diagonal of exp(-i w t a+a) (x) 1, atom-major layout
    phase = np.exp(-1j * params.omega * t * np.arange(params.n_trunc))
    return np.concatenate([phase, phase])


def to_rotational_picture(rho: np.ndarray, t: float, params: ModelParams) -> np.ndarray:
    """Lab frame -> rotating frame: U+ rho U with U = exp(-i w t a+a)."""
    d = _joint_phases(t, params)
    return rho * np.outer(d.conj(), d)


def from_rotational_picture(rho: np.ndarray, t: float, params: ModelParams) -> np.ndarray:
    """Rotating frame -> lab frame, exact inverse of ``to_rotational_picture``."""
    d = _joint_phases(t, params)
    return rho * np.outer(d, d.conj())


def field_from_rotational(mat: np.ndarray, t: float, params: ModelParams) -> np.ndarray:
    """Rotating frame -> lab frame for a single-mode field operator."""
    d = np.exp(-1j * params.omega * t * np.arange(params.n_trunc))
    return mat * np.outer(d, d.conj())


def field_to_rotational(mat: np.ndarray, t: float, params: ModelParams) -> np.ndarray:
    d = np.exp(-1j * params.omega * t * np.arange(params.n_trunc))
    return mat * np.outer(d.conj(), d)


@dataclass(frozen=True)
class ComponentSet:
    """The four field operators of the Pauli expansion of a joint state.

    rho = (1/2) (rho0 (x) 1 + rho1 (x) sx + rho2 (x) sy + rho3 (x) sz).
    The decoupled combinations are exposed as properties: ``plus`` and
    ``minus`` evolve under commutator coupling of either sign, and the
    (generally non-Hermitian) ``cross`` combination rho3 + i rho2
    evolves under anticommutator coupling.
    """

    rho0: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    rho3: np.ndarray

    @property
    def plus(self) -> np.ndarray:
        return self.rho0 + self.rho1

    @property
    def minus(self) -> np.ndarray:
        return self.rho0 - self.rho1

    @property
    def cross(self) -> np.ndarray:
        return self.rho3 + 1j * self.rho2


def split_components(rho: np.ndarray) -> ComponentSet:
    """Extract (rho0..rho3) from the 2 x 2 block layout of a joint state."""
    dim = rho.shape[0] // 2
    r11 = rho[:dim, :dim]
    r12 = rho[:dim, dim:]
    r21 = rho[dim:, :dim]
    r22 = rho[dim:, dim:]
    return ComponentSet(
        rho0=r11 + r22,
        rho1=r12 + r21,
        rho2=1j * (r12 - r21),
        rho3=r11 - r22,
    )


def combine_components(cs: ComponentSet) -> np.ndarray:
    """Exact inverse of ``split_components``."""
    r11 = 0.5 * (cs.rho0 + cs.rho3)
    r22 = 0.5 * (cs.rho0 - cs.rho3)
    r12 = 0.5 * (cs.rho1 - 1j * cs.rho2)
    r21 = 0.5 * (cs.rho1 + 1j * cs.rho2)
    return np.block([[r11, r12], [r21, r22]])


def derived_components(cs: ComponentSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(plus, minus, cross) combinations; plus + minus == 2 rho0 exactly."""
    return cs.plus, cs.minus, cs.cross


def component_rhs(cs: ComponentSet, t: float, params: ModelParams) -> ComponentSet:
    """Coupled equations of motion for the four components (rotating frame).

        d rho0 = -i c [X, rho1] + D[rho0]
        d rho1 = -i c [X, rho0] + D[rho1]
        d rho2 = -  c {X, rho3} + D[rho2]
        d rho3 = +  c {X, rho2} + D[rho3]
    """
    x = drive_operator(t, params)
    a = annihilation(params.n_trunc)
    c = params.coupling
    g = params.gamma
    return ComponentSet(
        rho0=-1j * c * (x @ cs.rho1 - cs.rho1 @ x) + dissipator(cs.rho0, g, a),
        rho1=-1j * c * (x @ cs.rho0 - cs.rho0 @ x) + dissipator(cs.rho1, g, a),
        rho2=-c * (x @ cs.rho3 + cs.rho3 @ x) + dissipator(cs.rho2, g, a),
        rho3=c * (x @ cs.rho2 + cs.rho2 @ x) + dissipator(cs.rho3, g, a),
    )


def component_rhs_single(kind: str, op: np.ndarray, t: float, params: ModelParams) -> np.ndarray:
    """Equation of motion of a single decoupled component (rotating frame).

    kind "plus"/"minus": -/+ i c [X(t), op] + D[op]
    kind "cross":           -i c {X(t), op} + D[op]
    """
    x = drive_operator(t, params)
    a = annihilation(params.n_trunc)
    c = params.coupling
    g = params.gamma
    if kind == "plus":
        return -1j * c * (x @ op - op @ x) + dissipator(op, g, a)
    if kind == "minus":
        return 1j * c * (x @ op - op @ x) + dissipator(op, g, a)
    if kind == "cross":
        return -1j * c * (x @ op + op @ x) + dissipator(op, g, a)
    raise ValueError(f"unknown component kind {kind!r}")


def joint_tail_weight(rho: np.ndarray, n_levels: int = 4) -> float:
    """Population of a joint state in the top field levels (both atom blocks)."""
    dim = rho.shape[0] // 2
    diag = np.diagonal(rho).real
    return float(np.sum(diag[dim - n_levels:dim]) + np.sum(diag[2 * dim - n_levels:]))


def check_joint_density(rho: np.ndarray, herm_tol: float = 1e-10,
                        trace_tol: float = 1e-10, psd_tol: float = 1e-8) -> None:
    """Validate the joint-state invariants; raises ValueError on failure."""
    dim = rho.shape[0] // 2
    r11 = rho[:dim, :dim]
    r12 = rho[:dim, dim:]
    r21 = rho[dim:, :dim]
    r22 = rho[dim:, dim:]
    for name, blk in (("up-up", r11), ("down-down", r22)):
        if np.max(np.abs(blk - blk.conj().T)) > herm_tol:
            raise ValueError(f"{name} block is not Hermitian within {herm_tol}")
    if np.max(np.abs(r21 - r12.conj().T)) > herm_tol:
        raise ValueError(f"off-diagonal blocks are not adjoint within {herm_tol}")
    tr = np.trace(r11).real + np.trace(r22).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace deviates from 1 by {abs(tr - 1.0):.3e}")
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if min_eig < -psd_tol:
        raise ValueError(f"state is not positive semidefinite: min eig {min_eig:.3e}")
