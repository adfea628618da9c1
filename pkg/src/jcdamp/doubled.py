"""Doubled-space representation: density matrices as length-N^2 vectors.

A field operator R is mapped to the vector with entry (m, n) = <m|R|n>,
stored row-major, which is the same as pairing R with the unnormalized
maximally entangled vector sum_n |n, n~> of a physical mode and a
fictitious partner mode.  Left and right multiplication then become
ordinary matrices on the doubled space, and the damped equations of
motion become linear vector ODEs.

Superoperator matrices are materialized densely (brute-force clarity;
the doubled dimension is capped in practice around N = 40).  The
evolution helpers also accept scipy.sparse generators as a fast path.

Truncation caveat: identities that hold for the untruncated mode (for
example that commutator and anticommutator superoperators commute with
each other) acquire defects at the truncation boundary.  They are exact
on the "interior" entries whose row and column pair indices all stay
at least ``fock.TAIL_LEVELS`` levels below the boundary; see
``interior_indices``.
"""

from __future__ import annotations

from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .fock import TAIL_LEVELS, ModelParams, annihilation, identity
from .oracle import TimeGrid, require_step

Matrix = Union[np.ndarray, sp.spmatrix]


def vectorize(op: np.ndarray) -> np.ndarray:
    """Row-major flattening; entry m*N + n holds <m|op|n>."""
    return np.asarray(op, dtype=complex).reshape(-1).copy()


def devectorize(vec: np.ndarray) -> np.ndarray:
    dim = int(round(np.sqrt(vec.size)))
    if dim * dim != vec.size:
        raise ValueError(f"vector length {vec.size} is not a perfect square")
    return np.asarray(vec, dtype=complex).reshape(dim, dim).copy()


def pairing_vector(n_trunc: int) -> np.ndarray:
    """Unnormalized sum_n |n, n~>, i.e. vectorize(identity)."""
    return vectorize(identity(n_trunc))


def interior_indices(n_trunc: int, margin: int = TAIL_LEVELS) -> np.ndarray:
    """Flat doubled-space indices (m, n) with both m, n < n_trunc - margin."""
    keep = np.arange(n_trunc - margin)
    return (keep[:, None] * n_trunc + keep[None, :]).reshape(-1)


class DoubledSpace:
    """Canonical superoperator matrices on the doubled space.

    left_*  / right_*   multiply a vectorized operator by a or a+ on
                        the corresponding side
    comm_*  / acomm_*   commutator / anticommutator superoperators
    dissipator          2 a . a+ - a+a . - . a+a   (rate not included)
    acomm_a_partner     commutator of ``dissipator`` with ``acomm_a``
    acomm_ad_partner    commutator of ``dissipator`` with ``acomm_ad``
    """

    def __init__(self, n_trunc: int):
        if n_trunc < 2:
            raise ValueError(f"n_trunc must be at least 2, got {n_trunc}")
        self.n_trunc = n_trunc
        self.dim = n_trunc * n_trunc

    @cached_property
    def left_a(self) -> np.ndarray:
        a = annihilation(self.n_trunc)
        return np.kron(a, np.eye(self.n_trunc, dtype=complex))

    @cached_property
    def left_ad(self) -> np.ndarray:
        a = annihilation(self.n_trunc)
        return np.kron(a.conj().T, np.eye(self.n_trunc, dtype=complex))

    @cached_property
    def right_a(self) -> np.ndarray:
        a = annihilation(self.n_trunc)
        return np.kron(np.eye(self.n_trunc, dtype=complex), a.T)

    @cached_property
    def right_ad(self) -> np.ndarray:
        a = annihilation(self.n_trunc)
        return np.kron(np.eye(self.n_trunc, dtype=complex), a.conj())

    @cached_property
    def comm_a(self) -> np.ndarray:
        return self.left_a - self.right_a

    @cached_property
    def comm_ad(self) -> np.ndarray:
        return self.left_ad - self.right_ad

    @cached_property
    def acomm_a(self) -> np.ndarray:
        return self.left_a + self.right_a

    @cached_property
    def acomm_ad(self) -> np.ndarray:
        return self.left_ad + self.right_ad

    @cached_property
    def dissipator(self) -> np.ndarray:
        return (2.0 * self.left_a @ self.right_ad
                - self.left_ad @ self.left_a
                - self.right_a @ self.right_ad)

    @cached_property
    def acomm_a_partner(self) -> np.ndarray:
        return 2.0 * self.left_a + self.comm_a

    @cached_property
    def acomm_ad_partner(self) -> np.ndarray:
        return 2.0 * self.right_ad - self.comm_ad


def _sparse_pieces(params: ModelParams):
    a = sp.csr_matrix(annihilation(params.n_trunc))
    eye = sp.identity(params.n_trunc, dtype=complex, format="csr")
    left_a = sp.kron(a, eye, format="csr")
    left_ad = sp.kron(a.conj().T, eye, format="csr")
    right_a = sp.kron(eye, a.T, format="csr")
    right_ad = sp.kron(eye, a.conj(), format="csr")
    comm_a = (left_a - right_a).tocsr()
    comm_ad = (left_ad - right_ad).tocsr()
    acomm_a = (left_a + right_a).tocsr()
    acomm_ad = (left_ad + right_ad).tocsr()
    diss = (2.0 * left_a @ right_ad - left_ad @ left_a - right_a @ right_ad).tocsr()
    return comm_a, comm_ad, acomm_a, acomm_ad, diss


def commutator_generator_factory(params: ModelParams, sign: int,
                                 sparse: bool = False) -> Callable[[float], Matrix]:
    """Generator of the vectorized commutator-branch equation.

        G(t) = -/+ i c (comm_a e^{-i w t} + comm_ad e^{i w t}) + (g/2) dissipator

    sign=+1 selects the branch driven by -i c [X, .].
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if sparse:
        comm_a, comm_ad, _, _, diss = _sparse_pieces(params)
    else:
        ds = DoubledSpace(params.n_trunc)
        comm_a, comm_ad, diss = ds.comm_a, ds.comm_ad, ds.dissipator
    pref = -1j * sign * params.coupling
    damp = 0.5 * params.gamma

    def generator(t: float) -> Matrix:
        return (pref * np.exp(-1j * params.omega * t)) * comm_a \
            + (pref * np.exp(1j * params.omega * t)) * comm_ad \
            + damp * diss

    return generator


def anticommutator_generator_factory(params: ModelParams,
                                     sparse: bool = False) -> Callable[[float], Matrix]:
    """Generator of the vectorized anticommutator-branch equation.

        G(t) = -i c (acomm_a e^{-i w t} + acomm_ad e^{i w t}) + (g/2) dissipator
    """
    if sparse:
        _, _, acomm_a, acomm_ad, diss = _sparse_pieces(params)
    else:
        ds = DoubledSpace(params.n_trunc)
        acomm_a, acomm_ad, diss = ds.acomm_a, ds.acomm_ad, ds.dissipator
    pref = -1j * params.coupling
    damp = 0.5 * params.gamma

    def generator(t: float) -> Matrix:
        return (pref * np.exp(-1j * params.omega * t)) * acomm_a \
            + (pref * np.exp(1j * params.omega * t)) * acomm_ad \
            + damp * diss

    return generator


def commutator_generator(t: float, params: ModelParams, sign: int) -> np.ndarray:
    return commutator_generator_factory(params, sign)(t)


def anticommutator_generator(t: float, params: ModelParams) -> np.ndarray:
    return anticommutator_generator_factory(params)(t)


def damped_frame_drive(t: float, params: ModelParams, sign: int) -> np.ndarray:
    """Drive generator in the frame that absorbs the damping flow.

    Conjugating the commutator-branch drive by exp(-(g t / 2) dissipator)
    rescales it by e^{g t / 2}; the resulting family commutes with itself
    at different times on the interior subspace.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    ds = DoubledSpace(params.n_trunc)
    pref = -1j * sign * params.coupling * np.exp(0.5 * params.gamma * t)
    return pref * (ds.comm_a * np.exp(-1j * params.omega * t)
                   + ds.comm_ad * np.exp(1j * params.omega * t))


def evolve_vectorized(generator: Callable[[float], Matrix], v0: np.ndarray,
                      grid: TimeGrid, params: ModelParams = None) -> np.ndarray:
    """Midpoint-exponential product integration of dv/dt = G(t) v.

    Per step: v <- exp(h G(t + h/2)) v, second-order accurate.  The
    exponential action is evaluated with scipy's expm_multiply, so the
    generator may be dense or sparse.
    """
    if params is not None:
        require_step(params, grid.step)
    h = grid.step
    v = v0.astype(complex).copy()
    for k in range(grid.n_steps):
        t_mid = grid.t_start + (k + 0.5) * h
        v = expm_multiply(h * generator(t_mid), v)
    return v
