"""Closed-form propagation of the decoupled components.

The commutator branches admit an exact solution: in a frame that
absorbs the damping flow, the drive integrates to a pure displacement
with amplitude ``displacement_amplitude``; undoing the frame change
turns the damping into the standard zero-temperature photon-loss
channel, whose Kraus series has weight ``damping_weight``.  The
anticommutator branch factorizes the same way once the drive is split
along growing / decaying damping envelopes (the cosh and sinh moments
of ``drive_integrals``), at the price of a scalar weight accumulated
from the c-number commutator between the two envelope families
(``drive_commutator_kernel`` / ``kernel_double_integral``).

``evolve_cross`` evaluates that anticommutator-branch formula exactly
as derived here; the brute-force integrator remains the ground truth
for it, and comparison reports are emitted as data rather than
asserted (see the command-line ``compare`` verb).
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .fock import ModelParams, annihilation, displacement, matrix_exponential
from .quadrature import triangle_double_integral

KRAUS_TRACE_TOL = 1e-14
SMALL_RATE = 1e-8


class NonConvergedKrausSum(RuntimeError):
    """The photon-loss Kraus series failed to converge within 4N terms."""


def _growth_integral(z: complex, t: float) -> complex:
    """int_0^t e^{z s} ds = (e^{z t} - 1) / z, stable as z -> 0."""
    if abs(z) < SMALL_RATE:
        zt = z * t
        return t * (1.0 + zt / 2.0 + zt * zt / 6.0)
    return (cmath.exp(z * t) - 1.0) / z


def displacement_amplitude(t: float, params: ModelParams, sign: int) -> complex:
    """Displacement accumulated by the drive in the damping-absorbing frame.

    -/+ i c int_0^t e^{(i w + g/2) s} ds; sign=+1 selects the branch
    driven by -i c [X, .].
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    z = 1j * params.omega + 0.5 * params.gamma
    return -1j * sign * params.coupling * _growth_integral(z, t)


def damping_weight(t: float, gamma: float) -> float:
    """Kraus weight of the photon-loss channel after time t: 1 - e^{-g t}.

    This value is forced by trace preservation of the channel; any other
    choice breaks unit-trace output on coherent input.
    """
    if t < 0 or gamma < 0:
        raise ValueError("damping_weight requires t >= 0 and gamma >= 0")
    return -math.expm1(-gamma * t)


def coherent_center(t: float, params: ModelParams, sign: int, alpha0: complex) -> complex:
    """Phase-space center of an initially coherent commutator branch.

    e^{-(i w + g/2) t} (alpha0 + displacement_amplitude(t)); for
    g t >> 1 this forgets alpha0 and tends to -/+ 2 i c / (2 i w + g).
    """
    z = 1j * params.omega + 0.5 * params.gamma
    return cmath.exp(-z * t) * (alpha0 + displacement_amplitude(t, params, sign))


def drive_integrals(t: float, params: ModelParams) -> tuple[complex, complex]:
    """cosh- and sinh-weighted drive moments.

        mu_cosh = -i c int_0^t cosh(g s / 2) e^{i w s} ds
        mu_sinh = -i c int_0^t sinh(g s / 2) e^{i w s} ds

    Evaluated by splitting cosh/sinh into exponentials; at g = 0 the
    sinh moment vanishes identically.
    """
    up = _growth_integral(1j * params.omega + 0.5 * params.gamma, t)
    dn = _growth_integral(1j * params.omega - 0.5 * params.gamma, t)
    pref = -0.5j * params.coupling
    return pref * (up + dn), pref * (up - dn)


def drive_commutator_kernel(s: float, s_prime: float, params: ModelParams) -> float:
    """c-number commutator between the growing- and decaying-envelope
    drive generators at times (s, s'):

        -8 c^2 cosh(g s / 2) sinh(g s' / 2) cos(w (s - s'))
    """
    c = params.coupling
    g = params.gamma
    return (-8.0 * c * c * math.cosh(0.5 * g * s) * math.sinh(0.5 * g * s_prime)
            * math.cos(params.omega * (s - s_prime)))


def kernel_double_integral(t: float, params: ModelParams, tol: float = 1e-10) -> float:
    """int_0^t ds int_0^s ds' of ``drive_commutator_kernel`` (real).

    Refined to the absolute tolerance; a matching relative bound takes
    over when the integral itself grows large (long times at finite
    damping), where an absolute criterion could never terminate.
    """
    if params.coupling == 0.0 or params.gamma == 0.0:
        return 0.0
    c, g, w = params.coupling, params.gamma, params.omega

    def kernel_vec(s, sp):
        return (-8.0 * c * c * math.cosh(0.5 * g * s) * np.sinh(0.5 * g * sp)
                * np.cos(w * (s - sp)))

    val = triangle_double_integral(kernel_vec, t, tol=tol, rtol=tol,
                                   vectorized=True)
    return float(np.real(val))


def _loss_kraus_sum(mat: np.ndarray, weight: float, a: np.ndarray) -> np.ndarray:
    """sum_n (weight^n / n!) a^n mat a+^n, truncated when the next term's
    trace contribution (and max entry) fall below KRAUS_TRACE_TOL."""
    max_terms = 4 * mat.shape[0]
    ad = a.conj().T
    term = mat
    total = term.copy()
    for n in range(1, max_terms + 1):
        term = (weight / n) * (a @ term @ ad)
        total += term
        if abs(np.trace(term)) < KRAUS_TRACE_TOL and np.max(np.abs(term)) < KRAUS_TRACE_TOL:
            return total
    raise NonConvergedKrausSum(
        f"photon-loss series not converged after {max_terms} terms")


def _damping_phase(t: float, params: ModelParams) -> np.ndarray:
    # diagonal of exp(-(i w + g/2) t a+a)
    n = np.arange(params.n_trunc)
    return np.exp(-(1j * params.omega + 0.5 * params.gamma) * t * n)


def evolve_plus_minus(rho0: np.ndarray, t: float, params: ModelParams,
                      sign: int) -> np.ndarray:
    """Exact lab-frame state of a commutator branch at time t.

    Displace the initial operator by ``displacement_amplitude``, apply
    the photon-loss Kraus series with weight ``damping_weight``, and
    damp/rotate with e^{-(i w + g/2) t a+a} on the left and its adjoint
    on the right.  Hermitian input gives Hermitian output and the trace
    is preserved up to truncation tails.
    """
    n = params.n_trunc
    if rho0.shape != (n, n):
        raise ValueError(f"initial operator has shape {rho0.shape}, expected {(n, n)}")
    lam = displacement_amplitude(t, params, sign)
    d = displacement(lam, n)
    seed = d @ rho0 @ d.conj().T
    a = annihilation(n)
    total = _loss_kraus_sum(seed, damping_weight(t, params.gamma), a)
    e = _damping_phase(t, params)
    return total * np.outer(e, e.conj())


def evolve_cross(rho0: np.ndarray, t: float, params: ModelParams) -> np.ndarray:
    """Closed-form lab-frame state of the anticommutator branch.

    Evaluated literally as derived:

        e^{F + m1 m2* + m1* m2 - 4|m2|^2}
        sum_n (T^n/n!) E a^n e^{4 m2* a} D(m1+m2) rho0 D+(-m1-m2) e^{-4 m2 a+} a+^n E+

    with (m1, m2) = ``drive_integrals``, F = ``kernel_double_integral``,
    T = ``damping_weight`` and E = e^{-(i w + g/2) t a+a}.  The
    brute-force integrator is the declared ground truth for this branch;
    use the compare report to quantify the deviation.
    """
    n = params.n_trunc
    if rho0.shape != (n, n):
        raise ValueError(f"initial operator has shape {rho0.shape}, expected {(n, n)}")
    mu1, mu2 = drive_integrals(t, params)
    big_f = kernel_double_integral(t, params)
    prefactor = cmath.exp(big_f + mu1 * mu2.conjugate() + mu1.conjugate() * mu2
                          - 4.0 * abs(mu2) ** 2)
    a = annihilation(n)
    d = displacement(mu1 + mu2, n)
    d_right = displacement(-(mu1 + mu2), n).conj().T
    left = matrix_exponential(a, 4.0 * mu2.conjugate())
    right = matrix_exponential(a.conj().T, -4.0 * mu2)
    seed = left @ d @ rho0 @ d_right @ right
    total = _loss_kraus_sum(seed, damping_weight(t, params.gamma), a)
    e = _damping_phase(t, params)
    return prefactor * (total * np.outer(e, e.conj()))
