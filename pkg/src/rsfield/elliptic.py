"""Elliptic special functions built on the Jacobi theta series.

Everything is parameterized by the modulus tau (Im tau > 0).  The building
block is the theta function with rational characteristics

    theta[a,b](z|tau) = sum_j exp(i pi tau (j+a)^2 + 2 pi i (j+a)(z+b)),

from which the odd theta, the Kronecker function phi(z,u), E1 = theta'/theta,
the Weierstrass sigma/zeta/wp family and the lattice-spacing function
Phi(x,z) = phi(x,z) exp(-x E1(z)) are derived.  All z-derivatives are
term-wise derivatives of the series; finite differences only appear in tests.

Main arguments accept numpy arrays and broadcast; characteristics and the
modulus are scalars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError, SingularityError

MIN_IM_TAU = 0.05
MAX_HALF_WINDOW = 64
DEFAULT_SERIES_TOL = 1e-14
DEFAULT_SINGULAR_TOL = 1e-10

TWO_PI_I = 2j * np.pi


def e2pi(x):
    """e(x) = exp(2 pi i x), the principal exponential."""
    return np.exp(TWO_PI_I * np.asarray(x))


@dataclass(frozen=True)
class EllipticContext:
    """Parameter bundle threaded through the whole package.

    tau is the elliptic modulus, eta the relativistic shift, c_const the
    "velocity of light" normalization.  series_tol controls q-series
    truncation, singular_tol the proximity-to-lattice guard.
    """

    tau: complex = 1j
    eta: complex = 0.17 + 0.03j
    c_const: complex = 1.0 + 0.0j
    series_tol: float = DEFAULT_SERIES_TOL
    singular_tol: float = DEFAULT_SINGULAR_TOL

    def __post_init__(self):
        tau = complex(self.tau)
        if tau.imag < MIN_IM_TAU:
            raise DomainError(
                f"Im(tau) = {tau.imag} below floor {MIN_IM_TAU}; theta series not usable"
            )
        if not (self.series_tol > 0 and self.singular_tol > 0):
            raise DomainError("series_tol and singular_tol must be positive")
        if lattice_distance(complex(self.eta), tau) <= self.singular_tol:
            raise SingularityError(f"eta = {self.eta} is on the lattice Z + tau Z")



def _ret(out):
    out = np.asarray(out)
    return out if out.ndim else complex(out)


def lattice_distance(u, tau):
    """Distance from u to the nearest point of Z + tau Z."""
    tau = complex(tau)
    u = np.asarray(u, dtype=complex)
    beta = u.imag / tau.imag
    alpha = u.real - beta * tau.real
    fa, fb = np.floor(alpha), np.floor(beta)
    best = None
    for da in (fa, fa + 1):
        for db in (fb, fb + 1):
            d = np.abs(u - (da + db * tau))
            best = d if best is None else np.minimum(best, d)
    return best if best.ndim else float(best)


def require_off_lattice(u, tau, tol, what):
    """Raise SingularityError naming `what` if u is within tol of the lattice."""
    d = lattice_distance(u, tau)
    if np.min(d) <= tol:
        bad = complex(np.asarray(u, dtype=complex).ravel()[int(np.argmin(d))])
        raise SingularityError(
            f"{what} = {bad} is within {tol} of the lattice Z + tau Z (tau = {tau})"
        )


def _theta_window(a, ymin, ymax, tau2, tol, deriv):
    # Terms decay like exp(-pi tau2 (j+a+y/tau2)^2); keep every index whose
    # magnitude can exceed tol times the largest term, plus margin for the
    # polynomial derivative factor.
    w = math.sqrt(max(-math.log(tol), 1.0) / (math.pi * tau2)) + 2.0 + deriv
    lo = math.floor(-a - ymax / tau2 - w)
    hi = math.ceil(-a - ymin / tau2 + w)
    if max(abs(lo), abs(hi)) > MAX_HALF_WINDOW:
        raise ConvergenceError(
            f"theta series window exceeds {MAX_HALF_WINDOW} terms "
            f"(Im tau = {tau2}, Im z range [{ymin}, {ymax}])"
        )
    return lo, hi


def theta_char(a, b, z, tau, deriv=0, tol=DEFAULT_SERIES_TOL):
    """theta[a,b](z|tau) or its deriv-th z-derivative, term-wise.

    a, b are (rational) real characteristics; z broadcasts.
    """
    tau = complex(tau)
    if tau.imag < MIN_IM_TAU:
        raise DomainError(f"Im(tau) = {tau.imag} below floor {MIN_IM_TAU}")
    a = float(a)
    b = float(b)
    zarr = np.asarray(z, dtype=complex)
    y = np.atleast_1d(zarr.imag)
    lo, hi = _theta_window(a, float(y.min()), float(y.max()), tau.imag, tol, deriv)
    j = np.arange(lo, hi + 1)
    ja = j + a
    expo = 1j * np.pi * tau * ja**2 + TWO_PI_I * ja * (zarr[..., None] + b)
    terms = np.exp(expo)
    if deriv:
        terms = terms * (TWO_PI_I * ja) ** deriv
    out = terms.sum(axis=-1)
    return out if zarr.ndim else complex(out)


def vartheta(z, tau, deriv=0, tol=DEFAULT_SERIES_TOL):
    """Odd Jacobi theta: -theta[1/2,1/2](z|tau), with analytic derivatives."""
    return -theta_char(0.5, 0.5, z, tau, deriv, tol)


@lru_cache(maxsize=64)
def theta_constants(tau):
    """(theta'(0), theta'''(0), eta0) with eta0 = -theta'''(0)/(6 theta'(0))."""
    tau = complex(tau)
    d1 = vartheta(0.0, tau, deriv=1)
    d3 = vartheta(0.0, tau, deriv=3)
    return d1, d3, -d3 / (6.0 * d1)


def kronecker_phi(z, u, tau, stol=DEFAULT_SINGULAR_TOL):
    """phi(z,u) = theta'(0) theta(z+u) / (theta(z) theta(u))."""
    require_off_lattice(z, tau, stol, "z")
    require_off_lattice(u, tau, stol, "u")
    require_off_lattice(np.asarray(z, complex) + np.asarray(u, complex), tau, stol, "z+u")
    d1, _, _ = theta_constants(tau)
    zc = np.asarray(z, dtype=complex)
    uc = np.asarray(u, dtype=complex)
    out = d1 * vartheta(zc + uc, tau) / (vartheta(zc, tau) * vartheta(uc, tau))
    return _ret(out)


def kronecker_phi_dz(z, u, tau, stol=DEFAULT_SINGULAR_TOL):
    """d/dz of phi(z,u) by the quotient rule on theta series (no E1 shortcut)."""
    require_off_lattice(z, tau, stol, "z")
    require_off_lattice(u, tau, stol, "u")
    d1, _, _ = theta_constants(tau)
    zc = np.asarray(z, dtype=complex)
    uc = np.asarray(u, dtype=complex)
    tz = vartheta(zc, tau)
    out = d1 * (vartheta(zc + uc, tau, 1) * tz - vartheta(zc + uc, tau) * vartheta(zc, tau, 1)) / (
        tz**2 * vartheta(uc, tau)
    )
    return _ret(out)


def e1(u, tau, stol=DEFAULT_SINGULAR_TOL):
    """E1(u) = theta'(u)/theta(u), the log-derivative of the odd theta."""
    require_off_lattice(u, tau, stol, "u")
    uc = np.asarray(u, dtype=complex)
    out = vartheta(uc, tau, 1) / vartheta(uc, tau)
    return _ret(out)


def wp(u, tau, stol=DEFAULT_SINGULAR_TOL):
    """Weierstrass wp via -d^2/du^2 log theta(u) + theta'''(0)/(3 theta'(0))."""
    require_off_lattice(u, tau, stol, "u")
    d1, d3, _ = theta_constants(tau)
    uc = np.asarray(u, dtype=complex)
    t0 = vartheta(uc, tau)
    t1 = vartheta(uc, tau, 1)
    t2 = vartheta(uc, tau, 2)
    out = -(t2 / t0 - (t1 / t0) ** 2) + d3 / (3.0 * d1)
    return _ret(out)


def e1_and_wp(u, tau, stol=DEFAULT_SINGULAR_TOL):
    """(E1(u), wp(u)) in one call."""
    return e1(u, tau, stol), wp(u, tau, stol)


def omega_index(a1, a2, N, tau):
    """omega_a = (a1 + a2 tau)/N for the index a = (a1, a2)."""
    return (a1 + a2 * complex(tau)) / N


def varphi_a(a1, a2, z, s, N, tau, stol=DEFAULT_SINGULAR_TOL):
    """varphi_a(z, s) = e(a2 z / N) phi(z, s); callers pass s = omega_a + eta."""
    pref = e2pi(a2 * np.asarray(z, dtype=complex) / N)
    out = pref * kronecker_phi(z, s, tau, stol)
    return _ret(out)


# -- Weierstrass convention (periods 2w1 = 1, 2w2 = tau) ----------------------


def sigma_w(x, tau):
    """sigma(x) = (theta(x)/theta'(0)) exp(eta0 x^2); entire, vanishes on the lattice."""
    d1, _, eta0 = theta_constants(tau)
    xc = np.asarray(x, dtype=complex)
    out = vartheta(xc, tau) / d1 * np.exp(eta0 * xc**2)
    return _ret(out)


def zeta_w(x, tau, stol=DEFAULT_SINGULAR_TOL):
    """zeta(x) = E1(x) + 2 eta0 x."""
    _, _, eta0 = theta_constants(tau)
    xc = np.asarray(x, dtype=complex)
    out = e1(xc, tau, stol) + 2.0 * eta0 * xc
    return _ret(out)


def phi_w(x, z_spec, tau, stol=DEFAULT_SINGULAR_TOL):
    """Phi(x, z) = phi(x, z) exp(-x E1(z)); simple pole at x = 0 with residue 1."""
    xc = np.asarray(x, dtype=complex)
    out = kronecker_phi(xc, z_spec, tau, stol) * np.exp(-xc * e1(z_spec, tau, stol))
    return _ret(out)


def phi_w_prime(x, z_spec, tau, stol=DEFAULT_SINGULAR_TOL):
    """d/dx Phi(x, z) = Phi(x,z) (zeta(x+z) - zeta(x) - zeta(z))."""
    xc = np.asarray(x, dtype=complex)
    bracket = zeta_w(xc + z_spec, tau, stol) - zeta_w(xc, tau, stol) - zeta_w(z_spec, tau, stol)
    out = phi_w(xc, z_spec, tau, stol) * bracket
    return _ret(out)


def weierstrass(x, z_spec, tau, stol=DEFAULT_SINGULAR_TOL):
    """(sigma(x), zeta(x), Phi(x, z_spec), Phi'(x, z_spec)) for periods 1, tau."""
    require_off_lattice(x, tau, stol, "x")
    require_off_lattice(z_spec, tau, stol, "z_spec")
    return (
        sigma_w(x, tau),
        zeta_w(x, tau, stol),
        phi_w(x, z_spec, tau, stol),
        phi_w_prime(x, z_spec, tau, stol),
    )


# -- theta factors at the bigger modulus N tau --------------------------------


def theta_small(j, z, N, tau, deriv=0):
    """theta^(j)(z) = theta[1/2 - j/N, 1/2](z | N tau)."""
    return theta_char(0.5 - j / N, 0.5, z, N * complex(tau), deriv)


def theta_product_c(N, tau):
    """C(tau) relating theta(z|tau) to the product of theta^(j)(z)."""
    d1, _, _ = theta_constants(tau)
    d1_big = vartheta(0.0, N * complex(tau), 1)
    prod0 = 1.0 + 0.0j
    for j in range(1, N):
        prod0 *= theta_small(j, 0.0, N, tau)
    return d1 / (d1_big * prod0)


def dedekind_eta(tau, tol=DEFAULT_SERIES_TOL, max_terms=4096):
    """Dedekind eta from its infinite product, truncated below tol."""
    tau = complex(tau)
    if tau.imag < MIN_IM_TAU:
        raise DomainError(f"Im(tau) = {tau.imag} below floor {MIN_IM_TAU}")
    qbar = np.exp(TWO_PI_I * tau)
    out = np.exp(1j * np.pi * tau / 12.0)
    qk = qbar
    for _ in range(max_terms):
        out *= 1.0 - qk
        if abs(qk) < tol:
            return complex(out)
        qk *= qbar
    raise ConvergenceError("Dedekind eta product did not converge")


def vandermonde_c(N, tau):
    """C_N(tau) = (-1)^N / (i eta(tau))^((N-1)(N-2)/2) from the determinant formula."""
    power = (N - 1) * (N - 2) // 2
    return (-1.0) ** N / (1j * dedekind_eta(tau)) ** power


def fourier_resum_check(m, z, eta, N, tau, stol=DEFAULT_SINGULAR_TOL):
    """Max absolute two-sided residual of the finite Fourier identities on Z_N."""
    tau = complex(tau)
    big = N * tau
    # identity 1: e(m eta) phi(N eta, z + m tau | N tau) = (1/N) sum_k e(-mk/N) phi(z, eta + k/N | tau)
    lhs1 = np.exp(TWO_PI_I * m * eta) * kronecker_phi(N * eta, z + m * tau, big, stol)
    rhs1 = sum(
        np.exp(-TWO_PI_I * m * k / N) * kronecker_phi(z, eta + k / N, tau, stol)
        for k in range(N)
    ) / N
    # identity 2: phi(z, eta | tau) = sum_k e(z k) phi(N z, eta + k tau | N tau)
    lhs2 = kronecker_phi(z, eta, tau, stol)
    rhs2 = sum(
        np.exp(TWO_PI_I * z * k) * kronecker_phi(N * z, eta + k * tau, big, stol)
        for k in range(N)
    )
    return float(max(abs(lhs1 - rhs1), abs(lhs2 - rhs2)))


# -- identity residuals (used by the verification suite and tests) ------------


def addition_residual(z, u1, u2, tau, stol=DEFAULT_SINGULAR_TOL):
    """Relative residual of phi(z,u1) phi(z,u2) = phi(z,u1+u2) (E1 sums)."""
    lhs = kronecker_phi(z, u1, tau, stol) * kronecker_phi(z, u2, tau, stol)
    rhs = kronecker_phi(z, u1 + u2, tau, stol) * (
        e1(z, tau, stol) + e1(u1, tau, stol) + e1(u2, tau, stol) - e1(z + u1 + u2, tau, stol)
    )
    return np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))


def fay_residual(z1, z2, u1, u2, tau, stol=DEFAULT_SINGULAR_TOL):
    """Relative residual of the genus-one Fay identity."""
    lhs = kronecker_phi(z1, u1, tau, stol) * kronecker_phi(z2, u2, tau, stol)
    rhs = kronecker_phi(z1, u1 + u2, tau, stol) * kronecker_phi(z2 - z1, u2, tau, stol) + \
        kronecker_phi(z2, u1 + u2, tau, stol) * kronecker_phi(z1 - z2, u1, tau, stol)
    return np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))


def three_term_residual(z, w, u1, u2, v, tau, stol=DEFAULT_SINGULAR_TOL):
    """Relative residual of the three-term identity behind the Sklyanin bracket."""
    p = kronecker_phi
    lhs = p(z, u1 - v, tau, stol) * p(w, u2 + v, tau, stol) * p(z - w, v, tau, stol) - \
        p(z, u2 + v, tau, stol) * p(w, u1 - v, tau, stol) * p(z - w, u1 - u2 - v, tau, stol)
    rhs = p(z, u1, tau, stol) * p(w, u2, tau, stol) * (
        e1(v, tau, stol) - e1(u1 - u2 - v, tau, stol)
        + e1(u1 - v, tau, stol) - e1(u2 + v, tau, stol)
    )
    return np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))


def id1_residual(x, z_spec, tau, stol=DEFAULT_SINGULAR_TOL):
    """Phi' via zeta sums against the direct quotient-rule derivative."""
    lhs = phi_w_prime(x, z_spec, tau, stol)
    xc = np.asarray(x, dtype=complex)
    direct = np.exp(-xc * e1(z_spec, tau, stol)) * (
        kronecker_phi_dz(xc, z_spec, tau, stol)
        - e1(z_spec, tau, stol) * kronecker_phi(xc, z_spec, tau, stol)
    )
    return np.abs(lhs - direct) / np.maximum(1.0, np.abs(lhs))


def id2_residual(x, y, z_spec, tau, stol=DEFAULT_SINGULAR_TOL):
    """Relative residual of Phi(x)Phi(y) = Phi(x+y)(zeta(x)+zeta(y)+zeta(z)-zeta(x+y+z))."""
    lhs = phi_w(x, z_spec, tau, stol) * phi_w(y, z_spec, tau, stol)
    rhs = phi_w(x + y, z_spec, tau, stol) * (
        zeta_w(x, tau, stol) + zeta_w(y, tau, stol) + zeta_w(z_spec, tau, stol)
        - zeta_w(x + y + z_spec, tau, stol)
    )
    return np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))
