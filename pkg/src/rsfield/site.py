"""Single-site elliptic Ruijsenaars-Schneider model and the relativistic top.

Covers the Lax pair and Hamiltonians of the N-body model, the top Lax matrix
built from the quantum R-matrix, the factorization through the intertwiner
g(z, q), the explicit change of variables to spin components S_a, and the
classical Sklyanin bracket machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import elliptic as el
from . import matrices as mx
from . import rmatrix as rm
from .elliptic import EllipticContext
from .errors import BranchError, DomainError, PrecisionError, SingularityError


@dataclass
class SitePhase:
    """Canonical coordinates and momenta of one site (N particles)."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=complex).reshape(-1)
        self.p = np.asarray(self.p, dtype=complex).reshape(-1)
        if self.q.shape != self.p.shape:
            raise DomainError("q and p must have the same length")

    @property
    def n_particles(self) -> int:
        return self.q.size

    def require_generic(self, ctx: EllipticContext):
        N = self.n_particles
        for i in range(N):
            for j in range(i + 1, N):
                el.require_off_lattice(
                    self.q[i] - self.q[j], ctx.tau, ctx.singular_tol, f"q_{i+1}-q_{j+1}"
                )


def random_site(rng, N, ctx: EllipticContext, p_scale=0.3) -> SitePhase:
    """Seeded generic site state: separated coordinates, moderate momenta."""
    q = rm.generic_points(rng, N, ctx.tau)
    p = p_scale * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
    return SitePhase(q=q, p=p)


def b_coeffs(s: SitePhase, ctx: EllipticContext) -> np.ndarray:
    """b_j = prod_{k != j} theta(q_j - q_k - eta)/theta(q_j - q_k) e^{p_j/c}."""
    s.require_generic(ctx)
    N = s.n_particles
    out = np.exp(s.p / ctx.c_const)
    for j in range(N):
        for k in range(N):
            if k != j:
                d = s.q[j] - s.q[k]
                out[j] *= el.vartheta(d - ctx.eta, ctx.tau) / el.vartheta(d, ctx.tau)
    return out


def rs_lax(z, s: SitePhase, ctx: EllipticContext, velocities=None) -> np.ndarray:
    """L_ij(z) = phi(z, q_i - q_j + eta) b_j; velocities override the b's."""
    N = s.n_particles
    b = b_coeffs(s, ctx) if velocities is None else np.asarray(velocities, dtype=complex)
    diff = s.q[:, None] - s.q[None, :] + ctx.eta
    return el.kronecker_phi(z, diff, ctx.tau, ctx.singular_tol) * b[None, :]


def rs_lax_factorized(z, s: SitePhase, ctx: EllipticContext) -> np.ndarray:
    """Factorized form (theta'(0)/theta(eta)) g^{-1}(z) g(z + N eta) e^{P/c}."""
    N = s.n_particles
    d1, _, _ = el.theta_constants(ctx.tau)
    g_z = rm.g_matrix(z, s.q, N, ctx.tau, ctx.singular_tol)
    g_sh = rm.g_matrix(z + N * ctx.eta, s.q, N, ctx.tau, ctx.singular_tol)
    return (
        d1
        / el.vartheta(ctx.eta, ctx.tau)
        * np.linalg.inv(g_z)
        @ g_sh
        @ np.diag(np.exp(s.p / ctx.c_const))
    )


def rs_hamiltonians(s: SitePhase, ctx: EllipticContext):
    """(H_rs, H_log) = (c sum b_j, c Log of that), principal branch."""
    h = ctx.c_const * b_coeffs(s, ctx).sum()
    if h == 0:
        raise BranchError("H_rs vanished; log Hamiltonian undefined")
    return h, ctx.c_const * np.log(h)


def rs_flow(s: SitePhase, ctx: EllipticContext, which="standard"):
    """Analytic Hamiltonian vector field (q_dot, p_dot) of H_rs or its log."""
    if which not in ("standard", "log"):
        raise DomainError(f"unknown flow variant {which!r}")
    N = s.n_particles
    b = b_coeffs(s, ctx)
    c = ctx.c_const
    p_dot = np.zeros(N, dtype=complex)
    for i in range(N):
        acc = 0.0 + 0.0j
        for l in range(N):
            if l == i:
                continue
            d = s.q[i] - s.q[l]
            acc += (
                (b[i] + b[l]) * el.e1(d, ctx.tau, ctx.singular_tol)
                - b[i] * el.e1(d - ctx.eta, ctx.tau, ctx.singular_tol)
                - b[l] * el.e1(d + ctx.eta, ctx.tau, ctx.singular_tol)
            )
        p_dot[i] = c * acc
    if which == "standard":
        return b, p_dot
    h = b.sum()
    if h == 0:
        raise BranchError("H_rs vanished; log flow undefined")
    return b / h, p_dot / h


def newton_accel(q, q_dot, ctx: EllipticContext) -> np.ndarray:
    """Newtonian accelerations of the RS model as a function of (q, q_dot)."""
    q = np.asarray(q, dtype=complex)
    q_dot = np.asarray(q_dot, dtype=complex)
    N = q.size
    out = np.zeros(N, dtype=complex)
    for i in range(N):
        for k in range(N):
            if k == i:
                continue
            d = q[i] - q[k]
            out[i] += q_dot[i] * q_dot[k] * (
                2.0 * el.e1(d, ctx.tau, ctx.singular_tol)
                - el.e1(d + ctx.eta, ctx.tau, ctx.singular_tol)
                - el.e1(d - ctx.eta, ctx.tau, ctx.singular_tol)
            )
    return out


def rs_m(z, s: SitePhase, ctx: EllipticContext, velocities=None) -> np.ndarray:
    """Accompanying M-matrix of the RS Lax equation (standard flow by default)."""
    N = s.n_particles
    v = b_coeffs(s, ctx) if velocities is None else np.asarray(velocities, dtype=complex)
    out = np.zeros((N, N), dtype=complex)
    e1z = el.e1(z, ctx.tau, ctx.singular_tol)
    e1eta = el.e1(ctx.eta, ctx.tau, ctx.singular_tol)
    for i in range(N):
        for j in range(N):
            if i != j:
                out[i, j] = -el.kronecker_phi(z, s.q[i] - s.q[j], ctx.tau, ctx.singular_tol) * v[j]
        diag = v[i] * (e1z + e1eta)
        for k in range(N):
            if k != i:
                d = s.q[i] - s.q[k]
                diag += v[k] * (
                    el.e1(d + ctx.eta, ctx.tau, ctx.singular_tol)
                    - el.e1(d, ctx.tau, ctx.singular_tol)
                )
        out[i, i] = -diag
    return out


# -- relativistic top ----------------------------------------------------------


def top_lax(z, spin: np.ndarray, eta, ctx: EllipticContext, check_tol=1e-9) -> np.ndarray:
    """Top Lax matrix; computed in the T_a basis and via tr_2(R_12 S_2).

    The two constructions must agree; disagreement raises PrecisionError.
    """
    N = spin.shape[0]
    comp = mx.to_ta(spin, N)
    out = np.zeros((N, N), dtype=complex)
    for a1 in range(N):
        for a2 in range(N):
            om = el.omega_index(a1, a2, N, ctx.tau)
            out += comp[a1, a2] * mx.ta_matrix(N, a1, a2) * el.varphi_a(
                a1, a2, z, om + eta, N, ctx.tau, ctx.singular_tol
            )
    r12 = rm.baxter_belavin_R(N, eta, z, ctx.tau, ctx.singular_tol)
    via_r = np.einsum("ikjl,lk->ij", r12.reshape(N, N, N, N), spin)
    scale = max(1.0, float(np.abs(out).max()))
    if np.abs(out - via_r).max() > check_tol * scale:
        raise PrecisionError("top Lax constructions (T-basis vs R-matrix) disagree")
    return out


def top_m(z, spin: np.ndarray, ctx: EllipticContext) -> np.ndarray:
    """M(z) = -S_0 E1(z) 1 - sum_{a != 0} T_a S_a varphi_a(z, omega_a)."""
    N = spin.shape[0]
    comp = mx.to_ta(spin, N)
    out = -comp[0, 0] * el.e1(z, ctx.tau, ctx.singular_tol) * np.eye(N, dtype=complex)
    for a1 in range(N):
        for a2 in range(N):
            if a1 == 0 and a2 == 0:
                continue
            om = el.omega_index(a1, a2, N, ctx.tau)
            out -= comp[a1, a2] * mx.ta_matrix(N, a1, a2) * el.varphi_a(
                a1, a2, z, om, N, ctx.tau, ctx.singular_tol
            )
    return out


def top_j_map(spin: np.ndarray, eta, ctx: EllipticContext) -> np.ndarray:
    """J^eta(S) = S_0 E1(eta) 1 + sum_{a != 0} T_a S_a (E1(eta+omega_a) - E1(omega_a))."""
    N = spin.shape[0]
    comp = mx.to_ta(spin, N)
    out = comp[0, 0] * el.e1(eta, ctx.tau, ctx.singular_tol) * np.eye(N, dtype=complex)
    for a1 in range(N):
        for a2 in range(N):
            if a1 == 0 and a2 == 0:
                continue
            om = el.omega_index(a1, a2, N, ctx.tau)
            j_a = el.e1(eta + om, ctx.tau, ctx.singular_tol) - el.e1(om, ctx.tau, ctx.singular_tol)
            out += comp[a1, a2] * mx.ta_matrix(N, a1, a2) * j_a
    return out


def top_k_map(spin: np.ndarray, ctx: EllipticContext) -> np.ndarray:
    """K(S) = sum_{a != 0} T_a S_a (E1(omega_a) + 2 pi i a2/N).

    Subleading Laurent coefficient map of the varphi_a expansion at z = 0;
    enters the chain spin equations of motion (ledger).
    """
    N = spin.shape[0]
    comp = mx.to_ta(spin, N)
    out = np.zeros((N, N), dtype=complex)
    for a1 in range(N):
        for a2 in range(N):
            if a1 == 0 and a2 == 0:
                continue
            om = el.omega_index(a1, a2, N, ctx.tau)
            coeff = el.e1(om, ctx.tau, ctx.singular_tol) + 2j * np.pi * a2 / N
            out += comp[a1, a2] * mx.ta_matrix(N, a1, a2) * coeff
    return out


def top_flow(spin: np.ndarray, eta, ctx: EllipticContext) -> np.ndarray:
    """dS/dt = [S, J^eta(S)]."""
    return mx.comm(spin, top_j_map(spin, eta, ctx))


def eta_eliminated_lax(z, spin: np.ndarray, eta, ctx: EllipticContext) -> np.ndarray:
    """Shift-free top Lax L(z, S~) = 1 S~_0 + sum_{a != 0} T_a S~_a varphi_a(z, omega_a)
    with S~_a = S_a / varphi_a(eta, omega_a)."""
    N = spin.shape[0]
    comp = mx.to_ta(spin, N)
    out = comp[0, 0] * np.eye(N, dtype=complex)
    for a1 in range(N):
        for a2 in range(N):
            if a1 == 0 and a2 == 0:
                continue
            om = el.omega_index(a1, a2, N, ctx.tau)
            til = comp[a1, a2] / el.varphi_a(a1, a2, eta, om, N, ctx.tau, ctx.singular_tol)
            out += til * mx.ta_matrix(N, a1, a2) * el.varphi_a(
                a1, a2, z, om, N, ctx.tau, ctx.singular_tol
            )
    return out


# -- change of variables (p, q) -> spin ----------------------------------------


def spin_components(s: SitePhase, ctx: EllipticContext) -> np.ndarray:
    """S_a(p, q) for a in Z_N x Z_N, the explicit change of variables."""
    s.require_generic(ctx)
    N = s.n_particles
    qb = s.q - s.q.mean()
    eta, tau, c = ctx.eta, ctx.tau, ctx.c_const
    th_eta = el.vartheta(eta, tau)
    comp = np.empty((N, N), dtype=complex)
    for a1 in range(N):
        for a2 in range(N):
            om = el.omega_index(a1, a2, N, tau)
            acc = 0.0 + 0.0j
            for m in range(N):
                term = np.exp(s.p[m] / c) * el.e2pi(a2 * (eta - qb[m]))
                term *= el.vartheta(eta + om, tau) / th_eta
                for l in range(N):
                    if l != m:
                        d = s.q[m] - s.q[l]
                        term *= el.vartheta(d - eta - om, tau) / el.vartheta(d, tau)
                acc += term
            comp[a1, a2] = (-1.0) ** (a1 + a2) / N * el.e2pi(a2 * om / 2.0) * acc
    return comp


def spin_components_b40(s: SitePhase, ctx: EllipticContext) -> np.ndarray:
    """Literal transcription of the exponential-prefactor form of S_a.

    Differs from spin_components only in writing the prefactor as
    exp(i pi a2 omega_a); kept separate so the two transcriptions can be
    compared in tests.
    """
    N = s.n_particles
    qb = s.q - s.q.mean()
    eta, tau, c = ctx.eta, ctx.tau, ctx.c_const
    th_eta = el.vartheta(eta, tau)
    comp = np.empty((N, N), dtype=complex)
    for a1 in range(N):
        for a2 in range(N):
            om = el.omega_index(a1, a2, N, tau)
            acc = 0.0 + 0.0j
            for m in range(N):
                term = np.exp(s.p[m] / c) * np.exp(2j * np.pi * a2 * (eta - qb[m]))
                term *= el.vartheta(eta + om, tau) / th_eta
                for l in range(N):
                    if l != m:
                        d = s.q[m] - s.q[l]
                        term *= el.vartheta(d - eta - om, tau) / el.vartheta(d, tau)
                acc += term
            comp[a1, a2] = (-1.0) ** (a1 + a2) / N * np.exp(1j * np.pi * a2 * om) * acc
    return comp


def spin_vectors(s: SitePhase, ctx: EllipticContext):
    """(xi, psi) with S = xi (x) psi: xi from g(N eta) e^{P/c} rho, psi from breve g(0)."""
    N = s.n_particles
    d1, _, _ = el.theta_constants(ctx.tau)
    g_neta = rm.g_matrix(N * ctx.eta, s.q, N, ctx.tau, ctx.singular_tol)
    xi = d1 / el.vartheta(ctx.eta, ctx.tau) * g_neta @ np.exp(s.p / ctx.c_const)
    psi = np.ones(N) @ rm.breve_g0_closed(s.q, N, ctx.tau) / N
    return xi, psi


def s_change_of_vars(s: SitePhase, ctx: EllipticContext):
    """(S, xi, psi): spin matrix from components plus its rank-one factors."""
    comp = spin_components(s, ctx)
    spin = mx.from_ta(comp, s.n_particles)
    xi, psi = spin_vectors(s, ctx)
    return spin, xi, psi


def spin_from_pq(q, p, ctx: EllipticContext) -> np.ndarray:
    """Spin matrix S(p, q) via the component map (used by bracket oracles)."""
    return mx.from_ta(spin_components(SitePhase(q=q, p=p), ctx), len(q))


# -- Sklyanin bracket ------------------------------------------------------------


def poisson_fd(f, s: SitePhase, ctx: EllipticContext, step=1e-6):
    """Gradients (df/dp, df/dq) of a scalar-or-array function of SitePhase."""
    N = s.n_particles
    probe = f(s)
    shape = np.shape(probe)
    dp = np.empty((N,) + shape, dtype=complex)
    dq = np.empty((N,) + shape, dtype=complex)
    for k in range(N):
        pp, pm = s.p.copy(), s.p.copy()
        pp[k] += step
        pm[k] -= step
        dp[k] = (f(SitePhase(q=s.q, p=pp)) - f(SitePhase(q=s.q, p=pm))) / (2 * step)
        qp, qm = s.q.copy(), s.q.copy()
        qp[k] += step
        qm[k] -= step
        dq[k] = (f(SitePhase(q=qp, p=s.p)) - f(SitePhase(q=qm, p=s.p))) / (2 * step)
    return dp, dq


def bracket_fd(fa, fb, s: SitePhase, ctx: EllipticContext, step=1e-6):
    """{A, B} = sum_k (dA/dp_k dB/dq_k - dB/dp_k dA/dq_k) by central differences."""
    dap, daq = poisson_fd(fa, s, ctx, step)
    dbp, dbq = poisson_fd(fb, s, ctx, step)
    return np.einsum("k...,k...->...", dap, dbq) - np.einsum("k...,k...->...", dbp, daq)


def ta_reduction_sign(v1: int, v2: int, N: int) -> int:
    """Sign chi with T_(v1,v2) = chi * T_(v1 mod N, v2 mod N)."""
    m1, r1 = divmod(v1, N)
    m2, r2 = divmod(v2, N)
    return (-1) ** (m1 * r2 + m2 * r1 + N * m1 * m2)


def sklyanin_rhs(comp: np.ndarray, alpha, beta, eta, ctx: EllipticContext) -> complex:
    """Right-hand side of the classical Sklyanin bracket for {S_alpha, S_beta}.

    Well-defined form of the quadratic bracket (see ledger):

        (1/(2cN)) sum_{xi not in {0, [alpha-beta]}}
            chi_a chi_b (kappa_{a-b,xi} - kappa_{a-b,xi}^{-1})
            S_[alpha-xi] S_[beta+xi]
            (E1(w_xi) - E1(w_a - w_b - w_xi)
             + E1(w_a - w_xi + eta) - E1(w_b + w_xi + eta))

    with a = [alpha-xi], b = [beta+xi] reduced mod N, chi the T-basis
    reduction signs, and exact (unreduced) omega arithmetic in the E1
    arguments.  The xi = alpha - beta term carries a vanishing coefficient
    and is excluded.
    """
    N = comp.shape[0]
    tau = ctx.tau
    a1, a2 = alpha
    b1, b2 = beta
    om_a = el.omega_index(a1, a2, N, tau)
    om_b = el.omega_index(b1, b2, N, tau)
    total = 0.0 + 0.0j
    for x1 in range(N):
        for x2 in range(N):
            if (x1, x2) == (0, 0):
                continue
            if ((a1 - b1 - x1) % N, (a2 - b2 - x2) % N) == (0, 0):
                continue
            om_x = el.omega_index(x1, x2, N, tau)
            ra = ((a1 - x1) % N, (a2 - x2) % N)
            rb = ((b1 + x1) % N, (b2 + x2) % N)
            chi_a = ta_reduction_sign(ra[0] + x1, ra[1] + x2, N)
            chi_b = ta_reduction_sign(rb[0] - x1, rb[1] - x2, N)
            kap = np.exp(
                1j * np.pi / N * (x1 * (ra[1] - rb[1]) - x2 * (ra[0] - rb[0]))
            )
            ecomb = (
                el.e1(om_x, tau, ctx.singular_tol)
                - el.e1(om_a - om_b - om_x, tau, ctx.singular_tol)
                + el.e1(om_a - om_x + eta, tau, ctx.singular_tol)
                - el.e1(om_b + om_x + eta, tau, ctx.singular_tol)
            )
            total += chi_a * chi_b * (kap - 1.0 / kap) * comp[ra] * comp[rb] * ecomb
    return total / (2.0 * ctx.c_const * N)


def sklyanin_bracket_check(s: SitePhase, ctx: EllipticContext, alpha, beta, step=1e-6):
    """|finite-difference {S_alpha, S_beta} - Sklyanin RHS| for one index pair."""
    N = s.n_particles

    def comp_a(state):
        return spin_components(state, ctx)[alpha]

    def comp_b(state):
        return spin_components(state, ctx)[beta]

    lhs = bracket_fd(comp_a, comp_b, s, ctx, step)
    rhs = sklyanin_rhs(spin_components(s, ctx), alpha, beta, ctx.eta, ctx)
    return abs(lhs - rhs)


def lax_bracket_residual(s: SitePhase, ctx: EllipticContext, z, w, step=1e-6):
    """Residual of {L_1(z), L_2(w)} = (1/c)[L_1 L_2, r_12(z-w)] via FD brackets."""
    N = s.n_particles

    def lax_at(zz):
        def f(state):
            comp = spin_components(state, ctx)
            spin = mx.from_ta(comp, N)
            return top_lax(zz, spin, ctx.eta, ctx, check_tol=np.inf)

        return f

    la, lb = lax_at(z), lax_at(w)
    dap, daq = poisson_fd(la, s, ctx, step)
    dbp, dbq = poisson_fd(lb, s, ctx, step)
    lhs = np.einsum("kij,kmn->imjn", dap, dbq) - np.einsum("kmn,kij->imjn", dbp, daq)
    lhs = lhs.reshape(N * N, N * N)
    l1 = mx.kron(la(s), np.eye(N, dtype=complex))
    l2 = mx.kron(np.eye(N, dtype=complex), lb(s))
    r12 = rm.classical_r(N, z - w, ctx.tau, ctx.singular_tol)
    rhs = mx.comm(l1 @ l2, r12) / ctx.c_const
    return np.abs(lhs - rhs).max() / max(1.0, np.abs(rhs).max())
