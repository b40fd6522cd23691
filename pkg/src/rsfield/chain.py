"""The n-site Ruijsenaars-Schneider chain: Lax matrices, Hamiltonian, both
forms of the equations of motion, M-matrices, semi-discrete Zakharov-Shabat
residuals, and the gauge equivalence with the elliptic spin chain.

A chain state carries q, p arrays of shape (n, N) with periodic site index
(q^0 = q^n).  All Lax data is built from center-of-mass frame coordinates
qbar_i^k = q_i^k - mean_j q_j^k; the dynamics are invariant under per-site
center-of-mass shifts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import elliptic as el
from . import engine
from . import matrices as mx
from . import rmatrix as rm
from . import site as rs_site
from .elliptic import EllipticContext
from .errors import BranchError, DomainError
from .reports import ResidualReport


@dataclass
class ChainState:
    """Canonical data of the n-site chain: q, p of shape (n, N)."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.q = np.atleast_2d(np.asarray(self.q, dtype=complex))
        self.p = np.atleast_2d(np.asarray(self.p, dtype=complex))
        if self.q.shape != self.p.shape:
            raise DomainError("q and p must have the same shape (n, N)")

    @property
    def n_sites(self) -> int:
        return self.q.shape[0]

    @property
    def n_particles(self) -> int:
        return self.q.shape[1]

    def qbar(self) -> np.ndarray:
        return self.q - self.q.mean(axis=1, keepdims=True)

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.q.ravel(), self.p.ravel()])

    @classmethod
    def unflatten(cls, vec: np.ndarray, n: int, N: int) -> "ChainState":
        vec = np.asarray(vec, dtype=complex)
        half = n * N
        return cls(q=vec[:half].reshape(n, N), p=vec[half:].reshape(n, N))

    def require_generic(self, ctx: EllipticContext):
        n, N = self.q.shape
        qb = self.qbar()
        tol = ctx.singular_tol
        for k in range(n):
            for i in range(N):
                for j in range(i + 1, N):
                    el.require_off_lattice(
                        self.q[k, i] - self.q[k, j], ctx.tau, tol,
                        f"q_{i+1}^{k+1}-q_{j+1}^{k+1}",
                    )
            km1 = (k - 1) % n
            for i in range(N):
                for j in range(N):
                    el.require_off_lattice(
                        qb[km1, i] - qb[k, j] + ctx.eta, ctx.tau, tol,
                        f"qbar_{i+1}^{k}-qbar_{j+1}^{k+1}+eta",
                    )


def random_chain(
    rng, n, N, ctx: EllipticContext, p_scale=0.1, min_dist=0.12, accel_bound=2.0
) -> ChainState:
    """Seeded generic chain state, redrawn until the initial accelerations are
    moderate; keeps fixed-step acceptance runs well inside the RK4 regime."""
    for _ in range(200):
        q = np.empty((n, N), dtype=complex)
        for k in range(n):
            q[k] = rm.generic_points(rng, N, ctx.tau, min_dist=min_dist)
        p = p_scale * (rng.standard_normal((n, N)) + 1j * rng.standard_normal((n, N)))
        state = ChainState(q=q, p=p)
        state.require_generic(ctx)
        if np.abs(chain_newton_accel(state, ctx)).max() <= accel_bound:
            return state
    raise DomainError("could not draw a tame chain state")


def chain_b(state: ChainState, ctx: EllipticContext) -> np.ndarray:
    """Coefficients b_j^k = prod_l theta(qbar_j^k - qbar_l^{k-1} - eta)
    / (theta(-eta) prod_{l != j} theta(qbar_j^k - qbar_l^k)) e^{p_j^k/c}."""
    n, N = state.q.shape
    qb = state.qbar()
    tau, eta = ctx.tau, ctx.eta
    th_meta = el.vartheta(-eta, tau)
    num_args = qb[:, :, None] - np.roll(qb, 1, axis=0)[:, None, :] - eta  # (n, j, l)
    num = np.prod(el.vartheta(num_args.reshape(-1), tau).reshape(n, N, N), axis=2)
    den = np.ones((n, N), dtype=complex)
    for j in range(N):
        for l in range(N):
            if l != j:
                den[:, j] *= el.vartheta(qb[:, j] - qb[:, l], tau)
    return num / (th_meta * den) * np.exp(state.p / ctx.c_const)


def h_values(state: ChainState, ctx: EllipticContext) -> np.ndarray:
    """h[k] = h_{k-1,k} = sum_j b_j^k."""
    return chain_b(state, ctx).sum(axis=1)


def chain_lax(k, z, state: ChainState, ctx: EllipticContext, b=None) -> np.ndarray:
    """Ltilde^k_ij(z) = phi(z, qbar_i^{k-1} - qbar_j^k + eta) b_j^k."""
    n, N = state.q.shape
    qb = state.qbar()
    if b is None:
        b = chain_b(state, ctx)
    km1 = (k - 1) % n
    args = qb[km1][:, None] - qb[k][None, :] + ctx.eta
    return el.kronecker_phi(z, args, ctx.tau, ctx.singular_tol) * b[k][None, :]


def chain_lax_prime(k, z, state: ChainState, ctx: EllipticContext, b=None) -> np.ndarray:
    """L'^k(z) = Ltilde^k(z)/h_{k-1,k}; entries phi(z, ...) qdot_j^k."""
    if b is None:
        b = chain_b(state, ctx)
    return chain_lax(k, z, state, ctx, b=b) / b[k].sum()


def chain_lax_factorized(k, z, state: ChainState, ctx: EllipticContext) -> np.ndarray:
    """(theta'(0)/theta(eta)) g^{-1}(z, q^{k-1}) g(z + N eta, q^k) e^{P^k/c}."""
    n, N = state.q.shape
    d1, _, _ = el.theta_constants(ctx.tau)
    km1 = (k - 1) % n
    g_prev = rm.g_matrix(z, state.q[km1], N, ctx.tau, ctx.singular_tol)
    g_next = rm.g_matrix(z + N * ctx.eta, state.q[k], N, ctx.tau, ctx.singular_tol)
    return (
        d1
        / el.vartheta(ctx.eta, ctx.tau)
        * np.linalg.inv(g_prev)
        @ g_next
        @ np.diag(np.exp(state.p[k] / ctx.c_const))
    )


def chain_log_h(state: ChainState, ctx: EllipticContext, tracker=None) -> np.ndarray:
    """log h_{k-1,k} for all k, principal branch or continued via tracker."""
    h = h_values(state, ctx)
    if np.any(h == 0):
        raise BranchError("some h_{k-1,k} vanished")
    if tracker is None:
        return np.log(h)
    return tracker.logs(h)


def chain_hamiltonian(state: ChainState, ctx: EllipticContext, tracker=None) -> complex:
    """H = c sum_k log h_{k-1,k}."""
    return ctx.c_const * chain_log_h(state, ctx, tracker).sum()


def chain_flow(state: ChainState, ctx: EllipticContext):
    """Analytic Hamiltonian vector field (q_dot, p_dot) of the chain."""
    n, N = state.q.shape
    qb = state.qbar()
    tau, eta, c = ctx.tau, ctx.eta, ctx.c_const
    stol = ctx.singular_tol
    b = chain_b(state, ctx)
    h = b.sum(axis=1)
    qdot = b / h[:, None]
    # E1 stacks: cross-site down (qbar^k - qbar^{k-1} - eta), up (qbar^k - qbar^{k+1} + eta)
    qb_prev = np.roll(qb, 1, axis=0)
    qb_next = np.roll(qb, -1, axis=0)
    e1_down = el.e1(qb[:, :, None] - qb_prev[:, None, :] - eta, tau, stol)  # (k, i, l)
    e1_up = el.e1(qb[:, :, None] - qb_next[:, None, :] + eta, tau, stol)  # (k, i, l)
    qdot_next = np.roll(qdot, -1, axis=0)
    p_dot = np.zeros((n, N), dtype=complex)
    for k in range(n):
        for i in range(N):
            acc = -qdot[k, i] * e1_down[k, i, :].sum()
            acc -= (qdot_next[k] * e1_up[k, i, :]).sum()
            for l in range(N):
                if l != i:
                    acc += (qdot[k, i] + qdot[k, l]) * el.e1(
                        state.q[k, i] - state.q[k, l], tau, stol
                    )
            # center-of-mass double sums
            acc += (qdot[k][:, None] * e1_down[k]).sum() / N
            acc -= (
                qdot_next[k][:, None]
                * el.e1(qb_next[k][:, None] - qb[k][None, :] - eta, tau, stol)
            ).sum() / N
            p_dot[k, i] = c * acc
    return qdot, p_dot


def ctilde(state: ChainState, ctx: EllipticContext, qdot=None) -> np.ndarray:
    """Scalars c~^k relating the tilde and prime M-matrices."""
    n, N = state.q.shape
    qb = state.qbar()
    tau, eta = ctx.tau, ctx.eta
    stol = ctx.singular_tol
    if qdot is None:
        qdot = chain_flow(state, ctx)[0]
    qb_next = np.roll(qb, -1, axis=0)
    qdot_next = np.roll(qdot, -1, axis=0)
    out = np.zeros(n, dtype=complex)
    for k in range(n):
        args_ml = qb[k][:, None] - qb_next[k][None, :] + eta  # (m, l)
        out[k] += (qdot[k][:, None] * qdot_next[k][None, :] * el.e1(args_ml, tau, stol)).sum()
        args_lm = qb_next[k][:, None] - qb[k][None, :] - eta  # (l, m)
        out[k] += (qdot_next[k][:, None] * el.e1(args_lm, tau, stol)).sum() / N
    return out


def dt_log_h(state: ChainState, ctx: EllipticContext, qdot=None) -> np.ndarray:
    """d/dt log h_{k-1,k} = c~^{k-1} - c~^k along the flow."""
    ct = ctilde(state, ctx, qdot)
    return np.roll(ct, 1) - ct


def chain_newton_accel(state: ChainState, ctx: EllipticContext, qdot=None) -> np.ndarray:
    """Newtonian accelerations qddot_i^k of the chain equations of motion."""
    n, N = state.q.shape
    qb = state.qbar()
    tau, eta = ctx.tau, ctx.eta
    stol = ctx.singular_tol
    if qdot is None:
        qdot = chain_flow(state, ctx)[0]
    qb_prev = np.roll(qb, 1, axis=0)
    qb_next = np.roll(qb, -1, axis=0)
    qdot_prev = np.roll(qdot, 1, axis=0)
    qdot_next = np.roll(qdot, -1, axis=0)
    out = np.zeros((n, N), dtype=complex)
    for k in range(n):
        cross_up = (
            qdot[k][:, None] * qdot_next[k][None, :]
            * el.e1(qb[k][:, None] - qb_next[k][None, :] + eta, tau, stol)
        ).sum()
        # cross_down = sum_{m,l} qdot_l^k qdot_m^{k-1} E1(qbar_m^{k-1} - qbar_l^k + eta)
        cross_down = (
            qdot_prev[k][:, None] * qdot[k][None, :]
            * el.e1(qb_prev[k][:, None] - qb[k][None, :] + eta, tau, stol)
        ).sum()
        for i in range(N):
            rhs = -(qdot_next[k] * el.e1(qb[k, i] - qb_next[k] + eta, tau, stol)).sum()
            rhs -= (qdot_prev[k] * el.e1(qb[k, i] - qb_prev[k] - eta, tau, stol)).sum()
            for l in range(N):
                if l != i:
                    rhs += 2.0 * qdot[k, l] * el.e1(state.q[k, i] - state.q[k, l], tau, stol)
            rhs += cross_up - cross_down
            out[k, i] = qdot[k, i] * rhs
    return out


def chain_m(k, z, state: ChainState, ctx: EllipticContext, variant="prime", qdot=None) -> np.ndarray:
    """M-matrix of the semi-discrete zero-curvature equation at site k.

    variant "tilde" accompanies Ltilde; "prime" = tilde + c~^k 1 accompanies L'.
    """
    if variant not in ("tilde", "prime"):
        raise DomainError(f"unknown M variant {variant!r}")
    n, N = state.q.shape
    qb = state.qbar()
    tau, eta = ctx.tau, ctx.eta
    stol = ctx.singular_tol
    if qdot is None:
        qdot = chain_flow(state, ctx)[0]
    qb_next = np.roll(qb, -1, axis=0)
    qdot_next = np.roll(qdot, -1, axis=0)
    out = np.zeros((N, N), dtype=complex)
    e1z = el.e1(z, tau, stol)
    for i in range(N):
        for j in range(N):
            if i != j:
                out[i, j] = -el.kronecker_phi(
                    z, state.q[k, i] - state.q[k, j], tau, stol
                ) * qdot[k, j]
        diag = -e1z * qdot[k, i]
        for m in range(N):
            if m != i:
                diag += qdot[k, m] * el.e1(state.q[k, i] - state.q[k, m], tau, stol)
        diag -= (qdot_next[k] * el.e1(qb[k, i] - qb_next[k] + eta, tau, stol)).sum()
        if variant == "tilde":
            diag -= (
                qdot_next[k][:, None] * el.e1(
                    qb_next[k][:, None] - qb[k][None, :] - eta, tau, stol
                )
            ).sum() / N
        else:
            diag += (
                qdot[k][:, None] * qdot_next[k][None, :]
                * el.e1(qb[k][:, None] - qb_next[k][None, :] + eta, tau, stol)
            ).sum()
        out[i, i] = diag
    return out


def transfer_matrix(z, state: ChainState, ctx: EllipticContext, variant="t", b=None) -> complex:
    """t(z) = tr prod_k Ltilde^k(z); t'(z) = t(z) exp(-H/c)."""
    if variant not in ("t", "t_prime"):
        raise DomainError(f"unknown transfer variant {variant!r}")
    n, N = state.q.shape
    if b is None:
        b = chain_b(state, ctx)
    mono = np.eye(N, dtype=complex)
    for k in range(n):
        lk = chain_lax(k, z, state, ctx, b=b)
        if variant == "t_prime":
            lk = lk / b[k].sum()
        mono = mono @ lk
    return complex(np.trace(mono))


def monodromy(z, state: ChainState, ctx: EllipticContext, b=None) -> np.ndarray:
    """Ordered product Ltilde^1(z) ... Ltilde^n(z)."""
    n, N = state.q.shape
    if b is None:
        b = chain_b(state, ctx)
    mono = np.eye(N, dtype=complex)
    for k in range(n):
        mono = mono @ chain_lax(k, z, state, ctx, b=b)
    return mono


def exp_h_over_c_from_t(state: ChainState, ctx: EllipticContext, z_pair=(1e-4, 5e-5)) -> complex:
    """exp(H/c) = Res_{z=0} z^{n-1} t(z) via two-point Richardson on z^n t(z)."""
    n = state.n_sites
    z1, z2 = z_pair
    f1 = z1**n * transfer_matrix(z1, state, ctx)
    f2 = z2**n * transfer_matrix(z2, state, ctx)
    return (z1 * f2 - z2 * f1) / (z1 - z2)


def chain_flow_vector(ctx: EllipticContext, n, N):
    """Flattened flow for the integrators."""

    def flow(t, vec):
        state = ChainState.unflatten(vec, n, N)
        qdot, pdot = chain_flow(state, ctx)
        return np.concatenate([qdot.ravel(), pdot.ravel()])

    return flow


# -- spin-chain gauge ------------------------------------------------------------


@dataclass
class SpinChainData:
    """Rank-one spin data S^k = xi^k (x) psi^k for the gauge-equivalent chain."""

    xi: np.ndarray  # (n, N)
    psi: np.ndarray  # (n, N)

    @property
    def spins(self) -> np.ndarray:
        return np.einsum("ki,kj->kij", self.xi, self.psi)

    def h_pairing(self, k) -> complex:
        """h_{k,k+1} = (psi^k, xi^{k+1})."""
        n = self.xi.shape[0]
        return complex(self.psi[k] @ self.xi[(k + 1) % n])


def spin_chain_gauge(state: ChainState, ctx: EllipticContext) -> SpinChainData:
    """xi^k, psi^k from the per-site change of variables."""
    n, N = state.q.shape
    xi = np.empty((n, N), dtype=complex)
    psi = np.empty((n, N), dtype=complex)
    for k in range(n):
        phase = rs_site.SitePhase(q=state.q[k], p=state.p[k])
        xi[k], psi[k] = rs_site.spin_vectors(phase, ctx)
    return SpinChainData(xi=xi, psi=psi)


def spin_lax(z, spin, ctx: EllipticContext) -> np.ndarray:
    """Sklyanin Lax matrix tr_2(R^eta_12(z) S_2) for one site."""
    return rs_site.top_lax(z, spin, ctx.eta, ctx, check_tol=np.inf)


def spin_monodromy(z, data: SpinChainData, ctx: EllipticContext) -> np.ndarray:
    out = np.eye(data.xi.shape[1], dtype=complex)
    for k in range(data.xi.shape[0]):
        out = out @ spin_lax(z, np.outer(data.xi[k], data.psi[k]), ctx)
    return out


def spin_m(k, z, data: SpinChainData, ctx: EllipticContext) -> np.ndarray:
    """M^k(z) built from the normalized connector S^{k+1,k}."""
    n = data.xi.shape[0]
    connector = np.outer(data.xi[(k + 1) % n], data.psi[k]) / data.h_pairing(k)
    return rs_site.top_m(z, connector, ctx)


def spin_eom_rhs(k, data: SpinChainData, ctx: EllipticContext) -> np.ndarray:
    """dS^k/dt from the residue of the spin zero-curvature equation.

    With L^k(z) = S^k/z + L0^k + O(z) and M^k(z) = -S^{k+1,k}/z + M0^k + O(z):

        dS^k/dt = S^k M0^k - M0^{k-1} S^k - L0^k S^{k+1,k} + S^{k,k-1} L0^k,

    where L0 = J^eta(S^k) + K(S^k) and M0^k = -K(S^{k+1,k}).  The compact
    J-only form printed in the source material drops the K-map pieces, which
    cancel only on a single site (ledger).
    """
    n = data.xi.shape[0]
    s_k = np.outer(data.xi[k], data.psi[k])
    up = np.outer(data.xi[(k + 1) % n], data.psi[k]) / data.h_pairing(k)
    down = np.outer(data.xi[k], data.psi[(k - 1) % n]) / data.h_pairing((k - 1) % n)
    l0 = rs_site.top_j_map(s_k, ctx.eta, ctx) + rs_site.top_k_map(s_k, ctx)
    m0_up = -rs_site.top_k_map(up, ctx)
    m0_down = -rs_site.top_k_map(down, ctx)
    return s_k @ m0_up - m0_down @ s_k - l0 @ up + down @ l0


# -- residual suites --------------------------------------------------------------


def zakharov_shabat_residual(
    state: ChainState,
    ctx: EllipticContext,
    z_samples,
    dt=1e-3,
    variants=("tilde", "prime"),
) -> ResidualReport:
    """Central-difference Zakharov-Shabat residuals for every site and sample z.

    For each site k: || dL^k/dt - (L^k M^k - M^{k-1} L^k) ||_inf with dL/dt
    from states integrated to t = +-dt (RK4 substeps).
    """
    n, N = state.q.shape
    flow = chain_flow_vector(ctx, n, N)
    nsub = 4
    plus = engine.integrate_rk4(flow, state.flatten(), dt / nsub, dt)
    minus = engine.integrate_rk4(lambda t, v: -flow(t, v), state.flatten(), dt / nsub, dt)
    sp = ChainState.unflatten(plus.states[-1], n, N)
    sm = ChainState.unflatten(minus.states[-1], n, N)
    rep = ResidualReport(suite="zakharov_shabat")
    b0 = chain_b(state, ctx)
    qdot0 = chain_flow(state, ctx)[0]
    for variant in variants:
        lax = chain_lax_prime if variant == "prime" else chain_lax
        worst = 0.0
        for k in range(n):
            for z in z_samples:
                mk_z = chain_m(k, z, state, ctx, variant=variant, qdot=qdot0)
                mkm1_z = chain_m((k - 1) % n, z, state, ctx, variant=variant, qdot=qdot0)
                ldot = (lax(k, z, sp, ctx) - lax(k, z, sm, ctx)) / (2 * dt)
                lk = lax(k, z, state, ctx, b=b0)
                res = np.abs(ldot - (lk @ mk_z - mkm1_z @ lk)).max()
                worst = max(worst, res)
        rep.add(f"zakharov_shabat_{variant}", worst, 1e-5, f"dt={dt}")
    return rep
