"""Fully discrete pole dynamics: coefficients f, g, the discrete Lax pair,
the implicit time step solved by Newton iteration, and the fully discrete
zero-curvature residual.

A state holds two consecutive time slices of pole positions on the periodic
spatial lattice (same quasi-periodic closure convention as the field module:
advancing n sites shifts poles by alpha n eta / N).  The gauge rho = 1 makes
the right-hand side of the stepping equation the constant -1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import elliptic as el
from .elliptic import EllipticContext
from .errors import DomainError, StepFailureError

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


@dataclass
class DiscreteState:
    """Slices (lam_prev, lam_curr) = (lambda^{m-1}, lambda^m), shape (n, N)."""

    lam_prev: np.ndarray
    lam_curr: np.ndarray
    alpha: complex = 0.0 + 0.0j

    def __post_init__(self):
        self.lam_prev = np.atleast_2d(np.asarray(self.lam_prev, dtype=complex))
        self.lam_curr = np.atleast_2d(np.asarray(self.lam_curr, dtype=complex))
        if self.lam_prev.shape != self.lam_curr.shape:
            raise DomainError("slices must share the shape (n, N)")

    @property
    def n_sites(self) -> int:
        return self.lam_curr.shape[0]

    @property
    def n_particles(self) -> int:
        return self.lam_curr.shape[1]

    def period_shift(self, ctx: EllipticContext) -> complex:
        return self.alpha * self.n_sites * ctx.eta / self.n_particles

    def at(self, lam: np.ndarray, k: int, ctx: EllipticContext) -> np.ndarray:
        wrap, kk = divmod(k, self.n_sites)
        return lam[kk] + wrap * self.period_shift(ctx)


def random_discrete(rng, n, N, ctx: EllipticContext, step_scale=0.04) -> DiscreteState:
    """Seeded pair of slices satisfying the inter-slice constraint."""
    from . import rmatrix as rm

    alpha = -N
    lam0 = np.empty((n, N), dtype=complex)
    for k in range(n):
        lam0[k] = rm.generic_points(rng, N, ctx.tau, min_dist=0.15)
        lam0[k] += k * alpha * ctx.eta / N - lam0[k].mean() + 0.45 + 0.45j
    disp = step_scale * (rng.standard_normal((n, N)) + 1j * rng.standard_normal((n, N)))
    # site-independent displacement sums keep the constraint between slices
    disp -= disp.sum(axis=1, keepdims=True) / N
    lam1 = lam0 + disp + step_scale * 0.5
    return DiscreteState(lam_prev=lam0, lam_curr=lam1, alpha=alpha)


def constraint_residual(state: DiscreteState, ctx: EllipticContext) -> float:
    """Deviation of sum_j (lam_j(x+eta) - lam_j(x)) between the two slices."""
    worst = 0.0
    for lam in ():
        pass
    n = state.n_sites
    for k in range(n):
        inc_prev = (state.at(state.lam_prev, k + 1, ctx) - state.lam_prev[k]).sum()
        inc_curr = (state.at(state.lam_curr, k + 1, ctx) - state.lam_curr[k]).sum()
        worst = max(worst, abs(inc_prev - inc_curr))
    return worst


def disc_coeffs(state: DiscreteState, k, ctx: EllipticContext, kappa=1.0):
    """(f_i, g_i) of the transition lam_prev -> lam_curr at site k.

    f_i: residue data at lambda_i^m(x + eta); g_i at lambda_i^{m+1}(x); both
    in the rho = 1 gauge (kappa_m(x) = kappa).
    """
    n, N = state.lam_curr.shape
    tau = ctx.tau
    lam_m = state.lam_prev
    lam_m1 = state.lam_curr
    up_m = state.at(lam_m, k + 1, ctx)
    up_m1 = state.at(lam_m1, k + 1, ctx)
    f = np.empty(N, dtype=complex)
    g = np.empty(N, dtype=complex)
    for i in range(N):
        num = np.prod(el.sigma_w(up_m[i] - lam_m[k], tau)) * np.prod(
            el.sigma_w(up_m[i] - up_m1, tau)
        )
        den = np.prod(el.sigma_w(up_m[i] - lam_m1[k], tau))
        for j in range(N):
            if j != i:
                den *= el.sigma_w(up_m[i] - up_m[j], tau)
        f[i] = kappa * num / den
        num = np.prod(el.sigma_w(lam_m1[k, i] - lam_m[k], tau)) * np.prod(
            el.sigma_w(lam_m1[k, i] - up_m1, tau)
        )
        den = np.prod(el.sigma_w(lam_m1[k, i] - up_m, tau))
        for j in range(N):
            if j != i:
                den *= el.sigma_w(lam_m1[k, i] - lam_m1[k, j], tau)
        g[i] = -kappa * num / den
    return f, g


def disc_lax_pair(state: DiscreteState, k, z, ctx: EllipticContext):
    """(L^m(x_k, z), M^m(x_k, z)) for the transition stored in the state."""
    n, N = state.lam_curr.shape
    tau = ctx.tau
    stol = ctx.singular_tol
    f, g = disc_coeffs(state, k, ctx)
    up_m = state.at(state.lam_prev, k + 1, ctx)
    lmat = f[:, None] * el.phi_w(
        up_m[:, None] - state.lam_prev[k][None, :], z, tau, stol
    )
    mmat = g[:, None] * el.phi_w(
        state.lam_curr[k][:, None] - state.lam_prev[k][None, :], z, tau, stol
    )
    return lmat, mmat


def zero_curvature_residual(
    state: DiscreteState, nxt: DiscreteState, k, z, ctx: EllipticContext
) -> float:
    """|| L^{m+1}(x) M^m(x) - M^m(x+eta) L^m(x) || for consecutive transitions."""
    l_next, _ = disc_lax_pair(nxt, k, z, ctx)
    l_here, m_here = disc_lax_pair(state, k, z, ctx)
    _, m_up = disc_lax_pair(state, (k + 1) % state.n_sites, z, ctx)
    res = l_next @ m_here - m_up @ l_here
    scale = max(1.0, float(np.abs(l_next @ m_here).max()))
    return float(np.abs(res).max() / scale)


def disc16_residual(
    lam_prev: np.ndarray,
    lam_curr: np.ndarray,
    lam_next: np.ndarray,
    state: DiscreteState,
    ctx: EllipticContext,
) -> np.ndarray:
    """Residuals Pi_i^k + 1 of the implicit stepping equations (rho = 1 gauge)."""
    n, N = lam_curr.shape
    tau = ctx.tau
    out = np.empty((n, N), dtype=complex)
    for k in range(n):
        curr_up = state.at(lam_curr, k + 1, ctx)
        curr_dn = state.at(lam_curr, k - 1, ctx)
        prev_up = state.at(lam_prev, k + 1, ctx)
        next_dn = state.at(lam_next, k - 1, ctx)
        for i in range(N):
            x = lam_curr[k, i]
            num = (
                np.prod(el.sigma_w(x - curr_dn, tau))
                * np.prod(el.sigma_w(x - lam_next[k], tau))
                * np.prod(el.sigma_w(x - prev_up, tau))
            )
            den = (
                np.prod(el.sigma_w(x - curr_up, tau))
                * np.prod(el.sigma_w(x - lam_prev[k], tau))
                * np.prod(el.sigma_w(x - next_dn, tau))
            )
            out[k, i] = num / den + 1.0
    return out


def disc_step(state: DiscreteState, ctx: EllipticContext) -> np.ndarray:
    """Solve the implicit stepping equations for the next slice.

    Newton iteration with the analytic Jacobian (log sigma derivatives are
    zeta), initial guess 2 lam_curr - lam_prev, tolerance 1e-12 on the max
    residual, step halving on residual increase, at most 50 iterations.
    """
    n, N = state.lam_curr.shape
    tau = ctx.tau
    stol = ctx.singular_tol
    lam_next = 2.0 * state.lam_curr - state.lam_prev
    res = disc16_residual(state.lam_prev, state.lam_curr, lam_next, state, ctx)
    res_norm = float(np.abs(res).max())
    for _ in range(NEWTON_MAX_ITER):
        if res_norm <= NEWTON_TOL:
            return lam_next
        jac = np.zeros((n * N, n * N), dtype=complex)
        for k in range(n):
            next_dn = state.at(lam_next, k - 1, ctx)
            pi_vals = res[k] - 1.0
            for i in range(N):
                x = state.lam_curr[k, i]
                row = k * N + i
                for j in range(N):
                    # d/d lam_next[k, j]: numerator sigma(x - lam_next_j(x))
                    jac[row, k * N + j] -= pi_vals[i] * el.zeta_w(
                        x - lam_next[k, j], tau, stol
                    )
                    # d/d lam_next[k-1, j]: denominator sigma(x - lam_next_j(x - eta))
                    col = ((k - 1) % n) * N + j
                    jac[row, col] += pi_vals[i] * el.zeta_w(x - next_dn[j], tau, stol)
        try:
            delta = np.linalg.solve(jac, -res.ravel())
        except np.linalg.LinAlgError as exc:
            raise StepFailureError(f"singular Newton system: {exc}", residual=res_norm)
        step = 1.0
        for _ in range(30):
            cand = lam_next + step * delta.reshape(n, N)
            cand_res = disc16_residual(state.lam_prev, state.lam_curr, cand, state, ctx)
            cand_norm = float(np.abs(cand_res).max())
            if cand_norm < res_norm or res_norm <= NEWTON_TOL:
                lam_next, res, res_norm = cand, cand_res, cand_norm
                break
            step *= 0.5
        else:
            raise StepFailureError(
                f"Newton damping stalled at residual {res_norm:.3e}", residual=res_norm
            )
    if res_norm <= NEWTON_TOL:
        return lam_next
    raise StepFailureError(
        f"Newton did not converge within {NEWTON_MAX_ITER} iterations "
        f"(residual {res_norm:.3e})",
        residual=res_norm,
    )


def advance(state: DiscreteState, ctx: EllipticContext) -> DiscreteState:
    """One forward step: (lam^{m-1}, lam^m) -> (lam^m, lam^{m+1})."""
    lam_next = disc_step(state, ctx)
    return DiscreteState(lam_prev=state.lam_curr, lam_curr=lam_next, alpha=state.alpha)


def reverse(state: DiscreteState) -> DiscreteState:
    """Swap the slice roles; stepping the result runs the map backwards."""
    return DiscreteState(
        lam_prev=state.lam_curr, lam_curr=state.lam_prev, alpha=state.alpha
    )


def disc14_residual(state: DiscreteState, nxt: DiscreteState, ctx: EllipticContext) -> float:
    """|f^{m+1}(x) - g^m(x + eta)| across a solved step."""
    n = state.n_sites
    worst = 0.0
    for k in range(n):
        f_next, _ = disc_coeffs(nxt, k, ctx)
        _, g_here = disc_coeffs(state, (k + 1) % n, ctx)
        worst = max(worst, float(np.abs(f_next - g_here).max()))
    return worst
