"""Baxter-Belavin quantum R-matrix, classical r-matrix, dynamical R-matrices,
and the IRF-Vertex intertwiner g(z, q) with its explicit inverse.

Tensor convention: an operator on C^N (x) C^N is an N^2 x N^2 matrix with
row index i*N + k and column index j*N + l for E_ij (x) E_kl (0-based).
"""

from __future__ import annotations

import numpy as np

from . import elliptic as el
from . import matrices as mx
from .errors import PrecisionError, SingularityError
from .reports import ResidualReport

EXPANSION_Z = (1e-4, 5e-5)


def _eye2(N):
    return np.eye(N * N, dtype=complex)


def _eunit(N, i, j):
    out = np.zeros((N, N), dtype=complex)
    out[i, j] = 1.0
    return out


def baxter_belavin_R(N, hbar, z, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Quantum R-matrix (1/N) sum_a T_a (x) T_{-a} varphi_a(z, omega_a + hbar)."""
    out = np.zeros((N * N, N * N), dtype=complex)
    for a1 in range(N):
        for a2 in range(N):
            om = el.omega_index(a1, a2, N, tau)
            try:
                f = el.varphi_a(a1, a2, z, om + hbar, N, tau, stol)
            except SingularityError as exc:
                raise SingularityError(
                    f"R-matrix pole: omega_({a1},{a2}) + hbar near lattice: {exc}"
                ) from exc
            out += f * mx.kron(mx.ta_matrix(N, a1, a2), mx.ta_matrix(N, -a1, -a2))
    return out / N


def baxter_belavin_R_standard(N, hbar, z, tau):
    """Same R-matrix assembled entrywise in the standard basis (cross-check form).

    R_(ij,kl) = delta_{i+k = j+l mod N} e(((k-j)(j-i) tau + (k-j) N hbar + (j-i) z)/N)
                phi(z + (k-j) tau, N hbar + (j-i) tau | N tau)
    with 1-based labels.
    """
    big = N * complex(tau)
    out = np.zeros((N * N, N * N), dtype=complex)
    for i in range(1, N + 1):
        for j in range(1, N + 1):
            for k in range(1, N + 1):
                for l in range(1, N + 1):
                    if (i + k - j - l) % N:
                        continue
                    pref = el.e2pi(
                        ((k - j) * (j - i) * tau + (k - j) * N * hbar + (j - i) * z) / N
                    )
                    val = pref * el.kronecker_phi(
                        z + (k - j) * tau, N * hbar + (j - i) * tau, big
                    )
                    out += val * mx.kron(_eunit(N, i - 1, j - 1), _eunit(N, k - 1, l - 1))
    return out


def classical_r(N, z, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Classical r-matrix: (1/N)[1x1 E1(z) + sum_{a!=0} T_a x T_{-a} varphi_a(z, omega_a)]."""
    out = _eye2(N) * el.e1(z, tau, stol)
    for a1 in range(N):
        for a2 in range(N):
            if a1 == 0 and a2 == 0:
                continue
            om = el.omega_index(a1, a2, N, tau)
            f = el.varphi_a(a1, a2, z, om, N, tau, stol)
            out += f * mx.kron(mx.ta_matrix(N, a1, a2), mx.ta_matrix(N, -a1, -a2))
    return out / N


def felder_R(N, hbar, z12, q, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Felder's dynamical R-matrix; z12 is the difference of spectral parameters."""
    q = np.asarray(q, dtype=complex)
    out = np.zeros((N * N, N * N), dtype=complex)
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            qij = q[i] - q[j]
            out += el.kronecker_phi(N * hbar, -qij, tau, stol) * mx.kron(
                _eunit(N, i, i), _eunit(N, j, j)
            )
            out += el.kronecker_phi(z12, qij, tau, stol) * mx.kron(
                _eunit(N, i, j), _eunit(N, j, i)
            )
    diag = el.kronecker_phi(N * hbar, z12, tau, stol)
    for i in range(N):
        out += diag * mx.kron(_eunit(N, i, i), _eunit(N, i, i))
    return out


def acf_R(N, hbar, z1, z2, q, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Semidynamical R-matrix used for Ruijsenaars-Schneider quantization.

    Off-diagonal arguments carry +q_ij; with the (a21)-style intertwiner this
    is the sign for which the conjugation to Baxter-Belavin holds (ledger).
    """
    q = np.asarray(q, dtype=complex)
    out = np.zeros((N * N, N * N), dtype=complex)
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            qij = q[i] - q[j]
            out += el.kronecker_phi(N * hbar, qij, tau, stol) * mx.kron(
                _eunit(N, i, i), _eunit(N, j, j)
            )
            out += el.kronecker_phi(z1 - z2, qij, tau, stol) * mx.kron(
                _eunit(N, i, j), _eunit(N, j, i)
            )
            out -= el.kronecker_phi(z1 + N * hbar, qij, tau, stol) * mx.kron(
                _eunit(N, i, j), _eunit(N, j, j)
            )
            out += el.kronecker_phi(z2, qij, tau, stol) * mx.kron(
                _eunit(N, j, j), _eunit(N, i, j)
            )
    diag = (
        el.e1(N * hbar, tau, stol)
        + el.e1(z1 - z2, tau, stol)
        + el.e1(z2, tau, stol)
        - el.e1(z1 + N * hbar, tau, stol)
    )
    for i in range(N):
        out += diag * mx.kron(_eunit(N, i, i), _eunit(N, i, i))
    return out


# -- intertwiner ---------------------------------------------------------------


def _barred(q):
    q = np.asarray(q, dtype=complex)
    return q - q.mean()


def xi_matrix(z, q, N, tau):
    """Xi_ij(z, q) = theta[1/2 - i/N, N/2](z - N qbar_j | N tau), 1-based i."""
    q = np.asarray(q, dtype=complex)
    qb = _barred(q)
    big = N * complex(tau)
    out = np.empty((N, N), dtype=complex)
    for i in range(1, N + 1):
        out[i - 1, :] = el.theta_char(0.5 - i / N, N / 2.0, z - N * qb, big)
    return out


def d0_matrix(q, N, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Diagonal d0_jj = prod_{k != j} theta(q_j - q_k)."""
    q = np.asarray(q, dtype=complex)
    vals = np.ones(N, dtype=complex)
    for j in range(N):
        for k in range(N):
            if k != j:
                el.require_off_lattice(q[j] - q[k], tau, stol, f"q_{j+1}-q_{k+1}")
                vals[j] *= el.vartheta(q[j] - q[k], tau)
    return np.diag(vals)


def g_matrix(z, q, N, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Intertwiner g(z, q) = Xi(z, q) (d0)^{-1}.

    Xi depends on q only through the center-of-mass frame coordinates,
    so g(z, q) = g(z, qbar) identically.
    """
    return xi_matrix(z, q, N, tau) @ np.linalg.inv(d0_matrix(q, N, tau, stol))


def g_inverse_explicit(z, q, N, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Closed-form inverse of g(z, q) as a finite characteristic sum.

    Includes a (-1)^{a1} factor inside the sum, required for the formula to
    invert g; see the decisions ledger.
    """
    el.require_off_lattice(z, tau, stol, "z")
    q = np.asarray(q, dtype=complex)
    qb = _barred(q)
    big = N * complex(tau)
    out = np.empty((N, N), dtype=complex)
    tz = el.vartheta(z, tau)
    for i in range(1, N + 1):
        den = el.vartheta(z + (N - 1) / 2.0 - N * qb[i - 1], big)
        for j in range(1, N + 1):
            acc = 0.0 + 0.0j
            for a1 in range(N):
                w = (a1 + j * tau) / N
                pref = (-1.0) ** a1 * el.e2pi(a1 * j / (2.0 * N) + j * w / 2.0) * el.e2pi(
                    -j * qb[i - 1]
                ) * el.e2pi(z * j / N)
                prod = 1.0 + 0.0j
                for l in range(N):
                    if l != i - 1:
                        prod *= el.vartheta(q[i - 1] - q[l] - w, tau)
                acc += pref * el.vartheta(z + w, tau) / tz * prod
            out[i - 1, j - 1] = (-1.0) ** (j + 1) / N / den * acc
    return out


def g_matrix_dz(z, q, N, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Exact z-derivative of g(z, q), term-wise on the theta series."""
    q = np.asarray(q, dtype=complex)
    qb = _barred(q)
    big = N * complex(tau)
    out = np.empty((N, N), dtype=complex)
    for i in range(1, N + 1):
        out[i - 1, :] = el.theta_char(0.5 - i / N, N / 2.0, z - N * qb, big, deriv=1)
    return out @ np.linalg.inv(d0_matrix(q, N, tau, stol))


def f_columns(x, q, N, tau):
    """f_j(x, q) for j = 1..N; independent of which qbar_i is passed as x."""
    q = np.asarray(q, dtype=complex)
    qb = _barred(q)
    big = N * complex(tau)
    out = np.empty(N, dtype=complex)
    for j in range(1, N + 1):
        acc = 0.0 + 0.0j
        for a1 in range(N):
            w = (a1 + j * tau) / N
            prod = np.prod(el.vartheta(x - qb - w, tau))
            acc += (-1.0) ** a1 * el.e2pi(a1 * j / N) * prod
        out[j - 1] = el.e2pi(-j * x) / el.vartheta((N - 1) / 2.0 - N * x, big) * acc
    return out


def breve_g0_closed(q, N, tau):
    """Residue of g^{-1}(z, q) at z = 0 from the closed form; rank one."""
    q = np.asarray(q, dtype=complex)
    qb = _barred(q)
    d1, _, _ = el.theta_constants(tau)
    if N == 1:
        # g(z) = -theta(z); the generic formula is 0/0 here
        return np.array([[-1.0 / d1]], dtype=complex)
    out = np.empty((N, N), dtype=complex)
    for i in range(N):
        fj = f_columns(qb[i], q, N, tau)
        for j in range(1, N + 1):
            out[i, j - 1] = (-1.0) ** j / (N * d1) * el.e2pi(j * j * tau / (2.0 * N)) * fj[j - 1]
    return out


def g_expansion(q, N, tau, stol=el.DEFAULT_SINGULAR_TOL, z_pair=EXPANSION_Z, check_tol=1e-6):
    """(breve_g0, A) from g^{-1}(z) = breve_g0/z + A + O(z), two-point Richardson.

    The closed-form residue is used to peel off the pole before extrapolating
    A; the two z-estimates must agree to check_tol.
    """
    z1, z2 = z_pair
    breve_closed = breve_g0_closed(q, N, tau)
    ginv1 = np.linalg.inv(g_matrix(z1, q, N, tau, stol))
    ginv2 = np.linalg.inv(g_matrix(z2, q, N, tau, stol))
    # residue: z g^{-1}(z) = breve + A z + O(z^2); Richardson kills the linear term
    r1, r2 = z1 * ginv1, z2 * ginv2
    breve = (z1 * r2 - z2 * r1) / (z1 - z2)
    # built-in cross-check against the closed-form residue
    if np.abs(breve - breve_closed).max() > check_tol * max(1.0, np.abs(breve_closed).max()):
        raise PrecisionError("extrapolated residue disagrees with the closed form")
    # subleading: g^{-1}(z) - breve_closed/z = A + B z + O(z^2); the exact pole
    # is peeled off with the closed-form residue to avoid cancellation
    a1 = ginv1 - breve_closed / z1
    a2 = ginv2 - breve_closed / z2
    a_mat = (z1 * a2 - z2 * a1) / (z1 - z2)
    return breve, a_mat


def g_inverse_series_closed(q, N, tau):
    """Exact Laurent data (breve_g0, A) of g^{-1}(z) = breve/z + A + O(z).

    Obtained by differentiating the closed-form inverse at z = 0: writing
    g^{-1}(z) = T(z)/theta(z) with T analytic, breve = T(0)/theta'(0) and
    A = T'(0)/theta'(0) (theta has no z^2 term at the origin).
    """
    q = np.asarray(q, dtype=complex)
    qb = _barred(q)
    big = N * complex(tau)
    d1, _, _ = el.theta_constants(tau)
    if N == 1:
        # g(z) = -theta(z): g^{-1} = -1/theta(z) = -1/(d1 z) + 0 + O(z^2)
        return np.array([[-1.0 / d1]], dtype=complex), np.zeros((1, 1), dtype=complex)
    breve = np.empty((N, N), dtype=complex)
    a_mat = np.empty((N, N), dtype=complex)
    for i in range(N):
        arg_big = (N - 1) / 2.0 - N * qb[i]
        d0 = el.vartheta(arg_big, big)
        d0p = el.vartheta(arg_big, big, 1)
        for j in range(1, N + 1):
            t0 = 0.0 + 0.0j
            t1 = 0.0 + 0.0j
            for a1 in range(N):
                w = (a1 + j * tau) / N
                s = (-1.0) ** a1 * el.e2pi(a1 * j / (2.0 * N) + j * w / 2.0) * el.e2pi(-j * qb[i])
                prod = 1.0 + 0.0j
                for l in range(N):
                    if l != i:
                        prod *= el.vartheta(q[i] - q[l] - w, tau)
                t0 += s * el.vartheta(w, tau) * prod
                t1 += s * (2j * np.pi * j / N * el.vartheta(w, tau) + el.vartheta(w, tau, 1)) * prod
            pref = (-1.0) ** (j + 1) / N
            breve[i, j - 1] = pref * t0 / d0 / d1
            a_mat[i, j - 1] = pref * (t1 / d0 - d0p / d0**2 * t0) / d1
    return breve, a_mat


def o12_matrix(N):
    """O_12 = sum_{ij} E_ii (x) E_ji with tr_2(O_12 T_2) = diag of row sums of T."""
    out = np.zeros((N * N, N * N), dtype=complex)
    for i in range(N):
        for j in range(N):
            out += mx.kron(_eunit(N, i, i), _eunit(N, j, i))
    return out


# -- relation residuals ---------------------------------------------------------


def _g1(mat, N):
    return mx.kron(mat, np.eye(N, dtype=complex))


def _g2(mat, N):
    return mx.kron(np.eye(N, dtype=complex), mat)


def _g1_shift2(z, q, N, tau, shift, stol):
    """g_1(z, q + shift^{(2)}): slot-1 matrix whose q is shifted by the slot-2 index."""
    out = np.zeros((N * N, N * N), dtype=complex)
    for k in range(N):
        qs = np.asarray(q, dtype=complex).copy()
        qs[k] += shift
        out += mx.kron(g_matrix(z, qs, N, tau, stol), _eunit(N, k, k))
    return out


def _g2_shift1(z, q, N, tau, shift, stol):
    out = np.zeros((N * N, N * N), dtype=complex)
    for k in range(N):
        qs = np.asarray(q, dtype=complex).copy()
        qs[k] += shift
        out += mx.kron(_eunit(N, k, k), g_matrix(z, qs, N, tau, stol))
    return out


def irf_vertex_residual(N, hbar, z1, z2, q, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Residual of the IRF-Vertex relation between Baxter-Belavin and Felder."""
    lhs = (
        _g2(g_matrix(z2, q, N, tau, stol), N)
        @ _g1_shift2(z1, q, N, tau, N * hbar, stol)
        @ felder_R(N, hbar, z1 - z2, q, tau, stol)
    )
    rhs = (
        baxter_belavin_R(N, hbar, z1 - z2, tau, stol)
        @ _g1(g_matrix(z1, q, N, tau, stol), N)
        @ _g2_shift1(z2, q, N, tau, N * hbar, stol)
    )
    return np.abs(lhs - rhs).max() / max(1.0, np.abs(lhs).max())


def acf_relation_residual(N, hbar, z1, z2, q, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Residual of the conjugation relating the ACF R-matrix to Baxter-Belavin."""
    lhs = baxter_belavin_R(N, hbar, z1 - z2, tau, stol)
    rhs = (
        _g1(g_matrix(z1 + N * hbar, q, N, tau, stol), N)
        @ _g2(g_matrix(z2, q, N, tau, stol), N)
        @ acf_R(N, hbar, z1, z2, q, tau, stol)
        @ _g2(np.linalg.inv(g_matrix(z2 + N * hbar, q, N, tau, stol)), N)
        @ _g1(np.linalg.inv(g_matrix(z1, q, N, tau, stol)), N)
    )
    return np.abs(lhs - rhs).max() / max(1.0, np.abs(lhs).max())


def b01_residual(N, hbar, z, q, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Residual of breve_g_2(0) R_12(z) = g_1(z + N hbar) O_12 g_2^{-1}(N hbar) g_1^{-1}(z)."""
    breve = breve_g0_closed(q, N, tau)
    lhs = _g2(breve, N) @ baxter_belavin_R(N, hbar, z, tau, stol)
    rhs = (
        _g1(g_matrix(z + N * hbar, q, N, tau, stol), N)
        @ o12_matrix(N)
        @ _g2(np.linalg.inv(g_matrix(N * hbar, q, N, tau, stol)), N)
        @ _g1(np.linalg.inv(g_matrix(z, q, N, tau, stol)), N)
    )
    return np.abs(lhs - rhs).max() / max(1.0, np.abs(lhs).max())


def b011_residual(N, z, q, tau, stol=el.DEFAULT_SINGULAR_TOL, breve=None, a_mat=None):
    """Residual of the hbar -> 0 degeneration of the b01 relation.

    Defaults to the exact Laurent data of g^{-1}; pass the Richardson pair
    from g_expansion to exercise the extraction path instead.
    """
    if breve is None or a_mat is None:
        breve, a_mat = g_inverse_series_closed(q, N, tau)
    g = g_matrix(z, q, N, tau, stol)
    ginv = np.linalg.inv(g)
    gprime = g_matrix_dz(z, q, N, tau, stol)
    lhs = _g2(breve, N) @ classical_r(N, z, tau, stol)
    rhs = _g1(gprime, N) @ o12_matrix(N) @ _g2(breve, N) @ _g1(ginv, N) + _g1(g, N) @ o12_matrix(
        N
    ) @ _g2(a_mat, N) @ _g1(ginv, N)
    return np.abs(lhs - rhs).max() / max(1.0, np.abs(lhs).max())


def ybe_residual(N, hbar, z1, z2, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Quantum Yang-Baxter residual R12(z1-z2) R13(z1) R23(z2) = R23 R13 R12."""
    r12 = mx.embed_two_site(baxter_belavin_R(N, hbar, z1 - z2, tau, stol), 0, 1, N)
    r13 = mx.embed_two_site(baxter_belavin_R(N, hbar, z1, tau, stol), 0, 2, N)
    r23 = mx.embed_two_site(baxter_belavin_R(N, hbar, z2, tau, stol), 1, 2, N)
    lhs = r12 @ r13 @ r23
    rhs = r23 @ r13 @ r12
    return np.abs(lhs - rhs).max() / max(1.0, np.abs(lhs).max())


def aybe_residual(N, hbar, eta, x12, x23, tau, stol=el.DEFAULT_SINGULAR_TOL):
    """Associative Yang-Baxter residual R^h_12 R^e_23 = R^e_13 R^{h-e}_12 + R^{e-h}_23 R^h_13."""
    x13 = x12 + x23
    r = lambda u, z: baxter_belavin_R(N, u, z, tau, stol)
    t12 = lambda m: mx.embed_two_site(m, 0, 1, N)
    t13 = lambda m: mx.embed_two_site(m, 0, 2, N)
    t23 = lambda m: mx.embed_two_site(m, 1, 2, N)
    lhs = t12(r(hbar, x12)) @ t23(r(eta, x23))
    rhs = t13(r(eta, x13)) @ t12(r(hbar - eta, x12)) + t23(r(eta - hbar, x23)) @ t13(
        r(hbar, x13)
    )
    return np.abs(lhs - rhs).max() / max(1.0, np.abs(lhs).max())


def classical_limit_residual(N, z, tau, eta=1e-4, stol=el.DEFAULT_SINGULAR_TOL):
    """|R^eta(z) - 1/(N eta) - r(z)| at small eta; O(eta) by the expansion."""
    r_quantum = baxter_belavin_R(N, eta, z, tau, stol)
    diff = r_quantum - _eye2(N) / (N * eta) - classical_r(N, z, tau, stol)
    return np.abs(diff).max()


def generic_points(rng, count, tau, min_dist=1e-3):
    """Seeded points in the fundamental cell, pairwise and lattice separated."""
    pts = []
    attempts = 0
    while len(pts) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise PrecisionError("could not draw generic points")
        cand = rng.uniform(0.08, 0.92) + rng.uniform(0.08, 0.92) * complex(tau)
        if el.lattice_distance(cand, tau) < min_dist:
            continue
        if any(abs(cand - p) < min_dist for p in pts):
            continue
        pts.append(cand)
    return np.array(pts, dtype=complex)


def irf_vertex_suite(N, seed, tau=1j, stol=el.DEFAULT_SINGULAR_TOL):
    """Residual report for the IRF-Vertex relations at seeded generic points."""
    rng = np.random.default_rng(seed)
    tol = 1e-9 if N == 2 else 1e-8
    rep = ResidualReport(suite=f"irf_vertex_N{N}")
    pts = generic_points(rng, 2 * N + 6, tau)
    q = pts[:N]
    hbar = 0.11 + 0.07j
    z1, z2, z = pts[N], pts[N + 1], pts[N + 2]
    rep.add("irf_vertex_a26", irf_vertex_residual(N, hbar, z1, z2, q, tau, stol), tol,
            f"N={N}")
    rep.add("acf_relation_b28", acf_relation_residual(N, hbar, z1, z2, q, tau, stol), tol,
            f"N={N}")
    rep.add("key_formula_b01", b01_residual(N, hbar, z, q, tau, stol), tol, f"N={N}")
    rep.add("degenerate_b011", b011_residual(N, z, q, tau, stol), max(tol, 1e-8), f"N={N}")
    return rep
