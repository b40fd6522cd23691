"""Dense complex linear algebra at small dimension plus the T_a matrix basis.

The T_a basis is built from the clock and shift generators of the Heisenberg
group; to_ta/from_ta convert between the standard matrix-unit basis and the
T_a components.  Generic dense operations (inverse, eigenvalues, Kronecker
products) wrap numpy/LAPACK behind the package's error contracts.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError, DomainError, SingularMatrixError

DIM_CAP = 16
TENSOR_DIM_CAP = 256
INV_DET_FLOOR = 1e-12


def heisenberg_pair(N: int):
    """Clock matrix Q1 = diag(e(k/N)) and cyclic shift Q2 with Q2^N = 1."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    k = np.arange(1, N + 1)
    q1 = np.diag(np.exp(2j * np.pi * k / N))
    q2 = np.zeros((N, N), dtype=complex)
    q2[np.arange(N), (np.arange(N) + 1) % N] = 1.0
    return q1, q2


def ta_matrix(N: int, a1: int, a2: int):
    """T_a = exp(i pi a1 a2 / N) Q1^a1 Q2^a2 for arbitrary integer (a1, a2)."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    k = np.arange(1, N + 1)
    phase = np.exp(1j * np.pi * a1 * a2 / N)
    diag = np.exp(2j * np.pi * k * a1 / N)
    out = np.zeros((N, N), dtype=complex)
    # Q1^a1 Q2^a2 has entry e(k a1/N) at (k, k + a2 mod N), 1-based labels.
    rows = np.arange(N)
    cols = (rows + a2) % N
    out[rows, cols] = phase * diag
    return out


def kappa_factor(alpha, beta, N: int) -> complex:
    """kappa_{alpha,beta} in T_alpha T_beta = kappa T_{alpha+beta}."""
    return complex(np.exp(1j * np.pi * (beta[0] * alpha[1] - beta[1] * alpha[0]) / N))


def to_ta(B: np.ndarray, N: int) -> np.ndarray:
    """Components S[a1, a2] = tr(B T_{-a}) / N of B in the T_a basis."""
    B = np.asarray(B, dtype=complex)
    if B.shape != (N, N):
        raise DomainError(f"expected a {N}x{N} matrix, got {B.shape}")
    comp = np.empty((N, N), dtype=complex)
    for a1 in range(N):
        for a2 in range(N):
            comp[a1, a2] = np.trace(B @ ta_matrix(N, -a1, -a2)) / N
    return comp


def from_ta(comp: np.ndarray, N: int) -> np.ndarray:
    """Standard-basis matrix from T_a components, entrywise closed form.

    B_ij = sum_{a1} comp[a1, j-i mod N] e(a1 (i+j)/(2N))            for j >= i
         = sum_{a1} comp[a1, j-i+N]     e(a1 (i+j-N)/(2N))          for j <  i
    with 1-based row/column labels.
    """
    comp = np.asarray(comp, dtype=complex)
    if comp.shape != (N, N):
        raise DomainError(f"expected {N}x{N} component table, got {comp.shape}")
    a1 = np.arange(N)
    B = np.empty((N, N), dtype=complex)
    for i in range(1, N + 1):
        for j in range(1, N + 1):
            if j >= i:
                w = np.exp(2j * np.pi * a1 * (i + j) / (2 * N))
                B[i - 1, j - 1] = (comp[:, j - i] * w).sum()
            else:
                w = np.exp(2j * np.pi * a1 * (i + j - N) / (2 * N))
                B[i - 1, j - 1] = (comp[:, j - i + N] * w).sum()
    return B


def from_ta_sum(comp: np.ndarray, N: int) -> np.ndarray:
    """Standard-basis matrix as the direct sum over comp[a] T_a (cross-check path)."""
    out = np.zeros((N, N), dtype=complex)
    for a1 in range(N):
        for a2 in range(N):
            out += comp[a1, a2] * ta_matrix(N, a1, a2)
    return out


def _check_square(A: np.ndarray, cap: int = TENSOR_DIM_CAP) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] > cap:
        raise DomainError(f"dimension {A.shape[0]} exceeds cap {cap}")
    return A


def mat_inv(A: np.ndarray) -> np.ndarray:
    """Inverse via LU with partial pivoting; rejects near-singular input."""
    A = _check_square(A)
    n = A.shape[0]
    scale = np.linalg.norm(A, np.inf) or 1.0
    det = np.linalg.det(A / scale)
    if not np.isfinite(det) or abs(det) < INV_DET_FLOOR:
        raise SingularMatrixError(
            f"matrix is numerically singular (scaled |det| = {abs(det):.3e})"
        )
    return np.linalg.inv(A)


def eigvals_sorted(A: np.ndarray) -> np.ndarray:
    """Eigenvalues sorted by real part then imaginary part."""
    A = _check_square(A)
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:  # QR iteration failed to converge
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from exc
    order = np.lexsort((ev.imag, ev.real))
    return ev[order]


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kronecker product with the (i,k),(j,l) -> (iN+k, jN+l) index convention."""
    A = _check_square(A, DIM_CAP)
    B = _check_square(B, DIM_CAP)
    return np.kron(A, B)


def comm(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def tr2(M2: np.ndarray, N: int) -> np.ndarray:
    """Partial trace over the second tensor factor of an N^2 x N^2 matrix."""
    M2 = np.asarray(M2, dtype=complex).reshape(N, N, N, N)
    return np.einsum("ikjk->ij", M2)


def embed_two_site(R: np.ndarray, slot_a: int, slot_b: int, N: int, legs: int = 3):
    """Embed a two-leg operator into `legs` tensor factors at (slot_a, slot_b)."""
    R4 = np.asarray(R, dtype=complex).reshape(N, N, N, N)
    dims_in = [chr(ord("a") + i) for i in range(legs)]
    dims_out = [chr(ord("n") + i) for i in range(legs)]
    # R4 layout is (out_a, out_b, in_a, in_b)
    spec_in = dims_out[slot_a] + dims_out[slot_b] + dims_in[slot_a] + dims_in[slot_b]
    rest = [i for i in range(legs) if i not in (slot_a, slot_b)]
    operands = [R4]
    spec = spec_in
    for i in rest:
        operands.append(np.eye(N, dtype=complex))
        spec += "," + dims_out[i] + dims_in[i]
    spec += "->" + "".join(dims_out) + "".join(dims_in)
    out = np.einsum(spec, *operands)
    return out.reshape(N**legs, N**legs)
