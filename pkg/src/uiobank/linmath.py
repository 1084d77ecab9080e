"""Dense numerical kernels: pseudoinverse, rank, spectral and PBH tests,
Riccati-based gain synthesis and Stein-equation candidates.

Everything here is a pure function of its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CertificateUnavailableError,
    DimensionError,
    InvalidMatrixError,
    NumericError,
    SynthesisInfeasibleError,
)

DARE_MAX_ITER = 200
DARE_TOL = 1e-12


@dataclass(frozen=True)
class Tolerances:
    rank_tol: float = 1e-10
    residual_tol: float = 1e-10
    schur_margin: float = 1e-9
    support_eps: float = 0.05

    def __post_init__(self):
        for name in ("rank_tol", "residual_tol", "schur_margin", "support_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.schur_margin < 1:
            raise ValueError("schur_margin must be below 1")


DEFAULT_TOL = Tolerances()


def as_matrix(M, name="matrix") -> np.ndarray:
    """Coerce to a finite 2-D float array (vectors become columns)."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise InvalidMatrixError(f"{name} must be at most 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrixError(f"{name} has non-finite entries")
    return arr


def _square(M, name):
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got {M.shape}")
    return M


def _cutoff(s: np.ndarray, tol: Tolerances) -> float:
    # subnormal singular values count as zero: their reciprocals overflow
    return max(tol.rank_tol * (s[0] if s.size else 0.0), np.finfo(float).tiny)


def pinv(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse by SVD with a relative singular-value cutoff."""
    M = as_matrix(M)
    if M.size == 0:
        return np.zeros((M.shape[1], M.shape[0]))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    keep = s > _cutoff(s, tol)
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vt.T * s_inv) @ U.T


def rank_of(M, tol: Tolerances = DEFAULT_TOL) -> int:
    M = as_matrix(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.count_nonzero(s > _cutoff(s, tol)))


def spectral_radius(M) -> float:
    M = _square(M, "M")
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def is_schur(M, tol: Tolerances = DEFAULT_TOL) -> bool:
    return spectral_radius(M) <= 1.0 - tol.schur_margin


def _unstable_eigs(A, tol):
    lam = np.linalg.eigvals(A)
    return lam[np.abs(lam) >= 1.0 - tol.schur_margin]


def _full_rank_at(M: np.ndarray, n: int, tol: Tolerances) -> bool:
    # complex PBH matrices; rank via singular values relative to the largest
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return n == 0
    return int(np.count_nonzero(s > _cutoff(s, tol))) == n


def is_detectable(A, C, tol: Tolerances = DEFAULT_TOL) -> bool:
    """PBH detectability: rank [A - lam I; C] = n at every non-Schur eigenvalue."""
    A = _square(A, "A")
    C = as_matrix(C, "C") if np.size(C) else np.zeros((0, A.shape[0]))
    n = A.shape[0]
    if C.shape[1] != n:
        raise DimensionError(f"C has {C.shape[1]} columns, A is {n}x{n}")
    eye = np.eye(n)
    for lam in _unstable_eigs(A, tol):
        if not _full_rank_at(np.vstack([A - lam * eye, C]), n, tol):
            return False
    return True


def is_stabilizable(A, B, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Dual PBH test: rank [A - lam I, B] = n at every non-Schur eigenvalue.

    ``B`` may have zero columns, in which case this reduces to ``is_schur``.
    """
    A = _square(A, "A")
    n = A.shape[0]
    B = np.asarray(B, dtype=float)
    B = B.reshape(n, -1) if B.size else np.zeros((n, 0))
    if B.shape[0] != n:
        raise DimensionError(f"B has {B.shape[0]} rows, A is {n}x{n}")
    return is_detectable(A.T, B.T, tol)


def solve_dare(F, H) -> np.ndarray:
    """Unit-weight filtering DARE

        P = F P F' - F P H' (H P H' + I)^-1 H P F' + I

    solved by structured doubling on the dual control form. Converges
    quadratically when (F, H) is detectable. Raises NumericError otherwise.
    """
    F = _square(F, "F")
    H = as_matrix(H, "H")
    n = F.shape[0]
    if H.shape[1] != n:
        raise DimensionError(f"H has {H.shape[1]} columns, F is {n}x{n}")
    eye = np.eye(n)
    Ak, Gk, Hk = F.T.copy(), H.T @ H, eye.copy()
    for _ in range(DARE_MAX_ITER):
        W = eye + Gk @ Hk
        WA = np.linalg.solve(W, Ak)
        WG = np.linalg.solve(W, Gk)
        H_next = Hk + Ak.T @ Hk @ WA
        Gk = Gk + Ak @ WG @ Ak.T
        Ak = Ak @ WA
        H_next = 0.5 * (H_next + H_next.T)
        Gk = 0.5 * (Gk + Gk.T)
        if not np.all(np.isfinite(H_next)):
            raise NumericError("doubling iteration diverged")
        step = np.max(np.abs(H_next - Hk))
        Hk = H_next
        if step <= DARE_TOL * max(1.0, np.max(np.abs(Hk))):
            return Hk
    raise NumericError(f"doubling iteration did not converge in {DARE_MAX_ITER} steps")


def observer_gain(F, H, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Steady-state Kalman predictor gain K with F - K H Schur."""
    F = _square(F, "F")
    H = as_matrix(H, "H")
    if H.shape[1] != F.shape[0]:
        raise DimensionError(f"H has {H.shape[1]} columns, F is {F.shape[0]}x{F.shape[0]}")
    if not is_detectable(F, H, tol):
        raise SynthesisInfeasibleError("pair (F, H) is not detectable")
    P = solve_dare(F, H)
    S = H @ P @ H.T + np.eye(H.shape[0])
    return np.linalg.solve(S, H @ P @ F.T).T


def lqr_gain(A, B, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Unit-weight discrete LQR gain K with A - B K Schur."""
    A = _square(A, "A")
    B = as_matrix(B, "B")
    if B.shape[0] != A.shape[0]:
        raise DimensionError(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
    if not is_stabilizable(A, B, tol):
        raise SynthesisInfeasibleError("pair (A, B) is not stabilizable")
    # control DARE is the filtering DARE of the dual pair
    P = solve_dare(A.T, B.T)
    S = B.T @ P @ B + np.eye(B.shape[1])
    return np.linalg.solve(S, B.T @ P @ A)


def common_stein_candidate(As) -> np.ndarray:
    """Symmetric P solving sum_i (A_i' P A_i - P) = -I, via vectorization.

    The result is only a candidate; callers must check definiteness.
    """
    mats = [_square(A, "A_i") for A in As]
    if not mats:
        raise DimensionError("need at least one matrix")
    n = mats[0].shape[0]
    if any(A.shape != (n, n) for A in mats):
        raise DimensionError("all matrices must share one size")
    eye = np.eye(n * n)
    # row-major vec: vec(A' P A) = kron(A', A') vec(P)
    lhs = sum(np.kron(A.T, A.T) - eye for A in mats)
    rhs = -np.eye(n).reshape(-1)
    try:
        cond = np.linalg.cond(lhs)
    except np.linalg.LinAlgError as exc:
        raise CertificateUnavailableError(str(exc)) from exc
    if not np.isfinite(cond) or cond > 1e14:
        raise CertificateUnavailableError("Stein system is singular")
    P = np.linalg.solve(lhs, rhs).reshape(n, n)
    return 0.5 * (P + P.T)
