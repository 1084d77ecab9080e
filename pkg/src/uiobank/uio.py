"""Complete and partial unknown input observers.

An observer is ``z+ = N z + T B u + L y`` with estimate ``x_hat = z + E y``,
where the estimate at tick k uses the measurement y(k) of the same tick.
With that convention the error ``e = x_hat - x`` obeys ``e+ = N e`` for any
unknown input in the decoupled columns.

Synthesis uses ``E = b_J (C b_J)^+``, ``P = I - E C`` and a Riccati gain
``K`` for the pair ``(P A, C)``; then ``N = P A - K C`` and
``L = P A E + K (I - C E)`` satisfy the design equations for every K.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConditionC2Error,
    ConditionC4Error,
    DimensionError,
    NoCompleteUioError,
    RankConditionError,
    SynthesisInfeasibleError,
)
from .linmath import DEFAULT_TOL, Tolerances, is_detectable, is_schur, observer_gain, pinv, rank_of
from .plant import LtiSystem


@dataclass(frozen=True, eq=False)
class UioDesign:
    J: tuple
    N: np.ndarray
    L: np.ndarray
    E: np.ndarray
    T: np.ndarray
    TB: np.ndarray
    complete: bool = False

    def residuals(self, sys: LtiSystem) -> dict:
        """Max-abs residual of each defining equation."""
        n = sys.n
        eye = np.eye(n)
        EC = self.E @ sys.C
        out = {"observer": np.max(np.abs(self.N @ (eye - EC) + self.L @ sys.C + (EC - eye) @ sys.A))}
        if self.complete:
            out["decoupling"] = np.max(np.abs((EC - eye) @ sys.B))
        else:
            out["input"] = np.max(np.abs((self.T + EC - eye) @ sys.B))
            bJ = sys.columns(self.J)
            out["decoupling"] = np.max(np.abs((EC - eye) @ bJ)) if bJ.size else 0.0
        return {k: float(v) for k, v in out.items()}

    def max_residual(self, sys: LtiSystem) -> float:
        return max(self.residuals(sys).values())

    def to_dict(self) -> dict:
        return {
            "J": [i + 1 for i in self.J],
            "complete": self.complete,
            **{m: getattr(self, m).tolist() for m in ("N", "L", "E", "T")},
        }


def check_c1(sys: LtiSystem, tol: Tolerances = DEFAULT_TOL) -> bool:
    return rank_of(sys.C @ sys.B, tol) == rank_of(sys.B, tol) == sys.p


def check_c3(sys: LtiSystem, J, tol: Tolerances = DEFAULT_TOL) -> bool:
    bJ = sys.columns(J)
    return rank_of(sys.C @ bJ, tol) == rank_of(bJ, tol) == len(J)


def _synthesize(sys: LtiSystem, bJ: np.ndarray, tol: Tolerances):
    n = sys.n
    E = bJ @ pinv(sys.C @ bJ, tol)
    P = np.eye(n) - E @ sys.C
    PA = P @ sys.A
    if not is_detectable(PA, sys.C, tol):
        return E, P, None
    K = observer_gain(PA, sys.C, tol)
    N = PA - K @ sys.C
    L = PA @ E + K @ (np.eye(sys.n_y) - sys.C @ E)
    return E, P, (N, L)


def _verify(design: UioDesign, sys: LtiSystem, tol: Tolerances) -> UioDesign:
    scale = max(1.0, *(float(np.max(np.abs(M))) for M in (sys.A, sys.B, sys.C)))
    worst = design.max_residual(sys)
    if worst > tol.residual_tol * scale:
        raise SynthesisInfeasibleError(f"design residual {worst:.3e} exceeds tolerance")
    if not is_schur(design.N, tol):
        raise SynthesisInfeasibleError("synthesized N is not Schur")
    return design


def design_complete(sys: LtiSystem, tol: Tolerances = DEFAULT_TOL) -> UioDesign:
    """Observer decoupled from the whole input ``u + a``."""
    if not check_c1(sys, tol):
        raise NoCompleteUioError(
            f"condition c1 fails: rank(CB)={rank_of(sys.C @ sys.B, tol)}, "
            f"rank(B)={rank_of(sys.B, tol)}, p={sys.p}"
        )
    E, _, NL = _synthesize(sys, sys.B, tol)
    if NL is None:
        raise ConditionC2Error("condition c2 fails: (A - ECA, C) is not detectable")
    n = sys.n
    zero = np.zeros((n, n))
    d = UioDesign((), NL[0], NL[1], E, zero, np.zeros((n, sys.p)), complete=True)
    return _verify(d, sys, tol)


def design_partial(sys: LtiSystem, J, tol: Tolerances = DEFAULT_TOL) -> UioDesign:
    """Observer decoupled from the columns ``b_J`` only (J is 0-based)."""
    J = tuple(sorted(int(i) for i in J))
    if not J:
        raise ValueError("J must be nonempty")
    if len(set(J)) != len(J) or J[0] < 0 or J[-1] >= sys.p:
        raise IndexError(f"invalid actuator subset {J} for p={sys.p}")
    if not check_c3(sys, J, tol):
        raise RankConditionError(f"condition c3 fails for J={[i + 1 for i in J]}")
    E, T, NL = _synthesize(sys, sys.columns(J), tol)
    if NL is None:
        raise ConditionC4Error(f"condition c4 fails for J={[i + 1 for i in J]}: (A - E_J C A, C) not detectable")
    d = UioDesign(J, NL[0], NL[1], E, T, T @ sys.B)
    return _verify(d, sys, tol)


def max_q(sys: LtiSystem, tol: Tolerances = DEFAULT_TOL) -> int:
    """Largest q with 2q < p such that every subset of size <= 2q has a partial UIO."""
    best = 0
    for size in range(1, 2 * ((sys.p - 1) // 2) + 1):
        for J in itertools.combinations(range(sys.p), size):
            try:
                design_partial(sys, J, tol)
            except SynthesisInfeasibleError:
                return best
        if size % 2 == 0:
            best = size // 2
    return best


@dataclass
class ObserverState:
    z: np.ndarray | None = None
    design: UioDesign | None = field(default=None, repr=False)


def init_state(d: UioDesign, x_hat0, y0) -> ObserverState:
    """State whose first estimate equals x_hat0 given the first measurement y0."""
    z = np.asarray(x_hat0, dtype=float).reshape(-1) - d.E @ np.asarray(y0, dtype=float).reshape(-1)
    return ObserverState(z, d)


def estimate(d: UioDesign, os: ObserverState, y) -> np.ndarray:
    return os.z + d.E @ y


def observer_step(d: UioDesign, os: ObserverState, y, u):
    """Advance one tick. Returns (state at k+1, estimate at k).

    Complete designs ignore ``u``.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape != (d.E.shape[1],) or os.z.shape != (d.N.shape[0],):
        raise DimensionError("measurement or observer state has the wrong length")
    x_hat = os.z + d.E @ y
    z_next = d.N @ os.z + d.L @ y
    if not d.complete:
        u = np.asarray(u, dtype=float).reshape(-1)
        if u.shape != (d.TB.shape[1],):
            raise DimensionError(f"u must have length {d.TB.shape[1]}")
        z_next = z_next + d.TB @ u
    return ObserverState(z_next, d), x_hat
