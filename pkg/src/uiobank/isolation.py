"""Attack reconstruction from consecutive state estimates and support-based
isolation of attacked actuators."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError
from .linmath import DEFAULT_TOL, Tolerances, pinv
from .plant import LtiSystem

MODES = ("instantaneous", "sticky")


class AttackReconstructor:
    """a_hat(k) = B^+ (x_hat(k) - A x_hat(k-1)) - u(k-1), an estimate of a(k-1).

    B^+ is computed once. At k = 0 there is no previous estimate and the
    result is the zero vector.
    """

    def __init__(self, sys: LtiSystem, tol: Tolerances = DEFAULT_TOL):
        self.sys = sys
        self.B_pinv = pinv(sys.B, tol)
        self._prev = None
        self._pending = None

    def __call__(self, x_hat) -> np.ndarray:
        x_hat = np.asarray(x_hat, dtype=float).reshape(-1)
        if self._prev is None:
            a_hat = np.zeros(self.sys.p)
        else:
            x_prev, u_prev = self._prev
            a_hat = self.B_pinv @ (x_hat - self.sys.A @ x_prev) - u_prev
        self._pending = x_hat
        return a_hat

    def record_input(self, u) -> None:
        """Store the input applied at this tick for the next reconstruction."""
        self._prev = (self._pending, np.asarray(u, dtype=float).reshape(-1))


def reconstruct_attack(sys: LtiSystem, x_hat_k, x_hat_prev, u_prev, B_pinv=None,
                       tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    B_pinv = pinv(sys.B, tol) if B_pinv is None else B_pinv
    x_hat_k = np.asarray(x_hat_k, dtype=float).reshape(-1)
    x_hat_prev = np.asarray(x_hat_prev, dtype=float).reshape(-1)
    u_prev = np.asarray(u_prev, dtype=float).reshape(-1)
    if x_hat_k.shape != (sys.n,) or x_hat_prev.shape != (sys.n,) or u_prev.shape != (sys.p,):
        raise DimensionError("estimate or input has the wrong length")
    return B_pinv @ (x_hat_k - sys.A @ x_hat_prev) - u_prev


@dataclass(frozen=True)
class IsolationState:
    """Isolated set W_hat and its complement J_bar, both 0-based and sorted."""

    p: int
    W_hat: tuple = ()
    a_hat: tuple = ()
    burn_in: int = 100
    mode: str = "instantaneous"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"isolation mode must be one of {MODES}")
        if not self.a_hat:
            object.__setattr__(self, "a_hat", (0.0,) * self.p)

    @property
    def J_bar(self) -> tuple:
        W = set(self.W_hat)
        return tuple(i for i in range(self.p) if i not in W)


def isolate(iso: IsolationState, a_hat, k: int, tol: Tolerances = DEFAULT_TOL) -> IsolationState:
    a_hat = np.asarray(a_hat, dtype=float).reshape(-1)
    if a_hat.shape != (iso.p,):
        raise DimensionError(f"a_hat must have length {iso.p}")
    if k < iso.burn_in:
        return replace(iso, W_hat=(), a_hat=tuple(a_hat))
    support = {int(i) for i in np.flatnonzero(np.abs(a_hat) > tol.support_eps)}
    if iso.mode == "sticky":
        support |= set(iso.W_hat)
    return replace(iso, W_hat=tuple(sorted(support)), a_hat=tuple(a_hat))
