"""Multi-observer estimator built from a bank of partial UIOs.

One observer per actuator subset J of size q and per subset S of size 2q.
Every tick, ``pi_J`` is the largest distance between the J estimate and the
estimates of its size-2q supersets; the subset with the smallest ``pi_J``
(ties go to the lexicographically smallest subset) supplies the fused
estimate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BankInfeasibleError, SynthesisInfeasibleError
from .linmath import DEFAULT_TOL, Tolerances
from .plant import LtiSystem
from .uio import ObserverState, UioDesign, design_complete, design_partial, init_state, observer_step

NOISE_FLOOR = 1e-12
ENVELOPE_SLACK = 1.10


@dataclass
class FusedEstimate:
    x_hat: np.ndarray
    sigma: tuple = ()
    pi: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=dict)


class _Estimator:
    """Shared two-phase protocol: ``estimate(y)`` then ``advance(u)``.

    The split exists because in closed loop u(k) depends on x_hat(k).
    """

    def __init__(self, designs: dict, x_hat0):
        self.designs = designs
        self.x_hat0 = np.asarray(x_hat0, dtype=float).reshape(-1)
        self.states: dict = {}
        self._y = None

    def set_initial_states(self, z0: dict) -> None:
        """Unequal initialization: give every observer its own z(0)."""
        missing = set(self.designs) - set(z0)
        if missing:
            raise KeyError(f"no initial state for {sorted(missing)}")
        self.states = {key: ObserverState(np.asarray(z0[key], dtype=float).reshape(-1), self.designs[key])
                       for key in self.designs}

    def _raw_estimates(self, y) -> dict:
        y = np.asarray(y, dtype=float).reshape(-1)
        if not self.states:
            self.states = {key: init_state(d, self.x_hat0, y) for key, d in self.designs.items()}
        self._y = y
        return {key: self.states[key].z + d.E @ y for key, d in self.designs.items()}

    def advance(self, u) -> None:
        if self._y is None:
            raise RuntimeError("estimate(y) must be called before advance(u)")
        self.states = {key: observer_step(self.designs[key], st, self._y, u)[0] for key, st in self.states.items()}
        self._y = None

    def step(self, y, u) -> FusedEstimate:
        fused = self.estimate(y)
        self.advance(u)
        return fused


class CompleteEstimator(_Estimator):
    """Single complete UIO behind the bank's interface."""

    def __init__(self, design: UioDesign, x_hat0):
        super().__init__({(): design}, x_hat0)
        self.design = design

    def estimate(self, y) -> FusedEstimate:
        est = self._raw_estimates(y)
        return FusedEstimate(est[()], (), {}, est)


class ObserverBank(_Estimator):
    def __init__(self, q: int, designs_q: dict, designs_2q: dict, superset_map: dict, x_hat0):
        super().__init__({**designs_q, **designs_2q}, x_hat0)
        self.q = q
        self.designs_q = designs_q
        self.designs_2q = designs_2q
        self.superset_map = superset_map

    def __len__(self):
        return len(self.designs_q) + len(self.designs_2q)

    def estimate(self, y) -> FusedEstimate:
        est = self._raw_estimates(y)
        pi = {
            J: max(float(np.linalg.norm(est[J] - est[S])) for S in supersets)
            for J, supersets in self.superset_map.items()
        }
        # dict order is lexicographic, so min() keeps the first of any tie
        sigma = min(pi, key=pi.__getitem__)
        return FusedEstimate(est[sigma], sigma, pi, est)


def enumerate_bank(sys: LtiSystem, q: int, x_hat0=None, tol: Tolerances = DEFAULT_TOL,
                   prune_infeasible: bool = False) -> ObserverBank:
    """Design all size-q and size-2q observers.

    With ``prune_infeasible`` a size-2q subset without a partial UIO is
    dropped instead of failing, as long as every size-q subset keeps at
    least one superset. The fused estimate then loses its worst-case
    guarantee for attack sets covered only by the dropped subsets.
    """
    p = sys.p
    if not (0 < q and 2 * q < p):
        raise ValueError(f"protection level must satisfy 0 < q < p/2, got q={q}, p={p}")
    x_hat0 = np.zeros(sys.n) if x_hat0 is None else x_hat0

    designs_q = {}
    for J in itertools.combinations(range(p), q):
        try:
            designs_q[J] = design_partial(sys, J, tol)
        except SynthesisInfeasibleError as exc:
            raise BankInfeasibleError(J, exc) from exc
    designs_2q = {}
    for S in itertools.combinations(range(p), 2 * q):
        try:
            designs_2q[S] = design_partial(sys, S, tol)
        except SynthesisInfeasibleError as exc:
            if not prune_infeasible:
                raise BankInfeasibleError(S, exc) from exc
    superset_map = {J: [S for S in designs_2q if set(J) <= set(S)] for J in designs_q}
    for J, supersets in superset_map.items():
        if not supersets:
            raise BankInfeasibleError(J, "no feasible superset of size 2q remains")
    return ObserverBank(q, designs_q, designs_2q, superset_map, x_hat0)


def bank_size(p: int, q: int) -> int:
    return math.comb(p, q) + math.comb(p, 2 * q)


def bank_step(bank: ObserverBank, y, u) -> FusedEstimate:
    return bank.step(y, u)


def make_estimator(sys: LtiSystem, kind: str, x_hat0=None, q: int | None = None,
                   tol: Tolerances = DEFAULT_TOL, prune_infeasible: bool = False):
    x_hat0 = np.zeros(sys.n) if x_hat0 is None else x_hat0
    if kind == "complete":
        return CompleteEstimator(design_complete(sys, tol), x_hat0)
    if kind == "bank":
        if q is None:
            from .uio import max_q

            q = max_q(sys, tol)
        return enumerate_bank(sys, q, x_hat0, tol, prune_infeasible)
    raise ValueError(f"unknown estimator kind {kind!r}")


@dataclass(frozen=True)
class ConvergenceFit:
    c_bar: float
    lambda_bar: float
    status: str  # "converged", "trivially-converged" or "non-convergent"
    samples: int = 0

    @property
    def certified(self) -> bool:
        return self.status in ("converged", "trivially-converged")


def fit_envelope(error_trace) -> ConvergenceFit:
    """Fit |e(k)| <= c_bar * lambda_bar**k * |e(0)|.

    The decay rate is the least-squares slope of log|e(k)| over samples above
    the noise floor. The prefactor is the intercept raised by the largest
    positive residual, i.e. the smallest c_bar for which the envelope holds at
    every fitted sample for that rate.
    """
    e = np.abs(np.asarray(error_trace, dtype=float).reshape(-1))
    if e.size < 10:
        raise ValueError("need at least 10 samples")
    if not np.all(np.isfinite(e)):
        return ConvergenceFit(math.inf, math.inf, "non-convergent", 0)
    if np.all(e == 0.0):
        return ConvergenceFit(0.0, 0.0, "trivially-converged", 0)
    if e[0] <= 0.0:
        raise ValueError("initial error must be positive")

    k = np.arange(e.size, dtype=float)
    keep = e > NOISE_FLOOR
    if np.count_nonzero(keep) < 2:
        # only e(0) is above the floor: bound the decay by the first sample below it
        k1 = float(np.argmax(~keep))
        lam = (NOISE_FLOOR / e[0]) ** (1.0 / k1)
        return ConvergenceFit(1.0, lam, "converged", 1)
    kk, loge = k[keep], np.log(e[keep])
    slope, intercept = np.polyfit(kk, loge, 1)
    lam = math.exp(slope)
    shift = float(np.max(loge - (intercept + slope * kk)))
    c_bar = math.exp(intercept + shift) / e[0]
    envelope = c_bar * lam ** kk * e[0]
    holds = bool(np.all(e[keep] <= ENVELOPE_SLACK * envelope))
    status = "converged" if lam < 1.0 and holds else "non-convergent"
    return ConvergenceFit(c_bar, lam, status, int(kk.size))
