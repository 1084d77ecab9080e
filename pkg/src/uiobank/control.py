"""Switch-off control: per-active-set state feedback, a switched-stability
certificate, and the simulation loop that ties plant, estimator, attack
reconstruction and isolation together.

Gains follow the ``u = -K x`` convention, so every mode matrix is
``A - b_J K_J``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateUnavailableError, SafetyStopError, SynthesisInfeasibleError
from .isolation import AttackReconstructor, IsolationState, isolate
from .linmath import DEFAULT_TOL, Tolerances, common_stein_candidate, is_schur, is_stabilizable, lqr_gain, spectral_radius
from .plant import (
    STREAM_INPUT,
    AttackScenario,
    LtiSystem,
    PlantState,
    RandomSource,
    attack_vector,
    measure,
    plant_step,
)

VALIDATED = "common-P validated"
FALSIFIED = "falsified-at-length-L"
INCONCLUSIVE = "inconclusive"
PRODUCT_DEPTH = 6


def stab_q_star(sys: LtiSystem, tol: Tolerances = DEFAULT_TOL) -> int:
    """Largest q* < p such that (A, b_J) is stabilizable whenever card(J) >= p - q*."""
    p = sys.p
    best = 0
    for q in range(0, p):
        ok = all(
            is_stabilizable(sys.A, sys.columns(J), tol)
            for size in range(p - q, p + 1)
            for J in itertools.combinations(range(p), size)
        )
        if not ok:
            break
        best = q
    return best


@dataclass(frozen=True)
class Certificate:
    status: str
    P: np.ndarray | None = None
    length: int | None = None
    worst_product_radius: float | None = None


def certify_switched(modes, tol: Tolerances = DEFAULT_TOL, depth: int = PRODUCT_DEPTH) -> Certificate:
    """Sufficient common quadratic Lyapunov check, then a bounded product search.

    Returns VALIDATED when a common P > 0 with A_i' P A_i - P < 0 is found,
    FALSIFIED when some product of at most ``depth`` modes has spectral
    radius >= 1, and INCONCLUSIVE otherwise.
    """
    modes = [np.asarray(M, dtype=float) for M in modes]
    try:
        P = common_stein_candidate(modes)
    except CertificateUnavailableError:
        P = None
    if P is not None:
        margin = tol.schur_margin * max(1.0, float(np.max(np.abs(P))))
        pos = np.linalg.eigvalsh(P).min() > margin
        dec = all(np.linalg.eigvalsh(M.T @ P @ M - P).max() < -margin for M in modes)
        if pos and dec:
            return Certificate(VALIDATED, P)

    worst = 0.0
    n = modes[0].shape[0]
    for length in range(1, depth + 1):
        for word in itertools.product(range(len(modes)), repeat=length):
            prod = np.eye(n)
            for i in word:
                prod = modes[i] @ prod
            rho = spectral_radius(prod) ** (1.0 / length)
            worst = max(worst, rho)
            if rho >= 1.0:
                return Certificate(FALSIFIED, None, length, rho)
    return Certificate(INCONCLUSIVE, None, None, worst)


@dataclass
class SwitchingController:
    gains: dict
    q: int
    q_star: int
    certificate: Certificate | None = None
    modes: dict = field(default_factory=dict)

    def feedback(self, J_bar: tuple, x_hat: np.ndarray, p: int) -> np.ndarray:
        """Full-length input vector: -K_J x_hat on J_bar, zero elsewhere."""
        u = np.zeros(p)
        if J_bar:
            u[list(J_bar)] = -self.gains[tuple(J_bar)] @ x_hat
        return u


def synthesize_gains(sys: LtiSystem, q: int, tol: Tolerances = DEFAULT_TOL,
                     depth: int = PRODUCT_DEPTH) -> SwitchingController:
    """One LQR gain per active set of size p - q .. p, plus the certificate."""
    q_star = stab_q_star(sys, tol)
    if q > q_star:
        raise SynthesisInfeasibleError(f"q={q} exceeds q*={q_star}")
    p = sys.p
    gains, modes = {}, {}
    for size in range(p - q, p + 1):
        for J in itertools.combinations(range(p), size):
            bJ = sys.columns(J)
            K = lqr_gain(sys.A, bJ, tol)
            M = sys.A - bJ @ K
            if not is_schur(M, tol):
                raise SynthesisInfeasibleError(f"mode for active set {[i + 1 for i in J]} is not Schur")
            gains[J], modes[J] = K, M
    cert = certify_switched(list(modes.values()), tol, depth)
    return SwitchingController(gains, q, q_star, cert, modes)


@dataclass
class ClosedLoopTrace:
    """Per-tick signals. ``a`` is the attack sample drawn by the attacker;
    ``a_applied`` is what reached the plant after switch-off."""

    n: int = 0
    p: int = 0
    k: list = field(default_factory=list)
    x: list = field(default_factory=list)
    x_hat: list = field(default_factory=list)
    err: list = field(default_factory=list)
    a_hat: list = field(default_factory=list)
    a: list = field(default_factory=list)
    a_applied: list = field(default_factory=list)
    W_hat: list = field(default_factory=list)
    J_bar: list = field(default_factory=list)
    sigma: list = field(default_factory=list)
    u: list = field(default_factory=list)

    def __len__(self):
        return len(self.k)

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)


class Simulation:
    """One simulation stream.

    Without a controller the known input is drawn from U(-1, 1) on the input
    stream; with one, isolated actuators are switched off (their input and
    attack both removed) and the rest receive ``-K_J x_hat``.
    """

    def __init__(self, sys: LtiSystem, estimator, scenario: AttackScenario, x0, *,
                 controller: SwitchingController | None = None,
                 isolation_mode: str = "instantaneous", burn_in: int = 100,
                 input_seed: int | None = None, tol: Tolerances = DEFAULT_TOL):
        scenario.check_range(sys.p)
        self.sys = sys
        self.estimator = estimator
        self.scenario = scenario
        self.controller = controller
        self.tol = tol
        self.attack_rng = RandomSource(scenario.seed)
        self.input_rng = RandomSource(scenario.seed if input_seed is None else input_seed)
        self.plant = PlantState(np.asarray(x0, dtype=float).reshape(-1), 0)
        self.reconstructor = AttackReconstructor(sys, tol)
        self.iso = IsolationState(sys.p, burn_in=burn_in, mode=isolation_mode)
        self.trace = ClosedLoopTrace(sys.n, sys.p)

    def step(self) -> None:
        sys, k = self.sys, self.plant.k
        x = self.plant.x
        y = measure(sys, self.plant)
        fused = self.estimator.estimate(y)
        x_hat = fused.x_hat
        a_hat = self.reconstructor(x_hat)
        self.iso = isolate(self.iso, a_hat, k, self.tol)
        a = attack_vector(self.scenario, k, sys.p, self.attack_rng)

        if self.controller is None:
            u = self.input_rng.uniform(STREAM_INPUT, k, sys.p)
            a_applied = a
        else:
            J_bar = self.iso.J_bar
            if len(J_bar) < sys.p - self.controller.q:
                raise SafetyStopError(
                    f"k={k}: {len(self.iso.W_hat)} actuators isolated "
                    f"{[i + 1 for i in self.iso.W_hat]}, at most q={self.controller.q} allowed"
                )
            u = self.controller.feedback(J_bar, x_hat, sys.p)
            a_applied = np.zeros(sys.p)
            a_applied[list(J_bar)] = a[list(J_bar)]

        self.estimator.advance(u)
        self.reconstructor.record_input(u)

        t = self.trace
        t.k.append(k)
        t.x.append(x)
        t.x_hat.append(x_hat)
        t.err.append(float(np.linalg.norm(x_hat - x)))
        t.a_hat.append(a_hat)
        t.a.append(a)
        t.a_applied.append(a_applied)
        t.W_hat.append(self.iso.W_hat)
        t.J_bar.append(self.iso.J_bar)
        t.sigma.append(tuple(fused.sigma))
        t.u.append(u)

        self.plant = plant_step(sys, self.plant, u, a_applied)

    def run(self, horizon: int) -> ClosedLoopTrace:
        for _ in range(horizon):
            self.step()
        return self.trace


def closed_loop_step(sim: Simulation) -> ClosedLoopTrace:
    """Advance ``sim`` by one tick and return its trace."""
    sim.step()
    return sim.trace
