"""Attacked discrete-time LTI plant ``x+ = A x + B (u + a)``, ``y = C x``.

Randomness comes from :class:`RandomSource`, a thin wrapper around numpy's
Philox4x32 counter-based generator. Each draw is addressed by
``(seed, stream, k)`` so any sample can be regenerated without replaying
the sequence before it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidMatrixError
from .linmath import DEFAULT_TOL, Tolerances, as_matrix, rank_of

RNG_ALGORITHM = "numpy.random.Philox(4x64, key=seed, counter=[k, stream, 0, 0])"

# stream ids
STREAM_ATTACK = 1
STREAM_ATTACK_MASK = 2
STREAM_INPUT = 3
STREAM_INIT = 4
STREAM_SWITCHING = 5


@dataclass(frozen=True, eq=False)
class LtiSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise DimensionError(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n:
            raise DimensionError(f"C has {C.shape[1]} columns, expected {n}")
        for name, M in (("A", A), ("B", B), ("C", C)):
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    def columns(self, J) -> np.ndarray:
        """b_J: the columns of B indexed by the (0-based) subset J."""
        return self.B[:, list(J)]

    def validate(self, tol: Tolerances = DEFAULT_TOL) -> None:
        """Check the standing assumptions on (A, B, C)."""
        from .linmath import is_detectable, is_stabilizable

        if rank_of(self.B, tol) != self.p:
            raise InvalidMatrixError("B must have full column rank")
        if not is_detectable(self.A, self.C, tol):
            raise InvalidMatrixError("(A, C) must be detectable")
        if not is_stabilizable(self.A, self.B, tol):
            raise InvalidMatrixError("(A, B) must be stabilizable")

    def __eq__(self, other):
        if not isinstance(other, LtiSystem):
            return NotImplemented
        return all(np.array_equal(getattr(self, m), getattr(other, m)) for m in "ABC")

    __hash__ = None


class RandomSource:
    """Deterministic, randomly addressable random numbers."""

    algorithm = RNG_ALGORITHM

    def __init__(self, seed: int):
        self.seed = int(seed)
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def generator(self, stream: int, k: int = 0) -> np.random.Generator:
        bitgen = np.random.Philox(key=self.seed, counter=[int(k), int(stream), 0, 0])
        return np.random.Generator(bitgen)

    def uniform(self, stream: int, k: int, size: int, lo=-1.0, hi=1.0) -> np.ndarray:
        return self.generator(stream, k).uniform(lo, hi, size)

    def normal(self, stream: int, k: int, size: int) -> np.ndarray:
        return self.generator(stream, k).standard_normal(size)


@dataclass(frozen=True)
class Signal:
    """One attack waveform. ``kind`` is uniform, constant, sinusoid or duty."""

    kind: str = "uniform"
    lo: float = -1.0
    hi: float = 1.0
    value: float = 0.0
    amp: float = 1.0
    period: float = 50.0
    duty: float = 0.5

    KINDS = ("uniform", "constant", "sinusoid", "duty")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.kind in ("uniform", "duty") and not self.lo < self.hi:
            raise ValueError("uniform signal needs lo < hi")
        if self.kind == "sinusoid" and not self.period > 0:
            raise ValueError("sinusoid period must be positive")
        if self.kind == "duty" and not 0.0 <= self.duty <= 1.0:
            raise ValueError("duty must lie in [0, 1]")

    def to_dict(self) -> dict:
        keys = {
            "uniform": ("lo", "hi"),
            "constant": ("value",),
            "sinusoid": ("amp", "period"),
            "duty": ("lo", "hi", "duty"),
        }[self.kind]
        return {"kind": self.kind, **{k: getattr(self, k) for k in keys}}


@dataclass(frozen=True)
class AttackScenario:
    """Time-invariant attacked set W (0-based) with one signal per member."""

    W: tuple = ()
    signals: tuple = ()
    seed: int = 0
    scale: float = 1.0

    def __post_init__(self):
        W = tuple(int(i) for i in self.W)
        if list(W) != sorted(set(W)):
            raise ValueError("attacked set must be sorted and duplicate-free")
        if any(i < 0 for i in W):
            raise ValueError("attack indices must be non-negative")
        signals = tuple(self.signals) or tuple(Signal() for _ in W)
        if len(signals) != len(W):
            raise ValueError("need exactly one signal per attacked actuator")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "signals", signals)

    def check_range(self, p: int) -> None:
        bad = [i + 1 for i in self.W if i >= p]
        if bad:
            raise IndexError(f"attack index {bad[0]} out of range 1..{p}")


def attack_vector(scn: AttackScenario, k: int, p: int, rng: RandomSource | None = None) -> np.ndarray:
    """Attack a(k); zero outside W, deterministic in (seed, k)."""
    if k < 0:
        raise ValueError("time index must be non-negative")
    scn.check_range(p)
    rng = rng if rng is not None else RandomSource(scn.seed)
    a = np.zeros(p)
    if not scn.W:
        return a
    draws = rng.uniform(STREAM_ATTACK, k, p)
    mask = rng.uniform(STREAM_ATTACK_MASK, k, p, 0.0, 1.0)
    for i, sig in zip(scn.W, scn.signals):
        if sig.kind == "uniform":
            v = sig.lo + (sig.hi - sig.lo) * 0.5 * (draws[i] + 1.0)
        elif sig.kind == "constant":
            v = sig.value
        elif sig.kind == "sinusoid":
            v = sig.amp * math.sin(2.0 * math.pi * k / sig.period)
        else:
            v = sig.lo + (sig.hi - sig.lo) * 0.5 * (draws[i] + 1.0) if mask[i] < sig.duty else 0.0
        a[i] = scn.scale * v
    return a


@dataclass(frozen=True)
class PlantState:
    x: np.ndarray
    k: int = 0


def plant_step(sys: LtiSystem, st: PlantState, u, a) -> PlantState:
    u = np.asarray(u, dtype=float).reshape(-1)
    a = np.asarray(a, dtype=float).reshape(-1)
    if u.shape != (sys.p,) or a.shape != (sys.p,):
        raise DimensionError(f"u and a must have length {sys.p}")
    x = np.asarray(st.x, dtype=float).reshape(-1)
    if x.shape != (sys.n,):
        raise DimensionError(f"x must have length {sys.n}")
    return PlantState(sys.A @ x + sys.B @ (u + a), st.k + 1)


def measure(sys: LtiSystem, st: PlantState) -> np.ndarray:
    return sys.C @ np.asarray(st.x, dtype=float).reshape(-1)
