"""Scenario documents and the five built-in example presets.

A scenario is a JSON object. Actuator indices are 1-based. Recognised keys::

    preset            name of a built-in preset to start from (optional)
    name              free-form label
    system            {"A": [[...]], "B": [[...]], "C": [[...]]}
    attack            {"W": [2], "signals": [{"kind": "uniform", "lo": -1, "hi": 1}], "scale": 1.0}
    horizon           last tick index; ticks 0..horizon are simulated
    seed              non-negative integer
    estimator         "complete" or "bank"
    q                 protection level for the bank (null: largest feasible)
    prune_infeasible  drop size-2q subsets that admit no partial UIO
    isolation         "instantaneous" or "sticky"
    burn_in           ticks before isolation activates
    control           true to close the loop with switch-off control
    tolerances        {"rank_tol", "residual_tol", "schur_margin", "support_eps"}
    x0                list of floats, or {"normal": {"mean": 0, "std": 1}}
    x_hat0            list of floats (null: zeros)
    window            [first, last] tick of the settled window
    thresholds        see THRESHOLD_KEYS

Signal kinds: uniform(lo, hi), constant(value), sinusoid(amp, period),
duty(lo, hi, duty).
"""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ScenarioError
from .linmath import Tolerances
from .plant import STREAM_INIT, AttackScenario, LtiSystem, RandomSource, Signal

THRESHOLD_KEYS = (
    "lambda_bar_max",  # fitted decay rate of |e| must be below this and certified
    "final_error_max",  # |e(T)| <= value * max(1, |e(0)|)
    "attack_error_max",  # max over window of |a_hat(k) - a_applied(k-1)|
    "isolation_accuracy_min",  # fraction of window ticks with W_hat(k) == W
    "isolation_consistency_min",  # fraction of window ticks with W_hat(k) within W and missing
    # only actuators whose applied attack at k-1 was at most support_eps
    "window_state_max",  # sup over window |x(k)| <= value * max(1, |x(0)|)
    "final_state_max",  # |x(T)| <= value * max(1, |x(0)|)
)

EXAMPLE1 = {
    "A": [[0.2, 0.5], [0.2, 0.7]],
    "B": [[1.0], [2.0]],
    "C": [[1.0, 3.0], [1.0, 1.0], [3.0, 2.0]],
}
EXAMPLE2 = {
    "A": [[0.5, 0.0, 0.1], [0.2, 0.7, 0.0], [1.0, 0.0, 0.3]],
    "B": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    "C": [[1.0, 2.0, 0.0], [2.0, 1.0, 3.0]],
}
EXAMPLE5 = {
    "A": [[1.5, 0.0, 0.1], [0.2, 0.7, 0.0], [1.0, 0.0, 0.3]],
    "B": [[1.0, 1.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    "C": [[1.0, 2.0, 0.0], [2.0, 1.0, 3.0]],
}
UNIFORM = {"kind": "uniform", "lo": -1.0, "hi": 1.0}
STD_NORMAL = {"normal": {"mean": 0.0, "std": 1.0}}


@dataclass
class ScenarioConfig:
    system: dict
    attack: dict = field(default_factory=lambda: {"W": [], "signals": [], "scale": 1.0})
    name: str = "custom"
    horizon: int = 1000
    seed: int = 0
    estimator: str = "bank"
    q: int | None = None
    prune_infeasible: bool = False
    isolation: str = "instantaneous"
    burn_in: int = 100
    control: bool = False
    tolerances: dict = field(default_factory=lambda: asdict(Tolerances()))
    x0: object = field(default_factory=lambda: copy.deepcopy(STD_NORMAL))
    x_hat0: list | None = None
    window: list = field(default_factory=lambda: [800, 1000])
    thresholds: dict = field(default_factory=dict)

    def lti(self) -> LtiSystem:
        return LtiSystem(self.system["A"], self.system["B"], self.system["C"])

    def tol(self) -> Tolerances:
        return Tolerances(**self.tolerances)

    def attack_scenario(self) -> AttackScenario:
        W = tuple(i - 1 for i in self.attack["W"])
        signals = tuple(Signal(**s) for s in self.attack["signals"])
        return AttackScenario(W, signals, self.seed, self.attack.get("scale", 1.0))

    def initial_state(self) -> np.ndarray:
        n = len(self.system["A"])
        if isinstance(self.x0, dict):
            spec = self.x0["normal"]
            return spec["mean"] + spec["std"] * RandomSource(self.seed).normal(STREAM_INIT, 0, n)
        return np.asarray(self.x0, dtype=float)

    def initial_estimate(self) -> np.ndarray:
        n = len(self.system["A"])
        return np.zeros(n) if self.x_hat0 is None else np.asarray(self.x_hat0, dtype=float)

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))


def _example(name, system, W, estimator, control=False, window=(800, 1000), thresholds=None, q=None):
    return ScenarioConfig(
        system=copy.deepcopy(system),
        attack={"W": list(W), "signals": [dict(UNIFORM) for _ in W], "scale": 1.0},
        name=name,
        estimator=estimator,
        q=q,
        control=control,
        window=list(window),
        thresholds=dict(thresholds or {}),
    )


PRESETS = {
    "example1": lambda: _example("example1", EXAMPLE1, [1], "complete",
                                 thresholds={"lambda_bar_max": 1.0, "final_error_max": 1e-8}),
    "example2": lambda: _example("example2", EXAMPLE2, [2], "bank", q=1,
                                 thresholds={"lambda_bar_max": 1.0, "final_error_max": 1e-8}),
    "example3": lambda: _example("example3", EXAMPLE1, [1], "complete",
                                 thresholds={"attack_error_max": 1e-6}),
    "example4": lambda: _example("example4", EXAMPLE2, [2], "bank", q=1,
                                 thresholds={"attack_error_max": 1e-6, "isolation_consistency_min": 0.99}),
    "example5": lambda: _example("example5", EXAMPLE5, [1], "bank", q=1, control=True,
                                 thresholds={"window_state_max": 2.0}),
}


def preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


_FIELDS = {f.name for f in fields(ScenarioConfig)}
_SIGNAL_KEYS = {"kind", "lo", "hi", "value", "amp", "period", "duty"}


def _matrix(value, name):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(f"{name}: not a numeric matrix") from None
    if arr.ndim != 2 or 0 in arr.shape:
        raise ScenarioError(f"{name}: expected a nonempty list of rows, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{name}: non-finite entries")
    return arr.tolist()


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {unknown}")


def _vector(value, n, name):
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ScenarioError(f"{name}: expected {n} entries, got {arr.size}")
    return arr.tolist()


def validate(raw: dict) -> ScenarioConfig:
    """Build and dimension-check a config from an already-parsed mapping."""
    _check_keys(raw, _FIELDS | {"preset"}, "scenario")
    raw = dict(raw)
    base = preset(raw.pop("preset")).to_dict() if "preset" in raw else {}
    merged = {**base, **raw}
    if "system" not in merged:
        raise ScenarioError("scenario: missing 'system' (or 'preset')")

    sysd = merged["system"]
    _check_keys(sysd, {"A", "B", "C"}, "system")
    for key in "ABC":
        if key not in sysd:
            raise ScenarioError(f"system: missing {key}")
    A, B, C = (_matrix(sysd[k], f"system.{k}") for k in "ABC")
    n = len(A)
    if len(A[0]) != n:
        raise ScenarioError(f"system.A: must be square, got {n}x{len(A[0])}")
    if len(B) != n:
        raise ScenarioError(f"system.B: has {len(B)} rows, expected {n}")
    if len(C[0]) != n:
        raise ScenarioError(f"system.C: has {len(C[0])} columns, expected {n}")
    p = len(B[0])
    merged["system"] = {"A": A, "B": B, "C": C}

    att = merged.get("attack", {"W": [], "signals": []})
    _check_keys(att, {"W", "signals", "scale"}, "attack")
    W = [int(i) for i in att.get("W", [])]
    for i in W:
        if not 1 <= i <= p:
            raise ScenarioError(f"attack.W: index {i} out of range 1..{p}")
    if W != sorted(set(W)):
        raise ScenarioError("attack.W: must be sorted without duplicates")
    signals = att.get("signals") or [dict(UNIFORM) for _ in W]
    if len(signals) != len(W):
        raise ScenarioError("attack.signals: need one signal per attacked actuator")
    for j, s in enumerate(signals):
        _check_keys(s, _SIGNAL_KEYS, f"attack.signals[{j}]")
        try:
            Signal(**s)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"attack.signals[{j}]: {exc}") from None
    merged["attack"] = {"W": W, "signals": [dict(s) for s in signals], "scale": float(att.get("scale", 1.0))}

    tol = merged.get("tolerances", {})
    _check_keys(tol, {f.name for f in fields(Tolerances)}, "tolerances")
    try:
        merged["tolerances"] = asdict(Tolerances(**tol))
    except ValueError as exc:
        raise ScenarioError(f"tolerances: {exc}") from None

    if merged.get("estimator", "bank") not in ("complete", "bank"):
        raise ScenarioError("estimator: must be 'complete' or 'bank'")
    if merged.get("isolation", "instantaneous") not in ("instantaneous", "sticky"):
        raise ScenarioError("isolation: must be 'instantaneous' or 'sticky'")
    for key in ("horizon", "seed", "burn_in"):
        if key in merged and (not isinstance(merged[key], int) or merged[key] < 0):
            raise ScenarioError(f"{key}: must be a non-negative integer")
    if merged.get("q") is not None and (not isinstance(merged["q"], int) or merged["q"] < 1):
        raise ScenarioError("q: must be a positive integer or null")

    x0 = merged.get("x0", STD_NORMAL)
    if isinstance(x0, dict):
        _check_keys(x0, {"normal"}, "x0")
        _check_keys(x0["normal"], {"mean", "std"}, "x0.normal")
        merged["x0"] = {"normal": {"mean": float(x0["normal"].get("mean", 0.0)),
                                   "std": float(x0["normal"].get("std", 1.0))}}
    else:
        merged["x0"] = _vector(x0, n, "x0")
    if merged.get("x_hat0") is not None:
        merged["x_hat0"] = _vector(merged["x_hat0"], n, "x_hat0")

    window = merged.get("window", [800, 1000])
    if len(window) != 2 or not 0 <= window[0] <= window[1]:
        raise ScenarioError("window: expected [first, last] with 0 <= first <= last")
    merged["window"] = [int(window[0]), int(window[1])]

    thr = merged.get("thresholds", {})
    _check_keys(thr, THRESHOLD_KEYS, "thresholds")
    merged["thresholds"] = {k: float(v) for k, v in thr.items()}
    return ScenarioConfig(**merged)


def parse_scenario(text: str) -> ScenarioConfig:
    if not text.strip():
        raise ScenarioError("empty scenario document")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return validate(raw)


def serialize_scenario(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
