"""End-to-end runs: build the estimator and controller a scenario asks for,
simulate, summarize against thresholds, and write CSV traces.

Trace columns (one row per tick, actuator sets 1-based and ``;``-joined)::

    k, x_1..x_n, xhat_1..xhat_n, err, ahat_1..ahat_p, a_1..a_p,
    a_applied_1..a_applied_p, u_1..u_p, W_hat, J_bar, sigma

Floats are written with 17 significant digits.
"""
from __future__ import annotations

import csv
import io
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .bank import fit_envelope, make_estimator
from .control import INCONCLUSIVE, ClosedLoopTrace, Simulation, synthesize_gains
from .scenario import ScenarioConfig


@dataclass
class RunSummary:
    name: str
    seed: int
    ticks: int
    lambda_bar: float | None = None
    fit_status: str | None = None
    initial_error: float | None = None
    final_error: float | None = None
    attack_error: float | None = None
    isolation_accuracy: float | None = None
    isolation_consistency: float | None = None
    initial_state: float | None = None
    window_state_max: float | None = None
    final_state: float | None = None
    certificate: str | None = None
    wall_clock: float = 0.0
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks.values())

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def _fmt_set(s) -> str:
    return ";".join(str(i + 1) for i in s)


def trace_header(n: int, p: int) -> list:
    cols = ["k"]
    cols += [f"x_{i}" for i in range(1, n + 1)]
    cols += [f"xhat_{i}" for i in range(1, n + 1)]
    cols += ["err"]
    for name in ("ahat", "a", "a_applied", "u"):
        cols += [f"{name}_{i}" for i in range(1, p + 1)]
    return cols + ["W_hat", "J_bar", "sigma"]


def trace_rows(trace: ClosedLoopTrace):
    g = lambda v: format(float(v), ".17g")
    for i in range(len(trace)):
        row = [str(trace.k[i])]
        row += [g(v) for v in trace.x[i]]
        row += [g(v) for v in trace.x_hat[i]]
        row.append(g(trace.err[i]))
        for name in ("a_hat", "a", "a_applied", "u"):
            row += [g(v) for v in getattr(trace, name)[i]]
        row += [_fmt_set(trace.W_hat[i]), _fmt_set(trace.J_bar[i]), _fmt_set(trace.sigma[i])]
        yield row


def write_trace(trace: ClosedLoopTrace, destination) -> None:
    """Write ``trace`` as CSV to a path or an open text stream."""
    if isinstance(destination, io.TextIOBase):
        _write(trace, destination)
        return
    try:
        with open(destination, "w", newline="", encoding="utf-8") as fh:
            _write(trace, fh)
    except OSError as exc:
        raise OSError(f"cannot write trace to {os.fspath(destination)}: {exc.strerror}") from exc


def _write(trace, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(trace_header(trace.n, trace.p))
    w.writerows(trace_rows(trace))


def build(cfg: ScenarioConfig):
    """Synthesize estimator and (optionally) controller. Raises on infeasibility."""
    sys, tol = cfg.lti(), cfg.tol()
    estimator = make_estimator(sys, cfg.estimator, cfg.initial_estimate(), cfg.q, tol, cfg.prune_infeasible)
    controller = None
    if cfg.control:
        q = estimator.q if cfg.estimator == "bank" else cfg.q or 0
        controller = synthesize_gains(sys, q, tol)
    return sys, estimator, controller


def summarize(cfg: ScenarioConfig, trace: ClosedLoopTrace, controller=None, strict: bool = False,
              wall_clock: float = 0.0) -> RunSummary:
    T = len(trace) - 1
    err = trace.array("err")
    xn = np.linalg.norm(trace.array("x"), axis=1)
    s = RunSummary(cfg.name, cfg.seed, len(trace), wall_clock=wall_clock)
    s.initial_error, s.final_error = float(err[0]), float(err[-1])
    s.initial_state, s.final_state = float(xn[0]), float(xn[-1])
    if len(err) >= 10 and (err[0] > 0 or not np.any(err)):
        fit = fit_envelope(err)
        s.lambda_bar, s.fit_status = float(fit.lambda_bar), fit.status

    lo, hi = max(cfg.window[0], 1), min(cfg.window[1], T)
    if lo <= hi:
        ks = np.arange(lo, hi + 1)
        a_hat, a_app = trace.array("a_hat"), trace.array("a_applied")
        s.attack_error = float(np.max(np.linalg.norm(a_hat[ks] - a_app[ks - 1], axis=1)))
        W = tuple(i - 1 for i in cfg.attack["W"])
        eps = cfg.tol().support_eps
        hits = [trace.W_hat[k] == W for k in ks]
        # no false positives, and every miss explained by a sub-threshold sample
        consistent = [
            set(trace.W_hat[k]) <= set(W)
            and {i for i in W if abs(a_app[k - 1, i]) > eps} <= set(trace.W_hat[k])
            for k in ks
        ]
        s.isolation_accuracy = float(np.mean(hits))
        s.isolation_consistency = float(np.mean(consistent))
        s.window_state_max = float(np.max(xn[ks]))
    if controller is not None and controller.certificate is not None:
        s.certificate = controller.certificate.status

    def check(name, value, limit, ok):
        s.checks[name] = {"value": value, "threshold": limit, "pass": bool(ok)}

    thr = cfg.thresholds
    if "lambda_bar_max" in thr:
        ok = s.fit_status in ("converged", "trivially-converged") and s.lambda_bar < thr["lambda_bar_max"]
        check("lambda_bar", s.lambda_bar, thr["lambda_bar_max"], ok)
    if "final_error_max" in thr:
        lim = thr["final_error_max"] * max(1.0, s.initial_error)
        check("final_error", s.final_error, lim, s.final_error <= lim)
    for key, attr, lower in (
        ("attack_error_max", "attack_error", False),
        ("isolation_accuracy_min", "isolation_accuracy", True),
        ("isolation_consistency_min", "isolation_consistency", True),
    ):
        if key in thr:
            v = getattr(s, attr)
            ok = v is not None and (v >= thr[key] if lower else v <= thr[key])
            check(attr, v, thr[key], ok)
    if "window_state_max" in thr:
        lim = thr["window_state_max"] * max(1.0, s.initial_state)
        check("window_state", s.window_state_max, lim, s.window_state_max is not None and s.window_state_max <= lim)
    if "final_state_max" in thr:
        lim = thr["final_state_max"] * max(1.0, s.initial_state)
        check("final_state", s.final_state, lim, s.final_state <= lim)
    if strict and s.certificate is not None:
        check("certificate", s.certificate, "not " + INCONCLUSIVE, s.certificate != INCONCLUSIVE)
    return s


def run_pipeline(cfg: ScenarioConfig, strict: bool = False):
    """Run ``cfg`` end to end; returns ``(trace, summary)``."""
    start = time.perf_counter()
    sys, estimator, controller = build(cfg)
    sim = Simulation(sys, estimator, cfg.attack_scenario(), cfg.initial_state(), controller=controller,
                     isolation_mode=cfg.isolation, burn_in=cfg.burn_in, tol=cfg.tol())
    trace = sim.run(cfg.horizon + 1)
    summary = summarize(cfg, trace, controller, strict, time.perf_counter() - start)
    return trace, summary
