"""Unknown input observer banks for secure state estimation, actuator attack
isolation and switch-off control of discrete-time LTI systems."""
from .bank import ObserverBank, bank_step, enumerate_bank, fit_envelope, make_estimator
from .control import Simulation, certify_switched, stab_q_star, synthesize_gains
from .isolation import IsolationState, isolate, reconstruct_attack
from .linmath import Tolerances
from .pipeline import run_pipeline, write_trace
from .plant import AttackScenario, LtiSystem, RandomSource, Signal, attack_vector, measure, plant_step
from .scenario import ScenarioConfig, parse_scenario, preset
from .uio import check_c1, design_complete, design_partial, max_q, observer_step

__version__ = "0.1.0"
