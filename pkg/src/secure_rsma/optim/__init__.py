"""Optimizers for the secrecy energy-efficiency design problem."""
from .allocation import allocation_closed_form, allocation_lp, solve_allocation
from .ao import (AoResult, alternating_optimize, initial_state, mrt_precoders, optimize_design,
                 warm_start_from_private)
from .common import (DesignState, SchemeVariant, SubproblemInfeasible, baseline_configure,
                     check_design)
from .phases import build_phase_program, optimize_phases, phase_subproblem
from .precoder import (build_precoder_program, dinkelbach_precoders, precoder_subproblem,
                       restore_feasibility)

__all__ = [
    "AoResult", "DesignState", "SchemeVariant", "SubproblemInfeasible",
    "allocation_closed_form", "allocation_lp", "alternating_optimize", "baseline_configure",
    "build_phase_program", "build_precoder_program", "check_design", "dinkelbach_precoders",
    "initial_state", "mrt_precoders", "optimize_design", "optimize_phases", "phase_subproblem",
    "precoder_subproblem", "restore_feasibility", "solve_allocation", "warm_start_from_private",
]
