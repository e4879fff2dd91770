"""Mixed-integer rotated-SOC programs for frequency-secured scheduling."""
from .bnb import solve_by_enumeration, solve_mi
from .frequency import (FrequencyHandles, ProgramCosts, add_frequency_constraints, build_program,
                        candidate_intervals, check_solution)
from .ipm import NumericalFailure, solve_socp
from .program import (ConicProgram, Infeasible, NodeLimit, SolveResult, Status, UnboundedBigM, affine,
                      solve_continuous)
from .textfmt import dumps_program, loads_program

__all__ = [
    "ConicProgram", "SolveResult", "Status", "Infeasible", "NodeLimit", "UnboundedBigM", "NumericalFailure",
    "affine", "build_program", "add_frequency_constraints", "candidate_intervals", "check_solution",
    "FrequencyHandles", "ProgramCosts", "solve_continuous", "solve_mi", "solve_by_enumeration", "solve_socp",
    "dumps_program", "loads_program",
]
