"""Scripted setter and solver used to demonstrate tasks and generate data."""

from .datagen import (
    generate_dataset,
    make_tokenizer,
    run_demonstration,
    solve_probe_episode,
)
from .setter import (
    ANSWER_TEMPLATES,
    INSTRUCTION_TEMPLATES,
    GoalSpec,
    answer_text,
    language_corpus,
    setter_propose,
)
from .solver import ScriptedSolver, SolverConfig

__all__ = [
    "generate_dataset", "make_tokenizer", "run_demonstration",
    "solve_probe_episode", "ANSWER_TEMPLATES", "INSTRUCTION_TEMPLATES",
    "GoalSpec", "answer_text", "language_corpus", "setter_propose",
    "ScriptedSolver", "SolverConfig",
]
