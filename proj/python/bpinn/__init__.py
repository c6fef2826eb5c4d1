"""Baldwinian evolution of physics-informed networks.

The heavy lifting lives in the compiled extension; this package just
re-exports its surface.
"""

from ._core import (
    EvalResult,
    GenerationRecord,
    Genome,
    ProblemInfo,
    RestartMetrics,
    TaskMetrics,
    TrainResult,
    __version__,
    evaluate,
    list_problems,
    load_genome,
    report_table,
    save_genome,
    train,
)

__all__ = [
    "EvalResult",
    "GenerationRecord",
    "Genome",
    "ProblemInfo",
    "RestartMetrics",
    "TaskMetrics",
    "TrainResult",
    "__version__",
    "evaluate",
    "list_problems",
    "load_genome",
    "report_table",
    "save_genome",
    "train",
]
