"""Dynamic learning-to-rank simulator with merit-based exposure fairness."""

__version__ = "0.1.0"

from .core import Corpus, Document, InteractionRecord, PropensityCurve, Ranking
from .runner import ExperimentConfig, benchmark_controllers, run_experiment

__all__ = [
    "__version__",
    "Corpus",
    "Document",
    "InteractionRecord",
    "PropensityCurve",
    "Ranking",
    "ExperimentConfig",
    "run_experiment",
    "benchmark_controllers",
]
