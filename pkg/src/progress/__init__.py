"""Progress tracking for training runs."""

from .tracker import LOG_COLUMNS, TrainingTracker, TrainProgressContext

__all__ = ["LOG_COLUMNS", "TrainProgressContext", "TrainingTracker"]
