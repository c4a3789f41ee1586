"""Bagged survival trees grown on Bayesian and beta-Stacy bootstrap replicas."""
from .core import (
    CsvSchema,
    DataError,
    Dataset,
    DiscreteDistribution,
    SeededRngStream,
    StepFunction,
    TimeToEventRecord,
    kfold,
    load_csv,
    split_train_test,
    step_eval,
)
from .ensemble import GbestConfig, GbestModel, gbest_fit, gbest_predict_survival, rsf_fit
from .metrics import brier_score, integrated_brier
from .tree import TreeParams

__version__ = "0.1.0"
