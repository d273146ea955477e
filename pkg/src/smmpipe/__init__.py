"""Ensemble text-classification pipelines and evaluation for social-media health mentions."""

__version__ = "0.1.0"

from .backends import FileBackend, MockBackend, MockSpec, PromptedBackend, predict_batch
from .corpus import (ClassDistribution, LabeledDataset, LabelSpace, Platform, TextSample,
                     class_distribution, filter_by_platform, load_dataset)
from .evaluation import (ConfusionMatrix, MetricReport, compare_systems, confusion, error_analysis,
                         evaluate, f1, f_beta, macro_f1, precision, recall)
from .pipelines import (PipelineSpec, and_rule, classify_two_stage, majority_vote, or_rule,
                        run_pipeline)
from .predictions import Prediction, PredictionSet

__all__ = [
    "FileBackend", "MockBackend", "MockSpec", "PromptedBackend", "predict_batch",
    "ClassDistribution", "LabeledDataset", "LabelSpace", "Platform", "TextSample",
    "class_distribution", "filter_by_platform", "load_dataset",
    "ConfusionMatrix", "MetricReport", "compare_systems", "confusion", "error_analysis",
    "evaluate", "f1", "f_beta", "macro_f1", "precision", "recall",
    "PipelineSpec", "and_rule", "classify_two_stage", "majority_vote", "or_rule", "run_pipeline",
    "Prediction", "PredictionSet",
]
