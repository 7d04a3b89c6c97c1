"""Skeleton + depth action recognition.

Pipeline stages: view augmentation, entropy-based temporal segmentation,
HOD descriptors, IGMM segment labeling, pseudo-colored depth motion map
classification, and an HMM-SVM sequence classifier on top.
"""
from .camera import DEFAULT_INTRINSICS, CameraIntrinsics
from .config import PipelineConfig, load_config
from .datatypes import (ActionSample, DepthFrame, DepthSequence, RotationSpec,
                        SkeletonFrame, SkeletonSequence, project_skeleton)
from .errors import (DataError, ModelFormatError, NumericalError, ParseError,
                     SkelactError)
from .pipeline import (EvalReport, InMemorySource, PredictionResult,
                       TrainedPipeline, evaluate, load_model, predict_sample,
                       save_model, train_pipeline)
from .synthetic import TEMPLATES, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "ActionSample", "CameraIntrinsics", "DEFAULT_INTRINSICS", "DataError",
    "DepthFrame", "DepthSequence", "EvalReport", "InMemorySource",
    "ModelFormatError", "NumericalError", "ParseError", "PipelineConfig",
    "PredictionResult", "RotationSpec", "SkelactError", "SkeletonFrame",
    "SkeletonSequence", "TEMPLATES", "TrainedPipeline", "evaluate",
    "generate_synthetic", "load_config", "load_model", "predict_sample",
    "project_skeleton", "save_model", "train_pipeline",
]
