"""Cross-modal gated fusion for paired audio/text sequence classification."""

from .errors import (
    BoundsError,
    ChecksumError,
    ConfigError,
    CorpusFormatError,
    EmptySequenceError,
    GatedFusionError,
    LabelError,
    ManifestError,
    NonFiniteError,
    ShapeError,
    UnsupportedVersionError,
)
from .gating import GateOutput, GatingMode, GatingParams, gate_cross_modal, gate_unimodal, refine
from .model import ForwardResult, FusionModel, ModelConfig, Prediction
from .sequence import MaskedSequence, pad_batch, pool_sequence, unpad_batch
from .synth import Corpus, OracleReport, Sample, SynthSpec, bayes_oracle_accuracy, generate, model_inputs
from .tensor import GradcheckReport, Parameter, Tape, Tensor, gradcheck
from .trainer import TrainConfig, TrainResult, evaluate, train

__all__ = [
    "BoundsError", "ChecksumError", "ConfigError", "CorpusFormatError",
    "EmptySequenceError", "GatedFusionError", "LabelError", "ManifestError",
    "NonFiniteError", "ShapeError", "UnsupportedVersionError",
    "GateOutput", "GatingMode", "GatingParams", "gate_cross_modal",
    "gate_unimodal", "refine",
    "ForwardResult", "FusionModel", "ModelConfig", "Prediction",
    "MaskedSequence", "pad_batch", "pool_sequence", "unpad_batch",
    "Corpus", "OracleReport", "Sample", "SynthSpec", "bayes_oracle_accuracy",
    "generate", "model_inputs",
    "GradcheckReport", "Parameter", "Tape", "Tensor", "gradcheck",
    "TrainConfig", "TrainResult", "evaluate", "train",
]

__version__ = "0.1.0"
