"""Training-step building blocks and the training loop."""

from .puzzle import identity_layout, inverse_mix, make_layout, mix, mix_labels
from .reflection import (
    decouple,
    error_map,
    guidance_mask,
    guided_regions,
    softmax_unreliable_mask,
    unreliable_mask,
)
from .sketch import (
    build_reflection_input,
    canny_edges,
    dilate,
    mask_boundary,
    merge_sketches,
)
from .trainer import (
    LabeledSample,
    ReflectionTrainer,
    TrainingData,
    TrainState,
    create_state,
    evaluate_model,
    learning_rate,
    load_cases,
    load_training_data,
    model_from_checkpoint,
    predict_mask,
    train_step,
    validate,
)

__all__ = [
    "LabeledSample",
    "ReflectionTrainer",
    "TrainState",
    "TrainingData",
    "build_reflection_input",
    "canny_edges",
    "create_state",
    "decouple",
    "dilate",
    "error_map",
    "evaluate_model",
    "guidance_mask",
    "guided_regions",
    "identity_layout",
    "inverse_mix",
    "learning_rate",
    "load_cases",
    "load_training_data",
    "make_layout",
    "mask_boundary",
    "merge_sketches",
    "mix",
    "mix_labels",
    "model_from_checkpoint",
    "predict_mask",
    "softmax_unreliable_mask",
    "train_step",
    "unreliable_mask",
    "validate",
]
