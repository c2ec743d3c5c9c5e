"""Phase unwrapping with an untrained convolutional generator."""

from .network import (
    CornerMeanSubtract,
    Generator,
    GeneratorConfig,
    MinSubtract,
    build_generator,
    sample_input,
)
from .postprocess import local_std, remove_background, segment_threshold
from .solver import (
    NumericalError,
    RunReport,
    TrainConfig,
    desk_profile,
    paper_profile,
    pudip_loss,
    unwrap_pudip,
)

__all__ = [
    "CornerMeanSubtract",
    "Generator",
    "GeneratorConfig",
    "MinSubtract",
    "NumericalError",
    "RunReport",
    "TrainConfig",
    "build_generator",
    "local_std",
    "desk_profile",
    "paper_profile",
    "pudip_loss",
    "remove_background",
    "sample_input",
    "segment_threshold",
    "unwrap_pudip",
]
