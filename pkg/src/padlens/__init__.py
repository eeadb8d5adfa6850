"""Analysis of padding-induced spatial bias in convolutional networks."""

from .analysis import (ArtifactReport, AsymmetryScore, artifact_probe, asymmetry,
                       asymmetry_sweep, line_artifact_flags, mean_kernel)
from .convarith import (BalanceReport, ShapeError, ShapeTrace, admissible_sizes,
                        check_even_padding, consumed_extent, output_shape, suggest_size,
                        trace_shapes)
from .engine import conv2d, forward, maxpool, partial_conv2d, relu
from .foveation import FoveationMap, foveation_map, oracle_foveation, uniformity_stats
from .netspec import (LayerSpec, NetworkSpec, NetworkSpecError, override_padding,
                      parse_network, serialize_network)
from .padding import PaddingMode, PadSourceMap, distribution_pad, pad, same_amounts
from .presets import preset
from .tensor import FeatureMap, KernelSet, accumulate_mean, channel_mean
from .weights import WeightSet, load_weights, random_weights, save_weights

__version__ = "0.1.0"
