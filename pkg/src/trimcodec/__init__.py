"""trimcodec: lossless entropy coding of 3D symbol cuboids.

A trimmed-convolution context model predicts every position's symbol
distribution in one forward pass while respecting the coding order; a
bit-exact range coder turns those predictions into a compressed stream.
Raster coding decodes serially, the slope schedule decodes whole diagonal
blocks per model pass, and 8-bit gray images ride along as binary bit-plane
cuboids.
"""

from .codec import (DecodeResult, EncodeResult, decode_cuboid, encode_cuboid,
                    from_bitplanes, inpaint, raster_order, slope_blocks, to_bitplanes)
from .coder import (ArithmeticDecoder, ArithmeticEncoder, Bitstream, CodecError,
                    QuantizedPmf, ac_decode, ac_encode, quantize_pmf, rational_encode)
from .estimators import CuboidCompressor, GrayImageCompressor
from .masks import HIDDEN, INPUT, RASTER, SLOPE, build_mask, in_coding_context
from .model import (ContextModel, ModelConfig, code_length_bits, compression_ratio,
                    load_model, save_model)
from .tensor import Rng
from .training import LEARNING_RATES, TrainState, adam_step, train

__version__ = "0.1.0"

__all__ = [
    "Bitstream", "CodecError", "ContextModel", "CuboidCompressor", "DecodeResult",
    "EncodeResult", "GrayImageCompressor", "HIDDEN", "INPUT", "LEARNING_RATES",
    "ArithmeticDecoder", "ArithmeticEncoder", "ModelConfig", "QuantizedPmf", "RASTER", "Rng",
    "SLOPE", "TrainState", "ac_decode", "ac_encode", "adam_step", "build_mask",
    "code_length_bits", "compression_ratio", "decode_cuboid", "encode_cuboid",
    "from_bitplanes", "in_coding_context", "inpaint", "load_model", "quantize_pmf",
    "raster_order", "rational_encode", "save_model", "slope_blocks", "to_bitplanes",
    "train",
]
