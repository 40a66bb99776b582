"""Parallel entropy coding: bidirectional packing, joint termination, indexes."""

from .bitio import (
    BitReader,
    BitWriter,
    TruncatedStreamError,
    elias_gamma_decode,
    elias_gamma_encode,
    pack_bounded,
    reverse_byte,
    unpack_bounded,
)
from .container import (
    ContainerFormatError,
    Header,
    SegmentMap,
    read_container,
    segment_source,
    write_container,
)
from .pipeline import decode_parallel, encode_parallel, shard_ranges
from .rangecoder import (
    BinaryModel,
    CdfModel,
    Decoder,
    Encoder,
    FinalCoderState,
    new_decoder,
    pending_info,
)
from .sizeindex import (
    SizeIndex,
    bic_decode,
    bic_encode,
    entry_points,
    gamma_decode_sizes,
    gamma_encode_sizes,
    i32_decode_sizes,
    i32_encode_sizes,
    rtc_decode,
    rtc_encode,
)
from .termination import (
    JointTermination,
    SingleTermination,
    TerminationStats,
    ValidByteSet,
    joint_terminate,
    terminate_single,
    valid_byte_set,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
