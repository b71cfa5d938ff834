"""masklink: link-level simulator for carrying digital payloads as mask
locations on images.

The transmit path maps payload bits onto a patch mask, encodes the visible
patches to a latent block, and serializes mask positions as a sparse index
set; the receive path inverts each step and reports payload BER alongside
image PSNR / MS-SSIM and the transmission bit cost.
"""

from .channel import (ChannelConfig, ChannelKind, ChannelState, SymbolStream,
                      demodulate_bpsk, derive_seed, equalize, modulate_bpsk,
                      normalize_power, transmit)
from .codec import (Codec, LatentBlock, QuantSpec, ReferenceCodec, make_codec,
                    quantize)
from .errors import (ChannelError, CodecError, ConfigError, FormatError,
                     FrameLostError, MaskLinkError, PayloadTooLongError,
                     WireError)
from .frame import (DecodeResult, Frame, FrameHeader, LinkConfig,
                    ReceivedFrame, noiseless_received, read_scframe,
                    sem_decode, sem_encode, transmit_frame, write_scframe)
from .harness import (ExperimentConfig, TrialRecord, parse_config,
                      read_records, run_sweep)
from .imaging import (Image, MaskedImage, PatchGrid, apply_mask, images_equal,
                      load_image, patchify, save_image)
from .mapping import (BitPayload, MaskPattern, RatioAdvisory, check_mask_ratio,
                      load_payload, mask_to_payload, payload_to_mask,
                      save_payload)
from .metrics import ber, ms_ssim, psnr
from .overhead import (OverheadReport, check_cost, overhead_direct,
                       overhead_minimal, overhead_proposed)
from .plots import emit_plots
from .remote import RemoteCodec
from .sparsecode import (Polarity, RestoreIndices, SparseIndexSet,
                         build_restore_indices, deserialize_sparse,
                         serialize_sparse, sparse_decode, sparse_encode)
from .synth import synthetic_batch, synthetic_image

__version__ = "0.1.0"
