class MaskLinkError(Exception):
    """Base class for all masklink errors."""


class FormatError(MaskLinkError):
    """Unreadable, unsupported or structurally corrupt file/byte stream."""


class PayloadTooLongError(MaskLinkError):
    """Payload has more bits than the patch grid can carry."""


class CodecError(MaskLinkError):
    """Codec contract violation (geometry mismatch, no visible patches, ...)."""


class ChannelError(MaskLinkError):
    """Physical-layer simulation error (e.g. zero-power input stream)."""


class FrameLostError(MaskLinkError):
    """Header could not be recovered into a self-consistent frame layout."""


class WireError(MaskLinkError):
    """Malformed message on the remote-codec wire protocol."""


class ConfigError(MaskLinkError):
    """Invalid experiment or link configuration."""
