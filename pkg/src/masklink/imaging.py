"""Image ingestion, patch grid arithmetic and mask application.

Pixel canon is uint8 in channel-major (C, H, W) layout, grayscale promoted
to RGB on load so a single codec geometry serves every input. Codec and
metric math runs on the float view in [0, 1].

Patches are indexed in raster row-major order and must tile the image
exactly: dimensions that are not a multiple of the patch size are rejected
instead of padded, which keeps the bit accounting exact.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from .errors import FormatError, MaskLinkError
from .mapping import MaskPattern

# Fill value for masked patches. Only a visualization aid: the receive path
# always reconstructs the mask from the transmitted side information.
SENTINEL = 127

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass(eq=False)
class Image:
    """8-bit image, shape (channels, height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[0] not in (1, 3):
            raise FormatError(f"expected (C, H, W) pixels with C in {{1, 3}}, got {px.shape}")
        if px.shape[1] < 1 or px.shape[2] < 1:
            raise FormatError("image dimensions must be positive")
        self.pixels = px.astype(np.uint8, copy=False)

    @property
    def channels(self) -> int:
        return self.pixels.shape[0]

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]

    def to_float(self) -> np.ndarray:
        """Float64 view of the pixels scaled to [0, 1]."""
        return self.pixels.astype(np.float64) / 255.0


def images_equal(a: Image, b: Image) -> bool:
    return a.pixels.shape == b.pixels.shape and bool(np.array_equal(a.pixels, b.pixels))


@dataclass(frozen=True)
class PatchGrid:
    """Raster row-major grid of square patches tiling an image exactly."""

    patch_size: int
    rows: int
    cols: int

    @property
    def num_patches(self) -> int:
        return self.rows * self.cols


@dataclass(eq=False)
class MaskedImage:
    """An image together with the patch mask applied to it.

    Visible patches stay bit-identical to the base image; masked patches are
    considered dropped on the codec path and carry SENTINEL only in the
    rendered view from masked_pixels().
    """

    base: Image
    grid: PatchGrid
    mask: MaskPattern

    def masked_pixels(self) -> np.ndarray:
        """Base pixels with every masked patch overwritten by SENTINEL."""
        patches = split_patches(self.base, self.grid)
        patches = patches.copy()
        patches[self.mask.bits == 1] = SENTINEL
        return join_patches(patches, self.grid).pixels

    def visible_patches(self) -> np.ndarray:
        """Visible patches in raster order, shape (len_keep, C, P, P)."""
        patches = split_patches(self.base, self.grid)
        return patches[self.mask.bits == 0]


# ---------------------------------------------------------------------------
# file IO

def _read_ppm(data: bytes) -> np.ndarray:
    """Binary PPM (P6) decoder, maxval <= 255."""
    stream = io.BytesIO(data)

    def token():
        # skip whitespace and '#' comments between header fields
        out = b""
        while True:
            ch = stream.read(1)
            if ch == b"":
                raise FormatError("unsupported or corrupt PPM: truncated header")
            if ch == b"#":
                while ch not in (b"\n", b""):
                    ch = stream.read(1)
                continue
            if ch.isspace():
                if out:
                    return out
                continue
            out += ch

    if token() != b"P6":
        raise FormatError("unsupported or corrupt PPM: bad magic")
    try:
        width, height, maxval = int(token()), int(token()), int(token())
    except ValueError as exc:
        raise FormatError("unsupported or corrupt PPM: non-numeric header") from exc
    if width < 1 or height < 1:
        raise FormatError("image dimensions must be positive")
    if maxval <= 0 or maxval > 255:
        raise FormatError(f"unsupported PPM maxval {maxval}")
    raw = stream.read(width * height * 3)
    if len(raw) != width * height * 3:
        raise FormatError("unsupported or corrupt PPM: truncated pixel data")
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3)
    return arr.transpose(2, 0, 1)


def _write_ppm(img: Image) -> bytes:
    px = img.pixels
    if img.channels == 1:
        px = np.repeat(px, 3, axis=0)
    header = f"P6\n{img.width} {img.height}\n255\n".encode()
    return header + px.transpose(1, 2, 0).tobytes()


def load_image(path) -> Image:
    """Load a PNG or binary PPM (P6) file as canonical 8-bit RGB.

    Grayscale is promoted to three channels; other PNG modes (palette,
    alpha) are converted to RGB by Pillow, deterministically.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise FormatError(f"unreadable file: {path}") from exc

    if data.startswith(_PNG_MAGIC):
        try:
            pil = PILImage.open(io.BytesIO(data))
            pil.load()
        except Exception as exc:
            raise FormatError(f"unsupported or corrupt PNG: {path}") from exc
        if pil.mode != "RGB":
            pil = pil.convert("RGB")
        arr = np.asarray(pil, dtype=np.uint8).transpose(2, 0, 1)
    elif data[:2] == b"P6":
        arr = _read_ppm(data)
    else:
        raise FormatError(f"unsupported or corrupt image format: {path}")

    if arr.shape[1] < 1 or arr.shape[2] < 1:
        raise FormatError("image dimensions must be positive")
    return Image(arr)


def save_image(img: Image, path) -> None:
    """Write PNG or PPM depending on the file extension."""
    path = str(path)
    if path.endswith(".ppm"):
        with open(path, "wb") as fh:
            fh.write(_write_ppm(img))
        return
    px = img.pixels
    if img.channels == 1:
        px = np.repeat(px, 3, axis=0)
    PILImage.fromarray(px.transpose(1, 2, 0), mode="RGB").save(path, format="PNG")


# ---------------------------------------------------------------------------
# patch grid

def patchify(img: Image, patch_size: int) -> PatchGrid:
    """Grid of non-overlapping patch_size x patch_size patches.

    The patch count is (H/P) * (W/P); non-divisible dimensions are an error,
    never padded.
    """
    if patch_size < 1:
        raise MaskLinkError("patch size must be positive")
    if img.height % patch_size or img.width % patch_size:
        raise MaskLinkError(
            f"patch size {patch_size} does not divide {img.height}x{img.width}"
        )
    return PatchGrid(patch_size, img.height // patch_size, img.width // patch_size)


def split_patches(img: Image, grid: PatchGrid) -> np.ndarray:
    """All patches in raster order, shape (N, C, P, P)."""
    c = img.channels
    p = grid.patch_size
    arr = img.pixels.reshape(c, grid.rows, p, grid.cols, p)
    arr = arr.transpose(1, 3, 0, 2, 4)  # (rows, cols, C, P, P)
    return arr.reshape(grid.num_patches, c, p, p)


def join_patches(patches: np.ndarray, grid: PatchGrid) -> Image:
    """Inverse of split_patches."""
    n, c, p, _ = patches.shape
    if n != grid.num_patches or p != grid.patch_size:
        raise MaskLinkError("patch array does not match the grid")
    arr = patches.reshape(grid.rows, grid.cols, c, p, p)
    arr = arr.transpose(2, 0, 3, 1, 4).reshape(c, grid.rows * p, grid.cols * p)
    return Image(arr)


def apply_mask(img: Image, grid: PatchGrid, mask: MaskPattern) -> MaskedImage:
    if len(mask.bits) != grid.num_patches:
        raise MaskLinkError(
            f"mask length {len(mask.bits)} != patch count {grid.num_patches}"
        )
    return MaskedImage(img, grid, mask)


def detect_mask(mimg: MaskedImage) -> MaskPattern:
    """Recover the mask from the rendered sentinel fill.

    Debug/visualization helper: a natural patch that is uniformly SENTINEL
    is indistinguishable from a masked one and will read as masked. The
    transmit path never relies on this; the receiver rebuilds the mask from
    the transmitted side information.
    """
    rendered = Image(mimg.masked_pixels())
    patches = split_patches(rendered, mimg.grid)
    flat = patches.reshape(patches.shape[0], -1)
    bits = np.all(flat == SENTINEL, axis=1).astype(np.uint8)
    return MaskPattern(bits)
