"""Physical-layer simulation: power normalization, BPSK, AWGN and Rayleigh.

Single antenna each side. The received signal is y = h*x + n per symbol,
with h = 1 for AWGN and h drawn i.i.d. circularly-symmetric complex
Gaussian of unit variance for Rayleigh. Noise is n ~ CN(0, sigma^2) with
sigma^2 = 10^(-snr_db / 10), so each real/imaginary component has variance
sigma^2 / 2. snr_db = inf gives a noiseless channel.

Everything is reproducible: a transmit call is a pure function of
(config.seed, stream_tag, input). Parallel trials must use distinct seeds
derived with derive_seed(master, *coordinates).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ChannelError

ERASURE_GAIN_FLOOR = 1e-12


class ChannelKind(enum.Enum):
    AWGN = "awgn"
    RAYLEIGH = "rayleigh"


@dataclass(frozen=True)
class ChannelConfig:
    kind: ChannelKind
    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if np.isnan(self.snr_db):
            raise ChannelError("snr_db must not be NaN")

    @property
    def noise_variance(self) -> float:
        return float(10.0 ** (-self.snr_db / 10.0))


@dataclass(eq=False)
class SymbolStream:
    symbols: np.ndarray

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.complex128).ravel()

    def __len__(self) -> int:
        return int(self.symbols.size)

    @property
    def avg_power(self) -> float:
        if self.symbols.size == 0:
            return 0.0
        return float(np.mean(np.abs(self.symbols) ** 2))


@dataclass(eq=False)
class ChannelState:
    """Receiver-side knowledge: perfect CSI plus the noise level used."""

    kind: ChannelKind
    gains: np.ndarray | None
    noise_variance: float


def derive_seed(master: int, *coordinates: int) -> int:
    """Documented splitting rule: hash (master, coordinates) via SeedSequence."""
    ss = np.random.SeedSequence([int(master), *[int(c) for c in coordinates]])
    return int(ss.generate_state(1, np.uint64)[0])


def _rng(seed: int, stream_tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream_tag)]))


def normalize_power(stream: SymbolStream) -> tuple[SymbolStream, float]:
    """Scale to unit average symbol power; returns (stream, scale applied)."""
    power = stream.avg_power
    if power == 0.0:
        raise ChannelError("cannot power-normalize an all-zero stream")
    scale = 1.0 / np.sqrt(power)
    return SymbolStream(stream.symbols * scale), float(scale)


def modulate_bpsk(bits) -> SymbolStream:
    """Bit 0 -> +1, bit 1 -> -1."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    return SymbolStream(1.0 - 2.0 * bits.astype(np.float64))


def transmit(stream: SymbolStream, cfg: ChannelConfig,
             stream_tag: int = 0) -> tuple[SymbolStream, ChannelState]:
    """Apply fading (if any) and additive noise.

    The fading gains are drawn before the noise so the sequence of random
    draws, and therefore the output, is fixed by (seed, stream_tag).
    """
    x = stream.symbols
    rng = _rng(cfg.seed, stream_tag)
    sigma2 = cfg.noise_variance

    gains = None
    if cfg.kind is ChannelKind.RAYLEIGH:
        gains = (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)) / np.sqrt(2.0)
        y = gains * x
    else:
        y = x.copy()

    if sigma2 > 0.0:
        noise = (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)) * np.sqrt(sigma2 / 2.0)
        y = y + noise
    return SymbolStream(y), ChannelState(cfg.kind, gains, sigma2)


def equalize(received: SymbolStream, state: ChannelState) -> tuple[SymbolStream, np.ndarray]:
    """Zero-forcing with perfect CSI; AWGN passes through.

    Symbols whose fading gain magnitude is below ERASURE_GAIN_FLOOR are
    flagged as erasures (boolean mask) and zeroed instead of divided.
    """
    y = received.symbols
    erasures = np.zeros(y.size, dtype=bool)
    if state.kind is ChannelKind.AWGN or state.gains is None:
        return SymbolStream(y.copy()), erasures
    if state.gains.size != y.size:
        raise ChannelError("fading record does not match the stream length")
    erasures = np.abs(state.gains) < ERASURE_GAIN_FLOOR
    out = np.zeros_like(y)
    ok = ~erasures
    out[ok] = y[ok] / state.gains[ok]
    return SymbolStream(out), erasures


def demodulate_bpsk(stream: SymbolStream, erasures: np.ndarray | None = None) -> np.ndarray:
    """Hard decision on the real part; erasures decide as bit 0."""
    bits = (stream.symbols.real < 0).astype(np.uint8)
    if erasures is not None:
        bits[np.asarray(erasures, dtype=bool)] = 0
    return bits
