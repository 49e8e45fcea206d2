"""Hide 16-bit PCM audio in RGBA images through a spike-timing cipher.

A leaky integrate-and-fire neuron maps each decimal digit to a spike train,
the codebook turns those trains into modulo-16 symbols, and the symbols are
written two bits per channel into the low bits of a cover image.
"""

from .cipher import decrypt_samples, encrypt_samples
from .codebook import Codebook, canonical, derive
from .lif import LifParams, characterize, simulate
from .metrics import fidelity, psnr, ssim
from .png import load_png, save_png
from .stego import DitherConfig, ImageBuffer, KeySidecar, capacity, embed_audio, extract_audio
from .wav import AudioClip, load_wav, save_wav

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "Codebook", "DitherConfig", "ImageBuffer", "KeySidecar", "LifParams",
    "canonical", "capacity", "characterize", "decrypt_samples", "derive", "embed_audio",
    "encrypt_samples", "extract_audio", "fidelity", "load_png", "load_wav", "psnr",
    "save_png", "save_wav", "simulate", "ssim",
]
