"""WAV I/O and SNR-controlled noise mixing."""

from nser.noise.mix import MixSpec, Waveform, build_noisy_manifest, mix_at_snr, rms_power
from nser.noise.wav import read_wav, write_wav

__all__ = [
    "MixSpec",
    "Waveform",
    "build_noisy_manifest",
    "mix_at_snr",
    "rms_power",
    "read_wav",
    "write_wav",
]
