"""Minimal mono 16-bit PCM WAV reader/writer.

Waveforms are exchanged as float arrays in [-1, 1]; this is the only waveform
container the package reads or writes.
"""

import wave

import numpy as np

from .errors import FormatError, InputError

_PCM_SCALE = 32767.0


def write_wav(path, x, fs):
    """Write a float waveform in [-1, 1] as mono 16-bit PCM; values are clipped."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputError(f"expected mono waveform, got shape {x.shape}")
    pcm = np.clip(np.round(x * _PCM_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(fs))
        w.writeframes(pcm.tobytes())


def read_wav(path):
    """Read a mono 16-bit PCM WAV file; returns (waveform float64 in [-1, 1], fs)."""
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1:
            raise FormatError(f"{path}: expected mono, got {w.getnchannels()} channels")
        if w.getsampwidth() != 2:
            raise FormatError(f"{path}: expected 16-bit PCM, got {8 * w.getsampwidth()}-bit")
        fs = w.getframerate()
        raw = w.readframes(w.getnframes())
    x = np.frombuffer(raw, dtype="<i2").astype(np.float64) / _PCM_SCALE
    return x, fs
