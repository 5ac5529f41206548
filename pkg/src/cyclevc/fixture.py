"""Deterministic demo corpus: formant-synthesized vowel/fricative utterances.

Each utterance strings together vowel syllables (glottal pulse train with
spectral tilt driven through a cascade of formant resonators), fricative
bursts (band-shaped noise), and short pauses, with a declining F0 contour
and per-syllable accents. The corpus is seeded, so repeated generation is
byte-identical; it exists to exercise the full pipeline, not to sound human.

Run `python -m cyclevc.fixture --out-dir corpus` to write the WAV files.
"""

import argparse
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .acoustics import FS
from .errors import ConfigError
from .wavio import write_wav

# formant presets: (F1, F2, F3, F4) in Hz
VOWELS = {
    "a": (760.0, 1250.0, 2600.0, 3400.0),
    "e": (500.0, 1900.0, 2650.0, 3500.0),
    "i": (300.0, 2300.0, 3000.0, 3650.0),
    "o": (450.0, 850.0, 2500.0, 3300.0),
    "u": (330.0, 900.0, 2350.0, 3250.0),
}
FORMANT_BW = (80.0, 110.0, 160.0, 220.0)
VOWEL_AMP = 0.30
FRIC_AMP = 0.06
CROSSFADE = int(0.005 * FS)

DEFAULT_UTTERANCES = 24
DEFAULT_SEED = 20240917


def _resonator(x, freq, bw, fs):
    """Two-pole resonance with roughly unity peak gain."""
    r = np.exp(-np.pi * bw / fs)
    theta = 2.0 * np.pi * freq / fs
    gain = (1.0 - r) * np.sqrt(1.0 - 2.0 * r * np.cos(2.0 * theta) + r * r)
    return lfilter([gain], [1.0, -2.0 * r * np.cos(theta), r * r], x)


def _glottal_pulses(n, f0_track, fs):
    phase = np.cumsum(f0_track / fs)
    hits = np.flatnonzero(np.diff(np.floor(np.concatenate([[0.0], phase + 0.5]))) >= 1)
    exc = np.zeros(n)
    exc[hits] = 1.0
    # -6 dB/octave tilt so the source resembles a glottal flow derivative
    return lfilter([1.0], [1.0, -0.94], exc)


def _vowel(rng, vowel, dur, f0_start, f0_end):
    n = int(dur * FS)
    vib = 1.0 + 0.02 * np.sin(2.0 * np.pi * 5.3 * np.arange(n) / FS)
    f0 = np.linspace(f0_start, f0_end, n) * vib
    x = _glottal_pulses(n, f0, FS)
    x += 0.003 * rng.standard_normal(n)  # breath noise
    for freq, bw in zip(VOWELS[vowel], FORMANT_BW):
        x = _resonator(x, freq, bw, FS)
    x /= max(np.max(np.abs(x)), 1e-9)
    fade = np.minimum(1.0, np.minimum(np.arange(n), n - 1 - np.arange(n)) / CROSSFADE)
    return VOWEL_AMP * x * fade


def _fricative(rng, dur):
    n = int(dur * FS)
    x = rng.standard_normal(n)
    x = _resonator(x, 5200.0, 1800.0, FS) + 0.4 * _resonator(x, 7800.0, 2500.0, FS)
    x /= max(np.max(np.abs(x)), 1e-9)
    fade = np.minimum(1.0, np.minimum(np.arange(n), n - 1 - np.arange(n)) / CROSSFADE)
    return FRIC_AMP * x * fade


def synth_utterance(rng):
    """One random utterance as float samples in [-1, 1] at 24 kHz."""
    vowel_names = sorted(VOWELS)
    n_syll = int(rng.integers(5, 9))
    f0_top = float(rng.uniform(150.0, 230.0))
    f0_floor = f0_top * 0.65
    pieces = [np.zeros(int(rng.uniform(0.04, 0.10) * FS))]
    for k in range(n_syll):
        frac0 = k / n_syll
        frac1 = (k + 1) / n_syll
        base0 = f0_top + (f0_floor - f0_top) * frac0
        base1 = f0_top + (f0_floor - f0_top) * frac1
        accent = 1.0 + (0.12 if rng.random() < 0.35 else 0.0)
        vowel = vowel_names[int(rng.integers(len(vowel_names)))]
        dur = float(rng.uniform(0.16, 0.34))
        pieces.append(_vowel(rng, vowel, dur, base0 * accent, base1))
        if rng.random() < 0.4:
            pieces.append(_fricative(rng, float(rng.uniform(0.06, 0.13))))
        if rng.random() < 0.3:
            pieces.append(np.zeros(int(rng.uniform(0.03, 0.09) * FS)))
    pieces.append(np.zeros(int(rng.uniform(0.05, 0.12) * FS)))
    return np.concatenate(pieces)


def make_corpus(out_dir, n_utterances=DEFAULT_UTTERANCES, seed=DEFAULT_SEED):
    """Write `n_utterances` seeded WAV files; returns the sorted paths."""
    if n_utterances < 1:
        raise ConfigError("n_utterances must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(seed)
    paths = []
    for i, child in enumerate(root.spawn(n_utterances)):
        rng = np.random.Generator(np.random.PCG64(child))
        wav = synth_utterance(rng)
        path = out_dir / f"utt{i:03d}.wav"
        write_wav(path, wav, FS)
        paths.append(path)
    return paths


def main(argv=None):
    parser = argparse.ArgumentParser(description="Generate the demo corpus.")
    parser.add_argument("--out-dir", required=True, help="directory for WAV files")
    parser.add_argument("--count", type=int, default=DEFAULT_UTTERANCES)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = parser.parse_args(argv)
    paths = make_corpus(args.out_dir, n_utterances=args.count, seed=args.seed)
    print(f"wrote {len(paths)} utterances to {args.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
