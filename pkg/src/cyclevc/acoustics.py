"""Acoustic analysis/synthesis backend (24 kHz, 5 ms frame shift).

Analysis decomposes a waveform into the package's fixed feature layout:
45-dim mel-cepstrum of the spectral envelope (all-pass warp, alpha = 0.466),
log-F0 with linear interpolation through unvoiced stretches, a binary
voicing flag, and 3 coded band-aperiodicity values.

The envelope of voiced frames is measured by probing harmonic amplitudes
with windowed DFTs at k*F0 (chirp-z transform), interpolating the log
amplitudes across frequency, and converting to a truncated warped cepstrum.
Band aperiodicity contrasts harmonic against interharmonic probe power.
Unvoiced frames use a smoothed periodogram. Synthesis excites pulse and
noise sources, mixes them per aperiodicity band, and applies the envelope
frame-by-frame with FFT overlap-add.

The analyzer/synthesizer pair is an adapter: anything implementing
AnalysisBackend can replace the shipped SourceFilterBackend.
"""

import abc

import numpy as np
from scipy.fft import irfft, rfft, rfftfreq
from scipy.signal import czt

from .errors import ConfigError, InputError
from .features import CAP_DIM, FRAME_SHIFT_MS, MCEP_DIM, UtteranceFeatures
from .sigproc import WarpedCepstrumCodec, box_smooth, hann_periodic, yin_period

FS = 24000
HOP = FS * FRAME_SHIFT_MS // 1000  # 120 samples
NYQUIST = FS / 2.0
MCEP_ALPHA = 0.466

F0_FLOOR = 60.0
F0_CEIL = 400.0
DEFAULT_F0 = 120.0

YIN_WINDOW = 480
YIN_TAU_MAX = int(round(FS / F0_FLOOR))
VOICING_DIP_MAX = 0.25
SILENCE_RMS = 1e-4

ENV_PERIODS = 4
ENV_WINDOW_MIN = 201
ENV_WINDOW_MAX = 1601
UNVOICED_WINDOW = 720
UNVOICED_FFT = 2048
SMOOTH_HALF_BINS = 17  # ~200 Hz at 2048-point FFT

CAP_BANDS = ((0.0, 2000.0), (2000.0, 6000.0), (6000.0, 12000.0))
# Envelope dynamic range is limited to 60 dB below the frame peak (with an
# absolute guard for silence): a deeper cliff would make the 45-dim cepstrum
# ring, and the ringing aliases when the envelope is re-sampled at harmonics.
AMP_RANGE = 1e-3
AMP_FLOOR = 1e-7
CAP_DB_FLOOR = -60.0

SYN_WINDOW = 480
SYN_FFT = 1024
_SYN_SEED = 0x5F3C0DE


def _slice_padded(x, start, length):
    """x[start:start+length] with zero padding outside the signal."""
    out = np.zeros(length, dtype=np.float64)
    lo = max(start, 0)
    hi = min(start + length, len(x))
    if hi > lo:
        out[lo - start : hi - start] = x[lo:hi]
    return out


def _interp_lf0(f0, voiced):
    """Natural-log F0 track: raw on voiced frames, linearly interpolated
    across unvoiced gaps, nearest-voiced at the edges, constant fallback."""
    n = len(f0)
    idx = np.flatnonzero(voiced)
    if len(idx) == 0:
        return np.full(n, np.log(DEFAULT_F0))
    return np.interp(np.arange(n), idx, np.log(f0[idx]))


class AnalysisBackend(abc.ABC):
    """Adapter between waveforms and the package feature layout."""

    name = "abstract"

    @abc.abstractmethod
    def analyze(self, waveform, fs, utt_id=""):
        """Waveform (float samples, [-1, 1]) -> UtteranceFeatures."""

    @abc.abstractmethod
    def synthesize(self, feat, fs):
        """UtteranceFeatures -> waveform; deterministic given the input."""


class SourceFilterBackend(AnalysisBackend):
    """The shipped harmonic-probe analyzer and pulse+noise resynthesizer."""

    name = "source-filter"

    def __init__(self):
        self.codec = WarpedCepstrumCodec(FS, order=MCEP_DIM, alpha=MCEP_ALPHA)
        self._uv_freqs = rfftfreq(UNVOICED_FFT, 1.0 / FS)
        self._uv_window = np.hanning(UNVOICED_WINDOW)
        # unit-noise amplitude that makes the unvoiced round trip level-consistent
        w = self._uv_window
        self._uv_noise_sigma = w.sum() / (2.0 * np.sqrt(np.sum(w * w)))
        self._syn_window = hann_periodic(SYN_WINDOW)
        syn_freqs = rfftfreq(SYN_FFT, 1.0 / FS)
        self._syn_sampler = self.codec.sampler(syn_freqs)
        self._syn_band_of_bin = np.searchsorted(
            [hi for _, hi in CAP_BANDS[:-1]], syn_freqs, side="right"
        )

    # ----- analysis -------------------------------------------------------

    def analyze(self, waveform, fs, utt_id=""):
        if fs != FS:
            raise ConfigError(f"unsupported fs {fs}; this backend runs at {FS} Hz")
        x = np.asarray(waveform, dtype=np.float64).ravel()
        if x.size == 0:
            raise InputError("empty waveform")
        if x.size < HOP:
            raise InputError(f"waveform shorter than one frame ({HOP} samples)")
        if not np.all(np.isfinite(x)):
            raise InputError("waveform contains non-finite samples")

        n = x.size // HOP + 1
        centers = np.arange(n) * HOP
        f0 = np.zeros(n)
        dip = np.ones(n)
        rms = np.zeros(n)
        for t, c in enumerate(centers):
            seg = _slice_padded(x, c - YIN_WINDOW // 2, YIN_WINDOW + YIN_TAU_MAX)
            rms[t] = np.sqrt(np.mean(seg[:YIN_WINDOW] ** 2))
            if rms[t] > SILENCE_RMS:
                f0[t], dip[t] = yin_period(seg, FS, F0_FLOOR, F0_CEIL, YIN_WINDOW)
        voiced = (
            (dip < VOICING_DIP_MAX)
            & (f0 >= F0_FLOOR * 0.9)
            & (f0 <= F0_CEIL * 1.1)
            & (rms > SILENCE_RMS)
        )

        mcep = np.zeros((n, MCEP_DIM))
        cap = np.zeros((n, CAP_DIM))
        for t, c in enumerate(centers):
            if voiced[t]:
                mcep[t], cap[t] = self._voiced_frame(x, c, f0[t])
            else:
                mcep[t] = self._unvoiced_frame(x, c)
                cap[t] = 0.0  # fully aperiodic

        return UtteranceFeatures(
            utt_id=utt_id,
            mcep=mcep,
            lf0=_interp_lf0(f0, voiced),
            uv=voiced.astype(np.float32),
            cap=cap,
        )

    def _probe(self, wx, f0, count, offset):
        """|DFT| probes at (k + offset) * f0 for k = 1..count (unnormalized)."""
        step = np.exp(-2j * np.pi * f0 / FS)
        start = np.exp(2j * np.pi * f0 * (1.0 + offset) / FS)
        return np.abs(czt(wx, m=count, w=step, a=start))

    def _voiced_frame(self, x, center, f0):
        w_len = int(round(ENV_PERIODS * FS / f0)) | 1
        w_len = min(max(w_len, ENV_WINDOW_MIN), ENV_WINDOW_MAX)
        win = np.hanning(w_len)
        seg = _slice_padded(x, center - w_len // 2, w_len)
        wx = seg * win
        gain = 2.0 / win.sum()

        n_harm = int((NYQUIST - 0.6 * f0) // f0)
        amps = self._probe(wx, f0, n_harm, 0.0) * gain
        inter = self._probe(wx, f0, n_harm, -0.5) * gain  # (k - 0.5) * f0, k=1..

        floor = max(amps.max() * AMP_RANGE, AMP_FLOOR)
        log_h = np.log(np.maximum(amps, floor))
        if n_harm >= 3:  # soften harmonic-to-harmonic jitter and cliff edges
            log_h = np.convolve(
                np.concatenate([log_h[:1], log_h, log_h[-1:]]),
                [0.25, 0.5, 0.25],
                "valid",
            )
        freqs = np.arange(1, n_harm + 1) * f0
        xp = np.concatenate([[0.0], freqs, [NYQUIST]])
        fp = np.concatenate([[log_h[0]], log_h, [log_h[-1]]])
        cep = self.codec.cepstrum(xp, fp)

        inter_freqs = (np.arange(1, n_harm + 1) - 0.5) * f0
        cap = np.zeros(CAP_DIM)
        for b, (lo, hi) in enumerate(CAP_BANDS):
            hp = np.sum(amps[(freqs >= lo) & (freqs < hi)] ** 2)
            npow = np.sum(inter[(inter_freqs >= lo) & (inter_freqs < hi)] ** 2)
            total = hp + npow
            frac = min(1.0, 2.0 * npow / total) if total > 0 else 1.0
            cap[b] = np.clip(10.0 * np.log10(max(frac, 1e-6)), CAP_DB_FLOOR, 0.0)
        return cep, cap

    def _unvoiced_frame(self, x, center):
        seg = _slice_padded(x, center - UNVOICED_WINDOW // 2, UNVOICED_WINDOW)
        spectrum = rfft(seg * self._uv_window, UNVOICED_FFT)
        power = box_smooth(np.abs(spectrum) ** 2, SMOOTH_HALF_BINS)
        amp = 2.0 * np.sqrt(power) / self._uv_window.sum()
        floor = max(amp.max() * AMP_RANGE, AMP_FLOOR)
        return self.codec.cepstrum(self._uv_freqs, np.log(np.maximum(amp, floor)))

    # ----- synthesis ------------------------------------------------------

    def synthesize(self, feat, fs):
        if fs != FS:
            raise ConfigError(f"unsupported fs {fs}; this backend runs at {FS} Hz")
        feat.validate()
        n = feat.n_frames
        length = n * HOP
        pad = SYN_FFT  # room for the acausal half of the zero-phase envelope IR
        buf_len = pad + length + 2 * SYN_FFT

        frame_pos = np.arange(length) / HOP
        lf0 = feat.lf0.astype(np.float64)
        f0_samp = np.exp(np.interp(frame_pos, np.arange(n), lf0))
        f0_samp = np.clip(f0_samp, 20.0, NYQUIST * 0.9)
        uv_samp = feat.uv[np.clip(np.round(frame_pos).astype(int), 0, n - 1)] > 0.5

        # pulse excitation: unit harmonic amplitude needs impulse height T0/2
        pulses = np.zeros(buf_len)
        run_starts = np.flatnonzero(np.diff(np.concatenate([[0], uv_samp.view(np.int8)])) == 1)
        run_ends = np.flatnonzero(np.diff(np.concatenate([uv_samp.view(np.int8), [0]])) == -1)
        for s, e in zip(run_starts, run_ends):
            f0_run = f0_samp[s : e + 1]
            phase = np.cumsum(f0_run / FS) + 0.5
            hits = np.flatnonzero(np.diff(np.floor(np.concatenate([[0.0], phase]))) >= 1)
            pulses[pad + s + hits] = FS / (2.0 * f0_run[hits])

        rng = np.random.Generator(np.random.PCG64(_SYN_SEED))
        noise = rng.standard_normal(buf_len)
        sigma = np.where(
            uv_samp, 0.5 * np.sqrt(FS / f0_samp), self._uv_noise_sigma
        )
        noise[pad : pad + length] *= sigma
        noise[:pad] = 0.0
        noise[pad + length :] = 0.0

        win = self._syn_window
        out = np.zeros(buf_len)
        cola = np.zeros(buf_len)
        mcep = feat.mcep.astype(np.float64)
        cap_lin = np.power(10.0, feat.cap.astype(np.float64) / 10.0)
        half = SYN_FFT // 2
        for t in range(n):
            s = pad + t * HOP - SYN_WINDOW // 2
            seg_p = rfft(pulses[s : s + SYN_WINDOW] * win, SYN_FFT)
            seg_n = rfft(noise[s : s + SYN_WINDOW] * win, SYN_FFT)
            env = np.exp(self.codec.log_env_at(mcep[t], self._syn_sampler))
            a = cap_lin[t][self._syn_band_of_bin]
            spectrum = (seg_p * np.sqrt(1.0 - a) + seg_n * np.sqrt(a)) * env
            # the zero-phase envelope IR is acausal; center it when placing
            y = np.roll(irfft(spectrum, SYN_FFT), half)
            out[s - half : s + half] += y
            cola[s : s + SYN_WINDOW] += win
        out /= np.maximum(cola, 0.5)
        return out[pad : pad + length]


DEFAULT_BACKEND = SourceFilterBackend()


def analyze(waveform, fs, utt_id=""):
    """Extract UtteranceFeatures with the default backend."""
    return DEFAULT_BACKEND.analyze(waveform, fs, utt_id=utt_id)


def synthesize(feat, fs):
    """Render a waveform from UtteranceFeatures with the default backend."""
    return DEFAULT_BACKEND.synthesize(feat, fs)
