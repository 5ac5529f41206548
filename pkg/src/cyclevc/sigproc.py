"""Signal-processing primitives behind the acoustic analyzer.

Covers the all-pass frequency warp, a warped-cepstrum codec (log spectral
envelope <-> truncated cepstrum on the warped axis), a YIN-style per-frame
period estimator, and narrowband sinusoid probing used for harmonic
amplitude measurement.
"""

import numpy as np
from scipy.fft import dct
from scipy.signal import correlate


def hann_periodic(n):
    """Periodic Hann window of length n (COLA at hop n/4)."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def warp_frequency(omega, alpha):
    """First-order all-pass frequency warp on [0, pi].

    Monotone for |alpha| < 1, fixes 0 and pi; the inverse map is the same
    function with -alpha.
    """
    omega = np.asarray(omega, dtype=np.float64)
    return omega + 2.0 * np.arctan2(alpha * np.sin(omega), 1.0 - alpha * np.cos(omega))


class WarpedCepstrumCodec:
    """Converts between sampled log spectral envelopes and warped cepstra.

    The envelope is resampled onto a uniform grid of the warped frequency
    axis (grid_size + 1 nodes over [0, pi]); the cepstrum is the DCT-I of
    that grid truncated to `order` coefficients. Reconstruction is the exact
    cosine expansion of the truncated cepstrum, so an envelope that came from
    a cepstrum round-trips through the codec unchanged up to grid
    interpolation.
    """

    def __init__(self, fs, order=45, alpha=0.466, grid_size=512):
        self.fs = float(fs)
        self.order = int(order)
        self.alpha = float(alpha)
        self.grid_size = int(grid_size)
        m = np.arange(self.grid_size + 1, dtype=np.float64)
        self.warped_grid = np.pi * m / self.grid_size
        # linear-frequency position (Hz) of each warped grid node
        self.node_freq_hz = (
            warp_frequency(self.warped_grid, -self.alpha) * self.fs / (2.0 * np.pi)
        )
        d = np.arange(self.order, dtype=np.float64)
        recon = np.cos(np.outer(m, d) * np.pi / self.grid_size)
        recon[:, 1:] *= 2.0
        self._recon = recon

    def cepstrum(self, freqs_hz, log_env):
        """Truncated warped cepstrum of a log envelope sampled at freqs_hz (sorted)."""
        on_grid = np.interp(self.node_freq_hz, freqs_hz, log_env)
        c = dct(on_grid, type=1) / (2.0 * self.grid_size)
        return c[: self.order]

    def grid_log_env(self, cep):
        """Log envelope on the uniform warped grid for a truncated cepstrum."""
        return self._recon @ np.asarray(cep, dtype=np.float64)

    def sampler(self, freqs_hz):
        """Precompute interpolation (indices, weights) for evaluating grid
        envelopes at the given linear frequencies."""
        omega = 2.0 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / self.fs
        pos = warp_frequency(omega, self.alpha) / np.pi * self.grid_size
        pos = np.clip(pos, 0.0, float(self.grid_size))
        i0 = np.minimum(pos.astype(np.int64), self.grid_size - 1)
        frac = pos - i0
        return i0, frac

    def log_env_at(self, cep, sampler):
        """Evaluate the envelope of `cep` at frequencies prepared by sampler()."""
        grid = self.grid_log_env(cep)
        i0, frac = sampler
        return grid[i0] * (1.0 - frac) + grid[i0 + 1] * frac


def yin_period(segment, fs, fmin, fmax, integration, threshold=0.15):
    """YIN-style period estimate for one frame.

    Parameters
    ----------
    segment : array
        Samples covering integration + fs/fmin points (zero-padded if short).
    integration : int
        Integration window length W in samples.

    Returns
    -------
    f0 : float
        Estimated fundamental in Hz, 0.0 when no usable periodicity.
    dip : float
        Minimum of the cumulative-mean-normalized difference (1.0 = none);
        small values mean strong periodicity.
    """
    tau_max = int(round(fs / fmin))
    tau_min = max(2, int(round(fs / fmax)))
    need = integration + tau_max
    x = np.asarray(segment, dtype=np.float64)
    if len(x) < need:
        x = np.concatenate([x, np.zeros(need - len(x))])
    x = x[:need]

    sq = np.cumsum(np.concatenate([[0.0], x * x]))
    pow0 = sq[integration]
    if pow0 < 1e-14:
        return 0.0, 1.0
    pow_tau = sq[np.arange(tau_max + 1) + integration] - sq[np.arange(tau_max + 1)]
    c = correlate(x, x[:integration], mode="valid", method="auto")[: tau_max + 1]
    d = pow0 + pow_tau - 2.0 * c
    d = np.maximum(d, 0.0)

    # cumulative-mean normalization
    dn = np.ones_like(d)
    csum = np.cumsum(d[1:])
    nz = csum > 0
    taus = np.arange(1, tau_max + 1, dtype=np.float64)
    dn[1:][nz] = d[1:][nz] * taus[nz] / csum[nz]

    lo, hi = tau_min, tau_max
    band = dn[lo : hi + 1]
    below = np.flatnonzero(band < threshold)
    if len(below):
        tau = lo + below[0]
        while tau + 1 <= hi and dn[tau + 1] < dn[tau]:
            tau += 1
    else:
        tau = lo + int(np.argmin(band))
    dip = float(dn[tau])

    # parabolic refinement on the raw difference function
    if 1 <= tau < tau_max:
        a, b, cc = d[tau - 1], d[tau], d[tau + 1]
        denom = a - 2.0 * b + cc
        shift = 0.5 * (a - cc) / denom if abs(denom) > 1e-12 else 0.0
        shift = float(np.clip(shift, -1.0, 1.0))
    else:
        shift = 0.0
    period = tau + shift
    if period <= 0:
        return 0.0, dip
    return fs / period, dip


def probe_amplitudes(segment, window, freqs_hz, fs):
    """Cosine-component amplitudes of `segment` at the given frequencies.

    Uses windowed DFT probes normalized by the window's mainlobe gain
    (2 / sum(window)); accurate when components are separated by at least
    the window's mainlobe width.
    """
    freqs_hz = np.asarray(freqs_hz, dtype=np.float64)
    if len(freqs_hz) == 0:
        return np.zeros(0)
    wx = np.asarray(segment, dtype=np.float64) * window
    n = np.arange(len(wx), dtype=np.float64)
    phase = np.exp(np.outer(freqs_hz, n) * (-2j * np.pi / fs))
    return np.abs(phase @ wx) * (2.0 / window.sum())


def box_smooth(values, half_width):
    """Moving average with window (2*half_width + 1), edge-shrunk at borders."""
    v = np.asarray(values, dtype=np.float64)
    if half_width <= 0:
        return v.copy()
    c = np.cumsum(np.concatenate([[0.0], v]))
    idx = np.arange(len(v))
    lo = np.maximum(idx - half_width, 0)
    hi = np.minimum(idx + half_width + 1, len(v))
    return (c[hi] - c[lo]) / (hi - lo)
