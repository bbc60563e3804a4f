"""Single-frequency spectral estimation and calibrated white-noise injection.

The estimator is a single-bin discrete Fourier quadrature over a window
trimmed to a whole number of periods (no taper needed), normalized so a pure
sinusoid A sin(2 pi f t) measures magnitude A.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Spectrum:
    """Complex amplitude of one frequency component, in signal units."""

    frequency: float
    complex_amplitude: complex
    magnitude: float


def amplitude_at(series, dt: float, f: float) -> Spectrum:
    """Single-bin Fourier amplitude of ``series`` at frequency ``f``.

    The window is the trailing stretch of the series covering the largest
    whole number of periods of f.  Errors out if less than one full period
    is available or f is not resolvable at the sample rate.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if dt <= 0 or f <= 0:
        raise ValueError("dt and f must be positive")
    if f >= 0.5 / dt:
        raise ValueError(f"frequency {f} is at or above Nyquist for dt={dt}")
    duration = x.size * dt
    periods = int(math.floor(duration * f + 1e-9))
    if periods < 1:
        raise ValueError("window shorter than one period of the requested frequency")
    m = int(round(periods / (f * dt)))
    m = min(m, x.size)
    window = x[x.size - m:]
    t = np.arange(m) * dt
    c = (2.0 / m) * np.dot(window, np.exp(-2j * math.pi * f * t))
    return Spectrum(frequency=f, complex_amplitude=complex(c), magnitude=abs(c))


def full_spectrum(series, dt: float):
    """One-sided amplitude spectrum via FFT: (frequencies, magnitudes).

    Uses the same 'pure sinusoid measures its amplitude' normalization as
    amplitude_at; intended for plot exports, not for gain computation.
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if n < 2:
        raise ValueError("series too short")
    mags = np.abs(np.fft.rfft(x)) * 2.0 / n
    mags[0] /= 2.0
    if n % 2 == 0:
        mags[-1] /= 2.0
    freqs = np.fft.rfftfreq(n, dt)
    return freqs, mags


def add_awgn(series, snr_db: float, rng: np.random.Generator):
    """Additive white Gaussian noise at a prescribed signal-to-noise ratio.

    Noise variance is signal_power / 10^(snr_db / 10) with signal power the
    mean square of the series.  An infinite SNR is the no-noise sentinel.
    Deterministic for a fixed generator state.
    """
    x = np.asarray(series, dtype=np.float64)
    if math.isinf(snr_db) and snr_db > 0:
        return x.copy()
    power = float(np.mean(x ** 2))
    if power == 0.0:
        raise ValueError("cannot set a finite SNR on a zero-power signal")
    noise_std = math.sqrt(power / 10.0 ** (snr_db / 10.0))
    return x + rng.normal(0.0, noise_std, size=x.shape)


def measured_snr(clean, noisy) -> float:
    """Realized SNR in dB between a clean series and its noisy version."""
    c = np.asarray(clean, dtype=np.float64)
    n = np.asarray(noisy, dtype=np.float64)
    if c.shape != n.shape:
        raise ValueError("series lengths differ")
    p_clean = float(np.mean(c ** 2))
    p_diff = float(np.mean((n - c) ** 2))
    if p_diff == 0.0:
        return math.inf
    return 10.0 * math.log10(p_clean / p_diff)
