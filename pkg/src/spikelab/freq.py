"""
This file contains frequency-domain tools:
  + transfer functions of LIF (first order IIR low-pass) and IF (pole at z=1) membranes
  + one-sided spectra of time signals and centered 2-D spectra of feature maps
  + the three-sine experiment, comparing spectra after ReLU and LIF activations
"""
import csv
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import DegenerateEstimateError, ShapeError, UnboundedResponseError
from .neuron import NeuronParams, run_sequence
from .numcore import Tensor, no_grad
from .types import TArrayLike
from .utils import format_float, make_rng

__all__ = ['TransferFunction', 'Spectrum', 'Spectrum2D', 'ExperimentResult', 'lif_transfer', 'if_transfer',
           'layered_transfer', 'magnitude_response', 'magnitude_grid', 'local_gain', 'dft', 'spectrum2d',
           'high_freq_mask', 'relative_log_amplitude', 'hf_energy_ratio', 'three_sine_experiment',
           'compare_chains', 'write_magnitude_csv', 'write_spectrum_csv', 'read_spectrum_csv',
           'write_relative_csv', 'read_relative_csv', 'write_spectrum2d', 'read_spectrum2d']

logger = logging.getLogger('spikelab')

LOG_FLOOR = 1e-12
DEFAULT_MASK_THRESHOLD = 0.55
THREE_SINE_FREQS = (100.0, 200.0, 300.0)
DEFAULT_FIR_TAPS = 16
# Burst regime: the neuron follows the positive lobe of the 100 Hz envelope
DEFAULT_EXPERIMENT_PARAMS = NeuronParams(beta=0.25, v_th=0.025)


class TransferFunction(object):
    """
    H(z) = prod(gains) * (gain / (1 - pole * z^-1)) ^ depth
    """
    __slots__ = ['gain', 'pole', 'depth', 'gains']

    def __init__(self, gain, pole, depth=1, gains=None):
        # type: (float, float, int, Optional[Sequence[float]]) -> None
        if not 0 <= pole <= 1:
            raise ValueError("pole must be in range [0, 1], got %r" % pole)
        if type(depth) is not int or depth < 1:
            raise ValueError("depth must be positive integer")
        gains = tuple(float(g) for g in (gains if gains is not None else [1.0] * depth))
        if len(gains) != depth:
            raise ValueError("gains length %d doesn't match depth %d" % (len(gains), depth))

        self.gain = float(gain)
        self.pole = float(pole)
        self.depth = depth
        self.gains = gains

    @property
    def is_unbounded_at_dc(self):  # type: () -> bool
        return self.pole == 1.0

    def coefficients(self):  # type: () -> Tuple[np.ndarray, np.ndarray]
        """
        :return: Numerator and denominator polynomial coefficients in z^-1, as scipy.signal expects them
        """
        denominator = np.array([1.0])
        for _ in range(self.depth):
            denominator = np.convolve(denominator, [1.0, -self.pole])
        numerator = np.array([float(np.prod(self.gains)) * self.gain ** self.depth])
        return numerator, denominator

    def apply(self, signal):  # type: (TArrayLike) -> np.ndarray
        """
        Filters a signal in time domain with zero initial state, one first order section per layer
        """
        output = np.asarray(signal, dtype=np.float64)
        for layer_gain in self.gains:
            state = 0.0
            filtered = np.empty_like(output)
            for n, sample in enumerate(output):
                state = self.pole * state + self.gain * sample
                filtered[n] = state
            output = filtered * layer_gain
        return output

    def __repr__(self):
        return '<TransferFunction gain=%r pole=%r depth=%d gains=%r>' % (self.gain, self.pole, self.depth, self.gains)


def lif_transfer(beta):  # type: (float) -> TransferFunction
    if not 0 <= beta < 1:
        raise ValueError("beta must be in range [0, 1), got %r" % beta)
    return TransferFunction(1.0 - beta, beta)


def if_transfer():  # type: () -> TransferFunction
    return TransferFunction(1.0, 1.0)


def layered_transfer(base, L, gains):  # type: (TransferFunction, int, Sequence[float]) -> TransferFunction
    """
    Composes L identical membrane filters, each followed by a scalar gain (spike coding slope times weight)
    """
    if type(L) is not int or L < 1:
        raise ValueError("L must be positive integer")
    if len(gains) != L:
        raise ValueError("gains length %d doesn't match L = %d" % (len(gains), L))
    return TransferFunction(base.gain, base.pole, depth=L, gains=gains)


def magnitude_response(tf, omega):  # type: (TransferFunction, Union[float, np.ndarray]) -> Union[float, np.ndarray]
    """
    |H(e^{j omega})|
    :param tf: TransferFunction
    :param omega: Normalized angular frequency (or an array of them) in [0, pi]
    :return: Non negative magnitude of the same shape as omega
    :raises UnboundedResponseError: For a pole at z=1, evaluated at omega=0
    """
    omegas = np.asarray(omega, dtype=np.float64)
    if np.any(omegas < 0) or np.any(omegas > np.pi):
        raise ValueError("omega must be in range [0, pi]")
    if tf.is_unbounded_at_dc and np.any(omegas == 0):
        raise UnboundedResponseError("Transfer function with pole at z=1 is unbounded at omega=0")

    factor = tf.gain / np.abs(1.0 - tf.pole * np.exp(-1j * omegas))
    result = abs(float(np.prod(tf.gains))) * factor ** tf.depth
    return float(result) if result.ndim == 0 else result


def magnitude_grid(tf, n=256):  # type: (TransferFunction, int) -> Tuple[np.ndarray, np.ndarray]
    """
    Samples magnitude response at omega_i = pi * i / (n - 1). The omega=0 point is skipped for IF filters.
    :return: A tuple (omegas, magnitudes)
    """
    if type(n) is not int or n < 2:
        raise ValueError("n must be an integer >= 2")
    omegas = np.pi * np.arange(n) / (n - 1)
    if tf.is_unbounded_at_dc:
        omegas = omegas[1:]
    return omegas, magnitude_response(tf, omegas)


def local_gain(params, input_mean, input_std, n_samples, T, delta, seed=0):
    # type: (NeuronParams, float, float, int, int, float, int) -> float
    """
    Empirical spike coding slope k = d(fr)/dV: central difference of the firing rate,
    with the baseline current shifted by +-delta. Both sides share the same noise draw.
    :param params: NeuronParams
    :param input_mean: Baseline input current
    :param input_std: Standard deviation of gaussian input noise
    :param n_samples: Number of independent neurons simulated (>= 100)
    :param T: Number of timesteps
    :param delta: Baseline shift
    :param seed: Noise generator seed
    :return: Float estimate of k
    :raises DegenerateEstimateError: If the neuron is silent at -delta and saturated at +delta
    """
    if type(n_samples) is not int or n_samples < 100:
        raise ValueError("n_samples must be an integer >= 100")
    if type(T) is not int or T < 1:
        raise ValueError("T must be positive integer")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if input_std < 0:
        raise ValueError("input_std must be non negative")

    noise = make_rng(seed).standard_normal((T, n_samples)) * input_std
    rates = []
    with no_grad():
        for shift in (-delta, delta):
            spikes, _ = run_sequence(params, Tensor(noise + (input_mean + shift)))
            rates.append(float(spikes.data.mean()))

    fr_minus, fr_plus = rates
    logger.debug('local_gain: fr(-delta) = %r, fr(+delta) = %r' % (fr_minus, fr_plus))
    if fr_minus == 0.0 and fr_plus == 1.0:
        raise DegenerateEstimateError("delta %r spans the whole firing transition, use smaller delta" % delta)
    return (fr_plus - fr_minus) / (2 * delta)


class Spectrum(object):
    """
    One-sided amplitude spectrum. A sine of amplitude A at a bin frequency shows amplitude A.
    """
    __slots__ = ['freqs', 'amps', 'sample_rate', 'n_samples']

    def __init__(self, freqs, amps, sample_rate, n_samples=None):
        # type: (TArrayLike, TArrayLike, float, Optional[int]) -> None
        freqs = np.asarray(freqs, dtype=np.float64)
        amps = np.asarray(amps, dtype=np.float64)
        if freqs.shape != amps.shape or freqs.ndim != 1:
            raise ShapeError("freqs and amps must be 1-D arrays of equal length")
        if np.any(amps < 0):
            raise ValueError("amplitudes must be non negative")
        self.freqs = freqs
        self.amps = amps
        self.sample_rate = float(sample_rate)
        self.n_samples = n_samples

    def __len__(self):
        return len(self.freqs)

    def amplitude_at(self, freq):  # type: (float) -> float
        return float(self.amps[int(np.argmin(np.abs(self.freqs - freq)))])

    def energy(self):  # type: () -> float
        """
        Signal energy sum(x^2), restored from amplitudes (Parseval)
        """
        if self.n_samples is None:
            raise ValueError("Spectrum doesn't know its signal length")
        weights = np.full(len(self.amps), 0.5)
        weights[0] = 1.0
        if self.n_samples % 2 == 0:
            weights[-1] = 1.0
        return float(self.n_samples * np.sum(weights * self.amps ** 2))


class Spectrum2D(object):
    """
    Channel-averaged 2-D amplitude spectrum with DC at the center (numpy fftshift convention)
    """
    __slots__ = ['amps']

    def __init__(self, amps):  # type: (TArrayLike) -> None
        amps = np.asarray(amps, dtype=np.float64)
        if amps.ndim != 2:
            raise ShapeError("Spectrum2D amplitudes must be a 2-D grid, got shape %s" % (amps.shape,))
        if np.any(amps < 0):
            raise ValueError("amplitudes must be non negative")
        self.amps = amps

    @property
    def height(self):  # type: () -> int
        return self.amps.shape[0]

    @property
    def width(self):  # type: () -> int
        return self.amps.shape[1]

    @property
    def center(self):  # type: () -> Tuple[int, int]
        return self.height // 2, self.width // 2

    @property
    def dc(self):  # type: () -> float
        return float(self.amps[self.center])

    def radii(self):  # type: () -> np.ndarray
        """
        Radial frequency of every bin, normalized so that the Nyquist diagonal is 1
        """
        fy = (np.arange(self.height) - self.height // 2) / float(self.height)
        fx = (np.arange(self.width) - self.width // 2) / float(self.width)
        return np.hypot(fy[:, None], fx[None, :]) / (0.5 * np.sqrt(2.0))


def dft(signal, sample_rate):  # type: (TArrayLike, float) -> Spectrum
    x = np.asarray(signal, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("Can't compute spectrum of an empty signal")
    if x.size < 2:
        raise ValueError("Signal must have at least 2 samples")
    if not sample_rate > 0:
        raise ValueError("sample_rate must be positive")

    n = x.size
    amps = np.abs(np.fft.rfft(x)) / n
    amps[1:] *= 2.0
    if n % 2 == 0:
        amps[-1] /= 2.0
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    return Spectrum(freqs, amps, sample_rate, n_samples=n)


def spectrum2d(feature):  # type: (Union[Tensor, TArrayLike]) -> Spectrum2D
    """
    :param feature: Feature map [C, H, W] (or a single [H, W] map)
    :return: Spectrum2D of |FFT2| / (H * W) averaged over channels
    """
    data = feature.data if isinstance(feature, Tensor) else np.asarray(feature, dtype=np.float64)
    if data.ndim == 2:
        data = data[None]
    if data.ndim != 3:
        raise ShapeError("feature must have shape [C, H, W], got %s" % (data.shape,))
    height, width = data.shape[1:]
    if height < 2 or width < 2:
        raise ShapeError("feature height and width must be >= 2, got %dx%d" % (height, width))

    amps = np.abs(np.fft.fft2(data, axes=(1, 2))) / (height * width)
    return Spectrum2D(np.fft.fftshift(amps.mean(axis=0)))


def high_freq_mask(s, threshold_frac=DEFAULT_MASK_THRESHOLD):  # type: (Spectrum2D, float) -> np.ndarray
    if not 0 < threshold_frac < 1:
        raise ValueError("threshold_frac must be in range (0, 1)")
    mask = s.amps > threshold_frac * s.amps.max()
    mask[s.center] = False
    return mask


def relative_log_amplitude(s, n_bins=None):  # type: (Spectrum2D, Optional[int]) -> List[Tuple[float, float]]
    """
    Radially binned mean log amplitude minus DC log amplitude.
    Bin 0 holds the DC bin only, other bins are ceil(r * n_bins) for normalized radius r. Empty bins are omitted.
    :param s: Spectrum2D
    :param n_bins: Number of non-DC radial bins, max(H, W) // 2 by default
    :return: A list of (normalized radius of bin upper edge, delta log amplitude)
    """
    if s.dc <= 0:
        raise DegenerateEstimateError("Relative log amplitude is undefined for zero DC amplitude")
    n_bins = n_bins if n_bins is not None else max(s.height, s.width) // 2
    if type(n_bins) is not int or n_bins < 1:
        raise ValueError("n_bins must be positive integer")

    bins = np.ceil(s.radii() * n_bins).astype(np.int64)
    bins[s.center] = 0
    bins = np.clip(bins, 0, n_bins)
    log_amps = np.log(np.maximum(s.amps, LOG_FLOOR))
    log_dc = np.log(s.dc)

    curve = []
    for index in range(n_bins + 1):
        members = bins == index
        if members.any():
            curve.append((index / float(n_bins), float(log_amps[members].mean() - log_dc)))
    return curve


def hf_energy_ratio(s, cutoff):  # type: (Spectrum, float) -> float
    """
    Sum of squared amplitudes above cutoff divided by the sum at or below it (DC included)
    """
    if not s.freqs[0] <= cutoff <= s.freqs[-1]:
        raise ValueError("cutoff %r is out of spectrum range [%r, %r]" % (cutoff, s.freqs[0], s.freqs[-1]))
    power = s.amps ** 2
    high = float(power[s.freqs > cutoff].sum())
    low = float(power[s.freqs <= cutoff].sum())
    if low == 0:
        raise DegenerateEstimateError("Spectrum has no energy at or below cutoff %r" % cutoff)
    return high / low


class ExperimentResult(object):
    """
    Time traces and spectra of the input, activated and weighted signals of one activation chain
    """
    __slots__ = ['chain', 'time', 'signal', 'activated', 'weighted', 'weights', 'spectra']

    STAGES = ('input', 'activated', 'weighted')

    def __init__(self, chain, time, signal, activated, weighted, weights, sample_rate):
        # type: (str, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, float) -> None
        self.chain = chain
        self.time = time
        self.signal = signal
        self.activated = activated
        self.weighted = weighted
        self.weights = weights
        self.spectra = {
            'input': dft(signal, sample_rate),
            'activated': dft(activated, sample_rate),
            'weighted': dft(weighted, sample_rate),
        }  # type: Dict[str, Spectrum]

    def hf_ratio(self, stage='weighted', cutoff=150.0):  # type: (str, float) -> float
        if stage not in self.spectra:
            raise ValueError("Stage with name '%s' doesn't exist" % stage)
        return hf_energy_ratio(self.spectra[stage], cutoff)


def _activate(chain, signal):
    # type: (Union[str, NeuronParams], np.ndarray) -> Tuple[str, np.ndarray]
    if isinstance(chain, NeuronParams):
        params = chain
    elif isinstance(chain, str) and chain.lower() == 'relu':
        return 'relu', np.maximum(signal, 0.0)
    elif isinstance(chain, str) and chain.lower() == 'lif':
        params = DEFAULT_EXPERIMENT_PARAMS
    else:
        raise ValueError("Activation with name '%s' doesn't exist" % chain)

    # One neuron timestep per sample, I[n] = x(n / sample_rate)
    with no_grad():
        spikes, _ = run_sequence(params, Tensor(signal))
    return params.kind, spikes.data


def three_sine_experiment(chain, weights_seed, sample_rate=1000.0, duration=1.0, taps=DEFAULT_FIR_TAPS):
    # type: (Union[str, NeuronParams], int, float, float, int) -> ExperimentResult
    """
    x(t) = (sin(2 pi 100 t) + sin(2 pi 200 t) + sin(2 pi 300 t)) / 3 goes through an activation
    and then through a random causal FIR filter with standard normal taps.
    :param chain: 'relu', 'lif' or NeuronParams of the spiking neuron
    :param weights_seed: Seed of the FIR taps generator
    :param sample_rate: Sample rate, Hz
    :param duration: Signal duration, seconds
    :param taps: FIR length
    :return: ExperimentResult
    """
    n_samples = int(round(sample_rate * duration))
    if n_samples < 1000:
        raise ValueError("Experiment needs at least 1000 samples, got %d" % n_samples)
    if type(taps) is not int or taps < 1:
        raise ValueError("taps must be positive integer")

    time = np.arange(n_samples) / float(sample_rate)
    signal = sum(np.sin(2 * np.pi * f * time) for f in THREE_SINE_FREQS) / 3.0
    name, activated = _activate(chain, signal)

    weights = make_rng(weights_seed).standard_normal(taps)
    weighted = np.convolve(activated, weights)[:n_samples]
    result = ExperimentResult(name, time, signal, activated, weighted, weights, sample_rate)
    logger.debug('three_sine_experiment(%s, seed=%d): weighted hf ratio %r'
                 % (name, weights_seed, result.hf_ratio()))
    return result


def compare_chains(seeds, cutoff=150.0, params=None, sample_rate=1000.0, duration=1.0):
    # type: (Iterable[int], float, Optional[NeuronParams], float, float) -> List[Dict[str, float]]
    """
    Runs LIF and ReLU chains with the same FIR weights for every seed
    :return: A list of dicts with keys seed, lif, relu (weighted hf energy ratios)
    """
    params = params if params is not None else DEFAULT_EXPERIMENT_PARAMS
    rows = []
    for seed in seeds:
        lif = three_sine_experiment(params, seed, sample_rate=sample_rate, duration=duration)
        relu = three_sine_experiment('relu', seed, sample_rate=sample_rate, duration=duration)
        rows.append({'seed': seed, 'lif': lif.hf_ratio(cutoff=cutoff), 'relu': relu.hf_ratio(cutoff=cutoff)})
    return rows


# Serialization

def write_magnitude_csv(omegas, magnitudes, path):  # type: (np.ndarray, np.ndarray, str) -> None
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['omega', 'magnitude'])
        for omega, magnitude in zip(omegas, magnitudes):
            writer.writerow([format_float(omega), format_float(magnitude)])


def write_spectrum_csv(spectrum, path):  # type: (Spectrum, str) -> None
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['freq', 'amplitude'])
        for freq, amp in zip(spectrum.freqs, spectrum.amps):
            writer.writerow([format_float(freq), format_float(amp)])


def _read_columns(path, header):  # type: (str, Sequence[str]) -> np.ndarray
    with open(path, 'r', newline='') as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != list(header):
        raise ValueError("'%s' must start with header %s" % (path, ','.join(header)))
    try:
        return np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=np.float64).reshape(-1, len(header))
    except ValueError:
        raise ValueError("'%s' contains non numeric values" % path)


def read_spectrum_csv(path, sample_rate=None):  # type: (str, Optional[float]) -> Spectrum
    data = _read_columns(path, ('freq', 'amplitude'))
    if sample_rate is None:
        # Last bin is Nyquist or just below it
        sample_rate = 2.0 * float(data[-1, 0]) if len(data) else 1.0
    return Spectrum(data[:, 0], data[:, 1], sample_rate)


def write_relative_csv(curve, path):  # type: (Iterable[Tuple[float, float]], str) -> None
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['radius', 'delta_log_amp'])
        for radius, value in curve:
            writer.writerow([format_float(radius), format_float(value)])


def read_relative_csv(path):  # type: (str) -> List[Tuple[float, float]]
    return [(float(r), float(v)) for r, v in _read_columns(path, ('radius', 'delta_log_amp'))]


def write_spectrum2d(s, path):  # type: (Spectrum2D, str) -> None
    with open(path, 'w') as f:
        f.write('# shape %d %d\n' % (s.height, s.width))
        for row in s.amps:
            f.write(' '.join(format_float(v) for v in row) + '\n')


def read_spectrum2d(path):  # type: (str) -> Spectrum2D
    with open(path, 'r') as f:
        lines = [line.strip() for line in f if line.strip()]
    if not lines or not lines[0].startswith('# shape'):
        raise ValueError("'%s' must start with '# shape H W' line" % path)
    try:
        height, width = (int(v) for v in lines[0].split()[2:4])
    except ValueError:
        raise ValueError("'%s' has malformed shape line '%s'" % (path, lines[0]))
    amps = np.array([[float(v) for v in line.split()] for line in lines[1:]], dtype=np.float64)
    if amps.shape != (height, width):
        raise ShapeError("'%s' declares shape %dx%d, but contains %s" % (path, height, width, amps.shape))
    return Spectrum2D(amps)
