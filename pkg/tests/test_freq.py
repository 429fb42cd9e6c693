import os
import tempfile
from unittest import TestCase

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.signal import freqz, lfilter

from spikelab.exceptions import DegenerateEstimateError, ShapeError, UnboundedResponseError
from spikelab.freq import Spectrum2D, TransferFunction, compare_chains, dft, hf_energy_ratio, high_freq_mask, \
    if_transfer, layered_transfer, lif_transfer, local_gain, magnitude_grid, magnitude_response, read_relative_csv, \
    read_spectrum2d, read_spectrum_csv, relative_log_amplitude, spectrum2d, three_sine_experiment, \
    write_relative_csv, write_spectrum2d, write_spectrum_csv
from spikelab.neuron import NeuronParams

BETAS = [round(0.1 * i, 1) for i in range(10)]


def sine(freq, sample_rate=1000.0, duration=1.0, amplitude=1.0):
    t = np.arange(int(sample_rate * duration)) / sample_rate
    return amplitude * np.sin(2 * np.pi * freq * t)


class TransferFunctionTest(TestCase):
    def test_lif_coefficients(self):
        tf = lif_transfer(0)
        self.assertEqual((1.0, 0.0), (tf.gain, tf.pole))
        tf = lif_transfer(0.25)
        self.assertEqual((0.75, 0.25), (tf.gain, tf.pole))

    def test_invalid(self):
        with self.assertRaises(ValueError):
            lif_transfer(1.0)
        with self.assertRaises(ValueError):
            lif_transfer(-0.5)
        with self.assertRaises(ValueError):
            TransferFunction(1.0, 1.5)
        with self.assertRaises(ValueError):
            TransferFunction(1.0, 0.5, depth=0)
        with self.assertRaises(ValueError):
            layered_transfer(lif_transfer(0.5), 2, [1.0])

    def test_strong_low_pass(self):
        self.assertAlmostEqual(0.01 / 1.99, magnitude_response(lif_transfer(0.99), np.pi), delta=1e-12)

    def test_dc_and_nyquist(self):
        for beta in BETAS:
            with self.subTest(beta=beta):
                tf = lif_transfer(beta)
                self.assertAlmostEqual(1.0, magnitude_response(tf, 0.0), delta=1e-12)
                self.assertAlmostEqual((1 - beta) / (1 + beta), magnitude_response(tf, np.pi), delta=1e-12)
        self.assertAlmostEqual(0.6, magnitude_response(lif_transfer(0.25), np.pi), delta=1e-12)

    def test_monotone_low_pass(self):
        for beta in BETAS:
            for depth in (1, 2, 4):
                with self.subTest(beta=beta, depth=depth):
                    tf = layered_transfer(lif_transfer(beta), depth, [1.0] * depth)
                    _, magnitudes = magnitude_grid(tf, 256)
                    steps = np.diff(magnitudes)
                    self.assertTrue(np.all(steps <= 0))
                    if beta > 0:
                        self.assertTrue(np.all(steps < 0))

    def test_depth_sharpening(self):
        omegas = np.linspace(0.01, np.pi, 50)
        for beta in BETAS[1:]:
            for depth in (1, 2, 3):
                shallow = magnitude_response(layered_transfer(lif_transfer(beta), depth, [1.0] * depth), omegas)
                deep = magnitude_response(layered_transfer(lif_transfer(beta), depth + 1, [1.0] * (depth + 1)), omegas)
                self.assertTrue(np.all(deep < shallow))

    def test_layered(self):
        base = lif_transfer(0.25)
        omegas = np.linspace(0, np.pi, 32)
        np.testing.assert_allclose(magnitude_response(base, omegas),
                                   magnitude_response(layered_transfer(base, 1, [1.0]), omegas))
        np.testing.assert_allclose(6 * magnitude_response(base, omegas) ** 2,
                                   magnitude_response(layered_transfer(base, 2, [2.0, 3.0]), omegas), rtol=1e-12)
        self.assertAlmostEqual(0.216, magnitude_response(layered_transfer(base, 3, [1.0] * 3), np.pi), delta=1e-12)
        self.assertAlmostEqual((1.0 / 3) ** 5,
                               magnitude_response(layered_transfer(lif_transfer(0.5), 5, [1.0] * 5), np.pi),
                               delta=1e-15)

    def test_dc_equals_gain_product(self):
        tf = layered_transfer(lif_transfer(0.7), 3, [0.5, -2.0, 1.5])
        self.assertAlmostEqual(1.5, magnitude_response(tf, 0.0), delta=1e-12)

    def test_if_pole(self):
        tf = if_transfer()
        self.assertAlmostEqual(0.5, magnitude_response(tf, np.pi), delta=1e-12)
        self.assertAlmostEqual(1 / np.sqrt(2), magnitude_response(tf, np.pi / 2), delta=1e-12)
        self.assertGreater(magnitude_response(tf, 1e-7), 1e6)
        with self.assertRaises(UnboundedResponseError):
            magnitude_response(tf, 0.0)

        omegas, magnitudes = magnitude_grid(tf, 16)
        self.assertEqual(15, len(omegas))
        self.assertGreater(omegas[0], 0)
        self.assertTrue(np.all(np.isfinite(magnitudes)))

    def test_omega_range(self):
        with self.assertRaises(ValueError):
            magnitude_response(lif_transfer(0.5), -0.1)
        with self.assertRaises(ValueError):
            magnitude_response(lif_transfer(0.5), 4.0)

    def test_matches_freqz(self):
        omegas = np.linspace(0, np.pi, 64)
        for beta in (0.0, 0.25, 0.6, 0.9):
            for depth, gains in ((1, [1.0]), (2, [2.0, 0.5]), (4, [1.0, 1.0, 3.0, 1.0])):
                tf = layered_transfer(lif_transfer(beta), depth, gains)
                b, a = tf.coefficients()
                _, response = freqz(b, a, worN=omegas)
                np.testing.assert_allclose(np.abs(response), magnitude_response(tf, omegas), rtol=1e-10, atol=1e-14)

    def test_apply_matches_lfilter(self):
        signal = np.random.default_rng(0).standard_normal(200)
        for beta in (0.0, 0.25, 0.9):
            tf = layered_transfer(lif_transfer(beta), 3, [1.0, 2.0, 0.5])
            b, a = tf.coefficients()
            np.testing.assert_allclose(lfilter(b, a, signal), tf.apply(signal), rtol=1e-9, atol=1e-12)


class LocalGainTest(TestCase):
    def test_dead_and_saturated(self):
        params = NeuronParams(beta=0.25, v_th=1.0)
        self.assertEqual(0.0, local_gain(params, -10.0, 0.1, 100, 20, 0.1))
        self.assertEqual(0.0, local_gain(params, 10.0, 0.1, 100, 20, 0.1))

    def test_if_rate_slope(self):
        k = local_gain(NeuronParams(kind='if', v_th=1.0), 0.5, 0.0, 100, 100, 0.2)
        self.assertAlmostEqual(1.0, k, delta=0.1)

    def test_degenerate(self):
        with self.assertRaises(DegenerateEstimateError):
            local_gain(NeuronParams(beta=0.0, v_th=1.0), 1.0, 0.0, 100, 10, 0.5)

    def test_invalid(self):
        params = NeuronParams()
        with self.assertRaises(ValueError):
            local_gain(params, 0.5, 0.1, 50, 10, 0.1)
        with self.assertRaises(ValueError):
            local_gain(params, 0.5, 0.1, 100, 10, 0.0)

    def test_deterministic(self):
        params = NeuronParams(beta=0.25, v_th=0.5)
        self.assertEqual(local_gain(params, 0.5, 0.3, 200, 16, 0.05, seed=3),
                         local_gain(params, 0.5, 0.3, 200, 16, 0.05, seed=3))


class DftTest(TestCase):
    def test_constant(self):
        spectrum = dft(np.full(64, 2.5), 64.0)
        self.assertAlmostEqual(2.5, spectrum.amps[0], delta=1e-12)
        self.assertTrue(np.all(spectrum.amps[1:] <= 1e-10))

    def test_bin_aligned_sine(self):
        spectrum = dft(sine(100), 1000.0)
        self.assertEqual(501, len(spectrum))
        self.assertAlmostEqual(1.0, spectrum.amplitude_at(100), delta=1e-6)
        self.assertAlmostEqual(0.0, spectrum.amplitude_at(250), delta=1e-10)

    def test_three_sines(self):
        signal = (sine(100) + sine(200) + sine(300)) / 3
        spectrum = dft(signal, 1000.0)
        for freq in (100, 200, 300):
            self.assertAlmostEqual(1.0 / 3, spectrum.amplitude_at(freq), delta=1e-9)

    def test_empty(self):
        with self.assertRaises(ValueError):
            dft([], 1000.0)
        with self.assertRaises(ValueError):
            dft([1.0, 2.0], 0)

    def test_parseval(self):
        rng = np.random.default_rng(11)
        for n in (2, 3, 64, 101, 1000):
            signal = rng.standard_normal(n)
            spectrum = dft(signal, 100.0)
            self.assertAlmostEqual(1.0, spectrum.energy() / np.sum(signal ** 2), delta=1e-8)

    def test_nyquist_amplitude(self):
        spectrum = dft(np.cos(np.pi * np.arange(16)), 16.0)
        self.assertAlmostEqual(1.0, spectrum.amps[-1], delta=1e-12)


class HfEnergyRatioTest(TestCase):
    def test_low_sine(self):
        self.assertAlmostEqual(0.0, hf_energy_ratio(dft(sine(100), 1000.0), 150), delta=1e-20)

    def test_high_sine(self):
        self.assertGreater(hf_energy_ratio(dft(sine(300), 1000.0), 150), 100)

    def test_balanced(self):
        ratio = hf_energy_ratio(dft(sine(100) + sine(300), 1000.0), 150)
        self.assertAlmostEqual(1.0, ratio, delta=0.05)

    def test_errors(self):
        spectrum = dft(sine(100), 1000.0)
        with self.assertRaises(ValueError):
            hf_energy_ratio(spectrum, 600)
        with self.assertRaises(DegenerateEstimateError):
            hf_energy_ratio(dft(np.zeros(100), 1000.0), 150)


class Spectrum2DTest(TestCase):
    def test_constant_image(self):
        s = spectrum2d(np.full((3, 8, 8), 0.7))
        self.assertEqual((4, 4), s.center)
        self.assertAlmostEqual(0.7, s.dc, delta=1e-12)
        others = s.amps.copy()
        others[s.center] = 0
        self.assertTrue(np.all(others < 1e-12))
        self.assertFalse(high_freq_mask(s).any())

    def test_vertical_stripes(self):
        stripes = np.tile([1.0, -1.0], (8, 4))
        s = spectrum2d(stripes)
        self.assertAlmostEqual(1.0, s.amps[4, 0], delta=1e-12)
        self.assertAlmostEqual(1.0, s.amps.sum(), delta=1e-9)

        mask = high_freq_mask(s)
        self.assertTrue(mask[4, 0])
        self.assertEqual(1, mask.sum())

    def test_linearity(self):
        s = spectrum2d(np.tile([1.0, -1.0], (8, 4)) + 2.0)
        self.assertAlmostEqual(2.0, s.dc, delta=1e-12)
        self.assertAlmostEqual(1.0, s.amps[4, 0], delta=1e-12)

    def test_mask_threshold(self):
        amps = np.zeros((5, 5))
        amps[2, 2] = 0.8
        amps[0, 0] = 1.0
        amps[1, 3] = 0.5
        amps[4, 1] = 0.56
        mask = high_freq_mask(Spectrum2D(amps), 0.55)
        self.assertEqual({(0, 0), (4, 1)}, set(zip(*np.nonzero(mask))))

    def test_shape_errors(self):
        with self.assertRaises(ShapeError):
            spectrum2d(np.zeros((2, 2, 2, 2)))
        with self.assertRaises(ShapeError):
            spectrum2d(np.zeros((1, 1, 5)))


class RelativeLogAmplitudeTest(TestCase):
    def test_constant_image(self):
        curve = relative_log_amplitude(spectrum2d(np.ones((8, 8))))
        self.assertEqual((0.0, 0.0), curve[0])
        for _, value in curve[1:]:
            self.assertAlmostEqual(np.log(1e-12), value, delta=1e-9)

    def test_zero_dc(self):
        with self.assertRaises(DegenerateEstimateError):
            relative_log_amplitude(Spectrum2D(np.ones((4, 4)) - np.eye(4)))

    def _mean_curve(self, images):
        curves = [np.array(relative_log_amplitude(spectrum2d(image)))[:, 1] for image in images]
        return np.mean(curves, axis=0)

    def test_white_noise_is_flat(self):
        rng = np.random.default_rng(5)
        curve = self._mean_curve(rng.standard_normal((50, 32, 32)))
        self.assertLess(np.ptp(curve[1:]), 0.6)
        self.assertLess(np.abs(curve[1:]).max(), 1.0)

    def test_blur_lowers_high_frequencies(self):
        rng = np.random.default_rng(6)
        noise = rng.standard_normal((20, 32, 32)) + 1.0
        blurred = [gaussian_filter(image, sigma=1.5, mode='wrap') for image in noise]
        sharp_curve = self._mean_curve(noise)
        blurred_curve = self._mean_curve(blurred)
        half = len(sharp_curve) // 2
        self.assertTrue(np.all(blurred_curve[half:] < sharp_curve[half:]))


class ThreeSineExperimentTest(TestCase):
    def test_input_spectrum(self):
        result = three_sine_experiment('relu', 0)
        for freq in (100, 200, 300):
            self.assertAlmostEqual(1.0 / 3, result.spectra['input'].amplitude_at(freq), delta=1e-9)

    def test_relu_follows_positive_lobe(self):
        result = three_sine_experiment('relu', 0)
        positive = result.signal > 0
        np.testing.assert_array_equal(result.signal[positive], result.activated[positive])
        np.testing.assert_array_equal(0.0, result.activated[~positive])

    def test_lif_is_binary(self):
        result = three_sine_experiment('lif', 0)
        self.assertEqual('lif', result.chain)
        self.assertTrue(np.isin(result.activated, (0.0, 1.0)).all())
        self.assertEqual(16, len(result.weights))

    def test_same_weights_for_both_chains(self):
        lif, relu = three_sine_experiment('lif', 4), three_sine_experiment('relu', 4)
        np.testing.assert_array_equal(lif.weights, relu.weights)

    def test_errors(self):
        with self.assertRaises(ValueError):
            three_sine_experiment('relu', 0, sample_rate=500.0)
        with self.assertRaises(ValueError):
            three_sine_experiment('tanh', 0)
        with self.assertRaises(ValueError):
            three_sine_experiment('relu', 0).hf_ratio('output')

    def test_lif_chain_keeps_less_high_frequency(self):
        rows = compare_chains(range(20), cutoff=150.0)
        wins = sum(row['lif'] < row['relu'] for row in rows)
        self.assertGreaterEqual(wins, 18)


class SerializationTest(TestCase):
    def setUp(self):
        self._dir = tempfile.TemporaryDirectory()
        self.path = self._dir.name

    def tearDown(self):
        self._dir.cleanup()

    def test_spectrum_csv(self):
        spectrum = dft(np.random.default_rng(0).standard_normal(100), 1000.0)
        path = os.path.join(self.path, 'spectrum.csv')
        write_spectrum_csv(spectrum, path)
        restored = read_spectrum_csv(path, sample_rate=1000.0)
        np.testing.assert_array_equal(spectrum.freqs, restored.freqs)
        np.testing.assert_array_equal(spectrum.amps, restored.amps)

    def test_relative_csv(self):
        curve = relative_log_amplitude(spectrum2d(np.random.default_rng(1).uniform(0, 1, (16, 16))))
        path = os.path.join(self.path, 'relative.csv')
        write_relative_csv(curve, path)
        self.assertEqual(curve, read_relative_csv(path))

    def test_spectrum2d(self):
        s = spectrum2d(np.random.default_rng(2).uniform(0, 1, (2, 6, 10)))
        path = os.path.join(self.path, 'spectrum2d.txt')
        write_spectrum2d(s, path)
        np.testing.assert_array_equal(s.amps, read_spectrum2d(path).amps)

    def test_bad_header(self):
        path = os.path.join(self.path, 'bad.csv')
        with open(path, 'w') as f:
            f.write('a,b\n1,2\n')
        with self.assertRaises(ValueError):
            read_spectrum_csv(path)
