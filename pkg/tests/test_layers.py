from unittest import TestCase

import numpy as np

from spikelab.exceptions import DomainError, ShapeError
from spikelab.freq import spectrum2d
from spikelab.layers import AbstractTokenMixer, BNStats, Block, Conv2d, ConvBN, EmbedBlock, LIFNode, PatchEmbed, \
    SpikeTensor, SpikingMLP, TransmissionAudit, avg_pool, bn_fold, carry_domain, dwc_token_mix, max_pool, \
    patch_embed, shortcut, smlp_block, spike_attention, ssa
from spikelab.neuron import NeuronParams
from spikelab.numcore import Tensor, conv2d
from spikelab.utils import make_rng

# Memoryless neurons make hand traces exact
THRESHOLD_PARAMS = NeuronParams(beta=0.0, v_th=0.5)


def binary(shape, seed=0, density=0.5):
    return SpikeTensor((make_rng(seed).uniform(0, 1, shape) < density).astype(np.float64))


def checkerboard(size):
    return (np.indices((size, size)).sum(axis=0) % 2).astype(np.float64)


class SpikeTensorTest(TestCase):
    def test_domains(self):
        self.assertTrue(SpikeTensor(np.ones((2, 3))).is_spike)
        self.assertEqual(2, SpikeTensor(np.full((2, 3), 2.0), 'ternary').values.max())
        self.assertFalse(SpikeTensor(np.full((2, 3), 0.3), 'membrane').is_spike)

    def test_invalid(self):
        with self.assertRaises(DomainError):
            SpikeTensor(np.full((2, 3), 2.0))
        with self.assertRaises(DomainError):
            SpikeTensor(np.full((2, 3), 0.5), 'ternary')
        with self.assertRaises(ShapeError):
            SpikeTensor(np.ones(3))
        with self.assertRaises(ValueError):
            SpikeTensor(np.ones((2, 3)), 'analog')

    def test_unchecked(self):
        s = SpikeTensor(np.full((2, 3), 0.4), check=False)
        self.assertEqual('binary', s.domain)
        self.assertFalse(s.checked)


class ModuleTest(TestCase):
    def test_parameters(self):
        conv = Conv2d(3, 8, 3, bias=True)
        self.assertEqual(8 * 3 * 9 + 8, conv.num_parameters())
        self.assertEqual(['weight', 'bias'], [name for name, _ in conv.named_parameters()])

    def test_train_eval_propagates(self):
        block = Block(4, 'dwc-3', NeuronParams(), rng=make_rng(0))
        block.eval()
        self.assertTrue(all(not module.training for _, module in block.named_modules()))
        block.train()
        self.assertTrue(all(module.training for _, module in block.named_modules()))

    def test_state_dict_round_trip(self):
        source = Block(4, 'ssa', NeuronParams(), rng=make_rng(1))
        source.mlp.core.fc1.bn.running_mean = np.arange(16, dtype=np.float64)
        target = Block(4, 'ssa', NeuronParams(), rng=make_rng(2))
        target.load_state_dict(source.state_dict())

        for (name, expected), (_, actual) in zip(source.state_dict().items(), target.state_dict().items()):
            np.testing.assert_array_equal(expected, actual, err_msg=name)
        self.assertIn('mlp.core.fc1.bn.running_mean', target.state_dict())

    def test_state_dict_mismatch(self):
        state = Block(4, 'dwc-3', NeuronParams()).state_dict()
        with self.assertRaises(ValueError):
            Block(4, 'maxpool', NeuronParams()).load_state_dict(state)

        state['mlp.core.fc1.conv.weight'] = np.zeros((1, 1, 1, 1))
        with self.assertRaises(ShapeError):
            Block(4, 'dwc-3', NeuronParams()).load_state_dict(state)


class BNFoldTest(TestCase):
    def test_identity(self):
        weight = make_rng(0).standard_normal((3, 2, 3, 3))
        folded, bias = bn_fold(weight, BNStats(np.ones(3), np.zeros(3), np.zeros(3), np.ones(3), eps=0.0))
        np.testing.assert_array_equal(weight, folded)
        np.testing.assert_array_equal(np.zeros(3), bias)

    def test_scale(self):
        weight = make_rng(0).standard_normal((3, 2, 3, 3))
        folded, _ = bn_fold(weight, BNStats(np.full(3, 2.0), np.zeros(3), np.zeros(3), np.ones(3), eps=0.0))
        np.testing.assert_array_equal(2 * weight, folded)

    def test_zero_variance(self):
        with self.assertRaises(ValueError):
            bn_fold(np.ones((2, 1, 1, 1)), BNStats(np.ones(2), np.zeros(2), np.zeros(2), np.array([1.0, 0.0])))

    def test_matches_unfolded(self):
        rng = make_rng(3)
        weight = rng.standard_normal((4, 3, 3, 3))
        conv_bias = rng.standard_normal(4)
        stats = BNStats(rng.uniform(0.5, 2, 4), rng.standard_normal(4), rng.standard_normal(4), rng.uniform(0.1, 3, 4))
        folded, folded_bias = bn_fold(weight, stats, bias=conv_bias)
        view = (1, 4, 1, 1)

        for _ in range(50):
            x = Tensor(rng.standard_normal((1, 3, 6, 6)))
            y = conv2d(x, Tensor(weight)).data + conv_bias.reshape(view)
            expected = (y - stats.mean.reshape(view)) / np.sqrt(stats.var.reshape(view) + stats.eps) \
                * stats.gamma.reshape(view) + stats.beta.reshape(view)
            actual = conv2d(x, Tensor(folded)).data + folded_bias.reshape(view)
            self.assertLess(np.abs(expected - actual).max(), 1e-10)

    def test_conv_bn_eval_matches_running_stats(self):
        layer = ConvBN(2, 3, kernel_size=3, padding=1, rng=make_rng(4))
        for seed in range(3):
            layer(binary((2, 4, 2, 5, 5), seed=seed))
        layer.eval()
        x = binary((2, 4, 2, 5, 5), seed=9)
        view = (1, 3, 1, 1)
        bn = layer.bn
        raw = conv2d(Tensor(x.values.reshape(8, 2, 5, 5)), layer.conv.weight).data
        expected = (raw - bn.running_mean.reshape(view)) / np.sqrt(bn.running_var.reshape(view) + bn.eps) \
            * bn.weight.data.reshape(view) + bn.bias.data.reshape(view)
        np.testing.assert_allclose(expected.reshape(2, 4, 3, 5, 5), layer(x).data, atol=1e-10)


class EmbedTest(TestCase):
    def test_zero_input(self):
        block = EmbedBlock('orig', 2, 4, 2, NeuronParams(), rng=make_rng(0)).eval()
        y = block(SpikeTensor(np.zeros((2, 1, 2, 8, 8)), 'membrane'))
        self.assertEqual('membrane', y.domain)
        np.testing.assert_array_equal(np.zeros((2, 1, 4, 4, 4)), y.values)

    def test_identity_trace(self):
        block = EmbedBlock('orig', 1, 1, 1, THRESHOLD_PARAMS).eval()
        kernel = np.zeros((1, 1, 3, 3))
        kernel[0, 0, 1, 1] = 1.0
        block.conv.conv.weight.data = kernel

        x = binary((3, 1, 1, 6, 6), seed=5)
        y = block(x)
        np.testing.assert_allclose(x.values, y.values, atol=1e-4)
        np.testing.assert_array_equal(x.values, LIFNode(THRESHOLD_PARAMS)(y).values)

    def test_max_variant_halves(self):
        block = EmbedBlock('max', 3, 4, 2, NeuronParams(), rng=make_rng(0))
        self.assertEqual((16, 16), block.output_size(32, 32))
        self.assertEqual((1, 1, 4, 16, 16), block(binary((1, 1, 3, 32, 32))).shape)

    def test_errors(self):
        block = EmbedBlock('orig', 1, 2, 2, NeuronParams())
        with self.assertRaises(DomainError):
            block(SpikeTensor(np.full((1, 1, 1, 4, 4), 2.0), 'ternary'))
        with self.assertRaises(ValueError):
            EmbedBlock('max', 1, 2, 3, NeuronParams())
        with self.assertRaises(ValueError):
            EmbedBlock('strided', 1, 2, 2, NeuronParams())

    def test_patch_embed_sizes(self):
        x = binary((1, 2, 3, 32, 32))
        for kind in ('orig', 'max', 'max+'):
            with self.subTest(kind=kind):
                embed = PatchEmbed(kind, 3, 8, 4, NeuronParams(), rng=make_rng(0))
                self.assertEqual((8, 8), embed.output_size(32, 32))
                y = embed(x)
                self.assertEqual((1, 2, 8, 8, 8), y.shape)
                self.assertEqual('membrane', y.domain)

    def test_patch_embed_linearity(self):
        block = EmbedBlock('orig', 2, 3, 2, NeuronParams(), rng=make_rng(1)).eval()
        x = binary((2, 1, 2, 8, 8), seed=2)
        np.testing.assert_allclose(2 * block(x).values, patch_embed(block, block, x).values, rtol=1e-12)

        zero = SpikeTensor(np.zeros((2, 1, 2, 8, 8)))
        np.testing.assert_array_equal(np.zeros((2, 1, 3, 4, 4)), patch_embed(block, block, zero).values)

    def test_patch_embed_branch_mismatch(self):
        g1 = EmbedBlock('orig', 1, 2, 2, NeuronParams())
        g2 = EmbedBlock('orig', 1, 2, 4, NeuronParams())
        with self.assertRaises(ShapeError):
            patch_embed(g1, g2, binary((1, 1, 1, 8, 8)))


class PoolingTest(TestCase):
    def test_checkerboard(self):
        x = SpikeTensor(checkerboard(4).reshape(1, 1, 1, 4, 4))
        pooled = max_pool(x, 2, 2)
        self.assertEqual('binary', pooled.domain)
        np.testing.assert_array_equal(np.ones((2, 2)), pooled.values[0, 0, 0])

        averaged = avg_pool(x, 2, 2)
        self.assertEqual('membrane', averaged.domain)
        np.testing.assert_array_equal(np.full((2, 2), 0.5), averaged.values[0, 0, 0])

    def test_binary_closure(self):
        x = binary((2, 2, 3, 9, 9), seed=4, density=0.3)
        pooled = max_pool(x, 3, 1, padding=1)
        self.assertTrue(np.isin(pooled.values, (0.0, 1.0)).all())
        averaged = avg_pool(x, 3, 1, padding=1).values
        self.assertTrue(np.all((averaged >= 0) & (averaged <= 1)))

    def test_spectral_character(self):
        # Averaging erases a checkerboard completely
        board = SpikeTensor(checkerboard(16).reshape(1, 1, 1, 16, 16))
        averaged = spectrum2d(avg_pool(board, 2, 2).values[0, 0])
        non_dc = averaged.amps.copy()
        non_dc[averaged.center] = 0
        self.assertTrue(np.all(non_dc < 1e-12))

        # A sparse spike lattice survives max pooling at full amplitude, averaging halves it
        lattice = np.zeros((16, 16))
        lattice[:, ::4] = 1.0
        lattice = SpikeTensor(lattice.reshape(1, 1, 1, 16, 16))
        pooled = spectrum2d(max_pool(lattice, 2, 2).values[0, 0])
        self.assertAlmostEqual(0.5, pooled.amps[4, 0], delta=1e-12)
        halved = spectrum2d(avg_pool(lattice, 2, 2).values[0, 0])
        self.assertAlmostEqual(0.25, halved.amps[4, 0], delta=1e-12)


class DwcTokenMixTest(TestCase):
    def test_zero(self):
        weights = make_rng(0).standard_normal((2, 1, 3, 3))
        y = dwc_token_mix(SpikeTensor(np.zeros((2, 1, 2, 5, 5))), weights, THRESHOLD_PARAMS)
        np.testing.assert_array_equal(np.zeros((2, 1, 2, 5, 5)), y.values)

    def test_identity(self):
        weights = np.zeros((1, 1, 3, 3))
        weights[0, 0, 1, 1] = 1.0
        x = binary((3, 2, 1, 6, 6), seed=1)
        y = dwc_token_mix(x, weights, THRESHOLD_PARAMS)
        self.assertEqual('binary', y.domain)
        np.testing.assert_array_equal(x.values, y.values)

    def test_single_spike_spreads(self):
        x = np.zeros((1, 1, 1, 7, 7))
        x[0, 0, 0, 3, 3] = 1.0
        y = dwc_token_mix(SpikeTensor(x), np.ones((1, 1, 3, 3)), THRESHOLD_PARAMS).values[0, 0, 0]
        expected = np.zeros((7, 7))
        expected[2:5, 2:5] = 1.0
        np.testing.assert_array_equal(expected, y)

    def test_errors(self):
        with self.assertRaises(ValueError):
            dwc_token_mix(SpikeTensor(np.zeros((1, 1, 1, 4, 4))), np.ones((1, 1, 2, 2)), THRESHOLD_PARAMS)
        with self.assertRaises(DomainError):
            dwc_token_mix(SpikeTensor(np.zeros((1, 1, 1, 4, 4)), 'membrane'), np.ones((1, 1, 3, 3)),
                          THRESHOLD_PARAMS)


class SpikeAttentionTest(TestCase):
    def test_zero(self):
        zero = SpikeTensor(np.zeros((2, 1, 4, 3)))
        weights = [make_rng(i).standard_normal((3, 3)) for i in range(3)]
        y = ssa(zero, weights[0], weights[1], weights[2], 0.125, NeuronParams())
        np.testing.assert_array_equal(np.zeros((2, 1, 4, 3)), y.values)

    def test_one_hot_pattern(self):
        pattern = SpikeTensor(np.eye(2).reshape(1, 1, 2, 2))
        y = spike_attention(pattern, pattern, pattern, 1.0, THRESHOLD_PARAMS)
        np.testing.assert_array_equal(pattern.values, y.values)

    def test_zero_scale(self):
        x = binary((2, 1, 5, 4), seed=3)
        y = spike_attention(x, x, x, 0.0, THRESHOLD_PARAMS)
        np.testing.assert_array_equal(np.zeros((2, 1, 5, 4)), y.values)

    def test_accumulation_only(self):
        for seed in range(10):
            q, k, v = (binary((2, 1, 6, 4), seed=seed * 3 + i) for i in range(3))
            kv = np.matmul(np.swapaxes(k.values, -1, -2), v.values)
            self.assertTrue(np.array_equal(kv, np.round(kv)))
            qkv = np.matmul(q.values, kv)
            self.assertTrue(np.array_equal(qkv, np.round(qkv)))
            self.assertTrue(np.all((kv >= 0) & (kv <= 6)))

    def test_non_binary_operand(self):
        x = binary((1, 1, 2, 2))
        with self.assertRaises(DomainError):
            spike_attention(Tensor(np.full((1, 1, 2, 2), 0.5)), x, x, 1.0, THRESHOLD_PARAMS)
        with self.assertRaises(ShapeError):
            spike_attention(x, binary((1, 1, 3, 2)), x, 1.0, THRESHOLD_PARAMS)


class TokenMixerTest(TestCase):
    def test_names(self):
        params = NeuronParams()
        self.assertEqual('dwc-3', AbstractTokenMixer.build('DWC-3', 4, params).label)
        self.assertEqual('ssa', AbstractTokenMixer.build('ssa', 4, params).label)
        for name in ('dwc', 'identity-3', 'conv', 'dwc-4'):
            with self.subTest(name=name):
                with self.assertRaises(ValueError):
                    AbstractTokenMixer.build(name, 4, params)

    def test_cores_stay_binary(self):
        params = NeuronParams()
        x = binary((2, 2, 4, 5, 5), seed=7)
        for name in ('dwc-3', 'ssa', 'maxpool', 'avgpool'):
            with self.subTest(name=name):
                mixer = AbstractTokenMixer.build(name, 4, params, rng=make_rng(0))
                core = mixer.core(x)
                self.assertEqual('binary', core.domain)
                self.assertTrue(np.isin(core.values, (0.0, 1.0)).all())
                self.assertEqual((2, 2, 4, 5, 5), mixer(x).shape)

    def test_identity_passes_through(self):
        x = binary((2, 1, 3, 4, 4))
        mixer = AbstractTokenMixer.build('identity', 3, NeuronParams())
        self.assertIs(x.data, mixer(x))
        self.assertEqual([], mixer.parameters())


class SpikingMLPTest(TestCase):
    def test_hidden_width(self):
        self.assertEqual(256, SpikingMLP(64, NeuronParams()).hidden)
        with self.assertRaises(ValueError):
            SpikingMLP(8, NeuronParams(), ratio=0)

    def test_zero_input(self):
        mlp = SpikingMLP(4, NeuronParams(), rng=make_rng(0))
        y = mlp(SpikeTensor(np.zeros((2, 2, 4, 3, 3))))
        np.testing.assert_array_equal(np.zeros((2, 2, 4, 3, 3)), y.data)

    def test_identity_configured(self):
        mlp = SpikingMLP(2, THRESHOLD_PARAMS, ratio=1.0).eval()
        mlp.fc1.conv.weight.data = np.eye(2).reshape(2, 2, 1, 1)
        mlp.fc2.conv.weight.data = np.eye(2).reshape(2, 2, 1, 1)
        x = binary((3, 1, 2, 4, 4), seed=8)
        np.testing.assert_array_equal(x.values, LIFNode(THRESHOLD_PARAMS)(mlp(x)).values)


class SmlpBlockTest(TestCase):
    def test_zero_input(self):
        y = smlp_block(np.zeros((2, 1, 4, 3, 3)), 4.0, NeuronParams(), rng=make_rng(1))
        self.assertEqual('membrane', y.domain)
        np.testing.assert_array_equal(np.zeros((2, 1, 4, 3, 3)), y.values)

    def test_identity_configured(self):
        mlp = SpikingMLP(2, THRESHOLD_PARAMS, ratio=1.0).eval()
        mlp.fc1.conv.weight.data = np.eye(2).reshape(2, 2, 1, 1)
        mlp.fc2.conv.weight.data = np.eye(2).reshape(2, 2, 1, 1)
        x = binary((3, 2, 2, 4, 4), seed=11)
        y = smlp_block(x, 1.0, THRESHOLD_PARAMS, mlp=mlp)
        np.testing.assert_array_equal(x.values, LIFNode(THRESHOLD_PARAMS)(y).values)

    def test_expansion_mismatch(self):
        with self.assertRaises(ShapeError):
            smlp_block(binary((1, 1, 4, 2, 2)), 2.0, NeuronParams(), mlp=SpikingMLP(4, NeuronParams()))


class ShortcutTest(TestCase):
    def test_prespike(self):
        ones = SpikeTensor(np.ones((1, 1, 2, 2)))
        y = shortcut('prespike', ones, ones)
        self.assertEqual('ternary', y.domain)
        np.testing.assert_array_equal(np.full((1, 1, 2, 2), 2.0), y.values)

    def test_membrane(self):
        y = shortcut('membrane', SpikeTensor(np.full((1, 1, 1), 0.3), 'membrane'),
                     SpikeTensor(np.full((1, 1, 1), 0.4), 'membrane'))
        self.assertEqual('membrane', y.domain)
        self.assertAlmostEqual(0.7, y.values.item())
        fired = LIFNode(THRESHOLD_PARAMS)(y)
        self.assertEqual('binary', fired.domain)
        self.assertEqual(1.0, fired.values.item())

    def test_vanilla(self):
        y = shortcut('vanilla', SpikeTensor(np.full((1, 2), 0.25), 'membrane'), SpikeTensor(np.array([[1.0, 0.0]])))
        self.assertEqual('membrane', y.domain)
        np.testing.assert_array_equal([[1.25, 0.25]], y.values)

    def test_ternary_skip(self):
        skip = SpikeTensor(np.array([[0.0, 1.0, 2.0, 2.0]]), 'ternary')
        y = shortcut('prespike', SpikeTensor(np.array([[1.0, 1.0, 1.0, 0.0]])), skip)
        self.assertEqual('ternary', y.domain)
        np.testing.assert_array_equal([[1.0, 2.0, 2.0, 2.0]], y.values)

        y = shortcut('vanilla', SpikeTensor(np.full((1, 4), 0.25), 'membrane'), skip)
        self.assertEqual('membrane', y.domain)
        np.testing.assert_array_equal([[0.25, 1.25, 2.25, 2.25]], y.values)

        with self.assertRaises(DomainError):
            shortcut('membrane', SpikeTensor(np.zeros((1, 4)), 'membrane'), skip)

    def test_zero_skip(self):
        main_membrane = SpikeTensor(make_rng(0).standard_normal((2, 3)), 'membrane')
        main_spikes = binary((2, 3))
        zeros = np.zeros((2, 3))
        cases = (('membrane', main_membrane, SpikeTensor(zeros, 'membrane')),
                 ('vanilla', main_membrane, SpikeTensor(zeros)),
                 ('prespike', main_spikes, SpikeTensor(zeros)))
        for kind, main, skip in cases:
            with self.subTest(kind=kind):
                np.testing.assert_array_equal(main.values, shortcut(kind, main, skip).values)

    def test_domain_errors(self):
        spikes = binary((2, 3))
        membrane = SpikeTensor(np.zeros((2, 3)), 'membrane')
        with self.assertRaises(DomainError):
            shortcut('membrane', spikes, spikes)
        with self.assertRaises(DomainError):
            shortcut('vanilla', membrane, membrane)
        with self.assertRaises(DomainError):
            shortcut('prespike', membrane, spikes)
        with self.assertRaises(ShapeError):
            shortcut('membrane', membrane, SpikeTensor(np.zeros((2, 4)), 'membrane'))
        with self.assertRaises(ValueError):
            shortcut('sideways', membrane, membrane)


class CarryDomainTest(TestCase):
    def test_chains(self):
        cases = [([], 'membrane'), (['membrane', 'vanilla'], 'membrane'), (['prespike'], 'ternary'),
                 (['prespike', 'prespike', 'prespike'], 'ternary'), (['prespike', 'vanilla'], 'membrane'),
                 (['vanilla', 'membrane', 'pre-spike'], 'ternary')]
        for kinds, expected in cases:
            with self.subTest(kinds=kinds):
                self.assertEqual(expected, carry_domain(kinds))

    def test_membrane_after_spikes(self):
        with self.assertRaises(DomainError):
            carry_domain(['prespike', 'membrane'])
        with self.assertRaises(DomainError):
            carry_domain(['membrane'], carry='binary')
        self.assertEqual('membrane', carry_domain(['vanilla'], carry='binary'))


class BlockTest(TestCase):
    def _carry(self, seed=0):
        return SpikeTensor(make_rng(seed).standard_normal((2, 2, 4, 4, 4)), 'membrane')

    def test_forward_shapes(self):
        for mixer in ('identity', 'dwc-3', 'ssa', 'maxpool', 'avgpool'):
            with self.subTest(mixer=mixer):
                block = Block(4, mixer, NeuronParams(), rng=make_rng(0))
                y = block(self._carry())
                self.assertEqual('membrane', y.domain)
                self.assertEqual((2, 2, 4, 4, 4), y.shape)
                expected = ['mlp'] if mixer == 'identity' else ['token_mix', 'mlp']
                self.assertEqual(expected, list(block.sub_blocks()))

    def test_membrane_blocks_transmit_binary(self):
        block = Block(4, 'ssa', NeuronParams(), rng=make_rng(1))
        audit = TransmissionAudit()
        block.attach(audit)
        block(self._carry(1))
        self.assertEqual(2, len(audit.records))
        self.assertTrue(audit.all_binary())
        self.assertEqual([], audit.ternary_sites())

    def test_prespike_block_output_is_ternary(self):
        block = Block(4, 'dwc-3', NeuronParams(), rng=make_rng(2))
        block.mlp.set_shortcut('prespike')
        y = block(self._carry(3))
        self.assertEqual('ternary', y.domain)
        self.assertTrue(np.isin(y.values, (0.0, 1.0, 2.0)).all())

    def test_prespike_chain_stays_ternary(self):
        for mixer in ('dwc-3', 'ssa', 'maxpool', 'avgpool'):
            with self.subTest(mixer=mixer):
                block = Block(4, mixer, NeuronParams(), shortcut_kind='prespike', rng=make_rng(2))
                block.assign_names()
                audit = TransmissionAudit()
                block.attach(audit)
                y = block(self._carry(3))
                self.assertEqual('ternary', y.domain)
                self.assertTrue(np.isin(y.values, (0.0, 1.0, 2.0)).all())
                self.assertEqual(['mlp'], [site for site in audit.ternary_sites()])

    def test_membrane_after_prespike_is_rejected(self):
        block = Block(4, 'dwc-3', NeuronParams(), rng=make_rng(2))
        block.token_mix.set_shortcut('prespike')
        with self.assertRaises(DomainError):
            block(self._carry(3))

    def test_deterministic(self):
        outputs = [Block(4, 'ssa', NeuronParams(), rng=make_rng(5))(self._carry(2)).values for _ in range(2)]
        np.testing.assert_array_equal(outputs[0], outputs[1])
