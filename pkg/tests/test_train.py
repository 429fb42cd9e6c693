import math
import os
import tempfile
from unittest import TestCase, skipUnless

import numpy as np

from spikelab.config import parse_config
from spikelab.exceptions import ConfigError, DivergenceError
from spikelab.layers import Linear
from spikelab.model import ArchSpec, StageSpec, build
from spikelab.numcore import Tensor, backward, no_grad, parameter
from spikelab.train import AblationReport, AdamWOptimizer, EpochMetrics, SGDOptimizer, SyntheticFreqDataset, \
    TrainConfig, ablation, embed_ablation, evaluate, evaluate_ablation, learning_rate, loss_ce_smoothed, \
    mixer_ablation, pooling_ablation, read_metrics_csv, train, write_metrics_csv
from spikelab.utils import make_rng
from tests.settings import SLOW_TESTS


def smooth_spec():
    return ArchSpec([StageSpec('orig', 'dwc-3', 1, 8), StageSpec('orig', 'ssa', 1, 8)], timesteps=2, num_classes=2,
                    input_channels=1, input_height=16, input_width=16, name='smooth')


class TrainConfigTest(TestCase):
    def test_invalid(self):
        for kwargs in ({'lr': -1}, {'smoothing': 1.0}, {'batch_size': 0}, {'optimizer': 'rmsprop'},
                       {'schedule': 'step'}, {'warmup_epochs': 30}, {'weight_decay': -0.1}):
            with self.subTest(**kwargs):
                with self.assertRaises(ValueError):
                    TrainConfig(**kwargs)

    def test_zero_lr_allowed(self):
        self.assertEqual(0.0, TrainConfig(lr=0).lr)

    def test_reference(self):
        cfg = TrainConfig.reference('cifar10')
        self.assertEqual(400, cfg.epochs)
        self.assertEqual(0.1, cfg.smoothing)
        self.assertEqual('adamw', cfg.optimizer)
        with self.assertRaises(ValueError):
            TrainConfig.reference('mnist')

    def test_replace(self):
        cfg = TrainConfig(epochs=3)
        self.assertEqual(TrainConfig(epochs=3, seed=9), cfg.replace(seed=9))
        self.assertEqual(0, cfg.seed)

    def test_from_config(self):
        config = parse_config('[train]\nepochs = 3\nlr = 0.01\noptimizer = SGD\n')
        cfg = TrainConfig.from_config(config)
        self.assertEqual(TrainConfig(epochs=3, lr=0.01, optimizer='sgd'), cfg)
        self.assertEqual(11, TrainConfig.from_config(config, seed=11).seed)

    def test_from_config_errors(self):
        with self.assertRaises(ConfigError) as ctx:
            TrainConfig.from_config(parse_config('[train]\nepochs = 2\nsmoothing = 1.5\n'))
        self.assertEqual(3, ctx.exception.lineno)

        with self.assertRaises(ConfigError) as ctx:
            TrainConfig.from_config(parse_config('[train]\nbatch_size = many\n'))
        self.assertEqual(2, ctx.exception.lineno)


class LearningRateTest(TestCase):
    def test_constant(self):
        cfg = TrainConfig(lr=0.5, epochs=4)
        self.assertEqual([0.5] * 4, [learning_rate(cfg, epoch) for epoch in range(4)])

    def test_warmup_then_cosine(self):
        cfg = TrainConfig(lr=1.0, epochs=10, warmup_epochs=2, schedule='cosine')
        self.assertEqual(0.5, learning_rate(cfg, 0))
        self.assertEqual(1.0, learning_rate(cfg, 1))
        self.assertEqual(1.0, learning_rate(cfg, 2))
        self.assertAlmostEqual(0.5, learning_rate(cfg, 6))
        rates = [learning_rate(cfg, epoch) for epoch in range(2, 10)]
        self.assertTrue(all(a >= b for a, b in zip(rates, rates[1:])))


class OptimizerTest(TestCase):
    def test_sgd(self):
        param = parameter([1.0, -2.0])
        param.grad = np.array([0.5, -3.0])
        SGDOptimizer([param], momentum=0.0).step(0.1)
        np.testing.assert_allclose([0.95, -1.7], param.data)

    def test_sgd_momentum(self):
        param = parameter([0.0])
        optimizer = SGDOptimizer([param], momentum=0.5)
        for _ in range(2):
            param.grad = np.array([1.0])
            optimizer.step(1.0)
        # velocity 1, then 1.5
        np.testing.assert_allclose([-2.5], param.data)

    def test_adamw_first_step(self):
        param = parameter([1.0, -2.0])
        param.grad = np.array([0.5, -3.0])
        AdamWOptimizer([param]).step(0.1)
        np.testing.assert_allclose([0.9, -1.9], param.data, rtol=1e-6)

    def test_adamw_decoupled_decay(self):
        param = parameter([2.0])
        param.grad = np.array([0.0])
        AdamWOptimizer([param], weight_decay=0.5).step(0.1)
        np.testing.assert_allclose([1.9], param.data)

    def test_skips_missing_grad(self):
        param = parameter([3.0])
        SGDOptimizer([param]).step(1.0)
        np.testing.assert_array_equal([3.0], param.data)

    def test_unknown(self):
        with self.assertRaises(ValueError):
            SGDOptimizer.get_optimizer_by_name('lion')
        self.assertIs(SGDOptimizer, SGDOptimizer.get_optimizer_by_name('momentum'))


class LossTest(TestCase):
    def test_uniform(self):
        self.assertAlmostEqual(math.log(5), loss_ce_smoothed(Tensor(np.zeros((3, 5))), [0, 4, 2]).item())

    def test_confident(self):
        self.assertAlmostEqual(0.0, loss_ce_smoothed(Tensor([[100.0, -100.0]]), [0]).item(), places=10)

    def test_smoothed_uniform(self):
        self.assertAlmostEqual(math.log(2), loss_ce_smoothed(Tensor([[0.0, 0.0]]), [1], smoothing=0.1).item())

    def test_smoothing_penalizes_confidence(self):
        logits = Tensor([[20.0, -20.0]])
        self.assertGreater(loss_ce_smoothed(logits, [0], smoothing=0.1).item(), loss_ce_smoothed(logits, [0]).item())

    def test_errors(self):
        with self.assertRaises(ValueError):
            loss_ce_smoothed(Tensor(np.zeros((2, 3))), [0, 3])
        with self.assertRaises(ValueError):
            loss_ce_smoothed(Tensor(np.zeros((2, 3))), [0, -1])
        with self.assertRaises(ValueError):
            loss_ce_smoothed(Tensor(np.zeros((2, 3))), [0, 1], smoothing=1.0)
        with self.assertRaises(ValueError):
            loss_ce_smoothed(Tensor(np.zeros((2, 3))), [0, 1, 2])

    def test_gradient(self):
        rng = make_rng(0)
        logits = parameter(rng.normal(size=(4, 3)))
        labels = np.array([0, 2, 1, 2])
        backward(None, loss_ce_smoothed(logits, labels, smoothing=0.2))

        probs = np.exp(logits.data) / np.exp(logits.data).sum(axis=1, keepdims=True)
        targets = np.full((4, 3), 0.2 / 3)
        targets[np.arange(4), labels] += 0.8
        np.testing.assert_allclose((probs - targets) / 4, logits.grad, rtol=1e-10, atol=1e-14)

    def test_linear_step_reduces_loss(self):
        rng = make_rng(1)
        features = Tensor(rng.normal(size=(64, 5)))
        labels = (features.data[:, 0] + features.data[:, 1] > 0).astype(np.int64)
        head = Linear(5, 2, rng=rng)
        optimizer = SGDOptimizer(head.parameters(), momentum=0.0)

        before = loss_ce_smoothed(head(features), labels, smoothing=0.1)
        backward(None, before)
        optimizer.step(0.1)
        with no_grad():
            after = loss_ce_smoothed(head(features), labels, smoothing=0.1)
        self.assertLess(after.item(), before.item())


class SyntheticFreqDatasetTest(TestCase):
    def test_shape_balance_range(self):
        for mode in SyntheticFreqDataset.MODES:
            with self.subTest(mode=mode):
                dataset = SyntheticFreqDataset.generate(101, seed=4, mode=mode)
                self.assertEqual((101, 1, 16, 16), dataset.images.shape)
                counts = np.bincount(dataset.labels, minlength=2)
                self.assertLessEqual(abs(counts[0] - counts[1]), 1)
                self.assertGreaterEqual(dataset.images.min(), 0.0)
                self.assertLessEqual(dataset.images.max(), 1.0)

    def test_deterministic(self):
        first = SyntheticFreqDataset.generate(20, seed=5)
        second = SyntheticFreqDataset.generate(20, seed=5)
        np.testing.assert_array_equal(first.images, second.images)
        np.testing.assert_array_equal(first.labels, second.labels)
        self.assertFalse(np.array_equal(first.images, SyntheticFreqDataset.generate(20, seed=6).images))

    def test_texture_class_has_more_high_frequency(self):
        dataset = SyntheticFreqDataset.generate(200, seed=0)
        images = dataset.images[:, 0]
        roughness = np.abs(np.diff(images, axis=-1)).mean(axis=(1, 2)) \
            + np.abs(np.diff(images, axis=-2)).mean(axis=(1, 2))
        self.assertGreater(roughness[dataset.labels == 1].mean(), 1.5 * roughness[dataset.labels == 0].mean())

    def test_errors(self):
        for kwargs in ({'n': 0}, {'n': 4, 'mode': 'high'}, {'n': 4, 'size': 4}):
            with self.subTest(**kwargs):
                with self.assertRaises(ValueError):
                    SyntheticFreqDataset.generate(**kwargs)
        with self.assertRaises(ValueError):
            SyntheticFreqDataset(np.zeros((3, 16, 16)), [0, 1, 0])

    def test_train_test(self):
        train_data, test_data = SyntheticFreqDataset.train_test(30, 10, seed=1)
        self.assertEqual((30, 10), (len(train_data), len(test_data)))
        full = SyntheticFreqDataset.generate(40, seed=1)
        np.testing.assert_array_equal(full.images[30:], test_data.images)

    def test_batches(self):
        dataset = SyntheticFreqDataset.generate(10, seed=0)
        sizes = [len(labels) for _, labels in dataset.batches(4)]
        self.assertEqual([4, 4, 2], sizes)
        np.testing.assert_array_equal(dataset.labels, np.concatenate([labels for _, labels in dataset.batches(4)]))

        shuffled = np.concatenate([labels for _, labels in dataset.batches(4, rng=make_rng(0))])
        self.assertEqual(sorted(dataset.labels.tolist()), sorted(shuffled.tolist()))


class TrainTest(TestCase):
    def setUp(self):
        self.dataset = SyntheticFreqDataset.generate(16, seed=3)

    def test_zero_lr_keeps_parameters(self):
        net = build(ArchSpec.preset('tiny'), seed=1)
        before = [p.data.copy() for p in net.parameters()]
        _, history = train(net, self.dataset, TrainConfig(epochs=2, batch_size=8, lr=0))
        self.assertEqual(2, len(history))
        for expected, param in zip(before, net.parameters()):
            np.testing.assert_array_equal(expected, param.data)

    def test_deterministic(self):
        cfg = TrainConfig(epochs=2, batch_size=8, lr=1e-2, seed=5)
        first, first_history = train(build(ArchSpec.preset('tiny'), seed=1), self.dataset, cfg)
        second, second_history = train(build(ArchSpec.preset('tiny'), seed=1), self.dataset, cfg)
        self.assertEqual(first_history, second_history)
        second_state = second.state_dict()
        for key, value in first.state_dict().items():
            np.testing.assert_array_equal(value, second_state[key], err_msg=key)

    def test_updates_and_reports(self):
        net = build(ArchSpec.preset('tiny'), seed=1)
        before = [p.data.copy() for p in net.parameters()]
        _, history = train(net, self.dataset, TrainConfig(epochs=1, batch_size=8, lr=1e-2, optimizer='sgd'),
                           test_dataset=self.dataset)
        self.assertTrue(any(not np.array_equal(b, p.data) for b, p in zip(before, net.parameters())))

        metrics = history[0]
        self.assertEqual(1, metrics.epoch)
        self.assertTrue(np.isfinite(metrics.train_loss))
        self.assertTrue(0 <= metrics.train_acc <= 1)
        self.assertTrue(0 <= metrics.test_acc <= 1)
        self.assertTrue(net.training)

    def test_divergence(self):
        net = build(ArchSpec.preset('tiny'))
        net.classifier.bias.data = np.array([np.nan, 0.0])
        with self.assertRaises(DivergenceError) as ctx:
            train(net, self.dataset, TrainConfig(epochs=1, batch_size=8))
        self.assertEqual((0, 0), (ctx.exception.epoch, ctx.exception.batch_index))

    def test_empty(self):
        empty = SyntheticFreqDataset(np.zeros((0, 1, 16, 16)), [])
        with self.assertRaises(ValueError):
            train(build(ArchSpec.preset('tiny')), empty, TrainConfig(epochs=1))
        with self.assertRaises(ValueError):
            evaluate(build(ArchSpec.preset('tiny')), empty)

    def test_smooth_path_gradient(self):
        net = build(smooth_spec(), seed=2)
        net.set_smooth(True)
        images = make_rng(0).uniform(0, 1, (4, 1, 16, 16))
        labels = np.array([0, 1, 1, 0])

        def loss_value():
            with no_grad():
                return loss_ce_smoothed(net(images), labels, smoothing=0.1).item()

        weights = [(name, p) for name, p in net.named_parameters() if name.endswith('weight') and p.ndim == 4]
        for name, param in (weights[0], weights[len(weights) // 2], weights[-1]):
            with self.subTest(name=name):
                net.zero_grad()
                backward(None, loss_ce_smoothed(net(images), labels, smoothing=0.1))
                analytic = param.grad.flat[0]

                eps = 1e-6
                original = param.data.flat[0]
                param.data.flat[0] = original + eps
                plus = loss_value()
                param.data.flat[0] = original - eps
                minus = loss_value()
                param.data.flat[0] = original

                np.testing.assert_allclose((plus - minus) / (2 * eps), analytic, rtol=1e-3, atol=1e-9)


class EvaluateTest(TestCase):
    def test_random_labels(self):
        rng = make_rng(0)
        dataset = SyntheticFreqDataset(rng.uniform(0, 1, (1000, 1, 16, 16)), rng.integers(0, 2, 1000))
        net = build(ArchSpec.preset('tiny'), seed=4)
        accuracy, loss = evaluate(net, dataset, batch_size=250)
        self.assertAlmostEqual(0.5, accuracy, delta=0.05)
        self.assertTrue(np.isfinite(loss))
        self.assertTrue(net.training)

    def test_disjoint_predictor(self):
        net = build(ArchSpec.preset('tiny'))
        net.classifier.weight.data = np.zeros_like(net.classifier.weight.data)
        net.classifier.bias.data = np.array([5.0, -5.0])
        dataset = SyntheticFreqDataset(make_rng(1).uniform(0, 1, (6, 1, 16, 16)), np.ones(6))
        accuracy, _ = evaluate(net, dataset)
        self.assertEqual(0.0, accuracy)

    def test_deterministic(self):
        net = build(ArchSpec.preset('tiny'), seed=2)
        dataset = SyntheticFreqDataset.generate(12, seed=2)
        self.assertEqual(evaluate(net, dataset, batch_size=5), evaluate(net, dataset, batch_size=12))


class MetricsCsvTest(TestCase):
    def test_round_trip(self):
        history = [EpochMetrics(1, 0.7, 0.5), EpochMetrics(2, 0.25, 0.875, 0.3, 0.8)]
        with tempfile.TemporaryDirectory() as tmp_dir:
            path = os.path.join(tmp_dir, 'metrics.csv')
            write_metrics_csv(history, path)
            with open(path) as f:
                self.assertEqual('epoch,train_loss,train_acc,test_loss,test_acc', f.readline().strip())
            self.assertEqual(history, read_metrics_csv(path))

    def test_bad_header(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            path = os.path.join(tmp_dir, 'metrics.csv')
            with open(path, 'w') as f:
                f.write('epoch,loss\n1,0.5\n')
            with self.assertRaises(ValueError):
                read_metrics_csv(path)


class AblationTest(TestCase):
    def test_pooling_plumbing(self):
        cfg = TrainConfig(epochs=1, batch_size=4)
        with tempfile.TemporaryDirectory() as tmp_dir:
            report = pooling_ablation(range(5), cfg=cfg, train_size=4, test_size=4, checkpoint_dir=tmp_dir)
            report.write(os.path.join(tmp_dir, 'ablation.json'))
            self.assertEqual(report, AblationReport.read(os.path.join(tmp_dir, 'ablation.json')))
            restored = evaluate_ablation(tmp_dir)

        self.assertEqual(['maxpool', 'avgpool'], report.variants)
        self.assertEqual(1, len(set(report.param_counts.values())))
        self.assertEqual([5, 5], [len(report.accuracies[name]) for name in report.variants])
        self.assertTrue(0 <= report.win_fraction() <= 1)
        self.assertEqual('maxpool >= avgpool', report.summary()['comparison'])
        self.assertEqual(report.accuracies, restored.accuracies)

    def test_needs_five_seeds(self):
        with self.assertRaises(ValueError):
            pooling_ablation(range(4))
        with self.assertRaises(ValueError):
            embed_ablation([1, 2])

    def test_embed_variants_matched(self):
        report = embed_ablation(range(5), cfg=TrainConfig(epochs=0), train_size=2, test_size=2)
        self.assertEqual(['embed-max', 'embed-orig'], report.variants)
        self.assertEqual(1, len(set(report.param_counts.values())))

    def test_mixer_sweep(self):
        report = mixer_ablation([0], cfg=TrainConfig(epochs=0), train_size=2, test_size=2)
        self.assertEqual(['dwc-1', 'dwc-3', 'dwc-5', 'dwc-7', 'all-ssa', 'identity'], report.variants)
        self.assertLess(report.param_counts['dwc-3'], report.param_counts['dwc-7'])
        self.assertNotIn('comparison', report.summary())
        with self.assertRaises(ValueError):
            report.wins()

    def test_unmatched(self):
        variants = {'small': ArchSpec.preset('tiny'), 'wide': ArchSpec.preset('tiny').with_mixers('ssa')}
        with self.assertRaises(ValueError):
            ablation('custom', variants, [0])


@skipUnless(SLOW_TESTS, 'Set SPIKELAB_SLOW=1 to run desk-scale training')
class DeskScaleTrainingTest(TestCase):
    def test_tiny_learns_frequency_task(self):
        train_data, test_data = SyntheticFreqDataset.train_test(seed=0)
        net = build(ArchSpec.preset('tiny'), seed=0)
        _, history = train(net, train_data, TrainConfig(epochs=20, batch_size=32, lr=1e-3), test_dataset=test_data)
        self.assertGreater(history[-1].train_acc, 0.95)

    def test_max_pooling_beats_avg_pooling(self):
        report = pooling_ablation(range(5), cfg=TrainConfig(epochs=10, batch_size=32, lr=1e-3))
        self.assertGreaterEqual(report.wins(), 4)

    def test_low_frequency_control(self):
        report = pooling_ablation(range(5), cfg=TrainConfig(epochs=10, batch_size=32, lr=1e-3), mode='low')
        self.assertLess(abs(report.mean_accuracy('maxpool') - report.mean_accuracy('avgpool')), 0.1)
