"""
This file contains desk-scale surrogate gradient training: datasets, loss, optimizers, loops and ablations.
Gradients flow through all timesteps of the unrolled network (backpropagation through time).
"""
import csv
import json
import logging
import math
import os
from collections import OrderedDict
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Type

import numpy as np

from .config import Config
from .exceptions import ConfigError, DivergenceError
from .model import ArchSpec, Network, StageSpec, build, load_checkpoint, param_count, save_checkpoint
from .numcore import Tensor, as_tensor, backward, log_softmax, mul, no_grad, scale, tensor_sum
from .types import TArrayLike, TJson
from .utils import find_subclass_by_name, make_rng, minibatch_indices

__all__ = ['TrainConfig', 'EpochMetrics', 'SyntheticFreqDataset', 'AbstractOptimizer', 'SGDOptimizer',
           'AdamWOptimizer', 'learning_rate', 'loss_ce_smoothed', 'train', 'evaluate', 'write_metrics_csv',
           'read_metrics_csv', 'AblationReport', 'ablation', 'pooling_ablation', 'embed_ablation', 'mixer_ablation',
           'evaluate_ablation']

logger = logging.getLogger('spikelab')

METRICS_COLUMNS = ('epoch', 'train_loss', 'train_acc', 'test_loss', 'test_acc')
MIN_ABLATION_SEEDS = 5

TVariants = Dict[str, ArchSpec]
TAccuracies = Dict[str, List[float]]
TComparison = Optional[Tuple[str, str]]
TCheckpoints = Optional[Dict[str, Dict[str, str]]]
TSpecTexts = Optional[Dict[str, str]]
TPath = Optional[str]


class TrainConfig(object):
    __slots__ = ['epochs', 'batch_size', 'lr', 'weight_decay', 'smoothing', 'seed', 'optimizer', 'momentum',
                 'warmup_epochs', 'schedule']

    SCHEDULES = ('constant', 'cosine')

    def __init__(self, epochs=20, batch_size=32, lr=1e-3, weight_decay=0.0, smoothing=0.0, seed=0,
                 optimizer='adamw', momentum=0.9, warmup_epochs=0, schedule='constant'):
        # type: (int, int, float, float, float, int, str, float, int, str) -> None
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.lr = float(lr)
        self.weight_decay = float(weight_decay)
        self.smoothing = float(smoothing)
        self.seed = int(seed)
        self.optimizer = optimizer
        self.momentum = float(momentum)
        self.warmup_epochs = int(warmup_epochs)
        self.schedule = schedule
        self.validate()

    def validate(self):  # type: () -> None
        if self.lr < 0:
            raise ValueError("lr must be non negative, got %r" % self.lr)
        if not 0 <= self.smoothing < 1:
            raise ValueError("smoothing must be in range [0, 1), got %r" % self.smoothing)
        if self.epochs < 0:
            raise ValueError("epochs must be non negative, got %d" % self.epochs)
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive, got %d" % self.batch_size)
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non negative, got %r" % self.weight_decay)
        if not 0 <= self.warmup_epochs <= max(self.epochs, 0):
            raise ValueError("warmup_epochs must be in range [0, epochs], got %d" % self.warmup_epochs)
        if self.schedule not in self.SCHEDULES:
            raise ValueError("Schedule with name '%s' doesn't exist" % self.schedule)
        if self.seed < 0:
            raise ValueError("seed must be non negative, got %d" % self.seed)
        AbstractOptimizer.get_optimizer_by_name(self.optimizer)

    def replace(self, **changes):  # type: (**object) -> TrainConfig
        values = {name: getattr(self, name) for name in self.__slots__}
        values.update(changes)
        return TrainConfig(**values)

    @classmethod
    def reference(cls, name):  # type: (str) -> TrainConfig
        """
        Published full-scale recipes. These are reference values, far beyond desk-scale runs.
        """
        if name not in REFERENCE_RECIPES:
            raise ValueError("Reference recipe with name '%s' doesn't exist" % name)
        return cls(**REFERENCE_RECIPES[name])

    @classmethod
    def from_config(cls, config, seed=None):  # type: (Config, Optional[int]) -> TrainConfig
        values = {}
        for key in cls.__slots__:
            if not config.has('train', key):
                continue
            if key in ('epochs', 'batch_size', 'seed', 'warmup_epochs'):
                values[key] = config.get_int('train', key)
            elif key in ('optimizer', 'schedule'):
                values[key] = config.get('train', key).lower()
            else:
                values[key] = config.get_float('train', key)
        if seed is not None:
            values['seed'] = seed
        try:
            return cls(**values)
        except ValueError as e:
            lineno = None
            for key, _ in config.items('train'):
                if key in str(e):
                    lineno = config._lookup('train', key)[1]
                    break
            raise ConfigError("[train] %s" % e, lineno)

    def config_items(self):  # type: () -> List[Tuple[str, object]]
        return [(name, getattr(self, name)) for name in self.__slots__]

    def __eq__(self, other):
        return isinstance(other, TrainConfig) and self.config_items() == other.config_items()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'TrainConfig(%s)' % ', '.join('%s=%r' % item for item in self.config_items())


REFERENCE_RECIPES = {
    'imagenet': dict(epochs=200, batch_size=512, lr=1.35e-3, weight_decay=0.05, smoothing=0.1, optimizer='adamw',
                     warmup_epochs=5, schedule='cosine'),
    'cifar10': dict(epochs=400, batch_size=128, lr=1.5e-3, weight_decay=0.06, smoothing=0.1, optimizer='adamw',
                    warmup_epochs=20, schedule='cosine'),
    'cifar100': dict(epochs=400, batch_size=64, lr=1.5e-3, weight_decay=0.06, smoothing=0.1, optimizer='adamw',
                     warmup_epochs=20, schedule='cosine'),
    'dvs': dict(epochs=106, batch_size=16, lr=6e-3, weight_decay=0.06, smoothing=0.1, optimizer='adamw',
                warmup_epochs=10, schedule='cosine'),
}


def learning_rate(cfg, epoch):  # type: (TrainConfig, int) -> float
    """
    Linear warmup over warmup_epochs, then constant or cosine decay to 0 at the end of training
    :param cfg: TrainConfig
    :param epoch: 0-based epoch index
    :return: Learning rate of the epoch
    """
    if epoch < cfg.warmup_epochs:
        return cfg.lr * (epoch + 1) / float(cfg.warmup_epochs)
    if cfg.schedule == 'constant':
        return cfg.lr
    decay_epochs = max(cfg.epochs - cfg.warmup_epochs, 1)
    return 0.5 * cfg.lr * (1.0 + math.cos(math.pi * (epoch - cfg.warmup_epochs) / decay_epochs))


# Optimizers

class AbstractOptimizer(object):
    """
    Updates parameters in place from their accumulated .grad
    """
    names = set()

    def __init__(self, params, weight_decay=0.0, momentum=0.9):  # type: (Sequence[Tensor], float, float) -> None
        self.params = list(params)
        self.weight_decay = weight_decay
        self.momentum = momentum
        self.steps = 0

    def update(self, index, param, grad, lr):  # type: (int, Tensor, np.ndarray, float) -> None
        raise NotImplementedError("%s must implement update method" % self.__class__.__name__)

    def step(self, lr):  # type: (float) -> None
        self.steps += 1
        for index, param in enumerate(self.params):
            if param.grad is not None:
                self.update(index, param, param.grad, lr)

    def zero_grad(self):  # type: () -> None
        for param in self.params:
            param.zero_grad()

    @classmethod
    def get_optimizer_by_name(cls, name):  # type: (str) -> Type[AbstractOptimizer]
        return find_subclass_by_name(cls, name, 'Optimizer')


class SGDOptimizer(AbstractOptimizer):
    """
    Heavy ball momentum with L2 weight decay
    """
    names = {'sgd', 'momentum'}

    def __init__(self, params, weight_decay=0.0, momentum=0.9):
        super(SGDOptimizer, self).__init__(params, weight_decay=weight_decay, momentum=momentum)
        self.velocity = [np.zeros_like(p.data) for p in self.params]

    def update(self, index, param, grad, lr):
        velocity = self.momentum * self.velocity[index] + grad + self.weight_decay * param.data
        self.velocity[index] = velocity
        param.data = param.data - lr * velocity


class AdamWOptimizer(AbstractOptimizer):
    """
    Adam with decoupled weight decay
    """
    names = {'adamw'}

    BETA1 = 0.9
    BETA2 = 0.999
    EPS = 1e-8

    def __init__(self, params, weight_decay=0.0, momentum=0.9):
        super(AdamWOptimizer, self).__init__(params, weight_decay=weight_decay, momentum=momentum)
        self.first = [np.zeros_like(p.data) for p in self.params]
        self.second = [np.zeros_like(p.data) for p in self.params]

    def update(self, index, param, grad, lr):
        self.first[index] = self.BETA1 * self.first[index] + (1 - self.BETA1) * grad
        self.second[index] = self.BETA2 * self.second[index] + (1 - self.BETA2) * grad ** 2
        first = self.first[index] / (1 - self.BETA1 ** self.steps)
        second = self.second[index] / (1 - self.BETA2 ** self.steps)
        data = param.data * (1 - lr * self.weight_decay)
        param.data = data - lr * first / (np.sqrt(second) + self.EPS)


# Data

class SyntheticFreqDataset(object):
    """
    Two-class 1 x size x size images in [0, 1].
    mixed mode: class 0 is a smooth low-frequency image (gradient plus blob, period >= 8 px),
        class 1 is a smooth image with a fine texture overlay (stripes or checkerboard, period 2-3 px).
    low mode: control task, both classes are smooth. Class is the dominant gradient orientation.
    """
    __slots__ = ['images', 'labels', 'seed', 'mode']

    MODES = ('mixed', 'low')
    NUM_CLASSES = 2

    def __init__(self, images, labels, seed=None, mode='mixed'):
        # type: (TArrayLike, TArrayLike, Optional[int], str) -> None
        self.images = np.asarray(images, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        if self.images.ndim != 4 or len(self.images) != len(self.labels):
            raise ValueError("Dataset needs images [N, C, H, W] and N labels, got %s and %s"
                             % (self.images.shape, self.labels.shape))
        self.seed = seed
        self.mode = mode

    def __len__(self):
        return len(self.labels)

    @staticmethod
    def _smooth(rng, size, orientation=None):  # type: (np.random.Generator, int, Optional[int]) -> np.ndarray
        yy, xx = np.mgrid[0:size, 0:size] / float(size)
        angle = rng.uniform(0, 2 * np.pi) if orientation is None \
            else orientation * np.pi / 2 + rng.uniform(-np.pi / 8, np.pi / 8)
        gradient = np.cos(angle) * xx + np.sin(angle) * yy
        cy, cx = rng.uniform(0.2, 0.8, size=2)
        sigma = rng.uniform(0.2, 0.4)
        blob = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma ** 2))
        weight = 0.3 if orientation is not None else rng.uniform(0.2, 0.8)
        image = (1 - weight) * gradient + weight * blob
        image = image - image.min()
        return image / image.max() if image.max() > 0 else image

    @staticmethod
    def _texture(rng, size):  # type: (np.random.Generator, int) -> np.ndarray
        period = int(rng.choice((2, 3)))
        yy, xx = np.mgrid[0:size, 0:size]
        offset_y, offset_x = rng.integers(0, period, size=2)
        rows = ((yy + offset_y) % period) < period / 2.0
        cols = ((xx + offset_x) % period) < period / 2.0
        pattern = int(rng.integers(0, 3))
        if pattern == 0:
            return rows.astype(np.float64)
        if pattern == 1:
            return cols.astype(np.float64)
        return (rows ^ cols).astype(np.float64)

    @classmethod
    def generate(cls, n, seed=0, size=16, mode='mixed'):  # type: (int, int, int, str) -> SyntheticFreqDataset
        """
        :param n: Number of images. Classes are balanced up to one image.
        :param seed: Generator seed
        :param size: Image side
        :param mode: 'mixed' (high vs low frequency) or 'low' (low frequency control)
        :return: SyntheticFreqDataset
        """
        if mode not in cls.MODES:
            raise ValueError("Dataset mode with name '%s' doesn't exist" % mode)
        if n < 1:
            raise ValueError("Dataset size must be positive, got %d" % n)
        if size < 8:
            raise ValueError("Image size must be at least 8 px, got %d" % size)
        rng = make_rng(seed)
        labels = rng.permutation(np.arange(n) % cls.NUM_CLASSES)
        images = np.empty((n, 1, size, size))
        for i, label in enumerate(labels):
            if mode == 'low':
                image = cls._smooth(rng, size, orientation=int(label))
            else:
                image = cls._smooth(rng, size)
                if label == 1:
                    contrast = rng.uniform(0.3, 0.5)
                    image = (1 - contrast) * image + contrast * cls._texture(rng, size)
            images[i, 0] = np.clip(image, 0.0, 1.0)
        return cls(images, labels, seed=seed, mode=mode)

    @classmethod
    def train_test(cls, train_size=2000, test_size=500, seed=0, size=16, mode='mixed'):
        # type: (int, int, int, int, str) -> Tuple[SyntheticFreqDataset, SyntheticFreqDataset]
        full = cls.generate(train_size + test_size, seed=seed, size=size, mode=mode)
        return full.subset(np.arange(train_size)), full.subset(np.arange(train_size, train_size + test_size))

    def subset(self, indices):  # type: (np.ndarray) -> SyntheticFreqDataset
        return SyntheticFreqDataset(self.images[indices], self.labels[indices], seed=self.seed, mode=self.mode)

    def batches(self, batch_size, rng=None):
        # type: (int, Optional[np.random.Generator]) -> Iterator[Tuple[np.ndarray, np.ndarray]]
        for indices in minibatch_indices(len(self), batch_size, rng=rng):
            yield self.images[indices], self.labels[indices]


TDataset = SyntheticFreqDataset


# Loss and loops

def loss_ce_smoothed(logits, labels, smoothing=0.0):  # type: (Tensor, TArrayLike, float) -> Tensor
    """
    Cross entropy against one-hot targets smoothed as (1 - smoothing) * one_hot + smoothing / K
    :param logits: Tensor [B, K]
    :param labels: Integer labels [B]
    :param smoothing: Label smoothing in [0, 1)
    :return: Scalar mean loss
    """
    logits = as_tensor(logits)
    labels = np.asarray(labels)
    if not 0 <= smoothing < 1:
        raise ValueError("smoothing must be in range [0, 1), got %r" % smoothing)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ValueError("Expected logits [B, K] and labels [B], got %s and %s" % (logits.shape, labels.shape))
    batch_size, num_classes = logits.shape
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError("Labels must be in range [0, %d)" % num_classes)

    targets = np.full((batch_size, num_classes), smoothing / num_classes)
    targets[np.arange(batch_size), labels] += 1.0 - smoothing
    return scale(tensor_sum(mul(log_softmax(logits, axis=-1), Tensor(targets))), -1.0 / batch_size)


class EpochMetrics(object):
    __slots__ = ['epoch', 'train_loss', 'train_acc', 'test_loss', 'test_acc']

    def __init__(self, epoch, train_loss, train_acc, test_loss=None, test_acc=None):
        # type: (int, float, float, Optional[float], Optional[float]) -> None
        self.epoch = epoch
        self.train_loss = train_loss
        self.train_acc = train_acc
        self.test_loss = test_loss
        self.test_acc = test_acc

    def as_row(self):  # type: () -> List[str]
        return [str(self.epoch)] + ['' if v is None else repr(float(v)) for v in
                                    (self.train_loss, self.train_acc, self.test_loss, self.test_acc)]

    def __eq__(self, other):
        return isinstance(other, EpochMetrics) and self.as_row() == other.as_row()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return '<EpochMetrics %s>' % ', '.join(self.as_row())


def train(net, dataset, cfg, test_dataset=None):
    # type: (Network, TDataset, TrainConfig, Optional[TDataset]) -> Tuple[Network, List[EpochMetrics]]
    """
    Trains the network in place
    :param net: Network
    :param dataset: Training data
    :param cfg: TrainConfig
    :param test_dataset: Optional data, evaluated after every epoch
    :return: A tuple (net, per-epoch metrics)
    :raises DivergenceError: If the loss is not finite
    """
    if len(dataset) == 0:
        raise ValueError("Can't train on an empty dataset")
    rng = make_rng(cfg.seed)
    optimizer_cls = AbstractOptimizer.get_optimizer_by_name(cfg.optimizer)
    optimizer = optimizer_cls(net.parameters(), weight_decay=cfg.weight_decay, momentum=cfg.momentum)
    history = []

    for epoch in range(cfg.epochs):
        lr = learning_rate(cfg, epoch)
        net.train()
        total_loss, correct = 0.0, 0
        for batch_index, (images, labels) in enumerate(dataset.batches(cfg.batch_size, rng=rng)):
            optimizer.zero_grad()
            logits = net(images)
            loss = loss_ce_smoothed(logits, labels, cfg.smoothing)
            value = loss.item()
            if not np.isfinite(value):
                raise DivergenceError(epoch, batch_index, value)
            backward(None, loss)
            optimizer.step(lr)
            total_loss += value * len(labels)
            correct += int((logits.data.argmax(axis=-1) == labels).sum())

        metrics = EpochMetrics(epoch + 1, total_loss / len(dataset), correct / float(len(dataset)))
        if test_dataset is not None:
            metrics.test_acc, metrics.test_loss = evaluate(net, test_dataset, batch_size=cfg.batch_size)
        logger.info('Epoch %d: lr %.3g, train loss %.4f, train acc %.4f%s'
                    % (epoch + 1, lr, metrics.train_loss, metrics.train_acc,
                       '' if metrics.test_acc is None else ', test acc %.4f' % metrics.test_acc))
        history.append(metrics)

    return net, history


def evaluate(net, dataset, batch_size=64, smoothing=0.0):
    # type: (Network, SyntheticFreqDataset, int, float) -> Tuple[float, float]
    """
    Eval mode top-1 accuracy and mean loss. Network mode is restored afterwards.
    :return: A tuple (accuracy, mean loss)
    """
    if len(dataset) == 0:
        raise ValueError("Can't evaluate on an empty dataset")
    was_training = net.training
    net.eval()
    total_loss, correct = 0.0, 0
    try:
        with no_grad():
            for images, labels in dataset.batches(batch_size):
                logits = net(images)
                total_loss += loss_ce_smoothed(logits, labels, smoothing).item() * len(labels)
                correct += int((logits.data.argmax(axis=-1) == labels).sum())
    finally:
        net.train(was_training)
    return correct / float(len(dataset)), total_loss / len(dataset)


def write_metrics_csv(history, path):  # type: (Iterable[EpochMetrics], str) -> None
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(METRICS_COLUMNS)
        for metrics in history:
            writer.writerow(metrics.as_row())


def read_metrics_csv(path):  # type: (str) -> List[EpochMetrics]
    with open(path, 'r', newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if tuple(header or ()) != METRICS_COLUMNS:
            raise ValueError("Metrics CSV '%s' must have columns %s" % (path, ','.join(METRICS_COLUMNS)))
        return [EpochMetrics(int(row[0]), *(float(v) if v else None for v in row[1:])) for row in reader]


# Ablations

class AblationReport(object):
    """
    Per-seed test accuracies of architecture variants, trained on identical data with identical seeds
    """
    def __init__(self, kind, seeds, accuracies, param_counts, comparison=None, data=None, checkpoints=None,
                 specs=None):
        # type: (str, Sequence[int], TAccuracies, Dict[str, int], TComparison, TJson, TCheckpoints, TSpecTexts) -> None
        self.kind = kind
        self.seeds = list(seeds)
        self.accuracies = OrderedDict((name, [float(a) for a in values]) for name, values in accuracies.items())
        self.param_counts = OrderedDict(param_counts)
        self.comparison = tuple(comparison) if comparison else None
        self.data = data or {}
        self.checkpoints = checkpoints or {}
        self.specs = specs or {}

    @property
    def variants(self):  # type: () -> List[str]
        return list(self.accuracies)

    def wins(self):  # type: () -> int
        """
        Number of seeds, where the first compared variant is at least as accurate as the second one
        """
        if self.comparison is None:
            raise ValueError("Ablation '%s' makes no ordering claim" % self.kind)
        first, second = (self.accuracies[name] for name in self.comparison)
        return sum(1 for a, b in zip(first, second) if a >= b)

    def win_fraction(self):  # type: () -> float
        return self.wins() / float(len(self.seeds))

    def mean_accuracy(self, variant):  # type: (str) -> float
        return float(np.mean(self.accuracies[variant]))

    def summary(self):  # type: () -> TJson
        result = OrderedDict([
            ('kind', self.kind),
            ('seeds', self.seeds),
            ('mean_accuracy', OrderedDict((name, self.mean_accuracy(name)) for name in self.variants)),
            ('param_counts', self.param_counts),
        ])
        if self.comparison is not None:
            result['comparison'] = '%s >= %s' % self.comparison
            result['wins'] = self.wins()
            result['win_fraction'] = self.win_fraction()
        return result

    def to_json(self):  # type: () -> TJson
        return OrderedDict([
            ('kind', self.kind),
            ('seeds', self.seeds),
            ('accuracies', self.accuracies),
            ('param_counts', self.param_counts),
            ('comparison', list(self.comparison) if self.comparison else None),
            ('data', self.data),
            ('checkpoints', self.checkpoints),
            ('specs', self.specs),
        ])

    @classmethod
    def from_json(cls, data):  # type: (TJson) -> AblationReport
        return cls(data['kind'], data['seeds'], data['accuracies'], data['param_counts'],
                   comparison=data.get('comparison'), data=data.get('data'), checkpoints=data.get('checkpoints'),
                   specs=data.get('specs'))

    def write(self, path):  # type: (str) -> None
        with open(path, 'w') as f:
            json.dump(self.to_json(), f, indent=2)

    @classmethod
    def read(cls, path):  # type: (str) -> AblationReport
        with open(path, 'r') as f:
            return cls.from_json(json.load(f))

    def __eq__(self, other):
        return isinstance(other, AblationReport) and self.to_json() == other.to_json()

    def __ne__(self, other):
        return not self == other


def ablation(kind, variants, seeds, cfg=None, train_size=2000, test_size=500, size=16, mode='mixed',
             comparison=None, matched=True, checkpoint_dir=None):
    # type: (str, TVariants, Sequence[int], Optional[TrainConfig], int, int, int, str, TComparison, bool, TPath) -> AblationReport  # noqa: E501
    """
    Trains every variant on every seed. For a seed, all variants see the same data and initialization seed.
    :param kind: Ablation name, stored in the report
    :param variants: Ordered mapping {variant name: ArchSpec}
    :param seeds: Seeds. Each one drives dataset generation, initialization and shuffling.
    :param cfg: TrainConfig, seed field is replaced per run
    :param comparison: Optional (first, second) variant names for the ordering claim first >= second
    :param matched: If flag is set, variants must have identical parameter counts
    :param checkpoint_dir: If given, trained networks are saved there as <variant>_seed<seed>.npz
    :return: AblationReport
    """
    cfg = cfg or TrainConfig()
    seeds = list(seeds)
    if not seeds:
        raise ValueError("Ablation needs at least one seed")

    param_counts = OrderedDict((name, param_count(build(spec))) for name, spec in variants.items())
    if matched and len(set(param_counts.values())) > 1:
        raise ValueError("Ablation variants have different parameter counts: %s"
                         % ', '.join('%s=%d' % item for item in param_counts.items()))

    accuracies = OrderedDict((name, []) for name in variants)
    checkpoints = OrderedDict((name, OrderedDict()) for name in variants)
    for seed in seeds:
        train_data, test_data = SyntheticFreqDataset.train_test(train_size, test_size, seed=seed, size=size,
                                                                mode=mode)
        for name, spec in variants.items():
            net = Network(spec, seed=seed)
            train(net, train_data, cfg.replace(seed=seed))
            accuracy, _ = evaluate(net, test_data, batch_size=cfg.batch_size)
            accuracies[name].append(accuracy)
            logger.info('Ablation %s, seed %d, %s: test acc %.4f' % (kind, seed, name, accuracy))
            if checkpoint_dir is not None:
                filename = '%s_seed%d.npz' % (name, seed)
                save_checkpoint(net, os.path.join(checkpoint_dir, filename))
                checkpoints[name][str(seed)] = filename

    data = OrderedDict([('train_size', train_size), ('test_size', test_size), ('size', size), ('mode', mode)])
    return AblationReport(kind, seeds, accuracies, param_counts, comparison=comparison, data=data,
                          checkpoints=checkpoints if checkpoint_dir is not None else None,
                          specs=OrderedDict((name, spec.to_text()) for name, spec in variants.items()))


def _base_spec(base, timesteps):  # type: (Optional[ArchSpec], Optional[int]) -> ArchSpec
    base = base if base is not None else ArchSpec.preset('tiny')
    return base.replace(timesteps=timesteps) if timesteps is not None else base


def _check_seeds(seeds):  # type: (Sequence[int]) -> None
    if len(seeds) < MIN_ABLATION_SEEDS:
        raise ValueError("Ordering ablations need at least %d seeds, got %d" % (MIN_ABLATION_SEEDS, len(seeds)))


def pooling_ablation(seeds, timesteps=None, base=None, **kwargs):
    # type: (Sequence[int], Optional[int], Optional[ArchSpec], **object) -> AblationReport
    """
    All max-pool token mixing against all avg-pool token mixing, with matched parameter counts
    """
    _check_seeds(seeds)
    base = _base_spec(base, timesteps)
    variants = OrderedDict([('maxpool', base.with_mixers('maxpool')), ('avgpool', base.with_mixers('avgpool'))])
    return ablation('pooling', variants, seeds, comparison=('maxpool', 'avgpool'), **kwargs)


def embed_ablation(seeds, timesteps=None, base=None, **kwargs):
    # type: (Sequence[int], Optional[int], Optional[ArchSpec], **object) -> AblationReport
    """
    Embed-Max against Embed-Orig patch embedding in the stages after the first one
    """
    _check_seeds(seeds)
    base = _base_spec(base, timesteps)
    variants = OrderedDict([('embed-max', base.with_embeds('max')), ('embed-orig', base.with_embeds('orig'))])
    return ablation('embed', variants, seeds, comparison=('embed-max', 'embed-orig'), **kwargs)


def mixer_ablation(seeds, timesteps=None, base=None, kernels=(1, 3, 5, 7), **kwargs):
    # type: (Sequence[int], Optional[int], Optional[ArchSpec], Sequence[int], **object) -> AblationReport
    """
    Depth-wise kernel sweep in early stages (self-attention kept in the last one), all-SSA and identity mixing.
    Parameter counts differ, no ordering is claimed.
    """
    base = _base_spec(base, timesteps)
    variants = OrderedDict()
    for kernel in kernels:
        mixer = 'dwc-%d' % kernel
        variants[mixer] = base.replace(stages=[
            s if i == len(base.stages) - 1 else StageSpec(s.patch_embed, mixer, s.blocks, s.channels, s.shortcut)
            for i, s in enumerate(base.with_mixers('ssa').stages)
        ])
    variants['all-ssa'] = base.with_mixers('ssa')
    variants['identity'] = base.with_mixers('identity')
    return ablation('mixer', variants, seeds, matched=False, **kwargs)


def evaluate_ablation(directory, report_name='ablation.json'):  # type: (str, str) -> AblationReport
    """
    Re-evaluates saved ablation checkpoints on regenerated test data
    :param directory: Directory with the report and its checkpoints
    :return: AblationReport with recomputed accuracies
    """
    report = AblationReport.read(os.path.join(directory, report_name))
    if not report.checkpoints:
        raise ValueError("Ablation report in '%s' has no checkpoints" % directory)
    data = report.data
    accuracies = OrderedDict((name, []) for name in report.variants)
    for seed in report.seeds:
        _, test_data = SyntheticFreqDataset.train_test(data['train_size'], data['test_size'], seed=seed,
                                                       size=data['size'], mode=data['mode'])
        for name in report.variants:
            net = load_checkpoint(os.path.join(directory, report.checkpoints[name][str(seed)]))
            accuracy, _ = evaluate(net, test_data)
            accuracies[name].append(accuracy)
    return AblationReport(report.kind, report.seeds, accuracies, report.param_counts, comparison=report.comparison,
                          data=report.data, checkpoints=report.checkpoints, specs=report.specs)
