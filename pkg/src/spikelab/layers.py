"""
This file contains spiking building blocks.
All block inputs and outputs are time-major [T, B, C, H, W] tensors, wrapped into SpikeTensor with a domain tag:
  + binary   - spikes in {0, 1}
  + ternary  - spikes in {0, 1, 2}, produced only by pre-spike shortcuts
  + membrane - real valued membrane potentials (or input currents)
"""
import logging
from collections import OrderedDict
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Tuple, Type, Union

import numpy as np

from .exceptions import DomainError, ShapeError
from .neuron import NeuronParams, run_sequence
from .numcore import Tensor, add, as_tensor, avg_pool2d, batch_norm, conv2d, conv_output_size, matmul, max_pool2d, \
    mul, parameter, reshape, scale, transpose
from .types import LayerDescriptor, TArrayLike, TShape, TShortcutKind, TStateDict, TTokenMixer, TPatchEmbedKind
from .utils import find_subclass_by_name, make_rng

__all__ = ['SpikeTensor', 'Module', 'ModuleList', 'Recorder', 'TransmissionAudit', 'Conv2d', 'BNStats',
           'BatchNorm2d', 'ConvBN', 'Linear', 'LIFNode', 'bn_fold', 'AbstractEmbedVariant', 'OrigEmbedVariant',
           'MaxEmbedVariant', 'EmbedBlock', 'AbstractPatchEmbed', 'OrigPatchEmbed', 'MaxPatchEmbed',
           'MaxPlusPatchEmbed', 'PatchEmbed', 'embed_block', 'patch_embed', 'max_pool', 'avg_pool',
           'dwc_token_mix', 'spike_attention', 'ssa', 'AbstractTokenMixer', 'IdentityMixer', 'DWCMixer',
           'SSAMixer', 'MaxPoolMixer', 'AvgPoolMixer', 'SpikingMLP', 'smlp_block', 'AbstractShortcut',
           'MembraneShortcut', 'VanillaShortcut', 'PreSpikeShortcut', 'shortcut', 'carry_domain', 'SubBlock',
           'Block']

logger = logging.getLogger('spikelab')

DEFAULT_SSA_SCALE = 0.125
DEFAULT_MLP_RATIO = 4.0
BN_MOMENTUM = 0.9
BN_EPS = 1e-5

TSpikeIn = Union['SpikeTensor', Tensor, TArrayLike]
TKVRecorder = Callable[[str, Tensor, LayerDescriptor], None]


class SpikeTensor(object):
    """
    Time-major activation with a domain tag.
    Values of binary and ternary tensors are validated on creation, unless check is False
    (smooth surrogate runs produce spikes in (0, 1)).
    """
    __slots__ = ['data', 'domain', 'checked']

    DOMAINS = ('binary', 'ternary', 'membrane')
    _ALLOWED = {'binary': (0.0, 1.0), 'ternary': (0.0, 1.0, 2.0)}

    def __init__(self, data, domain='binary', check=True):  # type: (Union[Tensor, TArrayLike], str, bool) -> None
        if domain not in self.DOMAINS:
            raise ValueError("Spike domain with name '%s' doesn't exist" % domain)
        data = as_tensor(data)
        if data.ndim < 2:
            raise ShapeError("SpikeTensor must be time-major with at least 2 dimensions, got shape %s" % (data.shape,))
        if check and domain in self._ALLOWED and not np.isin(data.data, self._ALLOWED[domain]).all():
            raise DomainError("%s SpikeTensor contains values outside %s" % (domain, self._ALLOWED[domain]))
        self.data = data
        self.domain = domain
        self.checked = bool(check)

    @property
    def values(self):  # type: () -> np.ndarray
        return self.data.data

    @property
    def shape(self):  # type: () -> TShape
        return self.data.shape

    @property
    def timesteps(self):  # type: () -> int
        return self.data.shape[0]

    @property
    def is_spike(self):  # type: () -> bool
        return self.domain != 'membrane'

    def require(self, domain, where):  # type: (str, str) -> None
        if self.domain != domain:
            raise DomainError("%s requires %s input, got %s" % (where, domain, self.domain))

    def require_spikes(self, where):  # type: (str) -> None
        if not self.is_spike:
            raise DomainError("%s requires binary or ternary spikes, got %s" % (where, self.domain))

    def __repr__(self):
        return '<SpikeTensor %s shape=%s>' % (self.domain, self.shape)


class Recorder(object):
    """
    Observer protocol. Modules call it during forward, if a recorder is attached to them.
    """
    def transmit(self, site, spikes):  # type: (str, SpikeTensor) -> None
        """
        Called for every tensor transmitted between blocks
        :param site: Dotted path of the receiving sub-block
        :param spikes: Transmitted tensor
        """
        pass

    def layer(self, module, spikes, descriptor, label=None):
        # type: (Module, SpikeTensor, LayerDescriptor, Optional[str]) -> None
        """
        Called for every FLOP-bearing operation
        :param module: Module, executing the operation
        :param spikes: Input spike tensor, driving the operation
        :param descriptor: Geometry of a single frame
        :param label: Optional operation label, if the module executes more than one operation
        """
        pass


class TransmissionAudit(Recorder):
    """
    Collects (site, domain, maximum value) of every inter-block transmission
    """
    def __init__(self):
        self.records = []  # type: List[Tuple[str, str, float]]

    def transmit(self, site, spikes):
        self.records.append((site, spikes.domain, float(spikes.values.max()) if spikes.values.size else 0.0))

    def all_binary(self):  # type: () -> bool
        return all(domain == 'binary' and value <= 1.0 for _, domain, value in self.records)

    def ternary_sites(self):  # type: () -> List[str]
        return [site for site, domain, _ in self.records if domain == 'ternary']


class Module(object):
    """
    Parameter container with train / eval mode and a flat state dict.
    Tensor attributes with requires_grad are registered as parameters, Module attributes as children.
    """
    def __init__(self):
        object.__setattr__(self, '_parameters', OrderedDict())
        object.__setattr__(self, '_buffers', OrderedDict())
        object.__setattr__(self, '_modules', OrderedDict())
        object.__setattr__(self, 'training', True)
        object.__setattr__(self, 'recorder', None)
        object.__setattr__(self, 'name', '')
        object.__setattr__(self, 'stage', None)
        object.__setattr__(self, 'component', None)

    def __setattr__(self, key, value):
        if isinstance(value, Tensor) and value.requires_grad:
            self._parameters[key] = value
        elif isinstance(value, Module):
            self._modules[key] = value
        elif key in self._buffers:
            self._buffers[key] = np.asarray(value, dtype=np.float64)
            return
        object.__setattr__(self, key, value)

    def __getattr__(self, key):
        buffers = self.__dict__.get('_buffers', {})
        if key in buffers:
            return buffers[key]
        raise AttributeError("'%s' object has no attribute '%s'" % (self.__class__.__name__, key))

    def register_buffer(self, key, value):  # type: (str, TArrayLike) -> None
        self._buffers[key] = np.array(value, dtype=np.float64)

    def forward(self, *args, **kwargs):
        raise NotImplementedError("%s must implement forward method" % self.__class__.__name__)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def children(self):  # type: () -> Iterator[Module]
        return iter(self._modules.values())

    def named_modules(self, prefix=''):  # type: (str) -> Iterator[Tuple[str, Module]]
        yield prefix, self
        for key, module in self._modules.items():
            for item in module.named_modules(prefix + '.' + key if prefix else key):
                yield item

    def named_parameters(self, prefix=''):  # type: (str) -> Iterator[Tuple[str, Tensor]]
        for module_name, module in self.named_modules(prefix):
            for key, param in module._parameters.items():
                yield (module_name + '.' + key if module_name else key), param

    def parameters(self):  # type: () -> List[Tensor]
        return [param for _, param in self.named_parameters()]

    def named_buffers(self, prefix=''):  # type: (str) -> Iterator[Tuple[str, np.ndarray]]
        for module_name, module in self.named_modules(prefix):
            for key, value in module._buffers.items():
                yield (module_name + '.' + key if module_name else key), value

    def num_parameters(self):  # type: () -> int
        return int(sum(param.size for param in self.parameters()))

    def train(self, mode=True):  # type: (bool) -> Module
        for _, module in self.named_modules():
            object.__setattr__(module, 'training', bool(mode))
        return self

    def eval(self):  # type: () -> Module
        return self.train(False)

    def zero_grad(self):  # type: () -> None
        for param in self.parameters():
            param.zero_grad()

    def attach(self, recorder):  # type: (Optional[Recorder]) -> None
        for _, module in self.named_modules():
            object.__setattr__(module, 'recorder', recorder)

    def assign_names(self, stage=None, component=None):  # type: (Optional[int], Optional[str]) -> None
        """
        Stores dotted paths into module.name, stage index and component name into every submodule
        """
        for key, module in self.named_modules(self.name):
            object.__setattr__(module, 'name', key)
            if stage is not None:
                object.__setattr__(module, 'stage', stage)
            if component is not None:
                object.__setattr__(module, 'component', component)

    def state_dict(self):  # type: () -> TStateDict
        state = OrderedDict()
        for key, param in self.named_parameters():
            state[key] = param.data.copy()
        for key, value in self.named_buffers():
            state[key] = value.copy()
        return state

    def load_state_dict(self, state, strict=True):  # type: (TStateDict, bool) -> None
        params = OrderedDict(self.named_parameters())
        buffer_owners = {}
        for module_name, module in self.named_modules():
            for key in module._buffers:
                buffer_owners[module_name + '.' + key if module_name else key] = (module, key)

        expected = set(params) | set(buffer_owners)
        missing = sorted(expected - set(state))
        unexpected = sorted(set(state) - expected)
        if strict and (missing or unexpected):
            raise ValueError("State dict doesn't match: missing %s, unexpected %s" % (missing, unexpected))

        for key, value in state.items():
            value = np.asarray(value, dtype=np.float64)
            if key in params:
                if params[key].shape != value.shape:
                    raise ShapeError("Parameter '%s' has shape %s, state has %s"
                                     % (key, params[key].shape, value.shape))
                params[key].data = value.copy()
            elif key in buffer_owners:
                module, name = buffer_owners[key]
                if module._buffers[name].shape != value.shape:
                    raise ShapeError("Buffer '%s' has shape %s, state has %s" % (key, module._buffers[name].shape,
                                                                                 value.shape))
                module._buffers[name] = value.copy()

    def _record(self, spikes, descriptor, label=None):
        # type: (SpikeTensor, LayerDescriptor, Optional[str]) -> None
        if self.recorder is not None:
            self.recorder.layer(self, spikes, descriptor, label=label)


class ModuleList(Module):
    def __init__(self, modules=()):  # type: (Iterable[Module]) -> None
        super(ModuleList, self).__init__()
        for module in modules:
            self.append(module)

    def append(self, module):  # type: (Module) -> None
        setattr(self, str(len(self._modules)), module)

    def __getitem__(self, index):  # type: (int) -> Module
        return list(self._modules.values())[index]

    def __len__(self):
        return len(self._modules)

    def __iter__(self):
        return iter(self._modules.values())


def _per_frame(fn, x):  # type: (Callable[[Tensor], Tensor], Tensor) -> Tensor
    """
    Applies a [N, C, H, W] operation to every frame of a [T, B, C, H, W] tensor
    """
    if x.ndim != 5:
        raise ShapeError("Expected [T, B, C, H, W] tensor, got shape %s" % (x.shape,))
    steps, batch_size = x.shape[:2]
    y = fn(reshape(x, (steps * batch_size,) + x.shape[2:]))
    return reshape(y, (steps, batch_size) + y.shape[1:])


# Basic layers

class Conv2d(Module):
    def __init__(self, in_channels, out_channels, kernel_size, stride=1, padding=0, groups=1, bias=False, rng=None):
        # type: (int, int, int, int, int, int, bool, Optional[np.random.Generator]) -> None
        super(Conv2d, self).__init__()
        if in_channels % groups or out_channels % groups:
            raise ValueError("in_channels and out_channels must be divisible by groups")
        rng = rng if rng is not None else make_rng(0)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        self.groups = groups

        # He normal initialization
        fan_in = (in_channels // groups) * kernel_size ** 2
        self.weight = parameter(rng.standard_normal((out_channels, in_channels // groups, kernel_size, kernel_size))
                                * np.sqrt(2.0 / fan_in))
        self.bias = parameter(np.zeros(out_channels)) if bias else None

    def forward(self, x):  # type: (Tensor) -> Tensor
        y = conv2d(x, self.weight, stride=self.stride, padding=self.padding, groups=self.groups)
        if self.bias is not None:
            y = add(y, reshape(self.bias, (1, self.out_channels, 1, 1)))
        return y

    def output_size(self, height, width):  # type: (int, int) -> Tuple[int, int]
        return (conv_output_size(height, self.kernel_size, self.stride, self.padding),
                conv_output_size(width, self.kernel_size, self.stride, self.padding))

    def describe(self, height, width):  # type: (int, int) -> LayerDescriptor
        out_h, out_w = self.output_size(height, width)
        return LayerDescriptor.conv(self.in_channels, self.out_channels, self.kernel_size, out_h, out_w,
                                    groups=self.groups)


class BNStats(object):
    __slots__ = ['gamma', 'beta', 'mean', 'var', 'eps']

    def __init__(self, gamma, beta, mean, var, eps=BN_EPS):
        # type: (TArrayLike, TArrayLike, TArrayLike, TArrayLike, float) -> None
        self.gamma = np.asarray(gamma, dtype=np.float64)
        self.beta = np.asarray(beta, dtype=np.float64)
        self.mean = np.asarray(mean, dtype=np.float64)
        self.var = np.asarray(var, dtype=np.float64)
        self.eps = float(eps)


def bn_fold(weight, stats, bias=None):
    # type: (TArrayLike, BNStats, Optional[TArrayLike]) -> Tuple[np.ndarray, np.ndarray]
    """
    Folds inference-mode batch normalization into the preceding convolution
    :param weight: Kernel [O, C, k, k]
    :param stats: BNStats over O channels
    :param bias: Optional convolution bias [O]
    :return: A tuple (folded kernel, folded bias)
    """
    weight = np.asarray(weight, dtype=np.float64)
    if np.any(stats.var <= 0):
        raise ValueError("Can't fold batch norm with non positive variance")
    if stats.var.shape != (weight.shape[0],):
        raise ShapeError("BN statistics have %d channels, kernel has %d" % (stats.var.shape[0], weight.shape[0]))
    bias = np.zeros(weight.shape[0]) if bias is None else np.asarray(bias, dtype=np.float64)
    factor = stats.gamma / np.sqrt(stats.var + stats.eps)
    return weight * factor.reshape((-1,) + (1,) * (weight.ndim - 1)), stats.beta + (bias - stats.mean) * factor


class BatchNorm2d(Module):
    """
    Training mode normalizes with batch statistics and updates running ones:
    running = momentum * running + (1 - momentum) * batch (unbiased variance)
    """
    def __init__(self, num_features, eps=BN_EPS, momentum=BN_MOMENTUM):  # type: (int, float, float) -> None
        super(BatchNorm2d, self).__init__()
        self.num_features = num_features
        self.eps = eps
        self.momentum = momentum
        self.weight = parameter(np.ones(num_features))
        self.bias = parameter(np.zeros(num_features))
        self.register_buffer('running_mean', np.zeros(num_features))
        self.register_buffer('running_var', np.ones(num_features))

    def forward(self, x):  # type: (Tensor) -> Tensor
        if self.training:
            y, mean, var = batch_norm(x, self.weight, self.bias, eps=self.eps)
            count = x.size // self.num_features
            if count > 1:
                var = var * count / (count - 1)
            self.running_mean = self.momentum * self.running_mean + (1 - self.momentum) * mean
            self.running_var = self.momentum * self.running_var + (1 - self.momentum) * var
            return y

        view = (1, self.num_features) + (1,) * (x.ndim - 2)
        factor = self.weight.data / np.sqrt(self.running_var + self.eps)
        shift = self.bias.data - self.running_mean * factor
        return add(mul(x, Tensor(factor.reshape(view))), Tensor(shift.reshape(view)))

    def stats(self):  # type: () -> BNStats
        return BNStats(self.weight.data, self.bias.data, self.running_mean, self.running_var, self.eps)


class ConvBN(Module):
    """
    Convolution followed by batch normalization over spike input [T, B, C, H, W].
    Eval mode runs the folded kernel and bias.
    """
    def __init__(self, in_channels, out_channels, kernel_size=1, stride=1, padding=0, groups=1, rng=None):
        # type: (int, int, int, int, int, int, Optional[np.random.Generator]) -> None
        super(ConvBN, self).__init__()
        self.conv = Conv2d(in_channels, out_channels, kernel_size, stride=stride, padding=padding, groups=groups,
                           rng=rng)
        self.bn = BatchNorm2d(out_channels)

    def forward(self, x):  # type: (SpikeTensor) -> Tensor
        height, width = x.shape[-2:]
        self._record(x, self.conv.describe(height, width))
        if self.training:
            return _per_frame(lambda frames: self.bn(self.conv(frames)), x.data)

        weight, bias = bn_fold(self.conv.weight.data, self.bn.stats(),
                               bias=self.conv.bias.data if self.conv.bias is not None else None)
        conv = self.conv

        def folded(frames):
            y = conv2d(frames, Tensor(weight), stride=conv.stride, padding=conv.padding, groups=conv.groups)
            return add(y, Tensor(bias.reshape(1, -1, 1, 1)))

        return _per_frame(folded, x.data)

    def output_size(self, height, width):  # type: (int, int) -> Tuple[int, int]
        return self.conv.output_size(height, width)


class Linear(Module):
    def __init__(self, d_in, d_out, bias=True, rng=None):
        # type: (int, int, bool, Optional[np.random.Generator]) -> None
        super(Linear, self).__init__()
        rng = rng if rng is not None else make_rng(0)
        self.d_in = d_in
        self.d_out = d_out
        bound = 1.0 / np.sqrt(d_in)
        self.weight = parameter(rng.uniform(-bound, bound, (d_in, d_out)))
        self.bias = parameter(np.zeros(d_out)) if bias else None

    def forward(self, x):  # type: (Tensor) -> Tensor
        y = matmul(x, self.weight)
        return add(y, self.bias) if self.bias is not None else y

    def describe(self, tokens=1):  # type: (int) -> LayerDescriptor
        return LayerDescriptor.linear(self.d_in, self.d_out, tokens=tokens)


class LIFNode(Module):
    """
    Neuron population driven over the leading time axis. smooth flag swaps Heaviside for the smooth primitive.
    """
    def __init__(self, params):  # type: (NeuronParams) -> None
        super(LIFNode, self).__init__()
        self.params = params
        self.smooth = False

    def forward(self, x):  # type: (Union[Tensor, SpikeTensor]) -> SpikeTensor
        currents = x.data if isinstance(x, SpikeTensor) else as_tensor(x)
        spikes, _ = run_sequence(self.params, currents, smooth=self.smooth)
        return SpikeTensor(spikes, 'binary', check=not self.smooth)


# Pooling

def max_pool(x, k, stride, padding=0):  # type: (SpikeTensor, int, int, int) -> SpikeTensor
    """
    Windowed maximum per frame. Keeps domain, so binary input stays binary.
    """
    y = _per_frame(lambda frames: max_pool2d(frames, k, stride=stride, padding=padding), x.data)
    return SpikeTensor(y, x.domain, check=False)


def avg_pool(x, k, stride, padding=0):  # type: (Union[SpikeTensor, Tensor], int, int, int) -> SpikeTensor
    """
    Windowed mean per frame, padding excluded from the count. Result is membrane domain.
    """
    data = x.data if isinstance(x, SpikeTensor) else as_tensor(x)
    y = _per_frame(lambda frames: avg_pool2d(frames, k, stride=stride, padding=padding), data)
    return SpikeTensor(y, 'membrane')


# Embedding

class AbstractEmbedVariant(object):
    """
    Conv stride and pooling placement of an embed block with downsampling factor f
    """
    names = set()
    pooled = False

    def conv_stride(self, factor):  # type: (int) -> int
        raise NotImplementedError("%s must implement conv_stride method" % self.__class__.__name__)

    @classmethod
    def get_embed_variant_by_name(cls, name):  # type: (str) -> Type[AbstractEmbedVariant]
        return find_subclass_by_name(cls, name, 'Embed variant')

    @property
    def name(self):  # type: () -> str
        return sorted(self.names, key=len)[0]


class OrigEmbedVariant(AbstractEmbedVariant):
    """
    LIF - CONV - BN
    """
    names = {'orig', 'embed-orig'}

    def conv_stride(self, factor):
        return factor


class MaxEmbedVariant(AbstractEmbedVariant):
    """
    LIF - CONV - BN - MaxPool (3x3, stride 2)
    """
    names = {'max', 'embed-max'}
    pooled = True

    def conv_stride(self, factor):
        if factor % 2:
            raise ValueError("Max embed needs an even downsampling factor, got %d" % factor)
        return factor // 2


class EmbedBlock(Module):
    def __init__(self, variant, in_channels, out_channels, factor, params, rng=None):
        # type: (Union[str, AbstractEmbedVariant], int, int, int, NeuronParams, Optional[np.random.Generator]) -> None
        super(EmbedBlock, self).__init__()
        if isinstance(variant, str):
            variant = AbstractEmbedVariant.get_embed_variant_by_name(variant)()
        self.variant = variant
        self.factor = factor
        self.lif = LIFNode(params)
        self.conv = ConvBN(in_channels, out_channels, kernel_size=3, stride=variant.conv_stride(factor), padding=1,
                           rng=rng)

    def forward(self, x):  # type: (SpikeTensor) -> SpikeTensor
        if x.domain == 'ternary':
            raise DomainError("Embed block %s can't consume ternary spikes" % (self.name or self.variant.name))
        y = self.conv(self.lif(x))
        if self.variant.pooled:
            y = _per_frame(lambda frames: max_pool2d(frames, 3, stride=2, padding=1), y)
        return SpikeTensor(y, 'membrane')

    def output_size(self, height, width):  # type: (int, int) -> Tuple[int, int]
        height, width = self.conv.output_size(height, width)
        if self.variant.pooled:
            height, width = conv_output_size(height, 3, 2, 1), conv_output_size(width, 3, 2, 1)
        return height, width


class AbstractPatchEmbed(object):
    """
    Pair of embed variants (G1, G2), which outputs are summed
    """
    names = set()
    branches = ()  # type: Tuple[str, str]

    @classmethod
    def get_patch_embed_by_name(cls, name):  # type: (str) -> Type[AbstractPatchEmbed]
        return find_subclass_by_name(cls, name, 'Patch embed')

    @property
    def name(self):  # type: () -> str
        return sorted(self.names, key=len)[0]


class OrigPatchEmbed(AbstractPatchEmbed):
    names = {'orig', 'embed-orig'}
    branches = ('orig', 'orig')


class MaxPatchEmbed(AbstractPatchEmbed):
    names = {'max', 'embed-max'}
    branches = ('max', 'orig')


class MaxPlusPatchEmbed(AbstractPatchEmbed):
    names = {'max+', 'embed-max+'}
    branches = ('max', 'max')


def embed_block(block, x):  # type: (EmbedBlock, SpikeTensor) -> SpikeTensor
    return block(x)


def patch_embed(g1, g2, x):  # type: (EmbedBlock, EmbedBlock, SpikeTensor) -> SpikeTensor
    """
    Sum of two branch outputs in membrane domain
    """
    y1, y2 = g1(x), g2(x)
    if y1.shape != y2.shape:
        raise ShapeError("Patch embed branch shapes differ: %s and %s" % (y1.shape, y2.shape))
    return SpikeTensor(add(y1.data, y2.data), 'membrane')


class PatchEmbed(Module):
    def __init__(self, kind, in_channels, out_channels, factor, params, rng=None):
        # type: (TPatchEmbedKind, int, int, int, NeuronParams, Optional[np.random.Generator]) -> None
        super(PatchEmbed, self).__init__()
        if isinstance(kind, str):
            kind = AbstractPatchEmbed.get_patch_embed_by_name(kind)()
        self.kind = kind
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.g1 = EmbedBlock(kind.branches[0], in_channels, out_channels, factor, params, rng=rng)
        self.g2 = EmbedBlock(kind.branches[1], in_channels, out_channels, factor, params, rng=rng)

    def forward(self, x):  # type: (SpikeTensor) -> SpikeTensor
        return patch_embed(self.g1, self.g2, x)

    def output_size(self, height, width):  # type: (int, int) -> Tuple[int, int]
        sizes = self.g1.output_size(height, width), self.g2.output_size(height, width)
        if sizes[0] != sizes[1]:
            raise ShapeError("Patch embed branches produce different sizes %s and %s for %dx%d input"
                             % (sizes[0], sizes[1], height, width))
        return sizes[0]


# Token mixing

def _check_binary(x, where):  # type: (Union[SpikeTensor, Tensor], str) -> Tensor
    if isinstance(x, SpikeTensor):
        x.require('binary', where)
        return x.data
    x = as_tensor(x)
    if not np.isin(x.data, (0.0, 1.0)).all():
        raise DomainError("%s requires binary spikes" % where)
    return x


def dwc_token_mix(x, weights, params):  # type: (SpikeTensor, Union[Tensor, TArrayLike], NeuronParams) -> SpikeTensor
    """
    Depth-wise k x k convolution with same padding, followed by LIF
    :param x: Binary spikes [T, B, C, H, W]
    :param weights: Per-channel kernels [C, 1, k, k]
    :param params: NeuronParams of the output neurons
    :return: Binary spikes of x shape
    """
    weights = as_tensor(weights)
    kernel_size = weights.shape[-1]
    if kernel_size % 2 == 0:
        raise ValueError("Depth-wise convolution kernel size must be odd, got %d" % kernel_size)
    data = _check_binary(x, 'dwc_token_mix')
    channels = data.shape[2]
    y = _per_frame(lambda frames: conv2d(frames, weights, padding=kernel_size // 2, groups=channels), data)
    spikes, _ = run_sequence(params, y)
    return SpikeTensor(spikes, 'binary')


def spike_attention(q, k, v, s, params, smooth=False, recorder=None):
    # type: (TSpikeIn, TSpikeIn, TSpikeIn, float, NeuronParams, bool, Optional[TKVRecorder]) -> SpikeTensor
    """
    LIF(Q (K^T V) s) with token-major spikes [T, B, N, D]. No softmax.
    With binary operands both products are plain accumulations.
    """
    if smooth:
        q, k, v = (t.data if isinstance(t, SpikeTensor) else as_tensor(t) for t in (q, k, v))
    else:
        q, k, v = (_check_binary(t, 'spike_attention %s' % name) for t, name in ((q, 'Q'), (k, 'K'), (v, 'V')))
    if not (q.shape == k.shape == v.shape):
        raise ShapeError("Q, K and V shapes differ: %s, %s, %s" % (q.shape, k.shape, v.shape))
    tokens, dim = q.shape[-2:]

    axes = tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2)
    kv = matmul(transpose(k, axes), v)
    if recorder is not None:
        recorder('kv', k, LayerDescriptor.matmul(dim, tokens, dim))
        recorder('qkv', q, LayerDescriptor.matmul(tokens, dim, dim))
    attention = scale(matmul(q, kv), s)
    spikes, _ = run_sequence(params, attention, smooth=smooth)
    return SpikeTensor(spikes, 'binary', check=not smooth)


def ssa(x, wq, wk, wv, s, params):
    # type: (SpikeTensor, TArrayLike, TArrayLike, TArrayLike, float, NeuronParams) -> SpikeTensor
    """
    Spiking self-attention over token-major binary spikes [T, B, N, D] with linear maps [D, D].
    Q, K and V are LIF(x W) each.
    """
    data = _check_binary(x, 'ssa')
    q, k, v = (SpikeTensor(run_sequence(params, matmul(data, as_tensor(w)))[0]) for w in (wq, wk, wv))
    return spike_attention(q, k, v, s, params)


class AbstractTokenMixer(Module):
    """
    Token mixer core produces spikes. It is followed by a 1x1 ConvBN projection back into membrane domain.
    Mixers are looked up by name, optionally followed by an integer argument: 'dwc-3'.
    """
    names = set()
    is_identity = False
    requires_argument = False

    def __init__(self, channels, params, rng=None, argument=None, ssa_scale=DEFAULT_SSA_SCALE):
        # type: (int, NeuronParams, Optional[np.random.Generator], Optional[int], float) -> None
        super(AbstractTokenMixer, self).__init__()
        self.channels = channels
        self.params = params
        self.argument = argument
        if not self.is_identity:
            self.proj = ConvBN(channels, channels, kernel_size=1, rng=rng)

    def core(self, s):  # type: (SpikeTensor) -> SpikeTensor
        raise NotImplementedError("%s must implement core method" % self.__class__.__name__)

    def forward(self, s):  # type: (SpikeTensor) -> Tensor
        return self.proj(self.core(s))

    @classmethod
    def parse_name(cls, name):  # type: (str) -> Tuple[Type[AbstractTokenMixer], Optional[int]]
        if not isinstance(name, str):
            raise TypeError("Token mixer name must be a string")
        base, sep, argument = name.strip().lower().rpartition('-')
        if not sep or not argument.isdigit():
            base, argument = name.strip().lower(), None
        mixer_cls = find_subclass_by_name(cls, base, 'Token mixer')
        if mixer_cls.requires_argument and argument is None:
            raise ValueError("Token mixer '%s' requires a kernel size, like '%s-3'" % (name, base))
        if not mixer_cls.requires_argument and argument is not None:
            raise ValueError("Token mixer with name '%s' doesn't exist" % name)
        return mixer_cls, int(argument) if argument is not None else None

    @classmethod
    def get_token_mixer_by_name(cls, name):  # type: (str) -> Type[AbstractTokenMixer]
        return cls.parse_name(name)[0]

    @classmethod
    def build(cls, name, channels, params, rng=None, ssa_scale=DEFAULT_SSA_SCALE):
        # type: (TTokenMixer, int, NeuronParams, Optional[np.random.Generator], float) -> AbstractTokenMixer
        mixer_cls, argument = cls.parse_name(name)
        return mixer_cls(channels, params, rng=rng, argument=argument, ssa_scale=ssa_scale)

    @property
    def label(self):  # type: () -> str
        base = sorted(self.names, key=len)[0]
        return base if self.argument is None else '%s-%d' % (base, self.argument)


class IdentityMixer(AbstractTokenMixer):
    names = {'identity'}
    is_identity = True

    def core(self, s):
        return s

    def forward(self, s):
        return s.data


class DWCMixer(AbstractTokenMixer):
    names = {'dwc'}
    requires_argument = True

    def __init__(self, channels, params, rng=None, argument=None, ssa_scale=DEFAULT_SSA_SCALE):
        super(DWCMixer, self).__init__(channels, params, rng=rng, argument=argument, ssa_scale=ssa_scale)
        if argument % 2 == 0:
            raise ValueError("Depth-wise convolution kernel size must be odd, got %d" % argument)
        self.dw = Conv2d(channels, channels, argument, padding=argument // 2, groups=channels, rng=rng)
        self.lif = LIFNode(params)

    def core(self, s):
        height, width = s.shape[-2:]
        self.dw._record(s, self.dw.describe(height, width))
        return self.lif(_per_frame(self.dw, s.data))


class SSAMixer(AbstractTokenMixer):
    """
    Single head spiking self-attention with Q, K, V = LIF(BN(Conv1x1(s)))
    """
    names = {'ssa'}

    def __init__(self, channels, params, rng=None, argument=None, ssa_scale=DEFAULT_SSA_SCALE):
        super(SSAMixer, self).__init__(channels, params, rng=rng, argument=argument, ssa_scale=ssa_scale)
        self.scale = ssa_scale
        self.q = ConvBN(channels, channels, rng=rng)
        self.k = ConvBN(channels, channels, rng=rng)
        self.v = ConvBN(channels, channels, rng=rng)
        self.q_lif = LIFNode(params)
        self.k_lif = LIFNode(params)
        self.v_lif = LIFNode(params)
        self.attn_lif = LIFNode(params)

    @staticmethod
    def _to_tokens(x):  # type: (Tensor) -> Tensor
        steps, batch_size, channels, height, width = x.shape
        return reshape(transpose(x, (0, 1, 3, 4, 2)), (steps, batch_size, height * width, channels))

    def core(self, s):
        steps, batch_size, channels, height, width = s.shape
        q = self.q_lif(self.q(s))
        k = self.k_lif(self.k(s))
        v = self.v_lif(self.v(s))
        smooth = self.attn_lif.smooth

        def record(label, spikes, descriptor):
            self._record(SpikeTensor(spikes, 'binary', check=False), descriptor, label=label)

        tokens = [SpikeTensor(self._to_tokens(t.data), 'binary', check=False) for t in (q, k, v)]
        out = spike_attention(tokens[0], tokens[1], tokens[2], self.scale, self.attn_lif.params, smooth=smooth,
                              recorder=record if self.recorder is not None else None)
        y = transpose(reshape(out.data, (steps, batch_size, height, width, channels)), (0, 1, 4, 2, 3))
        return SpikeTensor(y, 'binary', check=False)


class MaxPoolMixer(AbstractTokenMixer):
    """
    3x3 max pooling, stride 1, same padding
    """
    names = {'maxpool', 'max-pool'}

    def core(self, s):
        return max_pool(s, 3, 1, padding=1)


class AvgPoolMixer(AbstractTokenMixer):
    """
    3x3 average pooling, stride 1, same padding, followed by LIF
    """
    names = {'avgpool', 'avg-pool'}

    def __init__(self, channels, params, rng=None, argument=None, ssa_scale=DEFAULT_SSA_SCALE):
        super(AvgPoolMixer, self).__init__(channels, params, rng=rng, argument=argument, ssa_scale=ssa_scale)
        self.lif = LIFNode(params)

    def core(self, s):
        return self.lif(avg_pool(s, 3, 1, padding=1))


class SpikingMLP(Module):
    """
    1x1 ConvBN (C -> ratio * C), LIF, 1x1 ConvBN (ratio * C -> C). Input LIF belongs to the enclosing sub-block.
    """
    def __init__(self, channels, params, ratio=DEFAULT_MLP_RATIO, rng=None):
        # type: (int, NeuronParams, float, Optional[np.random.Generator]) -> None
        super(SpikingMLP, self).__init__()
        if ratio <= 0:
            raise ValueError("MLP ratio must be positive")
        self.hidden = int(round(channels * ratio))
        self.fc1 = ConvBN(channels, self.hidden, rng=rng)
        self.lif = LIFNode(params)
        self.fc2 = ConvBN(self.hidden, channels, rng=rng)

    def forward(self, s):  # type: (SpikeTensor) -> Tensor
        return self.fc2(self.lif(self.fc1(s)))


def smlp_block(x, expansion, params, mlp=None, rng=None):
    # type: (TSpikeIn, float, NeuronParams, Optional[SpikingMLP], Optional[np.random.Generator]) -> SpikeTensor
    """
    Entry LIF followed by the spiking MLP. Residual addition is left to the caller.
    :param x: Spikes or membrane potential [T, B, D, H, W]
    :param expansion: Hidden width ratio
    :param params: NeuronParams of the entry and hidden neurons
    :param mlp: Existing SpikingMLP to apply. A fresh one is initialized with rng if omitted.
    :param rng: Generator for weight init of the fresh MLP
    :return: Membrane output of x shape
    """
    data = x.data if isinstance(x, SpikeTensor) else as_tensor(x)
    channels = data.shape[2]
    if mlp is None:
        mlp = SpikingMLP(channels, params, ratio=expansion, rng=rng)
    elif mlp.hidden != int(round(channels * expansion)):
        raise ShapeError("MLP hidden width %d doesn't match expansion %s of %d channels"
                         % (mlp.hidden, expansion, channels))
    spikes, _ = run_sequence(params, data)
    return SpikeTensor(mlp(SpikeTensor(spikes, 'binary', check=False)), 'membrane')


# Shortcuts

class AbstractShortcut(object):
    """
    Combines the carried value with the output u of a sub-block core
    """
    names = set()

    def combine(self, carry, s, u, fire):
        # type: (SpikeTensor, SpikeTensor, Tensor, LIFNode) -> SpikeTensor
        """
        :param carry: Value entering the sub-block
        :param s: Spikes consumed by the core
        :param u: Core output in membrane domain
        :param fire: LIF population, available to fire u
        :return: New carry
        """
        raise NotImplementedError("%s must implement combine method" % self.__class__.__name__)

    @classmethod
    def get_shortcut_by_name(cls, name):  # type: (str) -> Type[AbstractShortcut]
        return find_subclass_by_name(cls, name, 'Shortcut')

    @property
    def name(self):  # type: () -> str
        return sorted(self.names, key=len)[0]


class MembraneShortcut(AbstractShortcut):
    """
    Sums membrane potentials, so that only the next LIF output is transmitted
    """
    names = {'membrane'}

    def combine(self, carry, s, u, fire):
        return shortcut(self, SpikeTensor(u, 'membrane'), carry)


class VanillaShortcut(AbstractShortcut):
    """
    Adds the consumed spikes into the core membrane output
    """
    names = {'vanilla'}

    def combine(self, carry, s, u, fire):
        return shortcut(self, SpikeTensor(u, 'membrane'), s)


class PreSpikeShortcut(AbstractShortcut):
    """
    Adds the consumed spikes to the fired core output. Result is ternary.
    """
    names = {'prespike', 'pre-spike'}

    def combine(self, carry, s, u, fire):
        return shortcut(self, fire(u), s)


def shortcut(kind, main, skip):  # type: (TShortcutKind, SpikeTensor, SpikeTensor) -> SpikeTensor
    """
    Combines a branch output with the skip path value.
    A pre-spike sum saturates at 2: a fired branch adds nothing where the skip already carries 2.
    :param kind: Shortcut name or instance
    :param main: Branch output. Membrane for membrane and vanilla shortcuts, binary for pre-spike one.
    :param skip: Skip path value. Membrane for membrane shortcut, binary or ternary spikes for vanilla
        and pre-spike ones.
    :return: Membrane-domain sum, or ternary sum for pre-spike shortcut
    :raises DomainError: If operands are in the wrong domain
    """
    if isinstance(kind, str):
        kind = AbstractShortcut.get_shortcut_by_name(kind)()
    if main.shape != skip.shape:
        raise ShapeError("Shortcut operand shapes differ: %s and %s" % (main.shape, skip.shape))

    if isinstance(kind, MembraneShortcut):
        main.require('membrane', 'Membrane shortcut branch')
        skip.require('membrane', 'Membrane shortcut skip path')
        return SpikeTensor(add(main.data, skip.data), 'membrane')
    if isinstance(kind, VanillaShortcut):
        main.require('membrane', 'Vanilla shortcut branch')
        skip.require_spikes('Vanilla shortcut skip path')
        return SpikeTensor(add(main.data, skip.data), 'membrane')
    if isinstance(kind, PreSpikeShortcut):
        main.require('binary', 'Pre-spike shortcut branch')
        skip.require_spikes('Pre-spike shortcut skip path')
        fired = main.data
        if skip.domain == 'ternary':
            fired = mul(fired, Tensor((skip.values < 1.5).astype(np.float64)))
        return SpikeTensor(add(fired, skip.data), 'ternary', check=main.checked and skip.checked)
    raise ValueError("Shortcut with name '%s' doesn't exist" % kind)


def carry_domain(kinds, carry='membrane'):  # type: (Iterable[TShortcutKind], str) -> str
    """
    Follows the carry domain through a chain of sub-blocks with the given shortcut kinds
    :param kinds: Shortcut names or instances, in forward order
    :param carry: Domain of the value entering the first sub-block
    :return: Domain of the value leaving the last sub-block
    :raises DomainError: If a membrane shortcut would receive spikes as its skip path
    """
    for position, kind in enumerate(kinds):
        if isinstance(kind, str):
            kind = AbstractShortcut.get_shortcut_by_name(kind)()
        if isinstance(kind, MembraneShortcut) and carry != 'membrane':
            raise DomainError("Membrane shortcut of sub-block %d receives %s spikes as its skip path"
                              % (position, carry))
        carry = 'ternary' if isinstance(kind, PreSpikeShortcut) else 'membrane'
    return carry


class SubBlock(Module):
    """
    Entry LIF (for membrane carry) -> core -> shortcut
    """
    def __init__(self, core, params, shortcut_kind='membrane'):
        # type: (Module, NeuronParams, TShortcutKind) -> None
        super(SubBlock, self).__init__()
        self.core = core
        self.entry = LIFNode(params)
        self.fire = LIFNode(params)
        self.set_shortcut(shortcut_kind)

    def set_shortcut(self, kind):  # type: (TShortcutKind) -> None
        if isinstance(kind, str):
            kind = AbstractShortcut.get_shortcut_by_name(kind)()
        object.__setattr__(self, 'shortcut', kind)

    def forward(self, carry):  # type: (SpikeTensor) -> SpikeTensor
        s = self.entry(carry) if carry.domain == 'membrane' else carry
        if self.recorder is not None:
            self.recorder.transmit(self.name, s)
        u = self.core(s)
        return self.shortcut.combine(carry, s, u, self.fire)


class Block(Module):
    """
    Token mixing sub-block (skipped for identity mixer) followed by the MLP sub-block
    """
    def __init__(self, channels, mixer, params, shortcut_kind='membrane', mlp_ratio=DEFAULT_MLP_RATIO,
                 ssa_scale=DEFAULT_SSA_SCALE, rng=None):
        # type: (int, TTokenMixer, NeuronParams, TShortcutKind, float, float, Optional[np.random.Generator]) -> None
        super(Block, self).__init__()
        mixer = AbstractTokenMixer.build(mixer, channels, params, rng=rng, ssa_scale=ssa_scale) \
            if not isinstance(mixer, AbstractTokenMixer) else mixer
        self.mixer_label = mixer.label
        self.token_mix = None if mixer.is_identity else SubBlock(mixer, params, shortcut_kind)
        self.mlp = SubBlock(SpikingMLP(channels, params, ratio=mlp_ratio, rng=rng), params, shortcut_kind)

    def sub_blocks(self):  # type: () -> Dict[str, SubBlock]
        result = OrderedDict()
        if self.token_mix is not None:
            result['token_mix'] = self.token_mix
        result['mlp'] = self.mlp
        return result

    def forward(self, carry):  # type: (SpikeTensor) -> SpikeTensor
        for sub_block in self.sub_blocks().values():
            carry = sub_block(carry)
        return carry
